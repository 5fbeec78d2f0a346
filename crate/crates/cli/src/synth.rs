//! Parameterized synthetic outdoor scenes with exact ground truth.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gal_core::gae::{format_boxes, BoundingBox};
use gal_core::imageops::{gaussian_blur, Plane};
use gal_core::raster::{write_label_map, write_raster};
use gal_core::{GalError, GeometricClass, LabelMap, LabelMode, Raster, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const WIDTH: usize = 320;
pub const HEIGHT: usize = 240;
/// Defocus of the sky behind buildings.
pub const BACKGROUND_BLUR: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SceneKind {
    HorizonOnly,
    CornerBuilding,
    Alley,
    FrontoBuilding,
    Occluded,
}

impl SceneKind {
    pub const ALL: [SceneKind; 5] = [
        SceneKind::HorizonOnly,
        SceneKind::CornerBuilding,
        SceneKind::Alley,
        SceneKind::FrontoBuilding,
        SceneKind::Occluded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::HorizonOnly => "horizon-only",
            SceneKind::CornerBuilding => "corner-building",
            SceneKind::Alley => "alley",
            SceneKind::FrontoBuilding => "fronto-building",
            SceneKind::Occluded => "occluded",
        }
    }

    pub fn from_name(s: &str) -> Option<SceneKind> {
        SceneKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Comma-separated kind names; `all` selects every kind.
    pub fn parse_list(s: &str) -> Result<Vec<SceneKind>> {
        if s.trim() == "all" {
            return Ok(SceneKind::ALL.to_vec());
        }
        let kinds: Vec<SceneKind> = s
            .split(',')
            .map(|t| {
                SceneKind::from_name(t.trim())
                    .ok_or_else(|| GalError::Parameter(format!("unknown scene kind {t:?}")))
            })
            .collect::<Result<_>>()?;
        if kinds.is_empty() {
            return Err(GalError::Parameter("no scene kinds".into()));
        }
        Ok(kinds)
    }
}

/// One vertical surface of the scene: open column interval and orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthSurface {
    pub x0: f64,
    pub x1: f64,
    pub orientation: GeometricClass,
    /// Vanishing point of its horizontal lines; `None` when they are parallel.
    pub vanishing_point: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SceneAttributes {
    /// First support row where sky meets support directly.
    pub horizon_row: Option<f64>,
    pub surfaces: Vec<TruthSurface>,
    pub boxes: Vec<BoundingBox>,
    /// Ellipse `(cx, cy, rx, ry)` of the porous patch.
    pub porous: Option<(f64, f64, f64, f64)>,
}

impl SceneAttributes {
    pub fn to_text(&self, kind: SceneKind) -> String {
        let mut s = format!("kind {}\n", kind.name());
        if let Some(r) = self.horizon_row {
            let _ = writeln!(s, "horizon_row {r}");
        }
        for f in &self.surfaces {
            let _ = write!(s, "surface {} {} {}", f.x0, f.x1, f.orientation.name());
            match f.vanishing_point {
                Some((x, y)) => {
                    let _ = writeln!(s, " {x} {y}");
                }
                None => s.push_str(" inf\n"),
            }
        }
        for b in &self.boxes {
            let _ = writeln!(s, "box {} {} {} {}", b.x, b.y, b.w, b.h);
        }
        if let Some((cx, cy, rx, ry)) = self.porous {
            let _ = writeln!(s, "porous {cx} {cy} {rx} {ry}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub kind: SceneKind,
    pub image: Raster,
    pub truth: LabelMap,
    pub attributes: SceneAttributes,
}

#[derive(Clone)]
struct Canvas {
    w: usize,
    h: usize,
    rgb: Vec<[f64; 3]>,
    labels: Vec<GeometricClass>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Canvas {
            w,
            h,
            rgb: vec![[0.0; 3]; w * h],
            labels: vec![GeometricClass::Sky; w * h],
        }
    }

    fn put(&mut self, x: usize, y: usize, c: [f64; 3], l: GeometricClass) {
        let p = y * self.w + x;
        self.rgb[p] = c;
        self.labels[p] = l;
    }

    fn finish(self, rng: &mut ChaCha8Rng, sigma: f64) -> (Raster, LabelMap) {
        let noise = Normal::new(0.0, sigma).expect("finite sigma");
        let mut data = Vec::with_capacity(self.w * self.h * 3);
        for c in &self.rgb {
            for v in c {
                data.push(v + noise.sample(rng));
            }
        }
        let image = Raster::from_clamped(self.w, self.h, 3, data).expect("sized");
        let codes = self.labels.iter().map(|l| l.code()).collect();
        (
            image,
            LabelMap::new(self.w, self.h, codes).expect("valid codes"),
        )
    }
}

/// Brightness factor per facade orientation (light from the left).
fn shade(o: GeometricClass) -> f64 {
    match o {
        GeometricClass::PlanarLeft => 1.0,
        GeometricClass::PlanarCenter => 0.9,
        _ => 0.8,
    }
}

fn scale(c: [f64; 3], f: f64) -> [f64; 3] {
    [c[0] * f, c[1] * f, c[2] * f]
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// Sky above `horizon`, support from `horizon` down.
fn paint_background(c: &mut Canvas, rng: &mut ChaCha8Rng, horizon: usize) {
    let top = [
        0.40 + rng.random_range(-0.04..0.04),
        0.58,
        0.86 + rng.random_range(-0.04..0.04),
    ];
    let low = [0.72, 0.82, 0.94];
    let g = [
        0.40 + rng.random_range(-0.05..0.05),
        0.36 + rng.random_range(-0.05..0.05),
        0.26 + rng.random_range(-0.04..0.04),
    ];
    for y in 0..c.h {
        for x in 0..c.w {
            if y < horizon {
                let t = y as f64 / horizon.max(1) as f64;
                c.put(x, y, mix(top, low, t), GeometricClass::Sky);
            } else {
                let t = (y - horizon) as f64 / (c.h - horizon).max(1) as f64;
                c.put(x, y, scale(g, 1.0 - 0.25 * t), GeometricClass::Support);
            }
        }
    }
}

/// A planar facade between two lines through a common vanishing point:
/// columns `[x0, x1)`, rows from `top(x)` to `base(x)`.
struct Facade<'a> {
    x0: usize,
    x1: usize,
    top: &'a dyn Fn(f64) -> f64,
    base: &'a dyn Fn(f64) -> f64,
    orientation: GeometricClass,
}

fn paint_facade(c: &mut Canvas, rng: &mut ChaCha8Rng, f: &Facade, wall: [f64; 3]) {
    let cols = rng.random_range(3..=5usize);
    let rows = rng.random_range(3..=5usize);
    let win = mix(wall, [0.15, 0.2, 0.3], 0.6);
    let s = shade(f.orientation);
    let span = (f.x1 - f.x0) as f64;
    for x in f.x0..f.x1.min(c.w) {
        let xc = x as f64 + 0.5;
        let (t, b) = ((f.top)(xc), (f.base)(xc));
        let u = (xc - f.x0 as f64) / span;
        let cu = u * cols as f64;
        let in_col = cu.fract() > 0.15 && cu.fract() < 0.85 && u > 0.04 && u < 0.96;
        for y in 0..c.h {
            let yc = y as f64 + 0.5;
            if yc < t || yc >= b {
                continue;
            }
            let v = (yc - t) / (b - t);
            let rv = v * (rows as f64 + 1.0);
            let in_row =
                rv > 0.6 && rv < rows as f64 + 0.2 && rv.fract() > 0.25 && rv.fract() < 0.8;
            let col = if in_col && in_row { win } else { wall };
            c.put(x, y, scale(col, s), f.orientation);
        }
    }
}

fn wall_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let b = rng.random_range(0.55..0.65);
    let warm = rng.random_range(-0.06..0.06);
    [b + warm, b, b - warm]
}

/// Cloud patches over the sky, then the whole sky defocused as a distant
/// background.
fn paint_clouds(c: &mut Canvas, rng: &mut ChaCha8Rng, below: usize) {
    const CLEAR: [f64; 3] = [0.92, 0.95, 0.98];
    const CLOUD: [f64; 3] = [0.2, 0.21, 0.25];
    for p in 0..c.w * below.min(c.h) {
        if c.labels[p] == GeometricClass::Sky {
            c.rgb[p] = CLEAR;
        }
    }
    let n = rng.random_range(50..=70);
    for _ in 0..n {
        let cx = rng.random_range(0.0..c.w as f64);
        let cy = rng.random_range(0.0..below as f64);
        let rx = rng.random_range(8.0..24.0);
        let ry = rng.random_range(6.0..14.0);
        for y in 0..below.min(c.h) {
            for x in 0..c.w {
                let p = y * c.w + x;
                let d = ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2);
                if c.labels[p] == GeometricClass::Sky && d < 1.0 {
                    c.rgb[p] = CLOUD;
                }
            }
        }
    }
    let planes: Vec<Plane> = (0..3)
        .map(|k| {
            gaussian_blur(
                &Plane::new(c.w, c.h, c.rgb.iter().map(|v| v[k]).collect()),
                BACKGROUND_BLUR,
            )
        })
        .collect();
    for p in 0..c.w * c.h {
        if c.labels[p] == GeometricClass::Sky {
            c.rgb[p] = [planes[0].data[p], planes[1].data[p], planes[2].data[p]];
        }
    }
}

fn horizon_only(c: &mut Canvas, rng: &mut ChaCha8Rng, a: &mut SceneAttributes) {
    let hz = rng.random_range((0.3 * c.h as f64) as usize..=(0.7 * c.h as f64) as usize);
    paint_background(c, rng, hz);
    a.horizon_row = Some(hz as f64);
}

fn building_horizon(rng: &mut ChaCha8Rng, h: usize) -> usize {
    rng.random_range((0.5 * h as f64) as usize..=(0.65 * h as f64) as usize)
}

fn fronto(c: &mut Canvas, rng: &mut ChaCha8Rng, a: &mut SceneAttributes) {
    let (w, h) = (c.w as f64, c.h as f64);
    let hz = building_horizon(rng, c.h);
    paint_background(c, rng, hz);
    paint_clouds(c, rng, hz);
    a.horizon_row = Some(hz as f64);
    let x0 = rng.random_range(0.1 * w..0.3 * w).round() as usize;
    let x1 = rng.random_range(0.7 * w..0.9 * w).round() as usize;
    let top = rng.random_range(0.15 * h..0.35 * h).round();
    let base = (hz as f64 + rng.random_range(0.05 * h..0.15 * h)).round();
    let wall = wall_color(rng);
    let (tf, bf) = (move |_: f64| top, move |_: f64| base);
    paint_facade(
        c,
        rng,
        &Facade {
            x0,
            x1,
            top: &tf,
            base: &bf,
            orientation: GeometricClass::PlanarCenter,
        },
        wall,
    );
    a.surfaces.push(TruthSurface {
        x0: x0 as f64,
        x1: x1 as f64,
        orientation: GeometricClass::PlanarCenter,
        vanishing_point: None,
    });
}

fn corner(c: &mut Canvas, rng: &mut ChaCha8Rng, a: &mut SceneAttributes) {
    let (w, h) = (c.w as f64, c.h as f64);
    let hz = building_horizon(rng, c.h);
    let hzf = hz as f64;
    paint_background(c, rng, hz);
    paint_clouds(c, rng, hz);
    a.horizon_row = Some(hzf);
    let xc = rng.random_range(0.35 * w..0.65 * w).round();
    let left = rng.random_range(0.0..0.12 * w).round();
    let right = rng.random_range(0.88 * w..w).round();
    let yt = rng.random_range(0.08 * h..0.25 * h);
    let yb = hzf + rng.random_range(0.12 * h..0.25 * h);
    // each facade's skyline must stay above the horizon inside the facade
    let sl = rng
        .random_range(0.1..0.4f64)
        .min(0.8 * (hzf - yt) / (xc - left).max(1.0));
    let sr = rng
        .random_range(0.1..0.4f64)
        .min(0.8 * (hzf - yt) / (right - xc).max(1.0));
    let vl = xc - (hzf - yt) / sl;
    let vr = xc + (hzf - yt) / sr;
    let wall = wall_color(rng);
    let tl = move |x: f64| yt + sl * (xc - x);
    let bl = move |x: f64| yb + (hzf - yb) * (xc - x) / (xc - vl);
    let tr = move |x: f64| yt + sr * (x - xc);
    let br = move |x: f64| yb + (hzf - yb) * (x - xc) / (vr - xc);
    let (l0, c0, r0) = (left as usize, xc as usize, right as usize);
    paint_facade(
        c,
        rng,
        &Facade {
            x0: l0,
            x1: c0,
            top: &tl,
            base: &bl,
            orientation: GeometricClass::PlanarLeft,
        },
        wall,
    );
    paint_facade(
        c,
        rng,
        &Facade {
            x0: c0,
            x1: r0,
            top: &tr,
            base: &br,
            orientation: GeometricClass::PlanarRight,
        },
        wall,
    );
    a.surfaces.push(TruthSurface {
        x0: left,
        x1: xc,
        orientation: GeometricClass::PlanarLeft,
        vanishing_point: Some((vl, hzf)),
    });
    a.surfaces.push(TruthSurface {
        x0: xc,
        x1: right,
        orientation: GeometricClass::PlanarRight,
        vanishing_point: Some((vr, hzf)),
    });
}

fn alley(c: &mut Canvas, rng: &mut ChaCha8Rng, a: &mut SceneAttributes) {
    let (w, h) = (c.w as f64, c.h as f64);
    let hz = building_horizon(rng, c.h);
    let hzf = hz as f64;
    paint_background(c, rng, hz);
    paint_clouds(c, rng, hz);
    let vx = w / 2.0 + rng.random_range(-0.05 * w..0.05 * w);
    let xe = rng.random_range(0.3 * w..0.42 * w).round();
    let xs = rng.random_range(0.58 * w..0.7 * w).round();
    let (t0, t1) = (
        rng.random_range(0.0..0.12 * h),
        rng.random_range(0.0..0.12 * h),
    );
    let (b0, b1) = (
        rng.random_range(0.9 * h..1.1 * h),
        rng.random_range(0.9 * h..1.1 * h),
    );
    let lt = move |x: f64| t0 + (hzf - t0) * x / vx;
    let lb = move |x: f64| b0 + (hzf - b0) * x / vx;
    let rt = move |x: f64| t1 + (hzf - t1) * (w - x) / (w - vx);
    let rb = move |x: f64| b1 + (hzf - b1) * (w - x) / (w - vx);
    let wall_l = wall_color(rng);
    let wall_r = wall_color(rng);
    paint_facade(
        c,
        rng,
        &Facade {
            x0: 0,
            x1: xe as usize,
            top: &lt,
            base: &lb,
            orientation: GeometricClass::PlanarRight,
        },
        wall_l,
    );
    paint_facade(
        c,
        rng,
        &Facade {
            x0: xs as usize,
            x1: c.w,
            top: &rt,
            base: &rb,
            orientation: GeometricClass::PlanarLeft,
        },
        wall_r,
    );
    a.surfaces.push(TruthSurface {
        x0: -1.0,
        x1: xe,
        orientation: GeometricClass::PlanarRight,
        vanishing_point: Some((vx, hzf)),
    });
    a.surfaces.push(TruthSurface {
        x0: xs,
        x1: w,
        orientation: GeometricClass::PlanarLeft,
        vanishing_point: Some((vx, hzf)),
    });
    a.horizon_row = Some(hzf);
}

/// Solid block with a known box and an isotropic-texture porous ellipse
/// over a base scene.
fn occluders(c: &mut Canvas, rng: &mut ChaCha8Rng, a: &mut SceneAttributes) {
    let (w, h) = (c.w as f64, c.h as f64);
    // porous crown
    let (cx, cy) = (
        rng.random_range(0.15 * w..0.85 * w),
        rng.random_range(0.3 * h..0.5 * h),
    );
    let (rx, ry) = (rng.random_range(25.0..40.0), rng.random_range(20.0..32.0));
    let green = [0.22, rng.random_range(0.42..0.52), 0.16];
    let speckle: Vec<f64> = (0..c.w * c.h).map(|_| rng.random_range(0.0..1.0)).collect();
    for y in 0..c.h {
        for x in 0..c.w {
            let d = ((x as f64 + 0.5 - cx) / rx).powi(2) + ((y as f64 + 0.5 - cy) / ry).powi(2);
            if d < 1.0 {
                let v = 0.45 + 0.9 * speckle[y * c.w + x];
                c.put(x, y, scale(green, v), GeometricClass::Porous);
            }
        }
    }
    a.porous = Some((cx, cy, rx, ry));
    // solid block standing on the ground
    let bw = rng.random_range(40..=70usize);
    let bh = rng.random_range(25..=40usize);
    let bottom = rng.random_range((0.85 * h) as usize..c.h - 4);
    let bx = rng.random_range(8..c.w - bw - 8);
    let by = bottom - bh;
    let palette = [[0.75, 0.12, 0.10], [0.12, 0.22, 0.70], [0.85, 0.72, 0.10]];
    let col = palette[rng.random_range(0..palette.len())];
    for y in by..bottom {
        for x in bx..bx + bw {
            c.put(x, y, col, GeometricClass::Solid);
        }
    }
    let m = 5;
    a.boxes.push(BoundingBox {
        x: bx - m,
        y: by - m,
        w: bw + 2 * m,
        h: (bh + 2 * m).min(c.h - (by - m)),
    });
}

/// Sharp fronto facade on sharply textured ground in front of a defocused
/// textured backdrop. Returns the scene and the skyline and base rows
/// `(last sky row, last facade row)`.
pub fn defocus_scene(seed: u64) -> (SyntheticScene, usize, usize) {
    let mut rng = scene_rng(seed, 0);
    let (w, h) = (WIDTH, HEIGHT);
    let mut c = Canvas::new(w, h);
    let hz = 150;
    let (top, base) = (60usize, 170usize);
    paint_background(&mut c, &mut rng, hz);
    // distant textured backdrop, defocused below
    for y in 0..top + 4 {
        for x in 0..w {
            let on = (x / 12) % 2 == 0;
            let v = if on { 1.0 } else { 0.2 };
            c.rgb[y * w + x] = [v, v, v];
        }
    }
    let planes: Vec<Plane> = (0..3)
        .map(|k| {
            gaussian_blur(
                &Plane::new(w, h, c.rgb.iter().map(|v| v[k]).collect()),
                BACKGROUND_BLUR,
            )
        })
        .collect();
    for p in 0..w * hz {
        c.rgb[p] = [planes[0].data[p], planes[1].data[p], planes[2].data[p]];
    }
    // paving tiles
    for y in hz..h {
        for x in 0..w {
            let tile = ((x / 8) * 31 + (y / 6) * 17) % 5;
            let v = 0.25 + 0.08 * tile as f64;
            c.put(x, y, [v, v * 0.95, v * 0.85], GeometricClass::Support);
        }
    }
    let (tf, bf) = (move |_: f64| top as f64, move |_: f64| base as f64);
    paint_facade(
        &mut c,
        &mut rng,
        &Facade {
            x0: 0,
            x1: w,
            top: &tf,
            base: &bf,
            orientation: GeometricClass::PlanarCenter,
        },
        [0.38, 0.35, 0.31],
    );
    let (image, truth) = c.finish(&mut rng, 0.01);
    let scene = SyntheticScene {
        kind: SceneKind::FrontoBuilding,
        image,
        truth,
        attributes: SceneAttributes::default(),
    };
    (scene, top - 1, base - 1)
}

fn scene_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_add(1),
    )
}

pub fn generate_scene(seed: u64, index: usize, kind: SceneKind) -> SyntheticScene {
    render(seed, index, kind).1
}

/// Occluded scene `index` together with the same scene rendered without its
/// occluders, and so without boxes or porous patch. The two differ in noise.
pub fn occlusion_pair(seed: u64, index: usize) -> (SyntheticScene, SyntheticScene) {
    let (clean, occluded) = render(seed, index, SceneKind::Occluded);
    (
        clean.expect("occluded scenes keep their clean render"),
        occluded,
    )
}

fn render(seed: u64, index: usize, kind: SceneKind) -> (Option<SyntheticScene>, SyntheticScene) {
    let mut rng = scene_rng(seed, index);
    let mut c = Canvas::new(WIDTH, HEIGHT);
    let mut a = SceneAttributes::default();
    let mut clean = None;
    match kind {
        SceneKind::HorizonOnly => horizon_only(&mut c, &mut rng, &mut a),
        SceneKind::CornerBuilding => corner(&mut c, &mut rng, &mut a),
        SceneKind::Alley => alley(&mut c, &mut rng, &mut a),
        SceneKind::FrontoBuilding => fronto(&mut c, &mut rng, &mut a),
        SceneKind::Occluded => {
            match rng.random_range(0..3) {
                0 => corner(&mut c, &mut rng, &mut a),
                1 => fronto(&mut c, &mut rng, &mut a),
                _ => alley(&mut c, &mut rng, &mut a),
            }
            let mut side = rng.clone();
            let (image, truth) = c.clone().finish(&mut side, 0.02);
            clean = Some(SyntheticScene {
                kind,
                image,
                truth,
                attributes: a.clone(),
            });
            occluders(&mut c, &mut rng, &mut a);
        }
    }
    let (image, truth) = c.finish(&mut rng, 0.02);
    let scene = SyntheticScene {
        kind,
        image,
        truth,
        attributes: a,
    };
    (clean, scene)
}

/// Scene `i` has kind `kinds[i % kinds.len()]`.
pub fn generate_scenes(
    seed: u64,
    count: usize,
    kinds: &[SceneKind],
) -> Result<Vec<SyntheticScene>> {
    if count == 0 || kinds.is_empty() {
        return Err(GalError::Parameter(
            "count and kinds must be non-empty".into(),
        ));
    }
    Ok((0..count)
        .map(|i| generate_scene(seed, i, kinds[i % kinds.len()]))
        .collect())
}

pub fn scene_stem(i: usize) -> String {
    format!("{i:04}")
}

/// `images/NNNN.ppm`, `truth/NNNN.pgm`, `boxes/NNNN.txt`, `gav/NNNN.txt`.
pub fn write_scenes(dir: &Path, scenes: &[SyntheticScene]) -> Result<()> {
    for sub in ["images", "truth", "boxes", "gav"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| GalError::io(&d, e))?;
    }
    for (i, s) in scenes.iter().enumerate() {
        let stem = scene_stem(i);
        write_raster(&s.image, dir.join("images").join(format!("{stem}.ppm")))?;
        write_label_map(
            &s.truth,
            LabelMode::Codes,
            dir.join("truth").join(format!("{stem}.pgm")),
        )?;
        let bp = dir.join("boxes").join(format!("{stem}.txt"));
        fs::write(&bp, format_boxes(&s.attributes.boxes)).map_err(|e| GalError::io(&bp, e))?;
        let gp = dir.join("gav").join(format!("{stem}.txt"));
        fs::write(&gp, s.attributes.to_text(s.kind)).map_err(|e| GalError::io(&gp, e))?;
    }
    Ok(())
}
