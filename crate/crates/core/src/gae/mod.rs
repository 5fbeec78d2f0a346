//! Global attribute extraction: sky and ground lines, horizon, planar
//! surfaces, vertical and vanishing lines, solid objects and porous regions,
//! producing the per-unit probability maps consumed by the CRF.

pub mod boundary;
pub mod gmm;
pub mod grabcut;
pub mod horizon;
pub mod porous;
pub mod trapezoid;
pub mod vanishing;
pub mod vertical;

use std::fmt::Write as _;

use log::warn;

use crate::class::{ClassDistribution, CoarseClass, GeometricClass};
use crate::config::Config;
use crate::error::{GalError, Result};
use crate::imageops::Plane;
use crate::lineworks::EvidenceMaps;
use crate::raster::Raster;
use crate::segmentation::SegmentGraph;

pub use boundary::{
    check_above_below, deposit_line, trace_boundaries, validate_boundary, BoundaryPolyline,
    CoarseMap, LineEvidence, LineKind, ValidatedLine,
};
pub use gmm::{GmmComponent, GmmModel};
pub use grabcut::{
    clip_box, format_boxes, grab_cut, parse_boxes, read_boxes, BoundingBox, GrabCutParams,
    SolidMask,
};
pub use horizon::{
    gmm_refine, horizon_building, horizon_natural, scene_mode, GmmParams, HorizonParams, SceneMode,
};
pub use porous::{contour_randomness, orientation_bins, porous_distribution};
pub use trapezoid::{
    fit_trapezoids, piece_map, region_rows, unit_pieces, SurfacePiece, TrapezoidParams, Trapezoids,
};
pub use vanishing::{orientation_from_vp, ransac_vanishing, RansacParams, VanishingPoint};
pub use vertical::{vertical_distribution, vertical_line_scores};

/// Which attributes are extracted. Vanishing lines and planar surfaces are
/// switched together.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttributeSet {
    pub porous: bool,
    pub solid: bool,
    pub horizon: bool,
    pub vertical: bool,
    pub sky_ground: bool,
    pub vanishing_planar: bool,
}

impl AttributeSet {
    pub fn all() -> Self {
        AttributeSet {
            porous: true,
            solid: true,
            horizon: true,
            vertical: true,
            sky_ground: true,
            vanishing_planar: true,
        }
    }

    pub fn none() -> Self {
        AttributeSet {
            porous: false,
            solid: false,
            horizon: false,
            vertical: false,
            sky_ground: false,
            vanishing_planar: false,
        }
    }

    /// Cumulative ablation order, starting from no attributes.
    pub fn ablation_steps() -> Vec<(&'static str, AttributeSet)> {
        let mut s = AttributeSet::none();
        let mut out = vec![("none", s)];
        s.porous = true;
        out.push(("+porous", s));
        s.solid = true;
        out.push(("+solid", s));
        s.horizon = true;
        out.push(("+horizon", s));
        s.vertical = true;
        out.push(("+vertical-line", s));
        s.sky_ground = true;
        out.push(("+sky/ground-line", s));
        s.vanishing_planar = true;
        out.push(("+vanishing+planar", s));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkyGroundPayload {
    pub sky: Option<BoundaryPolyline>,
    pub ground: Option<BoundaryPolyline>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonPayload {
    pub row: f64,
    pub mode: SceneMode,
    pub unconfident: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerticalPayload {
    /// `b` score of every unit.
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildingRegion {
    pub piece: usize,
    pub x0: f64,
    pub x1: f64,
    pub vanishing_point: VanishingPoint,
    pub orientation: GeometricClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PorousRegion {
    pub units: Vec<usize>,
    pub score: f64,
}

/// Seven attribute flags; a flag is set exactly when its payload is present.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GlobalAttributeVector {
    pub sky_ground: Option<SkyGroundPayload>,
    pub horizon: Option<HorizonPayload>,
    pub planar: Option<Vec<SurfacePiece>>,
    pub vertical: Option<VerticalPayload>,
    pub vanishing: Option<Vec<BuildingRegion>>,
    pub solid: Option<Vec<SolidMask>>,
    pub porous: Option<Vec<PorousRegion>>,
}

pub const ATTRIBUTE_NAMES: [&str; 7] = [
    "sky_ground_line",
    "horizon",
    "planar_surface",
    "vertical_line",
    "vanishing_line",
    "solid",
    "porous",
];

impl GlobalAttributeVector {
    pub fn flags(&self) -> [bool; 7] {
        [
            self.sky_ground.is_some(),
            self.horizon.is_some(),
            self.planar.is_some(),
            self.vertical.is_some(),
            self.vanishing.is_some(),
            self.solid.is_some(),
            self.porous.is_some(),
        ]
    }

    /// `flag name summary` per attribute.
    pub fn report(&self) -> String {
        let f = self.flags();
        let mut out = String::new();
        let line = |l: &Option<BoundaryPolyline>| match l {
            Some(p) => format!("{:.3}/{}cols", p.confidence, p.valid_count()),
            None => "none".to_string(),
        };
        let summaries = [
            self.sky_ground
                .as_ref()
                .map(|s| format!("sky={} ground={}", line(&s.sky), line(&s.ground))),
            self.horizon.as_ref().map(|h| {
                format!(
                    "row={:.2} mode={:?} unconfident={}",
                    h.row,
                    h.mode,
                    h.unconfident.len()
                )
            }),
            self.planar.as_ref().map(|ps| {
                ps.iter()
                    .map(|p| {
                        format!(
                            "[{:.1},{:.1}] slope={:.3} {}",
                            p.x0, p.x1, p.slope, p.orientation
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
            self.vertical.as_ref().map(|v| {
                let max = v.scores.iter().copied().fold(0.0, f64::max);
                format!("units={} max_b={max:.3}", v.scores.len())
            }),
            self.vanishing.as_ref().map(|rs| {
                rs.iter()
                    .map(|r| {
                        format!(
                            "piece{} {} inliers={}",
                            r.piece,
                            r.orientation,
                            r.vanishing_point.inliers.len()
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
            self.solid.as_ref().map(|ms| {
                ms.iter()
                    .map(|m| {
                        format!(
                            "box({},{},{},{}) area={}",
                            m.bbox.x,
                            m.bbox.y,
                            m.bbox.w,
                            m.bbox.h,
                            m.area()
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
            self.porous.as_ref().map(|ps| {
                ps.iter()
                    .map(|p| format!("units={} r={:.3}", p.units.len(), p.score))
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
        ];
        for i in 0..7 {
            let _ = writeln!(
                out,
                "{} {} {}",
                u8::from(f[i]),
                ATTRIBUTE_NAMES[i],
                summaries[i].as_deref().unwrap_or("-")
            );
        }
        out
    }
}

/// Per-unit CRF inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeMaps {
    pub initial: Vec<ClassDistribution>,
    pub porous: Vec<ClassDistribution>,
    pub solid: Vec<ClassDistribution>,
    pub horizon: Vec<ClassDistribution>,
    pub vertical: Vec<ClassDistribution>,
    /// Boundary-line evidence per pixel.
    pub line_map: Plane,
    /// Whether the boundary-line term enters the pairwise energy.
    pub line_term: bool,
    /// Orientation with vanishing-line support per unit; `None` when the
    /// attribute is inactive.
    pub vanishing: Option<Vec<Option<GeometricClass>>>,
    pub planar: Option<Vec<Option<GeometricClass>>>,
}

impl AttributeMaps {
    /// Only the initial labeling; every other component inactive.
    pub fn initial_only(initial: Vec<ClassDistribution>, width: usize, height: usize) -> Self {
        let n = initial.len();
        AttributeMaps {
            initial,
            porous: vec![ClassDistribution::uniform(); n],
            solid: vec![ClassDistribution::uniform(); n],
            horizon: vec![ClassDistribution::uniform(); n],
            vertical: vec![ClassDistribution::uniform(); n],
            line_map: Plane::zeros(width, height),
            line_term: false,
            vanishing: None,
            planar: None,
        }
    }

    pub fn n_units(&self) -> usize {
        self.initial.len()
    }

    /// The five unary components in weight order.
    pub fn components(&self, unit: usize) -> [&ClassDistribution; 5] {
        [
            &self.initial[unit],
            &self.porous[unit],
            &self.solid[unit],
            &self.horizon[unit],
            &self.vertical[unit],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_units();
        for rows in [&self.porous, &self.solid, &self.horizon, &self.vertical] {
            if rows.len() != n {
                return Err(GalError::Length {
                    expected: n,
                    found: rows.len(),
                });
            }
        }
        for opt in [&self.vanishing, &self.planar].into_iter().flatten() {
            if opt.len() != n {
                return Err(GalError::Length {
                    expected: n,
                    found: opt.len(),
                });
            }
        }
        for rows in [
            &self.initial,
            &self.porous,
            &self.solid,
            &self.horizon,
            &self.vertical,
        ] {
            for r in rows {
                r.validate()
                    .map_err(|e| GalError::Internal(format!("attribute row: {e}")))?;
            }
        }
        if self.line_map.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(GalError::Internal("line map outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Indicator value of a per-unit orientation table.
pub fn indicator(table: &[Option<GeometricClass>], unit: usize, label: GeometricClass) -> f64 {
    if table[unit] == Some(label) {
        1.0
    } else {
        0.0
    }
}

/// All extraction thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct GaeParams {
    pub line_dilation: usize,
    pub boundary_min_run: f64,
    pub line_confidence_min: f64,
    pub occluder_min_area: f64,
    pub vertical_tolerance: f64,
    pub building_min_segment: f64,
    pub building_total_length: f64,
    pub vertical_dilation: usize,
    pub vertical_gate: f64,
    pub horizon: HorizonParams,
    pub gmm: GmmParams,
    pub trapezoid: TrapezoidParams,
    pub ransac: RansacParams,
    pub vp_center_fraction: f64,
    pub vp_infinity_fraction: f64,
    pub grabcut: GrabCutParams,
    pub solid_overlap: f64,
    pub edge_sigma: f64,
    pub porous_edge_threshold: f64,
    pub porous_band: usize,
    pub porous_mass: f64,
}

impl GaeParams {
    pub fn from_config(c: &Config) -> Self {
        GaeParams {
            line_dilation: c.line_dilation,
            boundary_min_run: c.boundary_min_run,
            line_confidence_min: c.line_confidence_min,
            occluder_min_area: c.occluder_min_area,
            vertical_tolerance: c.vertical_angle_tolerance,
            building_min_segment: c.building_min_segment,
            building_total_length: c.building_total_length,
            vertical_dilation: c.vertical_dilation,
            vertical_gate: c.vertical_gate,
            horizon: HorizonParams {
                angle_tolerance: c.horizon_angle_tolerance,
                bins: c.horizon_bins,
                prior_mean: c.horizon_prior_mean,
                prior_sigma: c.horizon_prior_sigma,
                dominance: c.horizon_dominance,
                min_vote: c.horizon_min_vote,
            },
            gmm: GmmParams {
                components: c.gmm_components,
                iterations: c.gmm_iterations,
                tolerance: c.gmm_tolerance,
                ..GmmParams::default()
            },
            trapezoid: TrapezoidParams {
                break_fraction: c.trapezoid_break_fraction,
                window: c.trapezoid_window,
                slope: c.trapezoid_slope,
                min_piece: c.trapezoid_min_piece,
                vertical_tolerance: c.vertical_angle_tolerance,
                jump: c.trapezoid_jump,
            },
            ransac: RansacParams {
                iterations: c.ransac_iterations,
                inlier_degrees: c.ransac_inlier_degrees,
                min_inliers: c.ransac_min_inliers,
                seed: c.seed,
            },
            vp_center_fraction: c.vp_center_fraction,
            vp_infinity_fraction: c.vp_infinity_fraction,
            grabcut: GrabCutParams {
                components: c.grabcut_components,
                iterations: c.grabcut_iterations,
                frame: c.grabcut_frame,
                gamma: c.grabcut_gamma,
            },
            solid_overlap: c.solid_overlap,
            edge_sigma: c.edge_sigma,
            porous_edge_threshold: c.porous_edge_threshold,
            porous_band: c.porous_band,
            porous_mass: c.porous_mass,
        }
    }
}

impl Default for GaeParams {
    fn default() -> Self {
        GaeParams::from_config(&Config::default())
    }
}

/// Everything the extractors read.
pub struct GaeInput<'a> {
    pub image: &'a Raster,
    pub graph: &'a SegmentGraph,
    pub initial: &'a [ClassDistribution],
    pub evidence: &'a EvidenceMaps,
    pub boxes: &'a [BoundingBox],
}

/// Intermediate results kept for reporting and tests.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GaeDiagnostics {
    pub sky: Option<ValidatedLine>,
    pub ground: Option<ValidatedLine>,
    pub occluders: Vec<Vec<usize>>,
    pub trapezoids: Option<Trapezoids>,
    pub horizon_row: Option<f64>,
    pub scene_mode: Option<SceneMode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaeOutput {
    pub gav: GlobalAttributeVector,
    pub maps: AttributeMaps,
    pub diagnostics: GaeDiagnostics,
}

/// Coarse class implied by a seven-class distribution.
pub fn coarse_of(p: &ClassDistribution) -> CoarseClass {
    let sup = p.get(GeometricClass::Support);
    let sky = p.get(GeometricClass::Sky);
    let vert: f64 = GeometricClass::VERTICAL.iter().map(|c| p.get(*c)).sum();
    if sup >= vert && sup >= sky {
        CoarseClass::Support
    } else if vert >= sky {
        CoarseClass::Vertical
    } else {
        CoarseClass::Sky
    }
}

pub fn coarse_map(graph: &SegmentGraph, initial: &[ClassDistribution]) -> CoarseMap {
    let unit: Vec<u8> = initial.iter().map(|p| coarse_of(p) as u8).collect();
    CoarseMap {
        width: graph.width,
        height: graph.height,
        classes: (0..graph.width * graph.height)
            .map(|p| unit[graph.segment_of(p)])
            .collect(),
    }
}

pub fn extract_attributes(
    input: &GaeInput,
    params: &GaeParams,
    enabled: &AttributeSet,
) -> Result<GaeOutput> {
    let GaeInput {
        image,
        graph,
        initial,
        evidence,
        boxes,
    } = *input;
    let (w, h) = (graph.width, graph.height);
    if image.width() != w
        || image.height() != h
        || evidence.edge_map.width != w
        || evidence.edge_map.height != h
    {
        return Err(GalError::Dimension(
            "image, graph and evidence sizes differ".into(),
        ));
    }
    if initial.len() != graph.n_segments() {
        return Err(GalError::Length {
            expected: graph.n_segments(),
            found: initial.len(),
        });
    }
    let n = initial.len();
    let mut maps = AttributeMaps::initial_only(initial.to_vec(), w, h);
    let mut gav = GlobalAttributeVector::default();
    let mut diag = GaeDiagnostics::default();
    let coarse = coarse_map(graph, initial);

    // solid objects
    let mut object_mask: Option<Vec<bool>> = None;
    if enabled.solid {
        let mut masks = Vec::new();
        for b in boxes {
            match grab_cut(image, b, &params.grabcut) {
                Ok(m) if m.area() > 0 => masks.push(m),
                Ok(_) => warn!("box {b:?} produced an empty mask"),
                Err(e) => warn!("box {b:?} rejected: {e}"),
            }
        }
        if !masks.is_empty() {
            let mut union = vec![false; w * h];
            for m in &masks {
                for (u, v) in union.iter_mut().zip(&m.mask) {
                    *u |= *v;
                }
            }
            for (u, seg) in graph.segments.iter().enumerate() {
                let inside = seg.pixels.iter().filter(|&&p| union[p]).count();
                if inside as f64 > params.solid_overlap * seg.pixels.len() as f64 {
                    maps.solid[u] = ClassDistribution::one_hot(GeometricClass::Solid);
                }
            }
            object_mask = Some(union);
            gav.solid = Some(masks);
        }
    }

    // sky and ground lines
    let mut sky_line = None;
    let mut ground_line = None;
    if enabled.sky_ground {
        let min_run = (params.boundary_min_run * w as f64).ceil() as usize;
        let (sky, ground) = trace_boundaries(&coarse, object_mask.as_deref(), min_run);
        let ev = LineEvidence::new(evidence, params.line_dilation);
        let vs = validate_boundary(&sky, &ev, params.line_confidence_min);
        let vg = validate_boundary(&ground, &ev, params.line_confidence_min);
        deposit_line(&mut maps.line_map, &vs);
        deposit_line(&mut maps.line_map, &vg);
        maps.line_term = true;
        sky_line = vs.accepted.then(|| vs.polyline.clone());
        ground_line = vg.accepted.then(|| vg.polyline.clone());
        if sky_line.is_some() || ground_line.is_some() {
            gav.sky_ground = Some(SkyGroundPayload {
                sky: sky_line.clone(),
                ground: ground_line.clone(),
            });
        }
        diag.sky = Some(vs);
        diag.ground = Some(vg);
    }
    let sky_used = sky_line
        .clone()
        .unwrap_or_else(|| BoundaryPolyline::empty(LineKind::Sky, w));
    let ground_used = ground_line
        .clone()
        .unwrap_or_else(|| BoundaryPolyline::empty(LineKind::Ground, w));
    let have_lines = !sky_used.is_empty() || !ground_used.is_empty();
    if have_lines {
        let min_area = (params.occluder_min_area * (w * h) as f64).ceil() as usize;
        diag.occluders = check_above_below(&coarse, &sky_used, &ground_used, min_area.max(1));
    }

    // horizon
    if enabled.horizon {
        let segs = &evidence.segments;
        let mode = scene_mode(
            segs,
            h,
            params.vertical_tolerance,
            params.building_min_segment,
            params.building_total_length,
        );
        diag.scene_mode = Some(mode);
        let row = match mode {
            SceneMode::Natural => {
                let edge = crate::imageops::dilate_max(&evidence.edge_map, params.line_dilation);
                horizon_natural(segs, &edge, &params.horizon)
            }
            SceneMode::Building => horizon_building(
                segs,
                w,
                params.vertical_tolerance,
                params.vp_infinity_fraction,
                &params.ransac,
            ),
        };
        diag.horizon_row = row;
        if let Some(row) = row {
            if let Some(r) = gmm_refine(image, graph, initial, row, &params.gmm) {
                maps.horizon = r.p_horizon;
                gav.horizon = Some(HorizonPayload {
                    row,
                    mode,
                    unconfident: r.unconfident,
                });
            }
        }
    }

    // vertical lines
    let b_scores = vertical_line_scores(
        graph,
        &evidence.segments,
        params.vertical_tolerance,
        params.vertical_dilation,
    );
    if enabled.vertical && b_scores.iter().any(|&b| b > params.vertical_gate) {
        maps.vertical = b_scores.iter().map(|&b| vertical_distribution(b)).collect();
        gav.vertical = Some(VerticalPayload {
            scores: b_scores.clone(),
        });
    }

    // planar surfaces and vanishing lines
    if enabled.vanishing_planar && have_lines {
        let tr = fit_trapezoids(
            &sky_used,
            &ground_used,
            &evidence.segments,
            h,
            &params.trapezoid,
        );
        let pmap = piece_map(&tr, &sky_used, &ground_used, w, h);
        let units = unit_pieces(graph, &pmap, tr.pieces.len());
        if units.iter().any(|u| u.is_some()) {
            maps.planar = Some(
                units
                    .iter()
                    .map(|u| u.map(|k| tr.pieces[k].orientation))
                    .collect(),
            );
            gav.planar = Some(tr.pieces.clone());
        }
        let mut regions = Vec::new();
        let mut van = vec![None; n];
        for (k, piece) in tr.pieces.iter().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&u| units[u] == Some(k)).collect();
            if !members.iter().any(|&u| b_scores[u] > params.vertical_gate) {
                continue;
            }
            let ids: Vec<usize> = (0..evidence.segments.len())
                .filter(|&i| {
                    let s = &evidence.segments[i];
                    if s.is_vertical(params.vertical_tolerance) {
                        return false;
                    }
                    let (mx, my) = s.midpoint();
                    if !(mx > piece.x0 && mx < piece.x1) {
                        return false;
                    }
                    let col = (mx.round() as usize).min(w - 1);
                    region_rows(&sky_used, &ground_used, col, h)
                        .is_some_and(|(top, bottom)| my >= top - 2.0 && my <= bottom + 2.0)
                })
                .collect();
            let Some(vp) = ransac_vanishing(&evidence.segments, &ids, &params.ransac) else {
                continue;
            };
            let area: f64 = members
                .iter()
                .map(|&u| graph.segments[u].pixels.len() as f64)
                .sum();
            let cx = members
                .iter()
                .map(|&u| graph.segments[u].centroid.0 * graph.segments[u].pixels.len() as f64)
                .sum::<f64>()
                / area;
            let orientation = orientation_from_vp(
                &vp,
                cx,
                w,
                params.vp_center_fraction,
                params.vp_infinity_fraction,
            );
            for &u in &members {
                van[u] = Some(orientation);
            }
            regions.push(BuildingRegion {
                piece: k,
                x0: piece.x0,
                x1: piece.x1,
                vanishing_point: vp,
                orientation,
            });
        }
        if !regions.is_empty() {
            maps.vanishing = Some(van);
            gav.vanishing = Some(regions);
        }
        diag.trapezoids = Some(tr);
    }

    // porous regions
    if enabled.porous {
        let mut occluder = vec![false; w * h];
        for r in &diag.occluders {
            for &p in r {
                occluder[p] = true;
            }
        }
        let key: Vec<Option<u8>> = graph
            .segments
            .iter()
            .enumerate()
            .map(|(u, seg)| match initial[u].argmax() {
                GeometricClass::Porous => Some(0),
                GeometricClass::Solid => Some(1),
                _ if 2 * seg.pixels.iter().filter(|&&p| occluder[p]).count() > seg.pixels.len() => {
                    Some(2)
                }
                _ => None,
            })
            .collect();
        let groups = unit_groups(graph, &key);
        let gray = Plane::gray_of(image);
        let bins = orientation_bins(&gray, params.edge_sigma);
        let mut regions = Vec::new();
        for units in groups {
            let pixels: Vec<usize> = units
                .iter()
                .flat_map(|&u| graph.segments[u].pixels.iter().copied())
                .collect();
            let Some(r) = contour_randomness(
                &pixels,
                w,
                h,
                &evidence.edge_map,
                &bins,
                params.porous_edge_threshold,
                params.porous_band,
            ) else {
                continue;
            };
            let row = porous_distribution(r, params.porous_mass);
            for &u in &units {
                maps.porous[u] = row;
            }
            regions.push(PorousRegion { units, score: r });
        }
        if !regions.is_empty() {
            gav.porous = Some(regions);
        }
    }

    maps.validate()?;
    Ok(GaeOutput {
        gav,
        maps,
        diagnostics: diag,
    })
}

/// Connected groups of adjacent units sharing the same key.
fn unit_groups(graph: &SegmentGraph, key: &[Option<u8>]) -> Vec<Vec<usize>> {
    let nb = graph.neighbors();
    let mut seen = vec![false; key.len()];
    let mut out = Vec::new();
    for start in 0..key.len() {
        if seen[start] || key[start].is_none() {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut group = Vec::new();
        while let Some(u) = stack.pop() {
            group.push(u);
            for &v in &nb[u] {
                if !seen[v] && key[v] == key[start] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        group.sort_unstable();
        out.push(group);
    }
    out
}
