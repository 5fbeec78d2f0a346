//! Line-segment detection by gradient-orientation region growing and
//! rectangle fitting.

use std::fmt::Write as _;

use crate::imageops::{gaussian_blur, sobel, Plane};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl LineSegment {
    /// Endpoints are reordered so that `(y1, x1) <= (y2, x2)`.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        if (y1, x1) <= (y2, x2) {
            LineSegment { x1, y1, x2, y2 }
        } else {
            LineSegment {
                x1: x2,
                y1: y2,
                x2: x1,
                y2: y1,
            }
        }
    }

    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    /// Direction in degrees, `[0, 180)`, with y pointing down.
    pub fn angle(&self) -> f64 {
        let a = (self.y2 - self.y1)
            .atan2(self.x2 - self.x1)
            .to_degrees()
            .rem_euclid(180.0);
        if a >= 180.0 {
            0.0
        } else {
            a
        }
    }

    pub fn midpoint(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn is_vertical(&self, tolerance_deg: f64) -> bool {
        (self.angle() - 90.0).abs() <= tolerance_deg
    }

    pub fn is_horizontal(&self, tolerance_deg: f64) -> bool {
        let a = self.angle();
        a <= tolerance_deg || a >= 180.0 - tolerance_deg
    }

    pub fn translated(&self, dx: f64, dy: f64) -> LineSegment {
        LineSegment::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    /// Mirror about the vertical axis of an image of the given width.
    pub fn mirrored(&self, width: usize) -> LineSegment {
        let m = (width - 1) as f64;
        LineSegment::new(m - self.x1, self.y1, m - self.x2, self.y2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsdParams {
    pub angle_tolerance: f64,
    pub min_length: f64,
    pub min_gradient: f64,
    pub min_density: f64,
}

impl Default for LsdParams {
    fn default() -> Self {
        LsdParams {
            angle_tolerance: 22.5,
            min_length: 15.0,
            min_gradient: 0.02,
            min_density: 0.5,
        }
    }
}

const PRESMOOTH_SIGMA: f64 = 0.75;
/// Gradient fraction of the seed kept when a sparse region is refined.
const REFINE_FRACTION: f64 = 0.5;

#[inline]
fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Detect straight segments; results are sorted by `(y1, x1)`.
pub fn detect_segments(img: &Raster, params: &LsdParams) -> Vec<LineSegment> {
    let gray = gaussian_blur(&Plane::gray_of(img), PRESMOOTH_SIGMA);
    let (w, h) = (gray.width, gray.height);
    let (gx, gy) = sobel(&gray);
    let n = w * h;
    let mag: Vec<f64> = (0..n).map(|p| gx.data[p].hypot(gy.data[p])).collect();
    let theta: Vec<f64> = (0..n).map(|p| gy.data[p].atan2(gx.data[p])).collect();
    let tol = params.angle_tolerance.to_radians();

    let mut seeds: Vec<usize> = (0..n).filter(|&p| mag[p] > params.min_gradient).collect();
    seeds.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));

    let mut used = vec![false; n];
    let mut out = Vec::new();
    let mut region = Vec::new();
    for &seed in &seeds {
        if used[seed] {
            continue;
        }
        region.clear();
        region.push(seed);
        used[seed] = true;
        let (mut sc, mut ss) = (theta[seed].cos(), theta[seed].sin());
        let mut region_angle = theta[seed];
        let mut head = 0;
        while head < region.len() {
            let p = region[head];
            head += 1;
            let (px, py) = ((p % w) as isize, (p / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (qx, qy) = (px + dx, py + dy);
                    if qx < 0 || qy < 0 || qx >= w as isize || qy >= h as isize {
                        continue;
                    }
                    let q = qy as usize * w + qx as usize;
                    if used[q] || mag[q] <= params.min_gradient {
                        continue;
                    }
                    if angle_diff(theta[q], region_angle) <= tol {
                        used[q] = true;
                        region.push(q);
                        sc += theta[q].cos();
                        ss += theta[q].sin();
                        region_angle = ss.atan2(sc);
                    }
                }
            }
        }
        if let Some(seg) = fit_rectangle(&region, w, &mag, params) {
            out.push(seg);
        } else {
            // too sparse: retry on the strong core of the region, releasing the rest
            let cut = REFINE_FRACTION * mag[seed];
            let core: Vec<usize> = region.iter().copied().filter(|&p| mag[p] >= cut).collect();
            if core.len() < region.len() {
                if let Some(seg) = fit_rectangle(&core, w, &mag, params) {
                    out.push(seg);
                    for &p in &region {
                        used[p] = mag[p] >= cut;
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.y1.total_cmp(&b.y1)
            .then(a.x1.total_cmp(&b.x1))
            .then(a.y2.total_cmp(&b.y2))
            .then(a.x2.total_cmp(&b.x2))
    });
    out
}

fn fit_rectangle(
    region: &[usize],
    w: usize,
    mag: &[f64],
    params: &LsdParams,
) -> Option<LineSegment> {
    if (region.len() as f64) < params.min_length {
        return None;
    }
    let mut sw = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for &p in region {
        let m = mag[p];
        sw += m;
        cx += m * (p % w) as f64;
        cy += m * (p / w) as f64;
    }
    cx /= sw;
    cy /= sw;
    let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
    for &p in region {
        let m = mag[p];
        let dx = (p % w) as f64 - cx;
        let dy = (p / w) as f64 - cy;
        ixx += m * dx * dx;
        iyy += m * dy * dy;
        ixy += m * dx * dy;
    }
    // principal axis of the weighted scatter
    let phi = 0.5 * (2.0 * ixy).atan2(ixx - iyy);
    let (ux, uy) = (phi.cos(), phi.sin());
    let (mut lmin, mut lmax, mut wmin, mut wmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &p in region {
        let dx = (p % w) as f64 - cx;
        let dy = (p / w) as f64 - cy;
        let l = dx * ux + dy * uy;
        let t = -dx * uy + dy * ux;
        lmin = lmin.min(l);
        lmax = lmax.max(l);
        wmin = wmin.min(t);
        wmax = wmax.max(t);
    }
    let length = lmax - lmin;
    if length < params.min_length {
        return None;
    }
    let density = region.len() as f64 / ((length + 1.0) * (wmax - wmin + 1.0));
    if density < params.min_density {
        return None;
    }
    Some(LineSegment::new(
        cx + lmin * ux,
        cy + lmin * uy,
        cx + lmax * ux,
        cy + lmax * uy,
    ))
}

/// `x1 y1 x2 y2 length angle` per line.
pub fn segments_to_text(segments: &[LineSegment]) -> String {
    let mut s = String::new();
    for g in segments {
        let _ = writeln!(
            s,
            "{:.3} {:.3} {:.3} {:.3} {:.3} {:.3}",
            g.x1,
            g.y1,
            g.x2,
            g.y2,
            g.length(),
            g.angle()
        );
    }
    s
}

/// Binary 1-px rasterization of the segments.
pub fn rasterize_segments(segments: &[LineSegment], width: usize, height: usize) -> Plane {
    let mut p = Plane::zeros(width, height);
    for g in segments {
        crate::imageops::for_each_line_pixel(g.x1, g.y1, g.x2, g.y2, width, height, |x, y| {
            p.data[y * width + x] = 1.0;
        });
    }
    p
}
