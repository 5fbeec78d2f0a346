//! Low-level geometric evidence: line segments, edge probability, defocus
//! edges and vertical-line scores.

mod edges;
mod lsd;

pub use edges::{blur_map, defocus_map, edge_probability, DefocusParams, EdgeParams};
pub use lsd::{detect_segments, rasterize_segments, segments_to_text, LineSegment, LsdParams};

use crate::config::Config;
use crate::error::{GalError, Result};
use crate::imageops::Plane;
use crate::raster::Raster;
use crate::segmentation::Segmentation;

impl LsdParams {
    pub fn from_config(c: &Config) -> Self {
        LsdParams {
            angle_tolerance: c.lsd_angle_tolerance,
            min_length: c.lsd_min_length,
            min_gradient: c.lsd_min_gradient,
            min_density: c.lsd_min_density,
        }
    }
}

impl EdgeParams {
    pub fn from_config(c: &Config) -> Self {
        EdgeParams {
            sigma: c.edge_sigma,
            norm_floor: c.edge_norm_floor,
        }
    }
}

impl DefocusParams {
    pub fn from_config(c: &Config) -> Self {
        DefocusParams {
            sigma0: c.defocus_sigma0,
            edge_threshold: c.defocus_edge_threshold,
            max_blur: c.defocus_max_blur,
            box_size: c.defocus_box,
            norm_floor: c.defocus_norm_floor,
        }
    }
}

/// Per-image evidence, all planes in `[0, 1]` at image size.
#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceMaps {
    pub segments: Vec<LineSegment>,
    /// Binary rasterization of `segments`.
    pub line_map: Plane,
    pub edge_map: Plane,
    pub defocus_edge_map: Plane,
}

impl EvidenceMaps {
    pub fn compute(img: &Raster, config: &Config) -> EvidenceMaps {
        let gray = Plane::gray_of(img);
        let segments = detect_segments(img, &LsdParams::from_config(config));
        let line_map = rasterize_segments(&segments, img.width(), img.height());
        let edge_map = edge_probability(&gray, &EdgeParams::from_config(config));
        let defocus_edge_map = defocus_map(&gray, &edge_map, &DefocusParams::from_config(config));
        EvidenceMaps {
            segments,
            line_map,
            edge_map,
            defocus_edge_map,
        }
    }
}

#[inline]
fn midpoint_pixel(s: &LineSegment, width: usize, height: usize) -> Option<usize> {
    let (mx, my) = s.midpoint();
    let (x, y) = (mx.round(), my.round());
    if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
        return None;
    }
    Some(y as usize * width + x as usize)
}

/// `min(1, total length of near-vertical segments with midpoint in the
/// region / sqrt(area))`. `region` holds pixel indices of a `width`-wide
/// image.
pub fn vertical_line_score(
    segments: &[LineSegment],
    region: &[usize],
    width: usize,
    tolerance_deg: f64,
) -> Result<f64> {
    if region.is_empty() {
        return Err(GalError::Parameter("empty region".into()));
    }
    let mut sorted = region.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let total: f64 = segments
        .iter()
        .filter(|s| s.is_vertical(tolerance_deg))
        .filter(|s| {
            let (mx, my) = s.midpoint();
            let (x, y) = (mx.round(), my.round());
            x >= 0.0 && y >= 0.0 && x < width as f64 && {
                let p = y as usize * width + x as usize;
                sorted.binary_search(&p).is_ok()
            }
        })
        .map(|s| s.length())
        .sum();
    Ok((total / (sorted.len() as f64).sqrt()).min(1.0))
}

/// Vertical-line score of every segment of a segmentation at once.
pub fn vertical_scores(
    segments: &[LineSegment],
    seg: &Segmentation,
    tolerance_deg: f64,
) -> Vec<f64> {
    let mut total = vec![0.0; seg.n_segments()];
    for s in segments.iter().filter(|s| s.is_vertical(tolerance_deg)) {
        if let Some(p) = midpoint_pixel(s, seg.width(), seg.height()) {
            total[seg.label(p)] += s.length();
        }
    }
    let mut area = vec![0usize; seg.n_segments()];
    for p in 0..seg.width() * seg.height() {
        area[seg.label(p)] += 1;
    }
    total
        .iter()
        .zip(&area)
        .map(|(t, a)| (t / (*a as f64).sqrt()).min(1.0))
        .collect()
}
