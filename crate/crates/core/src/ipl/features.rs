use crate::error::{GalError, Result};
use crate::imageops::{orientation_bin, orientation_deg, sobel, Plane};
use crate::raster::Raster;
use crate::segmentation::SegmentGraph;

pub const N_FEATURES: usize = 19;

/// Per-segment descriptor.
///
/// Layout: mean RGB (0..3), RGB standard deviation (3..6), centroid x and y
/// over image size (6, 7), bounding-box height over image height (8),
/// gradient-orientation histogram (9..17), mean gradient magnitude (17) and
/// area fraction (18).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub const COLOR_MEAN: usize = 0;
    pub const COLOR_STD: usize = 3;
    pub const CENTROID_X: usize = 6;
    pub const CENTROID_Y: usize = 7;
    pub const BBOX_HEIGHT: usize = 8;
    pub const HISTOGRAM: usize = 9;
    pub const MEAN_GRADIENT: usize = 17;
    pub const AREA: usize = 18;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn histogram(&self) -> &[f64] {
        &self.0[Self::HISTOGRAM..Self::HISTOGRAM + 8]
    }
}

pub fn extract_features(img: &Raster, graph: &SegmentGraph) -> Result<Vec<FeatureVector>> {
    let (w, h) = (img.width(), img.height());
    if graph.width != w || graph.height != h {
        return Err(GalError::Dimension(format!(
            "image {w}x{h} vs graph {}x{}",
            graph.width, graph.height
        )));
    }
    let gray = Plane::gray_of(img);
    let (gx, gy) = sobel(&gray);
    let n_pixels = (w * h) as f64;
    let feats = graph
        .segments
        .iter()
        .map(|s| {
            let mut f = [0.0; N_FEATURES];
            let n = s.pixels.len() as f64;
            let mut sum = [0.0; 3];
            let mut hist = [0.0; 8];
            let mut grad = 0.0;
            for &p in &s.pixels {
                let c = img.rgb_at(p);
                for i in 0..3 {
                    sum[i] += c[i];
                }
                let (dx, dy) = (gx.data[p], gy.data[p]);
                let m = dx.hypot(dy);
                if m > 0.0 {
                    hist[orientation_bin(orientation_deg(dx, dy))] += m;
                }
                grad += m;
            }
            let mean = sum.map(|v| v / n);
            let mut var = [0.0; 3];
            for &p in &s.pixels {
                let c = img.rgb_at(p);
                for i in 0..3 {
                    var[i] += (c[i] - mean[i]).powi(2);
                }
            }
            for i in 0..3 {
                f[FeatureVector::COLOR_MEAN + i] = mean[i];
                f[FeatureVector::COLOR_STD + i] = (var[i] / n).sqrt();
            }
            f[FeatureVector::CENTROID_X] = (s.centroid.0 + 0.5) / w as f64;
            f[FeatureVector::CENTROID_Y] = (s.centroid.1 + 0.5) / h as f64;
            f[FeatureVector::BBOX_HEIGHT] = (s.bbox.3 - s.bbox.1 + 1) as f64 / h as f64;
            let total: f64 = hist.iter().sum();
            for (i, v) in hist.iter().enumerate() {
                f[FeatureVector::HISTOGRAM + i] = if total > 0.0 { v / total } else { 0.125 };
            }
            f[FeatureVector::MEAN_GRADIENT] = grad / n;
            f[FeatureVector::AREA] = n / n_pixels;
            FeatureVector(f)
        })
        .collect();
    Ok(feats)
}
