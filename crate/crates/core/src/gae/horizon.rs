//! Horizon estimation (line-vote histogram for natural scenes, vanishing
//! points for buildings) and colour-model refinement around it.

use crate::class::{ClassDistribution, CoarseClass, GeometricClass, NUM_CLASSES};
use crate::gae::coarse_of;
use crate::gae::gmm::GmmModel;
use crate::gae::vanishing::{ransac_vanishing, RansacParams};
use crate::imageops::{for_each_line_pixel, Plane};
use crate::lineworks::LineSegment;
use crate::raster::Raster;
use crate::segmentation::SegmentGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneMode {
    Building,
    Natural,
}

/// Building when near-vertical segments of at least `min_fraction·H` add
/// up to `total_fraction·H` or more.
pub fn scene_mode(
    segments: &[LineSegment],
    height: usize,
    tolerance: f64,
    min_fraction: f64,
    total_fraction: f64,
) -> SceneMode {
    let h = height as f64;
    let total: f64 = segments
        .iter()
        .filter(|s| s.is_vertical(tolerance) && s.length() >= min_fraction * h)
        .map(|s| s.length())
        .sum();
    if total >= total_fraction * h {
        SceneMode::Building
    } else {
        SceneMode::Natural
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonParams {
    pub angle_tolerance: f64,
    pub bins: usize,
    pub prior_mean: f64,
    pub prior_sigma: f64,
    /// The winning bin must exceed this multiple of the mean of the other
    /// positive bins.
    pub dominance: f64,
    /// Minimum winning vote as a fraction of the image width.
    pub min_vote: f64,
}

impl Default for HorizonParams {
    fn default() -> Self {
        HorizonParams {
            angle_tolerance: 10.0,
            bins: 50,
            prior_mean: 0.5,
            prior_sigma: 0.2,
            dominance: 1.5,
            min_vote: 0.1,
        }
    }
}

/// Row histogram of edge-weighted votes cast by near-horizontal segments.
pub fn horizon_natural(
    segments: &[LineSegment],
    edge: &Plane,
    params: &HorizonParams,
) -> Option<f64> {
    let (w, h) = (edge.width, edge.height);
    let bins = params.bins.clamp(1, h);
    let bin_h = h as f64 / bins as f64;
    let mu = params.prior_mean * h as f64;
    let sigma = params.prior_sigma * h as f64;
    let mut vote = vec![0.0; bins];
    let mut row_sum = vec![0.0; bins];
    for s in segments
        .iter()
        .filter(|s| s.is_horizontal(params.angle_tolerance))
    {
        for_each_line_pixel(s.x1, s.y1, s.x2, s.y2, w, h, |x, y| {
            let prior = (-0.5 * ((y as f64 - mu) / sigma).powi(2)).exp();
            let v = edge.at(x, y) * prior;
            let b = ((y as f64 / bin_h) as usize).min(bins - 1);
            vote[b] += v;
            row_sum[b] += v * y as f64;
        });
    }
    let best = (0..bins).fold(0, |b, i| if vote[i] > vote[b] { i } else { b });
    if !(vote[best] > 0.0) {
        return None;
    }
    // a line on a bin boundary splits its vote; the peak takes the larger neighbour
    let neighbour = [best.checked_sub(1), (best + 1 < bins).then_some(best + 1)]
        .into_iter()
        .flatten()
        .filter(|&i| vote[i] > 0.0)
        .fold(None, |acc: Option<usize>, i| match acc {
            Some(j) if vote[j] >= vote[i] => Some(j),
            _ => Some(i),
        });
    let peak: Vec<usize> = std::iter::once(best).chain(neighbour).collect();
    let max: f64 = peak.iter().map(|&i| vote[i]).sum();
    if max < params.min_vote * w as f64 {
        return None;
    }
    let others: Vec<f64> = (0..bins)
        .filter(|i| !peak.contains(i) && vote[*i] > 0.0)
        .map(|i| vote[i])
        .collect();
    if !others.is_empty() {
        let mean = others.iter().sum::<f64>() / others.len() as f64;
        if max < params.dominance * mean {
            return None;
        }
    }
    Some(peak.iter().map(|&i| row_sum[i]).sum::<f64>() / max)
}

/// Mean row of the finite vanishing points found by up to four rounds of
/// RANSAC over non-vertical segments; needs at least two.
pub fn horizon_building(
    segments: &[LineSegment],
    width: usize,
    vertical_tolerance: f64,
    infinity: f64,
    params: &RansacParams,
) -> Option<f64> {
    let mut remaining: Vec<usize> = (0..segments.len())
        .filter(|&i| !segments[i].is_vertical(vertical_tolerance))
        .collect();
    let mut ys = Vec::new();
    for round in 0..4 {
        let p = RansacParams {
            seed: params.seed.wrapping_add(round),
            ..*params
        };
        let Some(vp) = ransac_vanishing(segments, &remaining, &p) else {
            break;
        };
        if let Some((_, y)) = vp.finite(infinity * width as f64) {
            ys.push(y);
        }
        remaining.retain(|i| !vp.inliers.contains(i));
    }
    (ys.len() >= 2).then(|| ys.iter().sum::<f64>() / ys.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmmParams {
    pub components: usize,
    pub iterations: usize,
    pub tolerance: f64,
    /// Cap on pixels per model; larger sets are subsampled with a fixed stride.
    pub max_samples: usize,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            components: 3,
            iterations: 50,
            tolerance: 1e-4,
            max_samples: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonRefinement {
    pub sky: GmmModel,
    pub support: GmmModel,
    pub p_horizon: Vec<ClassDistribution>,
    /// Units whose label contradicted their side of the horizon.
    pub unconfident: Vec<usize>,
}

fn stride_sample(v: Vec<[f64; 3]>, max: usize) -> Vec<[f64; 3]> {
    if v.len() <= max {
        return v;
    }
    let step = v.len() as f64 / max as f64;
    (0..max).map(|i| v[(i as f64 * step) as usize]).collect()
}

/// Fit colour models to the confidently labeled sky above and support below
/// the horizon, and re-weigh sky/support for units on the wrong side.
pub fn gmm_refine(
    img: &Raster,
    graph: &SegmentGraph,
    initial: &[ClassDistribution],
    horizon_y: f64,
    params: &GmmParams,
) -> Option<HorizonRefinement> {
    let w = graph.width;
    let coarse: Vec<CoarseClass> = initial.iter().map(coarse_of).collect();
    let mut sky_px = Vec::new();
    let mut sup_px = Vec::new();
    for (u, seg) in graph.segments.iter().enumerate() {
        for &p in &seg.pixels {
            let y = (p / w) as f64;
            match coarse[u] {
                CoarseClass::Sky if y < horizon_y => sky_px.push(img.rgb_at(p)),
                CoarseClass::Support if y > horizon_y => sup_px.push(img.rgb_at(p)),
                _ => {}
            }
        }
    }
    if sky_px.is_empty() || sup_px.is_empty() {
        return None;
    }
    let fit = |v: Vec<[f64; 3]>| {
        GmmModel::fit(
            &stride_sample(v, params.max_samples),
            params.components,
            params.iterations,
            params.tolerance,
        )
        .ok()
    };
    let sky = fit(sky_px)?;
    let support = fit(sup_px)?;
    let mut p_horizon = vec![ClassDistribution::uniform(); graph.segments.len()];
    let mut unconfident = Vec::new();
    for (u, seg) in graph.segments.iter().enumerate() {
        let cy = seg.centroid.1;
        let wrong = match coarse[u] {
            CoarseClass::Sky => cy > horizon_y,
            CoarseClass::Support => cy < horizon_y,
            CoarseClass::Vertical => false,
        };
        if !wrong {
            continue;
        }
        unconfident.push(u);
        let px: Vec<[f64; 3]> = seg.pixels.iter().map(|&p| img.rgb_at(p)).collect();
        let (ls, lg) = (
            sky.log_mean_likelihood(&px),
            support.log_mean_likelihood(&px),
        );
        let q_sky = if ls.is_finite() || lg.is_finite() {
            1.0 / (1.0 + (lg - ls).exp())
        } else {
            0.5
        };
        let pi = initial[u].probs();
        let m = pi[GeometricClass::Sky.index()] + pi[GeometricClass::Support.index()];
        let mut p = [0.0; NUM_CLASSES];
        let rest = 1.0 - m;
        let vert_total: f64 = GeometricClass::VERTICAL.iter().map(|c| pi[c.index()]).sum();
        for c in GeometricClass::VERTICAL {
            p[c.index()] = if vert_total > 0.0 {
                rest * pi[c.index()] / vert_total
            } else {
                rest / 5.0
            };
        }
        p[GeometricClass::Sky.index()] = m * q_sky;
        p[GeometricClass::Support.index()] = m * (1.0 - q_sky);
        p_horizon[u] =
            ClassDistribution::normalize(p).unwrap_or_else(|_| ClassDistribution::uniform());
    }
    Some(HorizonRefinement {
        sky,
        support,
        p_horizon,
        unconfident,
    })
}
