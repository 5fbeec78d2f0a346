//! Cross-validated grid search over the mixture weights and λ.

use rayon::prelude::*;

use super::{mixture, refine, CrfParams, DEFAULT_LAMBDA, N_COMPONENTS};
use crate::class::NUM_CLASSES;
use crate::error::{GalError, Result};
use crate::gae::AttributeMaps;
use crate::raster::LabelMap;
use crate::segmentation::SegmentGraph;

pub const LAMBDA_GRID: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 1.0];

const TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct CrfSample<'a> {
    pub maps: &'a AttributeMaps,
    pub graph: &'a SegmentGraph,
    pub truth: &'a LabelMap,
}

/// Weight vectors with entries in steps of `1/steps` summing to one,
/// ordered with larger leading weights first.
pub fn simplex_grid(steps: usize) -> Vec<[f64; N_COMPONENTS]> {
    let mut out = Vec::new();
    let mut cur = [0usize; N_COMPONENTS];
    fn rec(
        k: usize,
        left: usize,
        steps: usize,
        cur: &mut [usize; N_COMPONENTS],
        out: &mut Vec<[f64; N_COMPONENTS]>,
    ) {
        if k == N_COMPONENTS - 1 {
            cur[k] = left;
            out.push(cur.map(|c| c as f64 / steps as f64));
            return;
        }
        for v in (0..=left).rev() {
            cur[k] = v;
            rec(k + 1, left - v, steps, cur, out);
        }
    }
    rec(0, steps, steps, &mut cur, &mut out);
    out
}

/// Majority ground-truth class and pixel area of every unit.
fn unit_truth(graph: &SegmentGraph, truth: &LabelMap) -> Vec<(usize, f64)> {
    graph
        .segments
        .iter()
        .map(|s| {
            let mut counts = [0usize; NUM_CLASSES];
            for &p in &s.pixels {
                counts[truth.class_of(p).index()] += 1;
            }
            let best = (0..NUM_CLASSES).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
            (best, s.pixels.len() as f64)
        })
        .collect()
}

fn log_likelihood(
    maps: &AttributeMaps,
    truth: &[(usize, f64)],
    w: &[f64; N_COMPONENTS],
    epsilon: f64,
) -> f64 {
    truth
        .iter()
        .enumerate()
        .map(|(u, &(l, area))| area * mixture(maps, u, w)[l].max(epsilon).ln())
        .sum()
}

/// Weights maximizing the fold-averaged held-out log-likelihood, then the λ
/// maximizing fold-averaged pixel accuracy after refinement. Ties go to the
/// larger first weight, then the smaller λ.
pub fn learn_params(
    samples: &[CrfSample],
    base: &CrfParams,
    folds: usize,
    max_cycles: usize,
) -> Result<CrfParams> {
    let n = samples.len();
    if n == 0 {
        return Ok(CrfParams {
            lambda: DEFAULT_LAMBDA,
            w: [1.0 / N_COMPONENTS as f64; N_COMPONENTS],
            ..*base
        });
    }
    if n < 2 {
        return Err(GalError::Parameter(
            "learning needs at least two training images".into(),
        ));
    }
    for s in samples {
        if s.maps.n_units() != s.graph.n_segments() {
            return Err(GalError::Length {
                expected: s.graph.n_segments(),
                found: s.maps.n_units(),
            });
        }
        if s.truth.width() != s.graph.width || s.truth.height() != s.graph.height {
            return Err(GalError::Dimension(
                "truth does not match the segment graph".into(),
            ));
        }
        s.maps.validate()?;
    }
    let k = folds.clamp(2, n);
    let fold_of = |i: usize| i % k;
    let truths: Vec<Vec<(usize, f64)>> = samples
        .iter()
        .map(|s| unit_truth(s.graph, s.truth))
        .collect();

    let grid = simplex_grid(10);
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|w| {
            let mut per_fold = vec![0.0; k];
            for (i, s) in samples.iter().enumerate() {
                per_fold[fold_of(i)] += log_likelihood(s.maps, &truths[i], w, base.epsilon);
            }
            per_fold.iter().sum::<f64>() / k as f64
        })
        .collect();
    let mut best = 0;
    for i in 1..grid.len() {
        let (s, b) = (scores[i], scores[best]);
        if s > b + TIE.max(b.abs() * TIE)
            || ((s - b).abs() <= TIE.max(b.abs() * TIE) && grid[i][0] > grid[best][0] + TIE)
        {
            best = i;
        }
    }
    let w = grid[best];

    let mut best_lambda = LAMBDA_GRID[0];
    let mut best_acc = f64::NEG_INFINITY;
    for &lambda in &LAMBDA_GRID {
        let params = CrfParams { w, lambda, ..*base };
        let per_sample: Vec<(usize, usize)> = samples
            .par_iter()
            .map(|s| -> Result<(usize, usize)> {
                let r = refine(s.maps, s.graph, &params, max_cycles)?;
                let correct = r
                    .label_map
                    .codes()
                    .iter()
                    .zip(s.truth.codes())
                    .filter(|(a, b)| a == b)
                    .count();
                Ok((correct, s.truth.codes().len()))
            })
            .collect::<Result<_>>()?;
        let mut fold_acc = vec![(0usize, 0usize); k];
        for (i, (c, t)) in per_sample.into_iter().enumerate() {
            fold_acc[fold_of(i)].0 += c;
            fold_acc[fold_of(i)].1 += t;
        }
        let acc = fold_acc
            .iter()
            .map(|&(c, t)| c as f64 / t.max(1) as f64)
            .sum::<f64>()
            / k as f64;
        // grid is ascending, so strict improvement keeps the smaller λ on ties
        if acc > best_acc + TIE {
            best_acc = acc;
            best_lambda = lambda;
        }
    }
    let out = CrfParams {
        w,
        lambda: best_lambda,
        ..*base
    };
    out.validate()?;
    Ok(out)
}
