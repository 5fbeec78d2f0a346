//! Segment-level CRF: unary costs from the weighted attribute mixture,
//! boundary/vanishing/planar pairwise costs, graph-cut refinement and
//! parameter search.

mod learn;

use std::path::Path;

pub use learn::{learn_params, simplex_grid, CrfSample, LAMBDA_GRID};

use crate::class::{GeometricClass, NUM_CLASSES};
use crate::config::Config;
use crate::error::{GalError, Result};
use crate::gae::{indicator, AttributeMaps};
use crate::imageops::Plane;
use crate::ipl::units_to_label_map;
use crate::optim::{alpha_expansion_with, ExpansionResult, LabelingProblem, PairTerm};
use crate::raster::LabelMap;
use crate::segmentation::{Edge, SegmentGraph};

pub const N_COMPONENTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrfParams {
    /// Mixture weights of (initial, porous, solid, horizon, vertical).
    pub w: [f64; N_COMPONENTS],
    pub lambda: f64,
    pub epsilon: f64,
    pub cap: f64,
}

pub const DEFAULT_LAMBDA: f64 = 0.1;

impl Default for CrfParams {
    fn default() -> Self {
        CrfParams {
            w: [1.0 / N_COMPONENTS as f64; N_COMPONENTS],
            lambda: DEFAULT_LAMBDA,
            epsilon: 1e-6,
            cap: 10.0,
        }
    }
}

impl CrfParams {
    pub fn new(w: [f64; N_COMPONENTS], lambda: f64, epsilon: f64, cap: f64) -> Result<Self> {
        let p = CrfParams {
            w,
            lambda,
            epsilon,
            cap,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_config(c: &Config) -> Self {
        CrfParams {
            epsilon: c.crf_epsilon,
            cap: c.crf_cost_cap,
            ..CrfParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.iter().any(|v| !v.is_finite() || *v < 0.0)
            || (self.w.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(GalError::Parameter(format!(
                "weights must be non-negative and sum to 1: {:?}",
                self.w
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(GalError::Parameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-3) {
            return Err(GalError::Parameter(format!(
                "epsilon must be in (0, 1e-3], got {}",
                self.epsilon
            )));
        }
        if !(self.cap >= 1.0) || !self.cap.is_finite() {
            return Err(GalError::Parameter(format!(
                "cost cap must be >= 1, got {}",
                self.cap
            )));
        }
        Ok(())
    }

    /// `w0 w1 w2 w3 w4 lambda`.
    pub fn to_text(&self) -> String {
        let v: Vec<String> = self
            .w
            .iter()
            .chain([&self.lambda])
            .map(|v| format!("{v}"))
            .collect();
        format!("{}\n", v.join(" "))
    }

    pub fn parse(text: &str, epsilon: f64, cap: f64) -> Result<Self> {
        let v: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| GalError::Format("params: expected six numbers".into()))?;
        if v.len() != N_COMPONENTS + 1 {
            return Err(GalError::Format(format!(
                "params: expected six numbers, found {}",
                v.len()
            )));
        }
        let mut w = [0.0; N_COMPONENTS];
        w.copy_from_slice(&v[..N_COMPONENTS]);
        CrfParams::new(w, v[N_COMPONENTS], epsilon, cap)
    }

    pub fn load(path: impl AsRef<Path>, epsilon: f64, cap: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GalError::io(path, e))?;
        Self::parse(&text, epsilon, cap)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| GalError::io(path, e))
    }

    fn cost(&self, p: f64) -> f64 {
        (-p.max(self.epsilon).ln()).min(self.cap)
    }
}

/// `wᵀ(P_initial, P_porous, P_solid, P_horizon, P_vertical)` for one unit.
pub fn mixture(maps: &AttributeMaps, unit: usize, w: &[f64; N_COMPONENTS]) -> [f64; NUM_CLASSES] {
    let mut p = [0.0; NUM_CLASSES];
    for (wk, comp) in w.iter().zip(maps.components(unit)) {
        for (pl, v) in p.iter_mut().zip(comp.probs()) {
            *pl += wk * v;
        }
    }
    p
}

/// Row-major `n × 7` unary costs.
pub fn unary_costs(maps: &AttributeMaps, params: &CrfParams) -> Result<Vec<f64>> {
    params.validate()?;
    maps.validate()?;
    let mut out = Vec::with_capacity(maps.n_units() * NUM_CLASSES);
    for u in 0..maps.n_units() {
        out.extend(mixture(maps, u, &params.w).iter().map(|&p| params.cost(p)));
    }
    Ok(out)
}

/// Mean boundary-line evidence over the pixel pairs of a shared boundary;
/// each pair contributes the larger of its two pixel values.
pub fn boundary_mean(edge: &Edge, line_map: &Plane) -> f64 {
    if edge.boundary.is_empty() {
        return 0.0;
    }
    let s: f64 = edge
        .boundary
        .iter()
        .map(|&(p, q)| line_map.data[p].max(line_map.data[q]))
        .sum();
    s / edge.boundary.len() as f64
}

/// Symmetrized, capped 7×7 pairwise table of one adjacency.
pub fn pairwise_table(maps: &AttributeMaps, edge: &Edge, params: &CrfParams) -> Vec<f64> {
    let (i, j) = (edge.a, edge.b);
    let phi_s = if maps.line_term {
        params.cost(boundary_mean(edge, &maps.line_map))
    } else {
        0.0
    };
    let phi = |table: &Option<Vec<Option<GeometricClass>>>,
               a: GeometricClass,
               b: GeometricClass|
     -> f64 {
        match table {
            Some(t) => -((indicator(t, i, a) - indicator(t, j, b))
                .abs()
                .max(params.epsilon))
            .ln(),
            None => 0.0,
        }
    };
    let raw = |a: GeometricClass, b: GeometricClass| -> f64 {
        if a == b {
            return 0.0;
        }
        (phi_s + phi(&maps.vanishing, a, b) + phi(&maps.planar, a, b)).min(params.cap)
    };
    let mut theta = vec![0.0; NUM_CLASSES * NUM_CLASSES];
    for a in GeometricClass::ALL {
        for b in GeometricClass::ALL {
            if a != b {
                theta[a.index() * NUM_CLASSES + b.index()] = 0.5 * (raw(a, b) + raw(b, a));
            }
        }
    }
    theta
}

pub fn pairwise_terms(
    maps: &AttributeMaps,
    graph: &SegmentGraph,
    params: &CrfParams,
) -> Vec<PairTerm> {
    graph
        .edges
        .iter()
        .map(|e| PairTerm {
            i: e.a,
            j: e.b,
            theta: pairwise_table(maps, e, params),
        })
        .collect()
}

pub fn build_problem(
    maps: &AttributeMaps,
    graph: &SegmentGraph,
    params: &CrfParams,
) -> Result<LabelingProblem> {
    if maps.n_units() != graph.n_segments() {
        return Err(GalError::Length {
            expected: graph.n_segments(),
            found: maps.n_units(),
        });
    }
    if maps.line_map.width != graph.width || maps.line_map.height != graph.height {
        return Err(GalError::Dimension(
            "line map does not match the graph".into(),
        ));
    }
    LabelingProblem::new(
        maps.n_units(),
        NUM_CLASSES,
        unary_costs(maps, params)?,
        pairwise_terms(maps, graph, params),
        params.lambda,
    )
}

/// `Σ unary + λ Σ pairwise` of a labeling.
pub fn total_energy(problem: &LabelingProblem, labels: &[GeometricClass]) -> f64 {
    let idx: Vec<usize> = labels.iter().map(|c| c.index()).collect();
    problem.energy(&idx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub unit_labels: Vec<GeometricClass>,
    pub label_map: LabelMap,
    pub expansion: ExpansionResult,
}

pub fn refine(
    maps: &AttributeMaps,
    graph: &SegmentGraph,
    params: &CrfParams,
    max_cycles: usize,
) -> Result<Refinement> {
    let problem = build_problem(maps, graph, params)?;
    let expansion = alpha_expansion_with(&problem, max_cycles)?;
    let unit_labels: Vec<GeometricClass> = expansion
        .labels
        .iter()
        .map(|&l| GeometricClass::ALL[l])
        .collect();
    Ok(Refinement {
        label_map: units_to_label_map(graph, &unit_labels),
        unit_labels,
        expansion,
    })
}
