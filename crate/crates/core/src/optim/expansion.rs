use std::fmt::Write as _;

use super::maxflow::{max_flow, FlowNetwork};
use crate::error::{GalError, Result};

/// Pairwise cost table between nodes `i` and `j`, indexed `[x_i * L + x_j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub theta: Vec<f64>,
}

/// `E(x) = sum_i U_i(x_i) + lambda * sum_(i,j) theta_ij(x_i, x_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelingProblem {
    n_nodes: usize,
    n_labels: usize,
    unary: Vec<f64>,
    edges: Vec<PairTerm>,
    lambda: f64,
}

impl LabelingProblem {
    pub fn new(
        n_nodes: usize,
        n_labels: usize,
        unary: Vec<f64>,
        edges: Vec<PairTerm>,
        lambda: f64,
    ) -> Result<Self> {
        if n_labels == 0 {
            return Err(GalError::Parameter("need at least one label".into()));
        }
        if unary.len() != n_nodes * n_labels {
            return Err(GalError::Length {
                expected: n_nodes * n_labels,
                found: unary.len(),
            });
        }
        if unary.iter().any(|u| !u.is_finite() || *u < 0.0) {
            return Err(GalError::Parameter(
                "unary costs must be finite and >= 0".into(),
            ));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(GalError::Parameter(format!("bad lambda {lambda}")));
        }
        for e in &edges {
            if e.i >= n_nodes || e.j >= n_nodes || e.i == e.j {
                return Err(GalError::Parameter(format!("bad edge ({}, {})", e.i, e.j)));
            }
            if e.theta.len() != n_labels * n_labels {
                return Err(GalError::Length {
                    expected: n_labels * n_labels,
                    found: e.theta.len(),
                });
            }
            if e.theta.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(GalError::Parameter(
                    "pairwise costs must be finite and >= 0".into(),
                ));
            }
            if (0..n_labels).any(|a| e.theta[a * n_labels + a] != 0.0) {
                return Err(GalError::Parameter("pairwise diagonal must be zero".into()));
            }
        }
        Ok(LabelingProblem {
            n_nodes,
            n_labels,
            unary,
            edges,
            lambda,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn edges(&self) -> &[PairTerm] {
        &self.edges
    }

    #[inline]
    pub fn unary(&self, node: usize, label: usize) -> f64 {
        self.unary[node * self.n_labels + label]
    }

    #[inline]
    fn theta(&self, e: &PairTerm, a: usize, b: usize) -> f64 {
        e.theta[a * self.n_labels + b]
    }

    pub fn energy(&self, labels: &[usize]) -> f64 {
        let u: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| self.unary(i, l))
            .sum();
        let p: f64 = self
            .edges
            .iter()
            .map(|e| self.theta(e, labels[e.i], labels[e.j]))
            .sum();
        u + self.lambda * p
    }

    pub fn unary_argmin(&self) -> Vec<usize> {
        (0..self.n_nodes)
            .map(|i| {
                (0..self.n_labels).fold(0, |best, l| {
                    if self.unary(i, l) < self.unary(i, best) {
                        l
                    } else {
                        best
                    }
                })
            })
            .collect()
    }

    fn check_labels(&self, labels: &[usize]) -> Result<()> {
        if labels.len() != self.n_nodes {
            return Err(GalError::Length {
                expected: self.n_nodes,
                found: labels.len(),
            });
        }
        if labels.iter().any(|&l| l >= self.n_labels) {
            return Err(GalError::Parameter("label out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpandOutcome {
    pub labels: Vec<usize>,
    pub changed: bool,
    /// Pair terms raised to restore submodularity during this move.
    pub truncations: usize,
}

/// One alpha-expansion move. Returns `current` unchanged unless the cut
/// labeling has strictly lower energy.
pub fn expand(problem: &LabelingProblem, current: &[usize], alpha: usize) -> Result<ExpandOutcome> {
    problem.check_labels(current)?;
    if alpha >= problem.n_labels {
        return Err(GalError::Parameter("alpha out of range".into()));
    }
    let n = problem.n_nodes;
    let (src, snk) = (n, n + 1);
    // cost of keeping (x = 0) and of switching (x = 1)
    let mut e0: Vec<f64> = (0..n).map(|i| problem.unary(i, current[i])).collect();
    let mut e1: Vec<f64> = (0..n).map(|i| problem.unary(i, alpha)).collect();
    let mut couplings = Vec::new();
    let mut truncations = 0;
    let lam = problem.lambda;
    for e in &problem.edges {
        let (a, b) = (current[e.i], current[e.j]);
        let t00 = lam * problem.theta(e, a, b);
        let mut t01 = lam * problem.theta(e, a, alpha);
        let mut t10 = lam * problem.theta(e, alpha, b);
        let t11 = lam * problem.theta(e, alpha, alpha);
        let excess = t00 + t11 - t01 - t10;
        if excess > 1e-12 * (1.0 + t00.abs()) {
            t01 += excess / 2.0;
            t10 += excess / 2.0;
            truncations += 1;
        }
        // t00 + (t10 - t00) x_i + (t11 - t10) x_j + (t01 + t10 - t00 - t11)(1 - x_i) x_j
        e0[e.i] += t00;
        e1[e.i] += t10;
        e1[e.j] += t11 - t10;
        let w = (t01 + t10 - t00 - t11).max(0.0);
        if w > 0.0 {
            couplings.push((e.i, e.j, w));
        }
    }

    let mut net = FlowNetwork::new(n + 2, src, snk)?;
    for i in 0..n {
        let d = e1[i] - e0[i];
        if d > 0.0 {
            net.add_arc(src, i, d)?;
        } else if d < 0.0 {
            net.add_arc(i, snk, -d)?;
        }
    }
    for (i, j, w) in couplings {
        net.add_arc(i, j, w)?;
    }
    let cut = max_flow(&net);
    let candidate: Vec<usize> = (0..n)
        .map(|i| {
            if cut.source_side[i] {
                current[i]
            } else {
                alpha
            }
        })
        .collect();

    let before = problem.energy(current);
    let after = problem.energy(&candidate);
    let outcome = if after < before && candidate != current {
        ExpandOutcome {
            labels: candidate,
            changed: true,
            truncations,
        }
    } else {
        ExpandOutcome {
            labels: current.to_vec(),
            changed: false,
            truncations,
        }
    };
    debug_assert!(problem.energy(&outcome.labels) <= before);
    Ok(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub cycle: usize,
    pub label: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult {
    pub labels: Vec<usize>,
    pub energy: f64,
    pub initial_energy: f64,
    /// Energy after every move.
    pub trace: Vec<TraceEntry>,
    pub cycles: usize,
    pub truncations: usize,
}

impl ExpansionResult {
    /// `cycle label energy` lines.
    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for t in &self.trace {
            let _ = writeln!(s, "{} {} {:.9}", t.cycle, t.label, t.energy);
        }
        s
    }
}

pub const MAX_CYCLES: usize = 10;

pub fn alpha_expansion(problem: &LabelingProblem) -> Result<ExpansionResult> {
    alpha_expansion_with(problem, MAX_CYCLES)
}

/// Start from the unary argmin and sweep labels in order until a full cycle
/// changes nothing or `max_cycles` is reached.
pub fn alpha_expansion_with(
    problem: &LabelingProblem,
    max_cycles: usize,
) -> Result<ExpansionResult> {
    let mut labels = problem.unary_argmin();
    let initial_energy = problem.energy(&labels);
    let mut trace = Vec::new();
    let mut truncations = 0;
    let mut cycles = 0;
    for cycle in 0..max_cycles {
        cycles = cycle + 1;
        let mut changed = false;
        for alpha in 0..problem.n_labels {
            let out = expand(problem, &labels, alpha)?;
            truncations += out.truncations;
            changed |= out.changed;
            labels = out.labels;
            trace.push(TraceEntry {
                cycle,
                label: alpha,
                energy: problem.energy(&labels),
            });
        }
        if !changed {
            break;
        }
    }
    let energy = problem.energy(&labels);
    Ok(ExpansionResult {
        labels,
        energy,
        initial_energy,
        trace,
        cycles,
        truncations,
    })
}

pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Exact minimum by enumeration; ties go to the lexicographically smallest
/// labeling.
pub fn brute_force(problem: &LabelingProblem) -> Result<(Vec<usize>, f64)> {
    let (n, l) = (problem.n_nodes, problem.n_labels);
    if (l as f64).powi(n as i32) > BRUTE_FORCE_LIMIT {
        return Err(GalError::Size(format!(
            "{l}^{n} labelings exceed the enumeration limit"
        )));
    }
    let mut x = vec![0usize; n];
    let mut best = x.clone();
    let mut best_e = problem.energy(&x);
    loop {
        let mut k = n;
        loop {
            if k == 0 {
                return Ok((best, best_e));
            }
            k -= 1;
            x[k] += 1;
            if x[k] < l {
                break;
            }
            x[k] = 0;
        }
        let e = problem.energy(&x);
        if e < best_e {
            best_e = e;
            best.copy_from_slice(&x);
        }
    }
}
