//! Max-flow, alpha-expansion and an exhaustive reference minimizer.

mod expansion;
mod maxflow;

pub use expansion::{
    alpha_expansion, alpha_expansion_with, brute_force, expand, ExpandOutcome, ExpansionResult,
    LabelingProblem, PairTerm, TraceEntry, BRUTE_FORCE_LIMIT, MAX_CYCLES,
};
pub use maxflow::{max_flow, Arc, FlowNetwork, MinCut};
