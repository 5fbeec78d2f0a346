//! Driver layer of the `gal` tool: pipeline orchestration, evaluation,
//! ablation, synthetic scenes and overlays.

pub mod ablate;
pub mod dataset;
pub mod eval;
pub mod learn;
pub mod overlay;
pub mod pipeline;
pub mod synth;
