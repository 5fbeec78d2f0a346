//! Linear softmax fusion of the concatenated per-segmentation probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};

pub const FUSION_INPUTS: usize = 9;
pub const COARSE_CLASSES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    /// One row of `FUSION_INPUTS` weights per output class.
    pub weights: [[f64; FUSION_INPUTS]; COARSE_CLASSES],
    pub bias: [f64; COARSE_CLASSES],
}

impl FusionModel {
    pub fn zeros() -> Self {
        FusionModel {
            weights: [[0.0; FUSION_INPUTS]; COARSE_CLASSES],
            bias: [0.0; COARSE_CLASSES],
        }
    }

    /// Sum of the three sources' votes for each class.
    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for c in 0..COARSE_CLASSES {
            for s in 0..3 {
                m.weights[c][3 * s + c] = 1.0;
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .weights
            .iter()
            .flatten()
            .chain(&self.bias)
            .any(|v| !v.is_finite())
        {
            return Err(GalError::Parameter("fusion weights must be finite".into()));
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64; FUSION_INPUTS]) -> [f64; COARSE_CLASSES] {
        let mut z = [0.0; COARSE_CLASSES];
        for (c, zc) in z.iter_mut().enumerate() {
            *zc = self.bias[c]
                + self.weights[c]
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>();
        }
        softmax(z)
    }
}

fn softmax(z: [f64; COARSE_CLASSES]) -> [f64; COARSE_CLASSES] {
    let m = z.iter().copied().fold(f64::MIN, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Full-batch gradient descent on the weighted cross-entropy.
pub fn train_fusion(
    inputs: &[[f64; FUSION_INPUTS]],
    labels: &[usize],
    weights: &[f64],
    epochs: usize,
    learning_rate: f64,
) -> Result<FusionModel> {
    if inputs.is_empty() {
        return Err(GalError::Parameter("empty fusion training set".into()));
    }
    if labels.len() != inputs.len() || weights.len() != inputs.len() {
        return Err(GalError::Length {
            expected: inputs.len(),
            found: labels.len().min(weights.len()),
        });
    }
    if labels.iter().any(|&l| l >= COARSE_CLASSES) {
        return Err(GalError::Parameter("fusion label out of range".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(GalError::Parameter(
            "fusion weights must be positive".into(),
        ));
    }
    let mut m = FusionModel::zeros();
    for _ in 0..epochs {
        let mut gw = [[0.0; FUSION_INPUTS]; COARSE_CLASSES];
        let mut gb = [0.0; COARSE_CLASSES];
        for ((x, &y), &w) in inputs.iter().zip(labels).zip(weights) {
            let p = m.predict(x);
            for c in 0..COARSE_CLASSES {
                let g = w * (p[c] - if c == y { 1.0 } else { 0.0 });
                gb[c] += g;
                for k in 0..FUSION_INPUTS {
                    gw[c][k] += g * x[k];
                }
            }
        }
        for c in 0..COARSE_CLASSES {
            m.bias[c] -= learning_rate * gb[c] / total;
            for k in 0..FUSION_INPUTS {
                m.weights[c][k] -= learning_rate * gw[c][k] / total;
            }
        }
    }
    Ok(m)
}
