//! Diagonal-covariance Gaussian mixtures over RGB.

use crate::error::{GalError, Result};

pub const MIN_VARIANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: [f64; 3],
    pub variance: [f64; 3],
}

impl GmmComponent {
    /// `ln N(x | mean, diag(variance))`.
    pub fn log_density(&self, x: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for d in 0..3 {
            let v = self.variance[d];
            s += -0.5 * ((x[d] - self.mean[d]).powi(2) / v + (2.0 * std::f64::consts::PI * v).ln());
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmmModel {
    pub components: Vec<GmmComponent>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn validate(&self) -> Result<()> {
        let s: f64 = self.components.iter().map(|c| c.weight).sum();
        if self.components.is_empty() || (s - 1.0).abs() > 1e-9 {
            return Err(GalError::Degenerate("mixture weights must sum to 1".into()));
        }
        if self
            .components
            .iter()
            .any(|c| c.variance.iter().any(|v| !(*v >= MIN_VARIANCE)))
        {
            return Err(GalError::Degenerate("mixture variance below floor".into()));
        }
        Ok(())
    }

    /// Per-component `ln weight + ln density`; empty components give -inf.
    pub fn component_log_terms(&self, x: &[f64; 3]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                if c.weight > 0.0 {
                    c.weight.ln() + c.log_density(x)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    pub fn log_likelihood(&self, x: &[f64; 3]) -> f64 {
        log_sum_exp(&self.component_log_terms(x))
    }

    /// `ln` of the mean per-sample likelihood.
    pub fn log_mean_likelihood(&self, xs: &[[f64; 3]]) -> f64 {
        let lls: Vec<f64> = xs.iter().map(|x| self.log_likelihood(x)).collect();
        log_sum_exp(&lls) - (xs.len() as f64).ln()
    }

    /// EM initialized by k-means, itself seeded with evenly spaced samples of
    /// the brightness-sorted data.
    pub fn fit(data: &[[f64; 3]], k: usize, iterations: usize, tolerance: f64) -> Result<GmmModel> {
        if data.is_empty() {
            return Err(GalError::Degenerate("no samples for mixture".into()));
        }
        if k == 0 {
            return Err(GalError::Parameter(
                "mixture needs at least one component".into(),
            ));
        }
        let k = k.min(data.len());
        let assign = kmeans(data, k, 20);
        let mut model = from_assignment(data, &assign, k);
        let mut prev = f64::NEG_INFINITY;
        let mut resp = vec![0.0; k];
        for _ in 0..iterations {
            let mut nk = vec![0.0; k];
            let mut sum = vec![[0.0; 3]; k];
            let mut sq = vec![[0.0; 3]; k];
            let mut total_ll = 0.0;
            for x in data {
                let terms = model.component_log_terms(x);
                let ll = log_sum_exp(&terms);
                total_ll += ll;
                for j in 0..k {
                    resp[j] = (terms[j] - ll).exp();
                    nk[j] += resp[j];
                    for d in 0..3 {
                        sum[j][d] += resp[j] * x[d];
                        sq[j][d] += resp[j] * x[d] * x[d];
                    }
                }
            }
            let n = data.len() as f64;
            for j in 0..k {
                let c = &mut model.components[j];
                c.weight = nk[j] / n;
                if nk[j] > 1e-12 {
                    for d in 0..3 {
                        let m = sum[j][d] / nk[j];
                        c.mean[d] = m;
                        c.variance[d] = (sq[j][d] / nk[j] - m * m).max(MIN_VARIANCE);
                    }
                }
            }
            let s: f64 = model.components.iter().map(|c| c.weight).sum();
            for c in &mut model.components {
                c.weight /= s;
            }
            let mean_ll = total_ll / n;
            if (mean_ll - prev).abs() < tolerance {
                break;
            }
            prev = mean_ll;
        }
        model.validate()?;
        Ok(model)
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|d| (a[d] - b[d]).powi(2)).sum()
}

/// Lloyd iterations; returns the cluster index of every sample.
pub(crate) fn kmeans(data: &[[f64; 3]], k: usize, iterations: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| {
        let la: f64 = data[a].iter().sum();
        let lb: f64 = data[b].iter().sum();
        la.total_cmp(&lb).then(a.cmp(&b))
    });
    let mut centers: Vec<[f64; 3]> = (0..k)
        .map(|j| data[order[((2 * j + 1) * data.len()) / (2 * k)]])
        .collect();
    let mut assign = vec![0usize; data.len()];
    for it in 0..iterations {
        let mut changed = false;
        for (i, x) in data.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| dist2(x, &centers[a]).total_cmp(&dist2(x, &centers[b])))
                .unwrap();
            if best != assign[i] || it == 0 {
                changed |= best != assign[i];
                assign[i] = best;
            }
        }
        let mut sum = vec![[0.0; 3]; k];
        let mut cnt = vec![0usize; k];
        for (x, &a) in data.iter().zip(&assign) {
            cnt[a] += 1;
            for d in 0..3 {
                sum[a][d] += x[d];
            }
        }
        for j in 0..k {
            if cnt[j] > 0 {
                centers[j] = sum[j].map(|v| v / cnt[j] as f64);
            }
        }
        if !changed && it > 0 {
            break;
        }
    }
    assign
}

/// Maximum-likelihood mixture for a hard assignment (empty clusters get
/// zero weight and a unit-variance placeholder).
pub(crate) fn from_assignment(data: &[[f64; 3]], assign: &[usize], k: usize) -> GmmModel {
    let mut cnt = vec![0.0; k];
    let mut sum = vec![[0.0; 3]; k];
    let mut sq = vec![[0.0; 3]; k];
    for (x, &a) in data.iter().zip(assign) {
        cnt[a] += 1.0;
        for d in 0..3 {
            sum[a][d] += x[d];
            sq[a][d] += x[d] * x[d];
        }
    }
    let n: f64 = cnt.iter().sum();
    let components = (0..k)
        .map(|j| {
            if cnt[j] == 0.0 {
                return GmmComponent {
                    weight: 0.0,
                    mean: [0.5; 3],
                    variance: [1.0; 3],
                };
            }
            let mean = sum[j].map(|v| v / cnt[j]);
            let mut variance = [0.0; 3];
            for d in 0..3 {
                variance[d] = (sq[j][d] / cnt[j] - mean[d] * mean[d]).max(MIN_VARIANCE);
            }
            GmmComponent {
                weight: cnt[j] / n,
                mean,
                variance,
            }
        })
        .collect();
    GmmModel { components }
}
