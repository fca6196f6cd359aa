//! Gaussian maximum-likelihood classifier with full per-class covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: Vec<f64>,
    /// Row-major `n_f × n_f`, already regularized.
    pub covariance: Vec<f64>,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassStats {
    pub feature_count: usize,
    pub classes: Vec<ClassGaussian>,
}

/// Per-class mean, maximum-likelihood covariance plus `λI` with
/// `λ = 1e-6 · trace / n_f`, and empirical priors.
pub fn train_bayes(ds: &Dataset) -> Result<GaussianClassStats> {
    let n_f = ds.feature_count();
    let counts = ds.class_counts();
    if let Some((c, n)) = counts.iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(Error::Training {
            epoch: 0,
            message: format!("class {c} has {n} samples; at least 2 are needed"),
        });
    }
    let total = ds.len() as f64;
    let classes = (0..ds.class_count())
        .map(|c| {
            let rows: Vec<&[f64]> = ds
                .samples()
                .iter()
                .filter(|s| s.label == c)
                .map(|s| s.features.as_slice())
                .collect();
            let n = rows.len() as f64;
            let mut mean = vec![0.0; n_f];
            for r in &rows {
                for (m, v) in mean.iter_mut().zip(*r) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut cov = vec![0.0; n_f * n_f];
            for r in &rows {
                for i in 0..n_f {
                    for j in 0..n_f {
                        cov[i * n_f + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
                    }
                }
            }
            cov.iter_mut().for_each(|v| *v /= n);
            let trace: f64 = (0..n_f).map(|i| cov[i * n_f + i]).sum();
            let mut lambda = 1e-6 * trace / n_f as f64;
            if lambda <= 0.0 {
                lambda = 1e-12;
            }
            for i in 0..n_f {
                cov[i * n_f + i] += lambda;
            }
            ClassGaussian {
                mean,
                covariance: cov,
                prior: counts[c] as f64 / total,
            }
        })
        .collect();
    Ok(GaussianClassStats {
        feature_count: n_f,
        classes,
    })
}

impl GaussianClassStats {
    /// `log(prior) + log N(x; mean, cov)` per class.
    pub fn log_joint(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_count {
            return Err(invalid(format!(
                "expected {} features, got {}",
                self.feature_count,
                x.len()
            )));
        }
        let n_f = self.feature_count;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.classes
            .iter()
            .map(|c| {
                let cov = DMatrix::from_row_slice(n_f, n_f, &c.covariance);
                let chol = cov
                    .cholesky()
                    .ok_or_else(|| Error::Schema("class covariance is not positive definite".into()))?;
                let diff = DVector::from_iterator(n_f, x.iter().zip(&c.mean).map(|(a, m)| a - m));
                let z = chol
                    .l()
                    .solve_lower_triangular(&diff)
                    .expect("cholesky factor is invertible");
                let mahalanobis = z.norm_squared();
                let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                Ok(c.prior.ln() - 0.5 * (n_f as f64 * ln_2pi + log_det + mahalanobis))
            })
            .collect()
    }

    /// Normalized posteriors.
    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lj = self.log_joint(x)?;
        let max = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lj.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = w.iter().sum();
        Ok(w.into_iter().map(|v| v / sum).collect())
    }
}

/// Class of highest posterior (lowest index on ties) and the posterior vector.
pub fn predict_bayes(stats: &GaussianClassStats, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let post = stats.posterior(x)?;
    Ok((crate::cnn::argmax(&post), post))
}
