//! Two-class soft-margin SVM.
//!
//! The linear kernel is trained in the primal by stochastic subgradient
//! descent on `λ/2·‖w‖² + mean(hinge)` with `λ = 1/(C·n)`. The RBF kernel is
//! trained by dual coordinate descent with the bias folded into the kernel
//! (`K + 1`). Class 1 is the positive side; a point exactly on the boundary
//! belongs to class 0.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{invalid, Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Linear,
    Rbf {
        gamma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: Kernel,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: Kernel::Linear,
            epochs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum SvmModel {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Rbf {
        gamma: f64,
        support_vectors: Vec<Vec<f64>>,
        /// `α_i · y_i` per support vector.
        coefficients: Vec<f64>,
    },
}

impl SvmModel {
    pub fn linear(weights: Vec<f64>, bias: f64) -> Self {
        SvmModel::Linear { weights, bias }
    }

    /// Signed distance proxy; positive means class 1.
    pub fn decision(&self, x: &[f64]) -> f64 {
        match self {
            SvmModel::Linear { weights, bias } => bias + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>(),
            SvmModel::Rbf {
                gamma,
                support_vectors,
                coefficients,
            } => support_vectors
                .iter()
                .zip(coefficients)
                .map(|(sv, a)| a * (rbf(sv, x, *gamma) + 1.0))
                .sum(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        usize::from(self.decision(x) > 0.0)
    }

    /// `[1 − σ(f), σ(f)]` of the decision value `f`; the argmax agrees with
    /// [`SvmModel::predict`].
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let p = 1.0 / (1.0 + (-self.decision(x)).exp());
        vec![1.0 - p, p]
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn train_svm(ds: &Dataset, cfg: &SvmConfig, seed: u64) -> Result<SvmModel> {
    if ds.class_count() != 2 {
        return Err(Error::Unsupported(format!(
            "SVM handles exactly 2 classes, dataset has {}",
            ds.class_count()
        )));
    }
    if ds.is_empty() {
        return Err(invalid("cannot train an SVM on an empty dataset"));
    }
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(invalid("C must be positive"));
    }
    let y: Vec<f64> = ds
        .samples()
        .iter()
        .map(|s| if s.label == 1 { 1.0 } else { -1.0 })
        .collect();
    match cfg.kernel {
        Kernel::Linear => Ok(train_linear(ds, &y, cfg, seed)),
        Kernel::Rbf { gamma } => {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(invalid("RBF gamma must be positive"));
            }
            Ok(train_rbf(ds, &y, cfg, gamma, seed))
        }
    }
}

fn train_linear(ds: &Dataset, y: &[f64], cfg: &SvmConfig, seed: u64) -> SvmModel {
    let n = ds.len();
    let n_f = ds.feature_count();
    // standardize internally, fold the scaling back into (w, b) at the end
    let mut mean = vec![0.0; n_f];
    let mut std = vec![0.0; n_f];
    for s in ds.samples() {
        for (m, v) in mean.iter_mut().zip(&s.features) {
            *m += v / n as f64;
        }
    }
    for s in ds.samples() {
        for ((sd, v), m) in std.iter_mut().zip(&s.features).zip(&mean) {
            *sd += (v - m) * (v - m) / n as f64;
        }
    }
    std.iter_mut().for_each(|s| *s = if *s > 0.0 { s.sqrt() } else { 1.0 });
    let xs: Vec<Vec<f64>> = ds
        .samples()
        .iter()
        .map(|s| {
            s.features
                .iter()
                .zip(&mean)
                .zip(&std)
                .map(|((v, m), sd)| (v - m) / sd)
                .collect()
        })
        .collect();

    let lambda = 1.0 / (cfg.c * n as f64);
    let mut w = vec![0.0; n_f];
    let mut b = 0.0;
    let mut t = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64 + 1.0);
            let margin = y[i] * (b + w.iter().zip(&xs[i]).map(|(a, v)| a * v).sum::<f64>());
            w.iter_mut().for_each(|wi| *wi *= 1.0 - eta * lambda);
            if margin < 1.0 {
                for (wi, v) in w.iter_mut().zip(&xs[i]) {
                    *wi += eta * y[i] * v;
                }
                b += eta * y[i];
            }
        }
    }
    let weights: Vec<f64> = w.iter().zip(&std).map(|(wi, sd)| wi / sd).collect();
    let bias = b - weights.iter().zip(&mean).map(|(wi, m)| wi * m).sum::<f64>();
    SvmModel::Linear { weights, bias }
}

fn train_rbf(ds: &Dataset, y: &[f64], cfg: &SvmConfig, gamma: f64, seed: u64) -> SvmModel {
    let n = ds.len();
    let xs: Vec<&[f64]> = ds.samples().iter().map(|s| s.features.as_slice()).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(xs[i], xs[j], gamma) + 1.0;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let mut alpha = vec![0.0; n];
    // f[i] = Σ_j α_j y_j K(j, i)
    let mut f = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut max_step: f64 = 0.0;
        for &i in &order {
            let grad = y[i] * f[i] - 1.0;
            let new = (alpha[i] - grad / k[i * n + i]).clamp(0.0, cfg.c);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                for j in 0..n {
                    f[j] += delta * y[i] * k[i * n + j];
                }
                max_step = max_step.max(delta.abs());
            }
        }
        if max_step < 1e-9 {
            break;
        }
    }
    let (support_vectors, coefficients) = (0..n)
        .filter(|&i| alpha[i] > 0.0)
        .map(|i| (xs[i].to_vec(), alpha[i] * y[i]))
        .unzip();
    SvmModel::Rbf {
        gamma,
        support_vectors,
        coefficients,
    }
}

pub fn predict_svm(model: &SvmModel, x: &[f64]) -> usize {
    model.predict(x)
}
