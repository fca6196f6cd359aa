//! Fuzzy neural network: the flattened membership matrix feeds one sigmoid
//! hidden layer and a softmax output.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cnn::{argmax, cross_entropy, softmax, LearningCurve, TrainConfig};
use crate::datasets::Dataset;
use crate::error::{invalid, Error, Result};
use crate::fuzzy::{fuzzify, TermPartition, TERM_COUNT};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FnnConfig {
    pub hidden_units: usize,
    pub train: TrainConfig,
}

impl Default for FnnConfig {
    fn default() -> Self {
        Self {
            hidden_units: 16,
            train: TrainConfig {
                learning_rate: 0.1,
                momentum: 0.9,
                epochs: 300,
                batch_size: 16,
                seed: 0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    pub partitions: Vec<TermPartition>,
    pub hidden: usize,
    pub classes: usize,
    /// `[hidden][n_f · n_term]`
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    /// `[classes][hidden]`
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl FnnModel {
    /// Small Gaussian weights (`N(0, 1/fan_in)`), zero biases.
    pub fn init(partitions: Vec<TermPartition>, hidden: usize, classes: usize, seed: u64) -> Self {
        let inputs = partitions.len() * TERM_COUNT;
        let mut rng = rng_from_seed(seed);
        let mut draw = |n: usize, fan_in: usize| -> Vec<f64> {
            let std = (1.0 / fan_in as f64).sqrt();
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    std * z
                })
                .collect()
        };
        let w_hidden = draw(hidden * inputs, inputs);
        let w_out = draw(classes * hidden, hidden);
        Self {
            partitions,
            hidden,
            classes,
            w_hidden,
            b_hidden: vec![0.0; hidden],
            w_out,
            b_out: vec![0.0; classes],
        }
    }

    pub fn input_width(&self) -> usize {
        self.partitions.len() * TERM_COUNT
    }

    /// Flattened memberships of a raw feature vector.
    pub fn encode(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(fuzzify(features, &self.partitions)?.as_slice().to_vec())
    }

    fn hidden_activations(&self, u: &[f64]) -> Vec<f64> {
        let n_in = self.input_width();
        self.w_hidden
            .chunks_exact(n_in)
            .zip(&self.b_hidden)
            .map(|(row, b)| sigmoid(b + row.iter().zip(u).map(|(w, x)| w * x).sum::<f64>()))
            .collect()
    }

    fn logits_from(&self, h: &[f64]) -> Vec<f64> {
        self.w_out
            .chunks_exact(self.hidden)
            .zip(&self.b_out)
            .map(|(row, b)| b + row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// Probabilities for an already encoded input.
    pub fn forward_encoded(&self, u: &[f64]) -> Vec<f64> {
        softmax(&self.logits_from(&self.hidden_activations(u)))
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_encoded(&self.encode(features)?))
    }

    pub fn loss_encoded(&self, u: &[f64], label: usize) -> f64 {
        cross_entropy(&self.logits_from(&self.hidden_activations(u)), label)
    }

    /// Parameter slices: hidden weights, hidden biases, output weights,
    /// output biases.
    pub fn param_slices(&self) -> [&[f64]; 4] {
        [&self.w_hidden, &self.b_hidden, &self.w_out, &self.b_out]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w_hidden, &mut self.b_hidden, &mut self.w_out, &mut self.b_out]
    }

    /// Add the cross-entropy gradient of one encoded sample into `grads`
    /// (laid out like [`FnnModel::param_slices`]); returns loss and
    /// probabilities.
    pub fn accumulate_gradients(&self, u: &[f64], label: usize, grads: &mut [Vec<f64>; 4]) -> (f64, Vec<f64>) {
        let n_in = self.input_width();
        let h = self.hidden_activations(u);
        let logits = self.logits_from(&h);
        let probs = softmax(&logits);
        let loss = cross_entropy(&logits, label);
        let mut d_out = probs.clone();
        d_out[label] -= 1.0;

        let [gwh, gbh, gwo, gbo] = grads;
        let mut d_h = vec![0.0; self.hidden];
        for (o, &g) in d_out.iter().enumerate() {
            gbo[o] += g;
            for j in 0..self.hidden {
                gwo[o * self.hidden + j] += g * h[j];
                d_h[j] += g * self.w_out[o * self.hidden + j];
            }
        }
        for j in 0..self.hidden {
            let dz = d_h[j] * h[j] * (1.0 - h[j]);
            gbh[j] += dz;
            for (i, &x) in u.iter().enumerate() {
                gwh[j * n_in + i] += dz * x;
            }
        }
        (loss, probs)
    }

    pub fn zero_grads(&self) -> [Vec<f64>; 4] {
        self.param_slices().map(|s| vec![0.0; s.len()])
    }
}

/// Backprop training with mini-batch SGD and momentum; returns the model
/// and its per-epoch error curve.
pub fn train_fnn(
    ds: &Dataset,
    partitions: Vec<TermPartition>,
    hidden_units: usize,
    cfg: &TrainConfig,
) -> Result<(FnnModel, LearningCurve)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(invalid("training set is empty"));
    }
    if partitions.len() != ds.feature_count() {
        return Err(invalid(format!(
            "{} partitions for {} features",
            partitions.len(),
            ds.feature_count()
        )));
    }
    if hidden_units == 0 {
        return Err(invalid("hidden_units must be positive"));
    }
    let mut model = FnnModel::init(partitions, hidden_units, ds.class_count(), cfg.seed);
    let data: Vec<(Vec<f64>, usize)> = ds
        .samples()
        .iter()
        .map(|s| Ok((model.encode(&s.features)?, s.label)))
        .collect::<Result<_>>()?;

    let mut rng = rng_from_seed(cfg.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut velocity = model.zero_grads();
    let mut grads = model.zero_grads();
    let mut curve = LearningCurve::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| g.fill(0.0));
            for &i in batch {
                let (u, label) = &data[i];
                let (loss, probs) = model.accumulate_gradients(u, *label, &mut grads);
                loss_sum += loss;
                correct += usize::from(argmax(&probs) == *label);
            }
            let scale = 1.0 / batch.len() as f64;
            for ((p, v), g) in model.param_slices_mut().into_iter().zip(&mut velocity).zip(&grads) {
                for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = cfg.momentum * *vi - cfg.learning_rate * gi * scale;
                    *pi += *vi;
                }
            }
        }
        let mean = loss_sum / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training {
                epoch: epoch + 1,
                message: format!("loss diverged to {mean}"),
            });
        }
        curve.loss.push(mean);
        curve.accuracy.push(100.0 * correct as f64 / data.len() as f64);
    }
    Ok((model, curve))
}

pub fn predict_fnn(model: &FnnModel, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let p = model.predict_proba(x)?;
    Ok((argmax(&p), p))
}
