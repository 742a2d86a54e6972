//! Logistic regression over three linguistic features: the LM rank
//! proportion, the target's context similarity, and the mean distractor
//! context similarity. Features are standardized with training statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{split_labels, ClassifyError, ClozeClassifier, FeatureSource, LabeledExample};
use crate::corpus::MaskedSentence;
use crate::math::{logistic_loss, quantize, sigmoid, sqrt};

pub const N_FEATURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureLrHyper {
    pub lr: f64,
    pub iters: usize,
}

impl Default for FeatureLrHyper {
    fn default() -> Self {
        Self {
            lr: 0.1,
            iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLrModel {
    pub hyper: FeatureLrHyper,
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    pub mean: [f64; N_FEATURES],
    /// Per-feature standard deviation; 1 for constant features.
    pub std: [f64; N_FEATURES],
}

impl FeatureLrModel {
    pub fn standardize(&self, x: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        core::array::from_fn(|i| (x[i] - self.mean[i]) / self.std[i])
    }

    pub fn logit_standardized(&self, z: &[f64; N_FEATURES]) -> f64 {
        self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn predict_features(&self, x: &[f64; N_FEATURES]) -> f64 {
        sigmoid(self.logit_standardized(&self.standardize(x)))
    }

    /// Mean loss and its gradient `[w0, w1, w2, bias]` on standardized inputs.
    pub fn loss_and_gradient(
        &self,
        z: &[[f64; N_FEATURES]],
        y: &[bool],
    ) -> (f64, [f64; N_FEATURES + 1]) {
        let n = z.len() as f64;
        let mut loss = 0.0;
        let mut grad = [0.0; N_FEATURES + 1];
        for (x, label) in z.iter().zip(y) {
            let logit = self.logit_standardized(x);
            loss += logistic_loss(logit, *label);
            let g = sigmoid(logit) - if *label { 1.0 } else { 0.0 };
            for i in 0..N_FEATURES {
                grad[i] += g * x[i] / n;
            }
            grad[N_FEATURES] += g / n;
        }
        (loss / n, grad)
    }
}

fn moments(features: &[[f64; N_FEATURES]]) -> ([f64; N_FEATURES], [f64; N_FEATURES]) {
    let n = features.len() as f64;
    let mean: [f64; N_FEATURES] =
        core::array::from_fn(|i| features.iter().map(|f| f[i]).sum::<f64>() / n);
    let std = core::array::from_fn(|i| {
        let var = features
            .iter()
            .map(|f| (f[i] - mean[i]) * (f[i] - mean[i]))
            .sum::<f64>()
            / n;
        let s = sqrt(var);
        if s > 1e-12 {
            s
        } else {
            1.0
        }
    });
    (mean, std)
}

/// Full-batch gradient descent from zero weights on precomputed features.
pub fn train_feature_lr_on(
    features: &[[f64; N_FEATURES]],
    labels: &[bool],
    hyper: FeatureLrHyper,
) -> Result<FeatureLrModel, ClassifyError> {
    if features.is_empty() {
        return Err(ClassifyError::EmptyTrain);
    }
    let (mean, std) = moments(features);
    let mut model = FeatureLrModel {
        hyper,
        weights: [0.0; N_FEATURES],
        bias: 0.0,
        mean,
        std,
    };
    let z: Vec<[f64; N_FEATURES]> = features.iter().map(|x| model.standardize(x)).collect();
    for _ in 0..hyper.iters {
        let (_, g) = model.loss_and_gradient(&z, labels);
        for (w, d) in model.weights.iter_mut().zip(&g) {
            *w -= hyper.lr * d;
        }
        model.bias -= hyper.lr * g[N_FEATURES];
    }
    model.weights = model.weights.map(quantize);
    model.bias = quantize(model.bias);
    model.mean = model.mean.map(quantize);
    model.std = model.std.map(quantize);
    Ok(model)
}

/// Extract features for every training example, then fit.
pub fn train_feature_lr(
    train: &[LabeledExample],
    source: &FeatureSource<'_>,
    hyper: FeatureLrHyper,
) -> Result<FeatureLrModel, ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrain);
    }
    let features = train
        .iter()
        .map(|e| source.linguistic_features(&e.masked))
        .collect::<Result<Vec<_>, _>>()?;
    train_feature_lr_on(&features, &split_labels(train), hyper)
}

impl ClozeClassifier for FeatureLrModel {
    fn predict_proba(
        &self,
        masked: &MaskedSentence,
        source: &FeatureSource<'_>,
    ) -> Result<f64, ClassifyError> {
        Ok(self.predict_features(&source.linguistic_features(masked)?))
    }
}
