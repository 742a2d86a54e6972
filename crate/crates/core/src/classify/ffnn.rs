//! Two-hidden-layer rectifier network over slot context vectors.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{split_labels, ClassifyError, ClozeClassifier, FeatureSource, LabeledExample};
use crate::corpus::MaskedSentence;
use crate::math::{logistic_loss, quantize, sigmoid, sqrt};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FfnnHyper {
    pub h1: usize,
    pub h2: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for FfnnHyper {
    fn default() -> Self {
        Self {
            h1: 128,
            h2: 64,
            lr: 0.01,
            epochs: 20,
        }
    }
}

/// Dense layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[o]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextFfnnModel {
    pub hyper: FfnnHyper,
    /// `[input, h1, h2, output]` layers in order.
    pub layers: Vec<Layer>,
}

struct Trace {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    logit: f64,
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| v.max(0.0)).collect()
}

impl ContextFfnnModel {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init(input_dim: usize, hyper: FfnnHyper, seed: u64) -> Self {
        let mut rng = seeded(derive_seed(seed, "ffnn-init"));
        let sizes = [input_dim, hyper.h1, hyper.h2, 1];
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut layer = Layer::zeros(w[0], w[1]);
                let bound = 1.0 / sqrt(w[0] as f64);
                layer
                    .weights
                    .iter_mut()
                    .for_each(|x| *x = rng.gen_range(-bound..=bound));
                layer
            })
            .collect();
        Self { hyper, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    /// Layer sizes `[input, h1, h2, 1]`.
    pub fn sizes(&self) -> [usize; 4] {
        [
            self.layers[0].inputs,
            self.layers[0].outputs,
            self.layers[1].outputs,
            self.layers[2].outputs,
        ]
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let z1 = self.layers[0].forward(x);
        let a1 = relu(&z1);
        let z2 = self.layers[1].forward(&a1);
        let a2 = relu(&z2);
        let logit = self.layers[2].forward(&a2)[0];
        Trace {
            z1,
            a1,
            z2,
            a2,
            logit,
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.trace(x).logit
    }

    pub fn predict_vector(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn batch_loss(&self, inputs: &[Vec<f64>], labels: &[bool]) -> f64 {
        inputs
            .iter()
            .zip(labels)
            .map(|(x, y)| logistic_loss(self.logit(x), *y))
            .sum::<f64>()
            / inputs.len() as f64
    }

    /// Gradient of the mean loss, shaped like `self.layers`.
    pub fn batch_gradient(&self, inputs: &[Vec<f64>], labels: &[bool]) -> Vec<Layer> {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect();
        let scale = 1.0 / inputs.len() as f64;
        for (x, y) in inputs.iter().zip(labels) {
            self.accumulate(x, *y, scale, &mut grads);
        }
        grads
    }

    fn accumulate(&self, x: &[f64], y: bool, scale: f64, grads: &mut [Layer]) {
        let t = self.trace(x);
        let g3 = (sigmoid(t.logit) - if y { 1.0 } else { 0.0 }) * scale;
        let [l1, l2, l3] = [&self.layers[0], &self.layers[1], &self.layers[2]];

        for (j, a) in t.a2.iter().enumerate() {
            grads[2].weights[j] += g3 * a;
        }
        grads[2].bias[0] += g3;

        let dz2: Vec<f64> = (0..l2.outputs)
            .map(|j| {
                if t.z2[j] > 0.0 {
                    g3 * l3.weights[j]
                } else {
                    0.0
                }
            })
            .collect();
        for (o, d) in dz2.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            for (i, a) in t.a1.iter().enumerate() {
                grads[1].weights[o * l2.inputs + i] += d * a;
            }
            grads[1].bias[o] += d;
        }

        let dz1: Vec<f64> = (0..l1.outputs)
            .map(|i| {
                if t.z1[i] <= 0.0 {
                    return 0.0;
                }
                (0..l2.outputs)
                    .map(|o| dz2[o] * l2.weights[o * l2.inputs + i])
                    .sum()
            })
            .collect();
        for (o, d) in dz1.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            for (i, v) in x.iter().enumerate() {
                grads[0].weights[o * l1.inputs + i] += d * v;
            }
            grads[0].bias[o] += d;
        }
    }

    fn apply(&mut self, grads: &[Layer], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, d) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * d;
            }
        }
    }
}

/// Per-example SGD on precomputed input vectors.
pub fn train_context_ffnn_on(
    inputs: &[Vec<f64>],
    labels: &[bool],
    hyper: FfnnHyper,
    seed: u64,
) -> Result<ContextFfnnModel, ClassifyError> {
    let Some(first) = inputs.first() else {
        return Err(ClassifyError::EmptyTrain);
    };
    if hyper.h1 == 0 || hyper.h2 == 0 {
        return Err(ClassifyError::BadHyper("hidden sizes must be positive"));
    }
    let dim = first.len();
    if let Some(bad) = inputs.iter().find(|x| x.len() != dim) {
        return Err(ClassifyError::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let mut model = ContextFfnnModel::init(dim, hyper, seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rng = seeded(derive_seed(seed, "ffnn-order"));
    let mut grads: Vec<Layer> = model
        .layers
        .iter()
        .map(|l| Layer::zeros(l.inputs, l.outputs))
        .collect();
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            for g in grads.iter_mut() {
                g.weights.iter_mut().for_each(|x| *x = 0.0);
                g.bias.iter_mut().for_each(|x| *x = 0.0);
            }
            model.accumulate(&inputs[i], labels[i], 1.0, &mut grads);
            model.apply(&grads, hyper.lr);
        }
    }
    for layer in model.layers.iter_mut() {
        layer.weights.iter_mut().for_each(|x| *x = quantize(*x));
        layer.bias.iter_mut().for_each(|x| *x = quantize(*x));
    }
    Ok(model)
}

/// Encode every training example's context, then fit.
pub fn train_context_ffnn(
    train: &[LabeledExample],
    source: &FeatureSource<'_>,
    hyper: FfnnHyper,
    seed: u64,
) -> Result<ContextFfnnModel, ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrain);
    }
    let inputs = train
        .iter()
        .map(|e| source.context(&e.masked).map(|c| c.values))
        .collect::<Result<Vec<_>, _>>()?;
    train_context_ffnn_on(&inputs, &split_labels(train), hyper, seed)
}

impl ClozeClassifier for ContextFfnnModel {
    fn predict_proba(
        &self,
        masked: &MaskedSentence,
        source: &FeatureSource<'_>,
    ) -> Result<f64, ClassifyError> {
        let ctx = source.context(masked)?;
        if ctx.values.len() != self.input_dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.input_dim(),
                got: ctx.values.len(),
            });
        }
        Ok(self.predict_vector(&ctx.values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_bounds_and_shapes() {
        let m = ContextFfnnModel::init(
            16,
            FfnnHyper {
                h1: 8,
                h2: 4,
                ..FfnnHyper::default()
            },
            1,
        );
        assert_eq!(m.sizes(), [16, 8, 4, 1]);
        assert!(m.layers[0].weights.iter().all(|w| w.abs() <= 0.25));
        assert!(m.layers[1]
            .weights
            .iter()
            .all(|w| w.abs() <= 1.0 / 8f64.sqrt()));
        assert!(m.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn zero_inputs_learn_the_prior() {
        let inputs = alloc::vec![alloc::vec![0.0; 6]; 50];
        let labels: Vec<bool> = (0..50).map(|i| i % 5 != 0).collect();
        let hyper = FfnnHyper {
            h1: 8,
            h2: 4,
            lr: 0.05,
            epochs: 30,
        };
        let m = train_context_ffnn_on(&inputs, &labels, hyper, 2).unwrap();
        let p = m.predict_vector(&inputs[0]);
        assert!((p - 0.8).abs() < 0.05, "{p}");
        let correct = labels.iter().filter(|y| (p >= 0.5) == **y).count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn dimension_checks() {
        let inputs = alloc::vec![alloc::vec![0.0; 3], alloc::vec![0.0; 4]];
        let err =
            train_context_ffnn_on(&inputs, &[true, false], FfnnHyper::default(), 0).unwrap_err();
        assert_eq!(
            err,
            ClassifyError::DimensionMismatch {
                expected: 3,
                got: 4
            }
        );
    }
}
