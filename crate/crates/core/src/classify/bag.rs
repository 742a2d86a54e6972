//! Averaged bag of hashed unigrams and bigrams with a logistic output.
//!
//! Embedding rows are created lazily: a row that was never updated holds its
//! deterministic initial value, derived from the init seed and the row
//! index, so a sparse table behaves exactly like a fully initialized one.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{split_labels, ClassifyError, ClozeClassifier, FeatureSource, LabeledExample};
use crate::corpus::MaskedSentence;
use crate::math::{dot, logistic_loss, quantize, sigmoid};
use crate::rng::{derive_seed, fnv1a_extend, seeded, FNV_OFFSET};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BagHyper {
    pub buckets: u32,
    pub dim: usize,
    pub lr0: f64,
    pub epochs: usize,
}

impl Default for BagHyper {
    fn default() -> Self {
        Self {
            buckets: 1 << 21,
            dim: 50,
            lr0: 0.1,
            epochs: 5,
        }
    }
}

/// Hashed feature indices for a token sequence: one per token, then one per
/// adjacent pair.
pub fn hashed_features(tokens: &[String], buckets: u32, hash_seed: u64) -> Vec<u32> {
    let base = fnv1a_extend(FNV_OFFSET, &hash_seed.to_le_bytes());
    let mut out = Vec::with_capacity(tokens.len() * 2);
    for t in tokens {
        let h = fnv1a_extend(fnv1a_extend(base, &[1]), t.as_bytes());
        out.push((h % buckets as u64) as u32);
    }
    for pair in tokens.windows(2) {
        let h = fnv1a_extend(base, &[2]);
        let h = fnv1a_extend(h, pair[0].as_bytes());
        let h = fnv1a_extend(h, &[0x1f]);
        let h = fnv1a_extend(h, pair[1].as_bytes());
        out.push((h % buckets as u64) as u32);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagNgramModel {
    pub hyper: BagHyper,
    pub hash_seed: u64,
    pub init_seed: u64,
    /// Rows that differ from (or were materialized at) their initial value.
    pub rows: BTreeMap<u32, Vec<f64>>,
    pub output: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagGradient {
    pub rows: BTreeMap<u32, Vec<f64>>,
    pub output: Vec<f64>,
    pub bias: f64,
}

impl BagNgramModel {
    pub fn new(hyper: BagHyper, seed: u64) -> Self {
        Self {
            hyper,
            hash_seed: derive_seed(seed, "bag-hash"),
            init_seed: derive_seed(seed, "bag-init"),
            rows: BTreeMap::new(),
            output: vec![0.0; hyper.dim],
            bias: 0.0,
        }
    }

    pub fn features(&self, masked: &MaskedSentence) -> Vec<u32> {
        hashed_features(&masked.tokens, self.hyper.buckets, self.hash_seed)
    }

    /// Initial value of a row: uniform in `(-1/dim, 1/dim)`.
    pub fn initial_row(&self, row: u32) -> Vec<f64> {
        let mut rng = seeded(self.init_seed ^ (row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let bound = 1.0 / self.hyper.dim as f64;
        (0..self.hyper.dim)
            .map(|_| quantize(rng.gen_range(-bound..bound)))
            .collect()
    }

    fn row(&self, row: u32) -> Vec<f64> {
        self.rows
            .get(&row)
            .cloned()
            .unwrap_or_else(|| self.initial_row(row))
    }

    pub fn materialize(&mut self, features: &[u32]) {
        for &f in features {
            if !self.rows.contains_key(&f) {
                let r = self.initial_row(f);
                self.rows.insert(f, r);
            }
        }
    }

    fn hidden(&self, features: &[u32]) -> Vec<f64> {
        let mut h = vec![0.0; self.hyper.dim];
        if features.is_empty() {
            return h;
        }
        for &f in features {
            let owned;
            let r = match self.rows.get(&f) {
                Some(r) => r,
                None => {
                    owned = self.initial_row(f);
                    &owned
                }
            };
            for (acc, x) in h.iter_mut().zip(r) {
                *acc += x;
            }
        }
        let n = features.len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    pub fn logit(&self, features: &[u32]) -> f64 {
        dot(&self.output, &self.hidden(features)) + self.bias
    }

    /// Mean logistic loss over `(features, label)` pairs.
    pub fn batch_loss(&self, batch: &[(Vec<u32>, bool)]) -> f64 {
        batch
            .iter()
            .map(|(f, y)| logistic_loss(self.logit(f), *y))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Gradient of [`Self::batch_loss`].
    pub fn batch_gradient(&self, batch: &[(Vec<u32>, bool)]) -> BagGradient {
        let scale = 1.0 / batch.len() as f64;
        let mut grad = BagGradient {
            rows: BTreeMap::new(),
            output: vec![0.0; self.hyper.dim],
            bias: 0.0,
        };
        for (features, y) in batch {
            let h = self.hidden(features);
            let g =
                (sigmoid(dot(&self.output, &h) + self.bias) - if *y { 1.0 } else { 0.0 }) * scale;
            for (acc, x) in grad.output.iter_mut().zip(&h) {
                *acc += g * x;
            }
            grad.bias += g;
            if features.is_empty() {
                continue;
            }
            let per = g / features.len() as f64;
            for &f in features {
                let row = grad
                    .rows
                    .entry(f)
                    .or_insert_with(|| vec![0.0; self.hyper.dim]);
                for (acc, w) in row.iter_mut().zip(&self.output) {
                    *acc += per * w;
                }
            }
        }
        grad
    }

    fn sgd_step(&mut self, features: &[u32], label: bool, lr: f64) {
        let h = self.hidden(features);
        let g = sigmoid(dot(&self.output, &h) + self.bias) - if label { 1.0 } else { 0.0 };
        if !features.is_empty() {
            let per = lr * g / features.len() as f64;
            for &f in features {
                let mut r = self.row(f);
                for (x, w) in r.iter_mut().zip(&self.output) {
                    *x -= per * w;
                }
                self.rows.insert(f, r);
            }
        }
        for (w, x) in self.output.iter_mut().zip(&h) {
            *w -= lr * g * x;
        }
        self.bias -= lr * g;
    }

    fn quantize_all(&mut self) {
        for r in self.rows.values_mut() {
            r.iter_mut().for_each(|x| *x = quantize(*x));
        }
        self.output.iter_mut().for_each(|x| *x = quantize(*x));
        self.bias = quantize(self.bias);
    }
}

/// Plain SGD, learning rate decaying linearly from `lr0` to 0 over all
/// updates, example order reshuffled every epoch.
pub fn train_bag_ngram(
    train: &[LabeledExample],
    hyper: BagHyper,
    seed: u64,
) -> Result<BagNgramModel, ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrain);
    }
    if hyper.buckets == 0 || hyper.dim == 0 {
        return Err(ClassifyError::BadHyper("buckets and dim must be positive"));
    }
    let mut model = BagNgramModel::new(hyper, seed);
    let batch: Vec<(Vec<u32>, bool)> = train
        .iter()
        .map(|e| model.features(&e.masked))
        .zip(split_labels(train))
        .collect();
    let total = (hyper.epochs * batch.len()) as f64;
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut rng = seeded(derive_seed(seed, "bag-order"));
    let mut t = 0usize;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = hyper.lr0 * (1.0 - t as f64 / total);
            let (features, label) = &batch[i];
            model.sgd_step(features, *label, lr);
            t += 1;
        }
    }
    model.quantize_all();
    Ok(model)
}

impl ClozeClassifier for BagNgramModel {
    fn predict_proba(
        &self,
        masked: &MaskedSentence,
        _: &FeatureSource<'_>,
    ) -> Result<f64, ClassifyError> {
        Ok(sigmoid(self.logit(&self.features(masked))))
    }
}
