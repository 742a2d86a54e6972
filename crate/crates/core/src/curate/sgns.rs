//! Skip-gram with negative sampling, initialized from pretrained vectors.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CurateError, TARGET_NEW};
use crate::corpus::Sentence;
use crate::math::{dot, logistic_loss, pow, sigmoid};
use crate::rng::{derive_seed, seeded};
use crate::vectors::{cosine, VectorStore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsParams {
    pub window: usize,
    pub negatives: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgnsParams {
    fn default() -> Self {
        Self {
            window: 5,
            negatives: 5,
            lr0: 0.025,
            lr_min: 1e-4,
            epochs: 5,
            seed: 0,
        }
    }
}

impl SgnsParams {
    fn validate(&self) -> Result<(), CurateError> {
        if self.negatives == 0 {
            return Err(CurateError::BadParams("negatives must be at least 1"));
        }
        if self.window == 0 {
            return Err(CurateError::BadParams("window must be at least 1"));
        }
        if !(self.lr0 >= 0.0 && self.lr_min >= 0.0 && self.lr0.is_finite()) {
            return Err(CurateError::BadParams(
                "learning rates must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Training state over the fine-tuning vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsModel {
    pub dim: usize,
    /// Vocabulary in sorted order.
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub input: Vec<Vec<f64>>,
    pub output: Vec<Vec<f64>>,
    index: BTreeMap<String, usize>,
}

impl SgnsModel {
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn input_vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.input[i].as_slice())
    }

    /// Input vectors as an `f32` store in vocabulary order.
    pub fn to_store(&self) -> VectorStore {
        let mut store = VectorStore::new(self.dim);
        for (w, v) in self.words.iter().zip(&self.input) {
            let row: Vec<f32> = v.iter().map(|x| *x as f32).collect();
            store
                .push(w.clone(), &row)
                .expect("finite rows of the model dimension");
        }
        store
    }

    /// `base` with every vocabulary row replaced by the trained input vector.
    pub fn merge_into(&self, base: &VectorStore) -> VectorStore {
        let mut out = base.clone();
        for (w, v) in self.words.iter().zip(&self.input) {
            let row: Vec<f32> = v.iter().map(|x| *x as f32).collect();
            out.upsert(w, &row)
                .expect("finite rows of the model dimension");
        }
        out
    }
}

/// Token forms of a sentence.
pub fn sentence_forms(sentence: &Sentence) -> Vec<String> {
    sentence.tokens.iter().map(|t| t.form.clone()).collect()
}

/// Copy pretrained input vectors for known words; draw the rest uniformly in
/// `±0.5/dim`. Output vectors start at zero.
pub fn init_sgns(pretrained: &VectorStore, sentences: &[Vec<String>], seed: u64) -> SgnsModel {
    let dim = pretrained.dim();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for s in sentences {
        for w in s {
            *counts.entry(w.clone()).or_default() += 1;
        }
    }
    let mut rng = seeded(derive_seed(seed, "sgns-init"));
    let bound = 0.5 / dim.max(1) as f64;
    let mut model = SgnsModel {
        dim,
        words: Vec::with_capacity(counts.len()),
        counts: Vec::with_capacity(counts.len()),
        input: Vec::with_capacity(counts.len()),
        output: Vec::with_capacity(counts.len()),
        index: BTreeMap::new(),
    };
    for (i, (w, c)) in counts.into_iter().enumerate() {
        let v = match pretrained.get(&w) {
            Some(row) => row.iter().map(|x| *x as f64).collect(),
            None => (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect(),
        };
        model.index.insert(w.clone(), i);
        model.words.push(w);
        model.counts.push(c);
        model.input.push(v);
        model.output.push(vec![0.0; dim]);
    }
    model
}

/// Loss of one center vector against `(output vector, is_context)` targets.
pub fn pair_loss(center: &[f64], targets: &[(&[f64], bool)]) -> f64 {
    targets
        .iter()
        .map(|(u, y)| logistic_loss(dot(u, center), *y))
        .sum()
}

/// Gradient of [`pair_loss`] with respect to the center and each target.
pub fn pair_gradient(center: &[f64], targets: &[(&[f64], bool)]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut g_center = vec![0.0; center.len()];
    let g_targets = targets
        .iter()
        .map(|(u, y)| {
            let g = sigmoid(dot(u, center)) - if *y { 1.0 } else { 0.0 };
            for (acc, x) in g_center.iter_mut().zip(u.iter()) {
                *acc += g * x;
            }
            center.iter().map(|x| g * x).collect()
        })
        .collect();
    (g_center, g_targets)
}

fn step(model: &mut SgnsModel, center: usize, targets: &[(usize, bool)], lr: f64) {
    let (g_center, g_targets) = {
        let views: Vec<(&[f64], bool)> = targets
            .iter()
            .map(|(t, y)| (model.output[*t].as_slice(), *y))
            .collect();
        pair_gradient(&model.input[center], &views)
    };
    for ((t, _), g) in targets.iter().zip(g_targets) {
        for (w, d) in model.output[*t].iter_mut().zip(g) {
            *w -= lr * d;
        }
    }
    for (w, d) in model.input[center].iter_mut().zip(g_center) {
        *w -= lr * d;
    }
}

/// Fine-tune in place and return the vocabulary's input vectors.
///
/// Every (center, context) pair within `window` is one update against
/// `negatives` noise words drawn from the unigram counts raised to 0.75; a
/// noise draw equal to the context word is skipped. The learning rate falls
/// linearly from `lr0` to `min(lr_min, lr0)` over all updates and sentence
/// order is reshuffled each epoch.
pub fn sgns_train(
    model: &mut SgnsModel,
    sentences: &[Vec<String>],
    params: &SgnsParams,
) -> Result<VectorStore, CurateError> {
    params.validate()?;
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(CurateError::NoSentences);
    }
    let ids: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| {
            s.iter()
                .map(|w| {
                    model
                        .index_of(w)
                        .ok_or_else(|| CurateError::MissingWord(w.clone()))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let weights: Vec<f64> = model.counts.iter().map(|c| pow(*c as f64, 0.75)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|_| CurateError::NoSentences)?;

    let pairs: usize = ids
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|i| window_pairs(i, s.len(), params.window))
                .sum::<usize>()
        })
        .sum();
    let total = (pairs * params.epochs).max(1) as f64;
    let lr_end = params.lr_min.min(params.lr0);
    let mut rng = seeded(derive_seed(params.seed, "sgns-train"));
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let mut targets = Vec::with_capacity(params.negatives + 1);
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &s in &order {
            let sent = &ids[s];
            for i in 0..sent.len() {
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window).min(sent.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let lr = params.lr0 - (params.lr0 - lr_end) * (t as f64 / total);
                    let context = sent[j];
                    targets.clear();
                    targets.push((context, true));
                    for _ in 0..params.negatives {
                        let k = noise.sample(&mut rng);
                        if k != context {
                            targets.push((k, false));
                        }
                    }
                    step(model, sent[i], &targets, lr);
                    t += 1;
                }
            }
        }
    }
    Ok(model.to_store())
}

fn window_pairs(i: usize, len: usize, window: usize) -> usize {
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(len - 1);
    hi - lo
}

/// Initialize from `pretrained`, train, and merge back into a copy of it.
pub fn fine_tune(
    pretrained: &VectorStore,
    sentences: &[Vec<String>],
    params: &SgnsParams,
) -> Result<VectorStore, CurateError> {
    let mut model = init_sgns(pretrained, sentences, params.seed);
    sgns_train(&mut model, sentences, params)?;
    Ok(model.merge_into(pretrained))
}

/// Cosine between the trained replacement token and the target's
/// pretrained vector.
pub fn eval_similarity(
    trained: &VectorStore,
    pretrained: &VectorStore,
    target: &str,
) -> Result<f64, CurateError> {
    let new = trained
        .get(TARGET_NEW)
        .ok_or_else(|| CurateError::MissingWord(TARGET_NEW.to_string()))?;
    let gold = pretrained
        .get(target)
        .ok_or_else(|| CurateError::MissingWord(target.to_string()))?;
    Ok(cosine(new, gold)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pretrained() -> VectorStore {
        let mut s = VectorStore::new(4);
        s.push("the", &[0.1, 0.2, -0.3, 0.4]).unwrap();
        s.push("bank", &[1.0, 0.0, 0.5, -0.5]).unwrap();
        s.push("river", &[0.9, 0.1, 0.4, -0.6]).unwrap();
        s.push("unused", &[0.3, 0.3, 0.3, 0.3]).unwrap();
        s
    }

    fn corpus() -> Vec<Vec<String>> {
        [
            "the target_word_new by the river",
            "a river and the target_word_new",
            "the water",
        ]
        .iter()
        .map(|s| s.split(' ').map(String::from).collect())
        .collect()
    }

    #[test]
    fn init_copies_known_and_bounds_unknown() {
        let p = pretrained();
        let m = init_sgns(&p, &corpus(), 1);
        let known: Vec<f64> = p.get("river").unwrap().iter().map(|x| *x as f64).collect();
        assert_eq!(m.input_vector("river").unwrap(), known.as_slice());
        let new = m.input_vector(TARGET_NEW).unwrap();
        assert!(new.iter().all(|x| x.abs() <= 0.125));
        assert!(m.output.iter().flatten().all(|x| *x == 0.0));
        assert!(m.index_of("unused").is_none());
    }

    #[test]
    fn zero_rate_leaves_vectors_unchanged() {
        let p = pretrained();
        let params = SgnsParams {
            lr0: 0.0,
            seed: 4,
            ..SgnsParams::default()
        };
        let m0 = init_sgns(&p, &corpus(), 4);
        let mut m = m0.clone();
        sgns_train(&mut m, &corpus(), &params).unwrap();
        assert_eq!(m.input, m0.input);
        assert_eq!(m.output, m0.output);
    }

    #[test]
    fn untouched_rows_are_bitwise_equal() {
        let p = pretrained();
        let params = SgnsParams {
            seed: 9,
            ..SgnsParams::default()
        };
        let out = fine_tune(&p, &corpus(), &params).unwrap();
        assert_eq!(out.get("unused"), p.get("unused"));
        assert_eq!(out.get("bank"), p.get("bank"));
        assert_ne!(out.get("river"), p.get("river"));
        assert_eq!(out, fine_tune(&p, &corpus(), &params).unwrap());
        assert_eq!(out.len(), p.len() + 5);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let center = [0.3, -0.2, 0.5];
        let u = [[0.1, 0.4, -0.3], [-0.5, 0.2, 0.2], [0.3, 0.3, 0.1]];
        let targets: Vec<(&[f64], bool)> =
            vec![(&u[0][..], true), (&u[1][..], false), (&u[2][..], false)];
        let (gc, _) = pair_gradient(&center, &targets);
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = center;
            let mut minus = center;
            plus[i] += h;
            minus[i] -= h;
            let fd = (pair_loss(&plus, &targets) - pair_loss(&minus, &targets)) / (2.0 * h);
            assert!((fd - gc[i]).abs() < 1e-8, "{i}: {fd} vs {}", gc[i]);
        }
    }

    #[test]
    fn similarity_of_gold_and_orthogonal() {
        let mut trained = VectorStore::new(2);
        trained.push(TARGET_NEW, &[2.0, 0.0]).unwrap();
        let mut gold = VectorStore::new(2);
        gold.push("a", &[1.0, 0.0]).unwrap();
        gold.push("b", &[0.0, 3.0]).unwrap();
        assert_eq!(eval_similarity(&trained, &gold, "a").unwrap(), 1.0);
        assert_eq!(eval_similarity(&trained, &gold, "b").unwrap(), 0.0);
        assert_eq!(
            eval_similarity(&trained, &gold, "c"),
            Err(CurateError::MissingWord("c".into()))
        );
        assert_eq!(
            eval_similarity(&gold, &gold, "a"),
            Err(CurateError::MissingWord(TARGET_NEW.into()))
        );
    }

    #[test]
    fn bad_params() {
        let p = pretrained();
        let mut m = init_sgns(&p, &corpus(), 0);
        let params = SgnsParams {
            negatives: 0,
            ..SgnsParams::default()
        };
        assert!(matches!(
            sgns_train(&mut m, &corpus(), &params),
            Err(CurateError::BadParams(_))
        ));
        assert_eq!(
            sgns_train(&mut m, &[], &SgnsParams::default()),
            Err(CurateError::NoSentences)
        );
    }
}
