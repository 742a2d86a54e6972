//! Word vectors, cosine similarity and slot-context representations.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::MaskedSentence;
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("duplicate word {0:?}")]
    DuplicateWord(String),
    #[error("non-finite component in vector for {0:?}")]
    NonFinite(String),
}

/// Dense vectors of a fixed dimension, stored row-major as `f32`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorStore {
    dim: usize,
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    data: Vec<f32>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn push(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<(), VectorError> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(VectorError::DimensionMismatch {
                left: self.dim,
                right: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(VectorError::NonFinite(word));
        }
        if self.index.contains_key(&word) {
            return Err(VectorError::DuplicateWord(word));
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    /// Replace an existing row or append a new one.
    pub fn upsert(&mut self, word: &str, vector: &[f32]) -> Result<(), VectorError> {
        match self.index.get(word) {
            Some(&i) => {
                if vector.len() != self.dim {
                    return Err(VectorError::DimensionMismatch {
                        left: self.dim,
                        right: vector.len(),
                    });
                }
                self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector);
                Ok(())
            }
            None => self.push(word, vector),
        }
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Rows in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), &self.data[i * self.dim..(i + 1) * self.dim]))
    }
}

/// `dot(u, v) / (|u| |v|)`, or 0 when either norm is 0.
pub fn cosine<A, B>(u: &[A], v: &[B]) -> Result<f64, VectorError>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    if u.len() != v.len() {
        return Err(VectorError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut uv, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Ok(0.0);
    }
    Ok((uv / (sqrt(uu) * sqrt(vv))).clamp(-1.0, 1.0))
}

/// Representation of the slot's context, comparable with word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector {
    pub values: Vec<f64>,
    /// Number of in-vocabulary tokens averaged.
    pub support: usize,
}

/// Anything that maps a masked sentence to a context vector.
pub trait ContextEncoder {
    fn dim(&self) -> usize;
    fn encode(&self, masked: &MaskedSentence) -> ContextVector;
}

/// Unweighted mean of the pretrained vectors around the slot.
///
/// `window = None` averages the whole sentence. Stop words are kept.
#[derive(Debug, Clone, Copy)]
pub struct MeanContextEncoder<'a> {
    pub store: &'a VectorStore,
    pub window: Option<usize>,
}

impl<'a> MeanContextEncoder<'a> {
    pub fn new(store: &'a VectorStore, window: Option<usize>) -> Self {
        Self { store, window }
    }
}

impl ContextEncoder for MeanContextEncoder<'_> {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn encode(&self, masked: &MaskedSentence) -> ContextVector {
        context_vector(masked, self.store, self.window)
    }
}

pub fn context_vector(
    masked: &MaskedSentence,
    store: &VectorStore,
    window: Option<usize>,
) -> ContextVector {
    let slot = masked.slot_index;
    let (lo, hi) = match window {
        Some(w) => (
            slot.saturating_sub(w),
            (slot + w).min(masked.len().saturating_sub(1)),
        ),
        None => (0, masked.len().saturating_sub(1)),
    };
    let mut values = vec![0.0f64; store.dim()];
    let mut support = 0;
    for (i, token) in masked.tokens.iter().enumerate().take(hi + 1).skip(lo) {
        if i == slot {
            continue;
        }
        if let Some(v) = store.get(token) {
            for (acc, &x) in values.iter_mut().zip(v) {
                *acc += x as f64;
            }
            support += 1;
        }
    }
    if support > 0 {
        let n = support as f64;
        values.iter_mut().for_each(|x| *x /= n);
    }
    ContextVector { values, support }
}

/// Similarity of `word` to the context; out-of-vocabulary words get -1.
pub fn filler_similarity(ctx: &ContextVector, word: &str, store: &VectorStore) -> f64 {
    store
        .get(word)
        .and_then(|v| cosine(v, &ctx.values).ok())
        .unwrap_or(-1.0)
}

/// `1 + #{d : sim(d) >= sim(target)}`; ties count against the target.
pub fn filler_rank(
    ctx: &ContextVector,
    target: &str,
    distractors: &[&str],
    store: &VectorStore,
) -> usize {
    let t = filler_similarity(ctx, target, store);
    1 + distractors
        .iter()
        .filter(|d| filler_similarity(ctx, d, store) >= t)
        .count()
}

/// (similarity of the target, mean similarity of the distractors).
///
/// The mean is 0 for an empty distractor list.
pub fn similarity_features(
    ctx: &ContextVector,
    target: &str,
    distractors: &[&str],
    store: &VectorStore,
) -> (f64, f64) {
    let t = filler_similarity(ctx, target, store);
    if distractors.is_empty() {
        return (t, 0.0);
    }
    let sum: f64 = distractors
        .iter()
        .map(|d| filler_similarity(ctx, d, store))
        .sum();
    (t, sum / distractors.len() as f64)
}
