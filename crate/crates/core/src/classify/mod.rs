//! Cloze datasets and the per-target informativeness classifiers.
//!
//! Each target word gets its own binary task: did this masked sentence
//! originally contain the target, or one of its distractors? The predicted
//! probability of the target class serves as the informativeness score.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    mask_at, normalize_numbers, MaskedSentence, Pos, SentenceStore, DEFAULT_MAX_LEN,
    DEFAULT_MIN_LEN,
};
use crate::distractors::DistractorSet;
use crate::lm::{lm_rank_feature, TrigramLm};
use crate::math::round;
use crate::rng::{derive_seed, seeded};
use crate::vectors::{
    filler_rank, similarity_features, ContextEncoder, ContextVector, VectorStore,
};

pub mod bag;
pub mod feature_lr;
pub mod ffnn;

pub use bag::{BagHyper, BagNgramModel};
pub use feature_lr::{FeatureLrHyper, FeatureLrModel};
pub use ffnn::{ContextFfnnModel, FfnnHyper};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("not enough sentences for {word:?}: need {needed}, found {available}")]
    InsufficientData {
        word: String,
        needed: usize,
        available: usize,
    },
    #[error("split proportions must be non-negative and sum to 1")]
    BadSplit,
    #[error("training split is empty")]
    EmptyTrain,
    #[error("evaluation split is empty")]
    EmptySplit,
    #[error("{0} is required by this classifier but was not provided")]
    MissingInput(&'static str),
    #[error("input has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    BadHyper(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub masked: MaskedSentence,
    /// True when the sentence originally held the target word.
    pub label: bool,
    /// Lemma of the word that was masked out.
    pub source_word: String,
    pub doc_id: String,
    pub sent_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeDataset {
    pub target: String,
    pub pos: Pos,
    pub distractors: DistractorSet,
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub seed: u64,
}

impl ClozeDataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self, which: Split) -> &[LabeledExample] {
        match which {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_pos: usize,
    pub n_per_distractor: usize,
    /// (train, dev, test) proportions.
    pub split: (f64, f64, f64),
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_pos: 1000,
            n_per_distractor: 100,
            split: (0.8, 0.1, 0.1),
            min_len: DEFAULT_MIN_LEN,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
        }
    }
}

/// Sample, mask and split a balanced cloze dataset.
///
/// Each word's occurrences are shuffled with a seed derived from the dataset
/// seed and the word; a sentence already taken by an earlier word (target
/// first, then distractors in order) is skipped. Each class is split on its
/// own so every split keeps the class ratio.
pub fn build_dataset(
    store: &SentenceStore,
    distractors: &DistractorSet,
    config: &DatasetConfig,
) -> Result<ClozeDataset, ClassifyError> {
    let (a, b, c) = config.split;
    if [a, b, c].iter().any(|p| *p < 0.0 || !p.is_finite()) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(ClassifyError::BadSplit);
    }
    let pos = distractors.pos;
    let target = distractors.target.to_lowercase();
    let mut used: BTreeSet<(String, String)> = BTreeSet::new();

    let mut draw =
        |word: &str, n: usize, label: bool| -> Result<Vec<LabeledExample>, ClassifyError> {
            let mut occ = store.occurrences(word, pos, config.min_len, config.max_len);
            occ.shuffle(&mut seeded(derive_seed(config.seed, word)));
            let mut picked = Vec::with_capacity(n);
            let mut available = 0;
            for o in occ {
                let id = (o.sentence.doc_id.clone(), o.sentence.sent_id.clone());
                if used.contains(&id) {
                    continue;
                }
                available += 1;
                if picked.len() == n {
                    continue;
                }
                used.insert(id);
                let normalized = normalize_numbers(o.sentence.clone());
                let masked =
                    mask_at(&normalized, o.position).expect("indexed position is in range");
                picked.push(LabeledExample {
                    masked,
                    label,
                    source_word: word.to_string(),
                    doc_id: o.sentence.doc_id.clone(),
                    sent_id: o.sentence.sent_id.clone(),
                });
            }
            if picked.len() < n {
                return Err(ClassifyError::InsufficientData {
                    word: word.to_string(),
                    needed: n,
                    available,
                });
            }
            Ok(picked)
        };

    let positives = draw(&target, config.n_pos, true)?;
    let mut negatives = Vec::new();
    for d in &distractors.distractors {
        negatives.extend(draw(d, config.n_per_distractor, false)?);
    }
    // Interleave distractors so each split sees all of them.
    negatives.shuffle(&mut seeded(derive_seed(config.seed, "negatives")));

    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for class in [positives, negatives] {
        let n = class.len() as f64;
        let n_train = round(n * a) as usize;
        let n_dev = (round(n * b) as usize).min(class.len() - n_train);
        let mut it = class.into_iter();
        train.extend(it.by_ref().take(n_train));
        dev.extend(it.by_ref().take(n_dev));
        test.extend(it);
    }
    let mut rng = seeded(derive_seed(config.seed, "splits"));
    train.shuffle(&mut rng);
    dev.shuffle(&mut rng);
    test.shuffle(&mut rng);

    Ok(ClozeDataset {
        target,
        pos,
        distractors: distractors.clone(),
        train,
        dev,
        test,
        seed: config.seed,
    })
}

/// Side inputs a classifier may need besides the masked tokens.
#[derive(Clone, Copy, Default)]
pub struct FeatureSource<'a> {
    pub target: &'a str,
    pub distractors: &'a [String],
    pub lm: Option<&'a TrigramLm>,
    /// Word vectors that fillers are compared against.
    pub vectors: Option<&'a VectorStore>,
    pub encoder: Option<&'a dyn ContextEncoder>,
}

impl<'a> FeatureSource<'a> {
    pub fn new(target: &'a str, distractors: &'a [String]) -> Self {
        Self {
            target,
            distractors,
            ..Self::default()
        }
    }

    pub fn with_lm(mut self, lm: &'a TrigramLm) -> Self {
        self.lm = Some(lm);
        self
    }

    pub fn with_vectors(
        mut self,
        vectors: &'a VectorStore,
        encoder: &'a dyn ContextEncoder,
    ) -> Self {
        self.vectors = Some(vectors);
        self.encoder = Some(encoder);
        self
    }

    fn distractor_refs(&self) -> Vec<&str> {
        self.distractors.iter().map(String::as_str).collect()
    }

    pub fn context(&self, masked: &MaskedSentence) -> Result<ContextVector, ClassifyError> {
        let encoder = self
            .encoder
            .ok_or(ClassifyError::MissingInput("context encoder"))?;
        Ok(encoder.encode(masked))
    }

    /// (LM rank proportion, target similarity, mean distractor similarity).
    pub fn linguistic_features(&self, masked: &MaskedSentence) -> Result<[f64; 3], ClassifyError> {
        let lm = self
            .lm
            .ok_or(ClassifyError::MissingInput("language model"))?;
        let vectors = self
            .vectors
            .ok_or(ClassifyError::MissingInput("word vectors"))?;
        let ds = self.distractor_refs();
        let rank = lm_rank_feature(lm, masked, self.target, &ds);
        let ctx = self.context(masked)?;
        let (sim_t, sim_d) = similarity_features(&ctx, self.target, &ds, vectors);
        Ok([rank, sim_t, sim_d])
    }

    /// Rank of the target among target + distractors by context similarity.
    pub fn filler_rank(&self, masked: &MaskedSentence) -> Result<usize, ClassifyError> {
        let vectors = self
            .vectors
            .ok_or(ClassifyError::MissingInput("word vectors"))?;
        let ctx = self.context(masked)?;
        Ok(filler_rank(
            &ctx,
            self.target,
            &self.distractor_refs(),
            vectors,
        ))
    }
}

pub trait ClozeClassifier {
    /// Probability that the masked sentence belongs to the target class.
    fn predict_proba(
        &self,
        masked: &MaskedSentence,
        source: &FeatureSource<'_>,
    ) -> Result<f64, ClassifyError>;
}

/// Fraction of examples where `p >= 0.5` agrees with the label.
pub fn evaluate_accuracy<C: ClozeClassifier + ?Sized>(
    model: &C,
    split: &[LabeledExample],
    source: &FeatureSource<'_>,
) -> Result<f64, ClassifyError> {
    if split.is_empty() {
        return Err(ClassifyError::EmptySplit);
    }
    let mut correct = 0usize;
    for ex in split {
        let p = model.predict_proba(&ex.masked, source)?;
        if (p >= 0.5) == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

/// Context-similarity ranking baseline, mapped to `[0, 1]`.
///
/// Rank 1 of `n` fillers maps to 1 and rank `n` to 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct RankBaseline;

pub fn rank_to_score(rank: usize, n_fillers: usize) -> f64 {
    if n_fillers <= 1 {
        return 1.0;
    }
    1.0 - (rank.saturating_sub(1)) as f64 / (n_fillers - 1) as f64
}

impl ClozeClassifier for RankBaseline {
    fn predict_proba(
        &self,
        masked: &MaskedSentence,
        source: &FeatureSource<'_>,
    ) -> Result<f64, ClassifyError> {
        let rank = source.filler_rank(masked)?;
        Ok(rank_to_score(rank, source.distractors.len() + 1))
    }
}

/// Any of the three trained classifiers.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    BagNgram(BagNgramModel),
    FeatureLr(FeatureLrModel),
    ContextFfnn(ContextFfnnModel),
}

impl ClozeClassifier for Classifier {
    fn predict_proba(
        &self,
        masked: &MaskedSentence,
        source: &FeatureSource<'_>,
    ) -> Result<f64, ClassifyError> {
        match self {
            Classifier::BagNgram(m) => m.predict_proba(masked, source),
            Classifier::FeatureLr(m) => m.predict_proba(masked, source),
            Classifier::ContextFfnn(m) => m.predict_proba(masked, source),
        }
    }
}

pub(crate) fn split_labels(split: &[LabeledExample]) -> Vec<bool> {
    split.iter().map(|e| e.label).collect()
}
