//! Backoff trigram language model.
//!
//! Scores follow the usual ARPA backoff rule in log10 space:
//!
//! ```text
//! score(w | a b) = P3(a b w)                    if the trigram exists
//!                = bo(a b) + score(w | b)       otherwise (bo = 0 if (a b) is absent)
//! score(w | b)   = P2(b w)                      if the bigram exists
//!                = bo(b) + P1(w)                otherwise
//! ```
//!
//! Unknown words map to `<unk>` when the model has it and otherwise get a
//! unigram log-probability of [`UNKNOWN_FLOOR`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{MaskedSentence, SentenceStore};
use crate::math::log10;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";
pub const UNKNOWN_FLOOR: f64 = -7.0;
/// Log10 value written for zero probabilities (ARPA convention).
pub const LOG_ZERO: f64 = -99.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LmError {
    #[error("n-gram refers to {0:?}, which has no unigram entry")]
    UnknownWord(String),
    #[error("log probability {value} for {ngram:?} is positive or not finite")]
    BadLogProb { ngram: String, value: f64 },
    #[error("backoff weight {value} for {ngram:?} is not finite")]
    BadBackoff { ngram: String, value: f64 },
    #[error("duplicate n-gram {0:?}")]
    Duplicate(String),
    #[error("filler list is empty")]
    NoFillers,
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("interpolation weights must be non-negative and sum to 1")]
    BadLambdas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    logp: f64,
    backoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigramLm {
    words: Vec<String>,
    ids: BTreeMap<String, u32>,
    unigrams: Vec<Entry>,
    bigrams: BTreeMap<[u32; 2], Entry>,
    trigrams: BTreeMap<[u32; 3], f64>,
    unk: Option<u32>,
}

/// Collects ARPA-style entries and validates them into a [`TrigramLm`].
#[derive(Debug, Default, Clone)]
pub struct LmBuilder {
    unigrams: Vec<(String, f64, f64)>,
    bigrams: Vec<([String; 2], f64, f64)>,
    trigrams: Vec<([String; 3], f64)>,
}

fn check_logp(ngram: &str, value: f64) -> Result<(), LmError> {
    if !value.is_finite() || value > 0.0 {
        return Err(LmError::BadLogProb {
            ngram: ngram.to_string(),
            value,
        });
    }
    Ok(())
}

fn check_backoff(ngram: &str, value: f64) -> Result<(), LmError> {
    if !value.is_finite() {
        return Err(LmError::BadBackoff {
            ngram: ngram.to_string(),
            value,
        });
    }
    Ok(())
}

impl LmBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unigram(&mut self, word: &str, logp: f64, backoff: f64) -> &mut Self {
        self.unigrams.push((word.to_string(), logp, backoff));
        self
    }

    pub fn bigram(&mut self, words: [&str; 2], logp: f64, backoff: f64) -> &mut Self {
        self.bigrams
            .push((words.map(str::to_string), logp, backoff));
        self
    }

    pub fn trigram(&mut self, words: [&str; 3], logp: f64) -> &mut Self {
        self.trigrams.push((words.map(str::to_string), logp));
        self
    }

    pub fn build(self) -> Result<TrigramLm, LmError> {
        let mut words = Vec::with_capacity(self.unigrams.len());
        let mut ids = BTreeMap::new();
        let mut unigrams = Vec::with_capacity(self.unigrams.len());
        for (word, logp, backoff) in self.unigrams {
            check_logp(&word, logp)?;
            check_backoff(&word, backoff)?;
            if ids.contains_key(&word) {
                return Err(LmError::Duplicate(word));
            }
            ids.insert(word.clone(), words.len() as u32);
            words.push(word);
            unigrams.push(Entry { logp, backoff });
        }
        let lookup = |w: &String| {
            ids.get(w)
                .copied()
                .ok_or_else(|| LmError::UnknownWord(w.clone()))
        };

        let mut bigrams = BTreeMap::new();
        for (gram, logp, backoff) in self.bigrams {
            let label = gram.join(" ");
            check_logp(&label, logp)?;
            check_backoff(&label, backoff)?;
            let key = [lookup(&gram[0])?, lookup(&gram[1])?];
            if bigrams.insert(key, Entry { logp, backoff }).is_some() {
                return Err(LmError::Duplicate(label));
            }
        }
        let mut trigrams = BTreeMap::new();
        for (gram, logp) in self.trigrams {
            let label = gram.join(" ");
            check_logp(&label, logp)?;
            let key = [lookup(&gram[0])?, lookup(&gram[1])?, lookup(&gram[2])?];
            if trigrams.insert(key, logp).is_some() {
                return Err(LmError::Duplicate(label));
            }
        }
        let unk = ids.get(UNK).copied();
        Ok(TrigramLm {
            words,
            ids,
            unigrams,
            bigrams,
            trigrams,
            unk,
        })
    }
}

impl TrigramLm {
    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    /// Entry counts per order: (unigrams, bigrams, trigrams).
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.unigrams.len(), self.bigrams.len(), self.trigrams.len())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ids.contains_key(word)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Unigram entries as (word, log10 p, log10 backoff).
    pub fn unigram_entries(&self) -> impl Iterator<Item = (&str, f64, f64)> {
        self.words
            .iter()
            .zip(&self.unigrams)
            .map(|(w, e)| (w.as_str(), e.logp, e.backoff))
    }

    pub fn bigram_entries(&self) -> impl Iterator<Item = ([&str; 2], f64, f64)> {
        self.bigrams.iter().map(|(k, e)| {
            (
                k.map(|id| self.words[id as usize].as_str()),
                e.logp,
                e.backoff,
            )
        })
    }

    pub fn trigram_entries(&self) -> impl Iterator<Item = ([&str; 3], f64)> {
        self.trigrams
            .iter()
            .map(|(k, p)| (k.map(|id| self.words[id as usize].as_str()), *p))
    }

    fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied().or(self.unk)
    }

    fn unigram_score(&self, w: Option<u32>) -> f64 {
        w.map_or(UNKNOWN_FLOOR, |id| self.unigrams[id as usize].logp)
    }

    fn bigram_score(&self, b: Option<u32>, w: Option<u32>) -> f64 {
        if let (Some(b), Some(w)) = (b, w) {
            if let Some(e) = self.bigrams.get(&[b, w]) {
                return e.logp;
            }
            return self.unigrams[b as usize].backoff + self.unigram_score(Some(w));
        }
        let bo = b.map_or(0.0, |b| self.unigrams[b as usize].backoff);
        bo + self.unigram_score(w)
    }

    fn trigram_score(&self, a: Option<u32>, b: Option<u32>, w: Option<u32>) -> f64 {
        if let (Some(a), Some(b)) = (a, b) {
            if let Some(w) = w {
                if let Some(p) = self.trigrams.get(&[a, b, w]) {
                    return *p;
                }
            }
            let bo = self.bigrams.get(&[a, b]).map_or(0.0, |e| e.backoff);
            return bo + self.bigram_score(Some(b), w);
        }
        self.bigram_score(b, w)
    }

    /// Log10 probability of `word` given up to the last two words of `history`.
    pub fn score(&self, history: &[&str], word: &str) -> f64 {
        let w = self.id(word);
        match history {
            [] => self.unigram_score(w),
            [b] => self.bigram_score(self.id(b), w),
            [.., a, b] => self.trigram_score(self.id(a), self.id(b), w),
        }
    }

    /// Log10 probability of a whole sentence with `<s>`/`</s>` padding.
    pub fn sentence_score(&self, words: &[&str]) -> f64 {
        let padded = pad(words);
        (1..padded.len())
            .map(|j| self.score(&padded[j.saturating_sub(2)..j], padded[j]))
            .sum()
    }
}

fn pad<'a>(words: &[&'a str]) -> Vec<&'a str> {
    let mut padded = Vec::with_capacity(words.len() + 2);
    padded.push(BOS);
    padded.extend_from_slice(words);
    padded.push(EOS);
    padded
}

/// Score each filler in the slot using only the trigrams that cover it.
///
/// Terms of the sentence score that do not involve the slot are the same for
/// every filler, so the ranking equals the full-sentence ranking.
pub fn slot_scores(
    lm: &TrigramLm,
    masked: &MaskedSentence,
    fillers: &[&str],
) -> Result<Vec<(String, f64)>, LmError> {
    if fillers.is_empty() {
        return Err(LmError::NoFillers);
    }
    let slot = masked.slot_index + 1;
    let mut padded: Vec<&str> = pad(&masked.tokens.iter().map(String::as_str).collect::<Vec<_>>());
    let last = (slot + 2).min(padded.len() - 1);
    let mut out = Vec::with_capacity(fillers.len());
    for &filler in fillers {
        padded[slot] = filler;
        let total = (slot..=last)
            .map(|j| lm.score(&padded[j.saturating_sub(2)..j], padded[j]))
            .sum();
        out.push((filler.to_string(), total));
    }
    Ok(out)
}

/// Fraction of distractors scoring strictly above the target in the slot.
///
/// An empty distractor list yields 0.
pub fn lm_rank_feature(
    lm: &TrigramLm,
    masked: &MaskedSentence,
    target: &str,
    distractors: &[&str],
) -> f64 {
    if distractors.is_empty() {
        return 0.0;
    }
    let mut fillers = Vec::with_capacity(distractors.len() + 1);
    fillers.push(target);
    fillers.extend_from_slice(distractors);
    let Ok(scores) = slot_scores(lm, masked, &fillers) else {
        return 0.0;
    };
    rank_fraction(scores[0].1, scores[1..].iter().map(|(_, s)| *s))
}

pub(crate) fn rank_fraction(target: f64, others: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = others.len();
    let above = others.filter(|s| *s > target).count();
    above as f64 / n as f64
}

/// Interpolation weights and add-k constant for [`train_trigram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// (unigram, bigram, trigram) weights.
    pub lambdas: (f64, f64, f64),
    pub add_k: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambdas: (0.1, 0.3, 0.6),
            add_k: 0.5,
        }
    }
}

fn clamp_log(p: f64) -> f64 {
    if p <= 0.0 {
        LOG_ZERO
    } else {
        log10(p).max(LOG_ZERO)
    }
}

/// Train an interpolated trigram model on the store's surface forms.
pub fn train_trigram(store: &SentenceStore, config: TrainConfig) -> Result<TrigramLm, LmError> {
    let sentences: Vec<Vec<&str>> = store
        .sentences()
        .iter()
        .map(|s| s.forms().collect())
        .collect();
    train_trigram_on(&sentences, config)
}

/// Interpolated model `P(w|a b) = l3 ML3 + l2 ML2 + l1 P1` with add-k on the
/// unigram level, stored exactly in backoff form.
///
/// Let `S = l1 + l2`. The bigram level holds `(l2 ML2 + l1 P1) / S` for seen
/// bigrams with `bo(b) = l1 / S`, and seen trigrams hold the full mixture with
/// `bo(a b) = S`. Every history seen in training then has a distribution that
/// sums to one, and sentence-initial words use the bigram level after `<s>`.
pub fn train_trigram_on<S: AsRef<str>>(
    sentences: &[Vec<S>],
    config: TrainConfig,
) -> Result<TrigramLm, LmError> {
    let (l1, l2, l3) = config.lambdas;
    if [l1, l2, l3].iter().any(|l| *l < 0.0 || !l.is_finite())
        || (l1 + l2 + l3 - 1.0).abs() > 1e-9
        || config.add_k < 0.0
    {
        return Err(LmError::BadLambdas);
    }
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(LmError::EmptyCorpus);
    }

    let mut uni: BTreeMap<&str, f64> = BTreeMap::new();
    let mut bi: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut bi_ctx: BTreeMap<&str, f64> = BTreeMap::new();
    let mut tri: BTreeMap<(&str, &str, &str), f64> = BTreeMap::new();
    let mut tri_ctx: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        let padded = pad(&s.iter().map(AsRef::as_ref).collect::<Vec<_>>());
        for j in 1..padded.len() {
            *uni.entry(padded[j]).or_default() += 1.0;
            *bi.entry((padded[j - 1], padded[j])).or_default() += 1.0;
            *bi_ctx.entry(padded[j - 1]).or_default() += 1.0;
            if j >= 2 {
                *tri.entry((padded[j - 2], padded[j - 1], padded[j]))
                    .or_default() += 1.0;
                *tri_ctx.entry((padded[j - 2], padded[j - 1])).or_default() += 1.0;
            }
        }
    }

    let total: f64 = uni.values().sum();
    let v = uni.len() as f64;
    let p1 =
        |w: &str| (uni.get(w).copied().unwrap_or(0.0) + config.add_k) / (total + config.add_k * v);
    let ml2 = |b: &str, w: &str| bi.get(&(b, w)).copied().unwrap_or(0.0) / bi_ctx[b];
    let lower = l1 + l2;
    let bigram_level = |b: &str, w: &str| {
        if lower > 0.0 {
            (l2 * ml2(b, w) + l1 * p1(w)) / lower
        } else {
            ml2(b, w)
        }
    };
    let bigram_backoff = if lower > 0.0 {
        clamp_log(l1 / lower)
    } else {
        LOG_ZERO
    };
    let trigram_backoff = clamp_log(lower);

    let mut builder = LmBuilder::new();
    let bos_backoff = if bi_ctx.contains_key(BOS) {
        bigram_backoff
    } else {
        0.0
    };
    builder.unigram(BOS, LOG_ZERO, bos_backoff);
    for &w in uni.keys() {
        let bo = if bi_ctx.contains_key(w) {
            bigram_backoff
        } else {
            0.0
        };
        builder.unigram(w, clamp_log(p1(w)), bo);
    }
    for &(b, w) in bi.keys() {
        let bo = if tri_ctx.contains_key(&(b, w)) {
            trigram_backoff
        } else {
            0.0
        };
        builder.bigram([b, w], clamp_log(bigram_level(b, w)), bo);
    }
    for (&(a, b, w), &count) in &tri {
        let p = l3 * count / tri_ctx[&(a, b)] + l2 * ml2(b, w) + l1 * p1(w);
        builder.trigram([a, b, w], clamp_log(p));
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{mask_at, Pos, Sentence, Token};
    use crate::math::pow;
    use alloc::vec;
    use alloc::vec::Vec;

    fn toy() -> TrigramLm {
        let mut b = LmBuilder::new();
        b.unigram(BOS, -99.0, -0.5)
            .unigram(EOS, -0.8, 0.0)
            .unigram("the", -0.30125, -0.1)
            .unigram("bank", -1.5, -0.3)
            .unigram("store", -1.7, -0.25)
            .bigram([BOS, "the"], -0.2, -0.15)
            .bigram(["the", "bank"], -1.0, -0.2)
            .bigram(["to", "the"], -0.1, 0.0)
            .trigram([BOS, "the", "bank"], -0.9);
        // "to" is absent from the unigrams above
        assert!(matches!(b.clone().build(), Err(LmError::UnknownWord(w)) if w == "to"));
        b.bigrams.retain(|(g, _, _)| g[0] != "to");
        b.build().unwrap()
    }

    #[test]
    fn stored_values_and_backoff_chain() {
        let lm = toy();
        assert_eq!(lm.score(&[], "the"), -0.30125);
        assert_eq!(lm.score(&[BOS, "the"], "bank"), -0.9);
        // trigram (x, the, bank) absent -> bo(x the) [absent = 0] + P2(the bank)
        assert_eq!(lm.score(&["bank", "the"], "bank"), -1.0);
        // bigram (bank store) absent -> bo(bank) + P1(store)
        assert!((lm.score(&["bank"], "store") - (-0.3 - 1.7)).abs() < 1e-12);
        // bo(<s> the) + P2(the bank) would apply for the missing (<s>, the, store)
        assert!((lm.score(&[BOS, "the"], "store") - (-0.15 + -0.1 + -1.7)).abs() < 1e-12);
    }

    #[test]
    fn backoff_example_minus_one_point_two() {
        let mut b = LmBuilder::new();
        b.unigram("a", -1.0, 0.0)
            .unigram("b", -1.0, 0.0)
            .unigram("c", -1.0, 0.0)
            .bigram(["a", "b"], -0.5, -0.2)
            .bigram(["b", "c"], -1.0, 0.0);
        let lm = b.build().unwrap();
        assert!((lm.score(&["a", "b"], "c") - -1.2).abs() < 1e-12);
    }

    #[test]
    fn unknown_words_use_floor_or_unk() {
        let lm = toy();
        assert_eq!(lm.score(&[], "zebra"), UNKNOWN_FLOOR);
        assert!((lm.score(&["bank"], "zebra") - (-0.3 + UNKNOWN_FLOOR)).abs() < 1e-12);
        let mut b = LmBuilder::new();
        b.unigram(UNK, -3.0, 0.0).unigram("x", -0.1, 0.0);
        let with_unk = b.build().unwrap();
        assert_eq!(with_unk.score(&["q", "r"], "zebra"), -3.0);
    }

    #[test]
    fn rejects_positive_logprob_and_duplicates() {
        let mut b = LmBuilder::new();
        b.unigram("x", 0.5, 0.0);
        assert!(matches!(b.build(), Err(LmError::BadLogProb { .. })));
        let mut b = LmBuilder::new();
        b.unigram("x", -0.5, 0.0).unigram("x", -0.4, 0.0);
        assert!(matches!(b.build(), Err(LmError::Duplicate(_))));
    }

    fn masked(words: &[&str], slot: usize) -> MaskedSentence {
        let tokens = words
            .iter()
            .map(|w| Token::new(*w, *w, Pos::Other).unwrap())
            .collect();
        mask_at(&Sentence::new("d", "1", tokens).unwrap(), slot).unwrap()
    }

    #[test]
    fn single_slot_sentence_scores_two_terms() {
        let lm = toy();
        let m = masked(&["bank"], 0);
        let s = slot_scores(&lm, &m, &["the"]).unwrap();
        let expected = lm.score(&[BOS], "the") + lm.score(&[BOS, "the"], EOS);
        assert!((s[0].1 - expected).abs() < 1e-12);
        assert_eq!(slot_scores(&lm, &m, &[]), Err(LmError::NoFillers));
    }

    #[test]
    fn slot_difference_matches_full_sentence_difference() {
        let lm = toy();
        let m = masked(&["the", "the", "bank", "the", "store", "bank"], 2);
        let fillers = ["bank", "store", "the", "zebra"];
        let slots = slot_scores(&lm, &m, &fillers).unwrap();
        let full: Vec<f64> = fillers
            .iter()
            .map(|f| lm.sentence_score(&m.filled(f)))
            .collect();
        for i in 0..fillers.len() {
            for j in 0..fillers.len() {
                let ds = slots[i].1 - slots[j].1;
                let df = full[i] - full[j];
                assert!((ds - df).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_feature_is_strict() {
        assert_eq!(rank_fraction(1.0, [0.0, 1.0, 2.0, 3.0].into_iter()), 0.5);
        assert_eq!(rank_fraction(5.0, [0.0, 1.0].into_iter()), 0.0);
        assert_eq!(rank_fraction(-5.0, [0.0, 1.0].into_iter()), 1.0);
    }

    #[test]
    fn ml_unigram_from_single_sentence() {
        let lm = train_trigram_on(
            &[vec!["a", "b"]],
            TrainConfig {
                lambdas: (1.0, 0.0, 0.0),
                add_k: 0.0,
            },
        )
        .unwrap();
        for w in ["a", "b", EOS] {
            assert!((pow(10.0, lm.score(&[], w)) - 1.0 / 3.0).abs() < 1e-12);
            assert!((pow(10.0, lm.score(&[BOS, "a"], w)) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn training_validates_inputs() {
        let empty: [Vec<&str>; 0] = [];
        assert_eq!(
            train_trigram_on(&empty, TrainConfig::default()),
            Err(LmError::EmptyCorpus)
        );
        let bad = TrainConfig {
            lambdas: (0.5, 0.5, 0.5),
            add_k: 0.0,
        };
        assert_eq!(
            train_trigram_on(&[vec!["a"]], bad),
            Err(LmError::BadLambdas)
        );
    }
}
