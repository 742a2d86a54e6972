//! Sentence selection by classifier probability and embedding fine-tuning.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Pos, Sentence};
use crate::rng::seeded;
use crate::stats::StatsError;
use crate::vectors::VectorError;

pub mod experiment;
pub mod sgns;

pub use experiment::{
    frequency_polysemy_analysis, run_regime, run_selection_experiment, ExperimentReport,
    FrequencyPolysemy, Regime, RegimeSizes, WordPool, WordRow,
};
pub use sgns::{
    eval_similarity, fine_tune, init_sgns, sentence_forms, sgns_train, SgnsModel, SgnsParams,
};

/// Replacement token for the target in fine-tuning sentences.
pub const TARGET_NEW: &str = "target_word_new";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurateError {
    #[error("pool holds {available} sentences, {requested} requested")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("{doc_id}/{sent_id} position {position} does not hold {lemma}/{pos}")]
    NotTarget {
        doc_id: String,
        sent_id: String,
        position: usize,
        lemma: String,
        pos: Pos,
    },
    #[error("{0:?} has no vector")]
    MissingWord(String),
    #[error("invalid parameter: {0}")]
    BadParams(&'static str),
    #[error("no fine-tuning sentences")]
    NoSentences,
    #[error("unknown selection mode {0:?}")]
    UnknownMode(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A pool sentence with the target position and classifier probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub sentence: Sentence,
    pub position: usize,
    pub prob: f64,
}

impl ScoredSentence {
    pub fn new(sentence: Sentence, position: usize, prob: f64) -> Result<Self, CurateError> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(CurateError::BadProbability(prob));
        }
        Ok(Self {
            sentence,
            position,
            prob,
        })
    }

    fn key(&self) -> (&str, &str, usize) {
        (&self.sentence.doc_id, &self.sentence.sent_id, self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Top,
    Bottom,
    Random,
    TopPlusBottom,
    RandomPlusBottom,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Top => "top",
            SelectionMode::Bottom => "bottom",
            SelectionMode::Random => "random",
            SelectionMode::TopPlusBottom => "top_plus_bottom",
            SelectionMode::RandomPlusBottom => "random_plus_bottom",
        }
    }

    /// Pool size the mode requires.
    pub fn required(self, n: usize, m: usize) -> usize {
        match self {
            SelectionMode::Top | SelectionMode::Bottom | SelectionMode::Random => n,
            SelectionMode::TopPlusBottom => 2 * n,
            SelectionMode::RandomPlusBottom => n + m,
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionMode {
    type Err = CurateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SelectionMode::Top,
            SelectionMode::Bottom,
            SelectionMode::Random,
            SelectionMode::TopPlusBottom,
            SelectionMode::RandomPlusBottom,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| CurateError::UnknownMode(s.to_string()))
    }
}

/// Pool indices from lowest to highest probability: the reverse of
/// [`descending`], so top and bottom never overlap on ties.
fn ascending(pool: &[ScoredSentence]) -> Vec<usize> {
    let mut idx = descending(pool);
    idx.reverse();
    idx
}

/// Pool indices from highest to lowest probability, ties in id order.
fn descending(pool: &[ScoredSentence]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.sort_by(|&a, &b| {
        pool[b]
            .prob
            .total_cmp(&pool[a].prob)
            .then_with(|| pool[a].key().cmp(&pool[b].key()))
    });
    idx
}

/// Seeded sample of `n` indices, drawn from the pool in id order.
fn sample(pool: &[ScoredSentence], n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.sort_by(|&a, &b| pool[a].key().cmp(&pool[b].key()));
    idx.shuffle(&mut seeded(seed));
    idx.truncate(n);
    idx
}

/// Pick sentences from a scored pool.
///
/// `n` sizes the top, bottom and random parts; `m` is the bottom part of
/// `RandomPlusBottom`. Unions keep the first occurrence of a sentence.
pub fn select_sentences(
    pool: &[ScoredSentence],
    mode: SelectionMode,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<ScoredSentence>, CurateError> {
    let requested = mode.required(n, m);
    if pool.len() < requested {
        return Err(CurateError::PoolTooSmall {
            requested,
            available: pool.len(),
        });
    }
    let picked: Vec<usize> = match mode {
        SelectionMode::Top => descending(pool).into_iter().take(n).collect(),
        SelectionMode::Bottom => ascending(pool).into_iter().take(n).collect(),
        SelectionMode::Random => sample(pool, n, seed),
        SelectionMode::TopPlusBottom => {
            let mut v: Vec<usize> = descending(pool).into_iter().take(n).collect();
            v.extend(ascending(pool).into_iter().take(n));
            v
        }
        SelectionMode::RandomPlusBottom => {
            let mut v = sample(pool, n, seed);
            v.extend(ascending(pool).into_iter().take(m));
            v
        }
    };
    let mut seen = BTreeSet::new();
    Ok(picked
        .into_iter()
        .filter(|i| seen.insert(*i))
        .map(|i| pool[i].clone())
        .collect())
}

/// Replace the target token (form and lemma) by [`TARGET_NEW`].
pub fn retarget(
    sentences: &[ScoredSentence],
    lemma: &str,
    pos: Pos,
) -> Result<Vec<Sentence>, CurateError> {
    let lemma = lemma.to_lowercase();
    sentences
        .iter()
        .map(|s| {
            let holds = s
                .sentence
                .tokens
                .get(s.position)
                .is_some_and(|t| t.pos == pos && t.lemma.to_lowercase() == lemma);
            if !holds {
                return Err(CurateError::NotTarget {
                    doc_id: s.sentence.doc_id.clone(),
                    sent_id: s.sentence.sent_id.clone(),
                    position: s.position,
                    lemma: lemma.clone(),
                    pos,
                });
            }
            let mut out = s.sentence.clone();
            out.tokens[s.position].form = TARGET_NEW.to_string();
            out.tokens[s.position].lemma = TARGET_NEW.to_string();
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn sent(id: usize, words: &[&str]) -> Sentence {
        let tokens = words
            .iter()
            .map(|w| Token::new(*w, *w, if *w == "bank" { Pos::Noun } else { Pos::Other }).unwrap())
            .collect();
        Sentence::new("d", format!("{id:03}"), tokens).unwrap()
    }

    fn pool(probs: &[f64]) -> Vec<ScoredSentence> {
        probs
            .iter()
            .enumerate()
            .map(|(i, p)| ScoredSentence::new(sent(i, &["the", "bank", "fell"]), 1, *p).unwrap())
            .collect()
    }

    fn probs(v: &[ScoredSentence]) -> Vec<f64> {
        v.iter().map(|s| s.prob).collect()
    }

    #[test]
    fn three_sentence_pool() {
        let p = pool(&[0.5, 0.9, 0.1]);
        assert_eq!(
            probs(&select_sentences(&p, SelectionMode::Top, 1, 0, 0).unwrap()),
            [0.9]
        );
        assert_eq!(
            probs(&select_sentences(&p, SelectionMode::Bottom, 1, 0, 0).unwrap()),
            [0.1]
        );
        assert_eq!(
            probs(&select_sentences(&p, SelectionMode::TopPlusBottom, 1, 0, 0).unwrap()),
            [0.9, 0.1]
        );
        assert_eq!(
            select_sentences(&p, SelectionMode::TopPlusBottom, 2, 0, 0),
            Err(CurateError::PoolTooSmall {
                requested: 4,
                available: 3
            })
        );
    }

    #[test]
    fn ties_follow_ids() {
        let p = pool(&[0.5, 0.5, 0.5, 0.2]);
        let top = select_sentences(&p, SelectionMode::Top, 2, 0, 0).unwrap();
        assert_eq!(top[0].sentence.sent_id, "000");
        assert_eq!(top[1].sentence.sent_id, "001");
        let bottom = select_sentences(&p, SelectionMode::Bottom, 2, 0, 0).unwrap();
        assert_eq!(bottom[0].prob, 0.2);
        assert_eq!(bottom[1].sentence.sent_id, "002");
    }

    #[test]
    fn random_plus_bottom_dedups() {
        let p = pool(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let all = select_sentences(&p, SelectionMode::RandomPlusBottom, 4, 1, 3).unwrap();
        assert!(all.len() == 4 || all.len() == 5);
        assert!(all.iter().any(|s| s.prob == 0.1));
        let again = select_sentences(&p, SelectionMode::RandomPlusBottom, 4, 1, 3).unwrap();
        assert_eq!(all, again);
    }

    #[test]
    fn probability_is_range_checked() {
        assert_eq!(
            ScoredSentence::new(sent(0, &["bank"]), 0, 1.5),
            Err(CurateError::BadProbability(1.5))
        );
        assert!(ScoredSentence::new(sent(0, &["bank"]), 0, f64::NAN).is_err());
    }

    #[test]
    fn retarget_once_only() {
        let p = pool(&[0.3]);
        let once = retarget(&p, "bank", Pos::Noun).unwrap();
        let forms: Vec<&str> = once[0].forms().collect();
        assert_eq!(forms, ["the", TARGET_NEW, "fell"]);
        let again = vec![ScoredSentence::new(once[0].clone(), 1, 0.3).unwrap()];
        assert!(matches!(
            retarget(&again, "bank", Pos::Noun),
            Err(CurateError::NotTarget { position: 1, .. })
        ));
        assert!(retarget(&p, "bank", Pos::Verb).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [
            SelectionMode::Top,
            SelectionMode::Bottom,
            SelectionMode::Random,
            SelectionMode::TopPlusBottom,
            SelectionMode::RandomPlusBottom,
        ] {
            assert_eq!(mode.as_str().parse::<SelectionMode>().unwrap(), mode);
        }
        assert!("middle".parse::<SelectionMode>().is_err());
    }

    proptest! {
        #[test]
        fn top_and_bottom_partition_extremes(
            raw in prop::collection::vec(0u8..20, 2..40),
            frac in 0.0f64..0.5,
        ) {
            let p = pool(&raw.iter().map(|x| *x as f64 / 20.0).collect::<Vec<_>>());
            let n = ((p.len() as f64 * frac) as usize).max(1).min(p.len() / 2);
            let top = select_sentences(&p, SelectionMode::Top, n, 0, 0).unwrap();
            let bottom = select_sentences(&p, SelectionMode::Bottom, n, 0, 0).unwrap();
            let min_top = top.iter().map(|s| s.prob).fold(f64::INFINITY, f64::min);
            let max_bottom = bottom.iter().map(|s| s.prob).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(max_bottom <= min_top);
            let both = select_sentences(&p, SelectionMode::TopPlusBottom, n, 0, 0).unwrap();
            prop_assert_eq!(both.len(), 2 * n);
        }

        #[test]
        fn retarget_preserves_length(words in prop::collection::vec("[a-z]{1,6}", 1..12), at in 0usize..12) {
            let at = at % (words.len() + 1);
            let mut w: Vec<&str> = words.iter().map(String::as_str).collect();
            w.insert(at, "bank");
            let s = ScoredSentence::new(sent(0, &w), at, 0.5).unwrap();
            let out = retarget(core::slice::from_ref(&s), "bank", Pos::Noun).unwrap();
            prop_assert_eq!(out[0].len(), s.sentence.len());
            for (i, (a, b)) in out[0].tokens.iter().zip(&s.sentence.tokens).enumerate() {
                if i != at {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
