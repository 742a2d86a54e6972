//! Distractor selection: words that fill the target's n-gram slots, minus
//! lexically related words and words rarer than the target, sampled down to
//! a fixed count with the pinned LCG shuffle.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Pos;
use crate::resources::{FreqTable, NgramTable, RelationSet, TaggedWord};
use crate::rng::Lcg64;

pub const DEFAULT_DISTRACTORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistractorError {
    #[error("only {survivors} candidates survive filtering, {requested} requested")]
    InsufficientCandidates { survivors: usize, requested: usize },
}

/// How slot-sharing n-grams are matched against the target's n-grams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// Any word with the target's pos at a (order, position) where the
    /// target occurs in some n-gram.
    #[default]
    Positional,
    /// Additionally require the rest of the n-gram to equal one of the
    /// target's n-grams.
    SharedContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    Target,
    Relation,
    NoFrequency,
    Rarer { freq: u64, target_freq: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub word: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistractorSet {
    pub target: String,
    pub pos: Pos,
    pub distractors: Vec<String>,
    /// Candidates that survived filtering and were sampled from.
    pub pool_size: usize,
    pub seed: u64,
    pub filter_log: Vec<Rejection>,
}

fn is_target(word: &TaggedWord, lemma: &str, pos: Pos) -> bool {
    word.pos == pos && word.form == lemma
}

/// Words sharing an n-gram slot with the target.
pub fn candidate_fillers(
    lemma: &str,
    pos: Pos,
    ngrams: &NgramTable,
    rule: CandidateRule,
) -> BTreeSet<String> {
    let lemma = lemma.to_lowercase();
    let target_grams: Vec<(&[TaggedWord], usize)> = ngrams
        .iter()
        .flat_map(|(gram, _)| {
            gram.iter()
                .enumerate()
                .filter(|(_, w)| is_target(w, &lemma, pos))
                .map(move |(i, _)| (gram, i))
        })
        .collect();
    if target_grams.is_empty() {
        return BTreeSet::new();
    }

    let slots: BTreeSet<(usize, usize)> = target_grams.iter().map(|(g, i)| (g.len(), *i)).collect();
    let mut out = BTreeSet::new();
    for (gram, _) in ngrams.iter() {
        for (i, word) in gram.iter().enumerate() {
            if word.pos != pos || word.form == lemma || !slots.contains(&(gram.len(), i)) {
                continue;
            }
            let accepted = match rule {
                CandidateRule::Positional => true,
                CandidateRule::SharedContext => target_grams.iter().any(|(tg, ti)| {
                    *ti == i
                        && tg.len() == gram.len()
                        && tg
                            .iter()
                            .zip(gram)
                            .enumerate()
                            .all(|(k, (a, b))| k == i || a == b)
                }),
            };
            if accepted {
                out.insert(word.form.clone());
            }
        }
    }
    out
}

/// Filter `candidates` and sample `k` of them.
///
/// Survivors are sorted, shuffled with [`Lcg64`] seeded by `seed`, and the
/// first `k` kept. Candidates missing from `freqs` are rejected. A target
/// missing from `freqs` compares as frequency 0.
pub fn select_distractors(
    lemma: &str,
    pos: Pos,
    candidates: &BTreeSet<String>,
    relations: &RelationSet,
    freqs: &FreqTable,
    k: usize,
    seed: u64,
) -> Result<DistractorSet, DistractorError> {
    let lemma = lemma.to_lowercase();
    let related = relations.related(&lemma, pos);
    let target_freq = freqs.get(&lemma).unwrap_or(0);

    let mut survivors: Vec<String> = Vec::new();
    let mut filter_log = Vec::new();
    for word in candidates {
        let word_lc = word.to_lowercase();
        let reason = if word_lc == lemma {
            Some(RejectReason::Target)
        } else if related.contains(&word_lc) {
            Some(RejectReason::Relation)
        } else {
            match freqs.get(&word_lc) {
                None => Some(RejectReason::NoFrequency),
                Some(freq) if freq < target_freq => Some(RejectReason::Rarer { freq, target_freq }),
                Some(_) => None,
            }
        };
        match reason {
            Some(reason) => filter_log.push(Rejection {
                word: word.clone(),
                reason,
            }),
            None => survivors.push(word_lc),
        }
    }
    survivors.sort();
    survivors.dedup();

    if survivors.len() < k {
        return Err(DistractorError::InsufficientCandidates {
            survivors: survivors.len(),
            requested: k,
        });
    }
    let pool_size = survivors.len();
    Lcg64::new(seed).shuffle(&mut survivors);
    survivors.truncate(k);
    Ok(DistractorSet {
        target: lemma,
        pos,
        distractors: survivors,
        pool_size,
        seed,
        filter_log,
    })
}
