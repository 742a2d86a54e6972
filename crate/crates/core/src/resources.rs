//! Lexical resources used by distractor selection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Pos;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResourceError {
    #[error("n-gram of order {0} is not supported (expected 3, 4 or 5)")]
    UnsupportedOrder(usize),
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
}

/// One word of an n-gram. Forms are stored lowercased.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaggedWord {
    pub form: String,
    pub pos: Pos,
}

impl TaggedWord {
    pub fn new(form: &str, pos: Pos) -> Self {
        Self {
            form: form.to_lowercase(),
            pos,
        }
    }
}

/// Minimum counts per n-gram order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinCounts {
    pub trigram: u64,
    pub fourgram: u64,
    pub fivegram: u64,
}

impl Default for MinCounts {
    fn default() -> Self {
        Self {
            trigram: 40,
            fourgram: 20,
            fivegram: 5,
        }
    }
}

impl MinCounts {
    pub const ALL_ONE: MinCounts = MinCounts {
        trigram: 1,
        fourgram: 1,
        fivegram: 1,
    };

    pub fn for_order(&self, order: usize) -> Option<u64> {
        match order {
            3 => Some(self.trigram),
            4 => Some(self.fourgram),
            5 => Some(self.fivegram),
            _ => None,
        }
    }
}

/// Counted 3-, 4- and 5-grams of (form, pos) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramTable {
    entries: BTreeMap<Vec<TaggedWord>, u64>,
}

impl NgramTable {
    /// Build a table keeping only rows at or above the per-order minimum.
    ///
    /// Repeated n-grams accumulate their counts before thresholding.
    pub fn from_rows<I>(rows: I, min_counts: &MinCounts) -> Result<Self, ResourceError>
    where
        I: IntoIterator<Item = (Vec<TaggedWord>, u64)>,
    {
        let mut summed: BTreeMap<Vec<TaggedWord>, u64> = BTreeMap::new();
        for (gram, count) in rows {
            if min_counts.for_order(gram.len()).is_none() {
                return Err(ResourceError::UnsupportedOrder(gram.len()));
            }
            if count == 0 {
                return Err(ResourceError::ZeroCount);
            }
            *summed.entry(gram).or_default() += count;
        }
        summed.retain(|gram, count| *count >= min_counts.for_order(gram.len()).unwrap_or(u64::MAX));
        Ok(Self { entries: summed })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, gram: &[TaggedWord]) -> Option<u64> {
        self.entries.get(gram).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[TaggedWord], u64)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }
}

/// Lowercased word form to corpus count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreqTable {
    counts: BTreeMap<String, u64>,
}

impl FreqTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a count; returns the previous count when the word was present.
    pub fn insert(&mut self, word: &str, count: u64) -> Result<Option<u64>, ResourceError> {
        if count == 0 {
            return Err(ResourceError::ZeroCount);
        }
        Ok(self.counts.insert(word.to_lowercase(), count))
    }

    /// `None` for absent words, which is distinct from any count.
    pub fn get(&self, word: &str) -> Option<u64> {
        self.counts.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Synonym,
    Hyponym,
    Hypernym,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Synonym => "synonym",
            Relation::Hyponym => "hyponym",
            Relation::Hypernym => "hypernym",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = ResourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synonym" => Ok(Relation::Synonym),
            "hyponym" => Ok(Relation::Hyponym),
            "hypernym" => Ok(Relation::Hypernym),
            other => Err(ResourceError::UnknownRelation(other.to_string())),
        }
    }
}

type LemmaKey = (String, Pos);

/// Direct synonym, hyponym and hypernym edges keyed by lowercased (lemma, pos).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationSet {
    edges: BTreeMap<(LemmaKey, Relation), BTreeSet<String>>,
}

impl RelationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one edge. Self-pairs are dropped and reported as `false`.
    pub fn insert(&mut self, lemma: &str, pos: Pos, relation: Relation, related: &str) -> bool {
        let (lemma, related) = (lemma.to_lowercase(), related.to_lowercase());
        if lemma == related {
            return false;
        }
        self.edges
            .entry(((lemma, pos), relation))
            .or_default()
            .insert(related);
        true
    }

    fn direct(&self, lemma: &str, pos: Pos, relation: Relation) -> Option<&BTreeSet<String>> {
        self.edges.get(&((lemma.to_string(), pos), relation))
    }

    /// Union of direct synonyms, hyponyms and hypernyms.
    pub fn related(&self, lemma: &str, pos: Pos) -> BTreeSet<String> {
        self.related_within(lemma, pos, 1)
    }

    /// Synonyms plus hyponyms and hypernyms reached within `depth` steps
    /// along the same relation. `depth = 0` yields synonyms only.
    pub fn related_within(&self, lemma: &str, pos: Pos, depth: usize) -> BTreeSet<String> {
        let key = lemma.to_lowercase();
        let mut out = self
            .direct(&key, pos, Relation::Synonym)
            .cloned()
            .unwrap_or_default();
        for relation in [Relation::Hyponym, Relation::Hypernym] {
            let mut frontier: BTreeSet<String> = BTreeSet::new();
            frontier.insert(key.clone());
            let mut seen = frontier.clone();
            for _ in 0..depth {
                let mut next = BTreeSet::new();
                for word in &frontier {
                    if let Some(words) = self.direct(word, pos, relation) {
                        for w in words {
                            if seen.insert(w.clone()) {
                                next.insert(w.clone());
                            }
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                out.extend(next.iter().cloned());
                frontier = next;
            }
        }
        out.remove(&key);
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }
}
