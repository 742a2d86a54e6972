//! Tagged sentences, the occurrence index, and masked views.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Placeholder written at the masked slot.
pub const TARGET: &str = "TARGET";
/// Replacement for numeric tokens.
pub const NUMBER: &str = "NUMBER";

/// Default sentence length bounds used when building datasets.
pub const DEFAULT_MIN_LEN: usize = 5;
pub const DEFAULT_MAX_LEN: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("token form must be non-empty")]
    EmptyForm,
    #[error("sentence {doc_id}/{sent_id} has no tokens")]
    EmptySentence { doc_id: String, sent_id: String },
    #[error("duplicate sentence id {doc_id}/{sent_id}")]
    DuplicateId { doc_id: String, sent_id: String },
    #[error("position {position} out of range for a {len}-token sentence")]
    OutOfBounds { position: usize, len: usize },
    #[error("unknown part-of-speech tag {0:?}")]
    UnknownPos(String),
}

/// Coarse part of speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 5] = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv, Pos::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Other => "OTHER",
        }
    }

    /// Content words are the ones that get indexed and can be targets.
    pub fn is_content(self) -> bool {
        !matches!(self, Pos::Other)
    }

    /// Map a Penn Treebank tag onto the coarse set.
    ///
    /// | Penn                          | coarse |
    /// |-------------------------------|--------|
    /// | NN NNS                        | NOUN   |
    /// | VB VBD VBG VBN VBP VBZ        | VERB   |
    /// | JJ JJR JJS                    | ADJ    |
    /// | RB RBR RBS                    | ADV    |
    /// | anything else (NNP, MD, ...)  | OTHER  |
    ///
    /// Proper nouns map to OTHER since they are never targets.
    pub fn from_penn(tag: &str) -> Pos {
        match tag {
            "NN" | "NNS" => Pos::Noun,
            "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => Pos::Verb,
            "JJ" | "JJR" | "JJS" => Pos::Adj,
            "RB" | "RBR" | "RBS" => Pos::Adv,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = CorpusError;

    /// Accepts the coarse names in any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NOUN" => Ok(Pos::Noun),
            "VERB" => Ok(Pos::Verb),
            "ADJ" => Ok(Pos::Adj),
            "ADV" => Ok(Pos::Adv),
            "OTHER" => Ok(Pos::Other),
            _ => Err(CorpusError::UnknownPos(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub pos: Pos,
}

impl Token {
    pub fn new(
        form: impl Into<String>,
        lemma: impl Into<String>,
        pos: Pos,
    ) -> Result<Self, CorpusError> {
        let form = form.into();
        if form.is_empty() {
            return Err(CorpusError::EmptyForm);
        }
        Ok(Self {
            form,
            lemma: lemma.into(),
            pos,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_id: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(
        doc_id: impl Into<String>,
        sent_id: impl Into<String>,
        tokens: Vec<Token>,
    ) -> Result<Self, CorpusError> {
        let (doc_id, sent_id) = (doc_id.into(), sent_id.into());
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence { doc_id, sent_id });
        }
        Ok(Self {
            doc_id,
            sent_id,
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    pub fn id(&self) -> (&str, &str) {
        (&self.doc_id, &self.sent_id)
    }
}

/// Digits, commas and periods with an optional leading sign; at least one digit.
pub fn is_numeric(form: &str) -> bool {
    let body = form.strip_prefix(['+', '-']).unwrap_or(form);
    !body.is_empty()
        && body
            .chars()
            .all(|c| c.is_ascii_digit() || c == ',' || c == '.')
        && body.chars().any(|c| c.is_ascii_digit())
}

/// Replace every numeric token by `NUMBER` (form and lemma).
pub fn normalize_numbers(mut sentence: Sentence) -> Sentence {
    for token in &mut sentence.tokens {
        if is_numeric(&token.form) {
            token.form = NUMBER.to_string();
            token.lemma = NUMBER.to_string();
        }
    }
    sentence
}

/// A sentence with exactly one slot replaced by [`TARGET`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSentence {
    pub tokens: Vec<String>,
    pub slot_index: usize,
    pub original_form: String,
}

impl MaskedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token forms with `filler` placed in the slot.
    pub fn filled<'a>(&'a self, filler: &'a str) -> Vec<&'a str> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == self.slot_index {
                    filler
                } else {
                    t.as_str()
                }
            })
            .collect()
    }
}

pub fn mask_at(sentence: &Sentence, position: usize) -> Result<MaskedSentence, CorpusError> {
    let len = sentence.len();
    if position >= len {
        return Err(CorpusError::OutOfBounds { position, len });
    }
    let tokens = sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i == position {
                TARGET.to_string()
            } else {
                t.form.clone()
            }
        })
        .collect();
    Ok(MaskedSentence {
        tokens,
        slot_index: position,
        original_form: sentence.tokens[position].form.clone(),
    })
}

/// One indexed occurrence of a (lemma, pos) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence<'a> {
    pub sentence: &'a Sentence,
    pub sentence_index: usize,
    pub position: usize,
}

type IndexKey = (String, Pos);

/// Sentences plus an index from lowercased (lemma, pos) to positions.
///
/// Only content words (NOUN, VERB, ADJ, ADV) are indexed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceStore {
    sentences: Vec<Sentence>,
    index: BTreeMap<IndexKey, Vec<(usize, usize)>>,
}

impl SentenceStore {
    pub fn from_sentences(sentences: Vec<Sentence>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for s in &sentences {
            if !seen.insert((s.doc_id.as_str(), s.sent_id.as_str())) {
                return Err(CorpusError::DuplicateId {
                    doc_id: s.doc_id.clone(),
                    sent_id: s.sent_id.clone(),
                });
            }
        }
        let mut index: BTreeMap<IndexKey, Vec<(usize, usize)>> = BTreeMap::new();
        for (si, s) in sentences.iter().enumerate() {
            for (ti, t) in s.tokens.iter().enumerate() {
                if t.pos.is_content() {
                    index
                        .entry((t.lemma.to_lowercase(), t.pos))
                        .or_default()
                        .push((si, ti));
                }
            }
        }
        Ok(Self { sentences, index })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn index_len(&self) -> usize {
        self.index.len()
    }

    /// Positions indexed for `(lemma, pos)`, in insertion order.
    pub fn positions(&self, lemma: &str, pos: Pos) -> &[(usize, usize)] {
        self.index
            .get(&(lemma.to_lowercase(), pos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn find(&self, doc_id: &str, sent_id: &str) -> Option<&Sentence> {
        self.sentences
            .iter()
            .find(|s| s.doc_id == doc_id && s.sent_id == sent_id)
    }

    /// Occurrences whose sentence length lies in `[min_len, max_len]`,
    /// ordered by (doc_id, sent_id, position).
    pub fn occurrences(
        &self,
        lemma: &str,
        pos: Pos,
        min_len: usize,
        max_len: usize,
    ) -> Vec<Occurrence<'_>> {
        let mut out: Vec<Occurrence<'_>> = self
            .positions(lemma, pos)
            .iter()
            .filter_map(|&(si, ti)| {
                let sentence = &self.sentences[si];
                (min_len..=max_len)
                    .contains(&sentence.len())
                    .then_some(Occurrence {
                        sentence,
                        sentence_index: si,
                        position: ti,
                    })
            })
            .collect();
        out.sort_by(|a, b| (a.sentence.id(), a.position).cmp(&(b.sentence.id(), b.position)));
        out
    }
}
