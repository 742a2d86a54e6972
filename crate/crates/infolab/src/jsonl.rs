//! JSON-lines interchange: dataset exports, scored pools, generic records.

use std::io::{BufRead, Write};

use infolab_core::classify::LabeledExample;
use infolab_core::corpus::SentenceStore;
use infolab_core::curate::ScoredSentence;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::FormatError;

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| FormatError::parse(i + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = &'a T>,
) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// One exported cloze example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub tokens: Vec<String>,
    pub slot_index: usize,
    pub label: bool,
    pub source_word: String,
}

impl From<&LabeledExample> for DatasetRow {
    fn from(ex: &LabeledExample) -> Self {
        Self {
            tokens: ex.masked.tokens.clone(),
            slot_index: ex.masked.slot_index,
            label: ex.label,
            source_word: ex.source_word.clone(),
        }
    }
}

pub fn write_dataset<W: Write>(w: W, split: &[LabeledExample]) -> std::io::Result<()> {
    let rows: Vec<DatasetRow> = split.iter().map(DatasetRow::from).collect();
    write_jsonl(w, &rows)
}

/// A classifier-scored occurrence of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRow {
    pub doc_id: String,
    pub sent_id: String,
    pub position: usize,
    pub prob: f64,
}

impl From<&ScoredSentence> for PoolRow {
    fn from(s: &ScoredSentence) -> Self {
        Self {
            doc_id: s.sentence.doc_id.clone(),
            sent_id: s.sentence.sent_id.clone(),
            position: s.position,
            prob: s.prob,
        }
    }
}

/// Resolve pool rows against the corpus they were scored from.
pub fn resolve_pool(
    rows: &[PoolRow],
    store: &SentenceStore,
) -> Result<Vec<ScoredSentence>, FormatError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let sentence = store.find(&r.doc_id, &r.sent_id).ok_or_else(|| {
                FormatError::Data(format!(
                    "pool row {}: sentence {}/{} not in corpus",
                    i + 1,
                    r.doc_id,
                    r.sent_id
                ))
            })?;
            ScoredSentence::new(sentence.clone(), r.position, r.prob)
                .map_err(|e| FormatError::Data(format!("pool row {}: {e}", i + 1)))
        })
        .collect()
}
