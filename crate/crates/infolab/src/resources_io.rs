//! Lexical resource tables.
//!
//! * n-grams: `count\tw1/pos1\tw2/pos2...`; a tag is a coarse name or a Penn tag
//! * unigram frequencies: `word\tcount`, later lines win
//! * relations: `lemma\tpos\trelation\trelated`
//! * sense counts: `lemma\tpos\tcount`

use std::collections::BTreeMap;
use std::io::BufRead;

use infolab_core::corpus::Pos;
use infolab_core::resources::{
    FreqTable, MinCounts, NgramTable, Relation, RelationSet, TaggedWord,
};

use crate::error::FormatError;

fn parse_pos(tag: &str) -> Pos {
    tag.parse().unwrap_or_else(|_| Pos::from_penn(tag))
}

fn parse_count(field: &str, line: usize) -> Result<u64, FormatError> {
    match field.trim().parse::<u64>() {
        Ok(0) => Err(FormatError::parse(line, "count must be at least 1")),
        Ok(n) => Ok(n),
        Err(_) => Err(FormatError::parse(
            line,
            format!("count {field:?} is not a positive integer"),
        )),
    }
}

/// Lines that are neither blank nor `#` comments, numbered from 1.
fn content_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(l) => {
                let l = l.trim_end_matches(['\r', '\n']).to_string();
                (!l.trim().is_empty() && !l.starts_with('#')).then_some(Ok((i + 1, l)))
            }
        })
}

pub fn load_ngrams<R: BufRead>(
    reader: R,
    min_counts: &MinCounts,
) -> Result<NgramTable, FormatError> {
    let mut rows = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let mut fields = text.split('\t');
        let count = parse_count(fields.next().unwrap_or(""), line)?;
        let mut gram = Vec::new();
        for f in fields {
            let (word, tag) = f
                .rsplit_once('/')
                .filter(|(w, t)| !w.is_empty() && !t.is_empty())
                .ok_or_else(|| {
                    FormatError::parse(line, format!("expected word/pos, found {f:?}"))
                })?;
            gram.push(TaggedWord::new(word, parse_pos(tag)));
        }
        if !(3..=5).contains(&gram.len()) {
            return Err(FormatError::parse(
                line,
                format!("n-gram of order {} (expected 3, 4 or 5)", gram.len()),
            ));
        }
        rows.push((gram, count));
    }
    NgramTable::from_rows(rows, min_counts).map_err(|e| FormatError::Data(e.to_string()))
}

/// Load unigram counts. Each duplicate word is logged and returned as
/// `(line, word)`.
pub fn load_unigram_freq<R: BufRead>(
    reader: R,
) -> Result<(FreqTable, Vec<(usize, String)>), FormatError> {
    let mut table = FreqTable::new();
    let mut duplicates = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let (word, count) = text
            .split_once('\t')
            .ok_or_else(|| FormatError::parse(line, "expected word<TAB>count"))?;
        let count = parse_count(count, line)?;
        let previous = table
            .insert(word, count)
            .map_err(|e| FormatError::parse(line, e.to_string()))?;
        if let Some(previous) = previous {
            log::warn!(
                "line {line}: duplicate unigram {word:?}, replacing {previous} with {count}"
            );
            duplicates.push((line, word.to_lowercase()));
        }
    }
    Ok((table, duplicates))
}

pub fn load_relations<R: BufRead>(reader: R) -> Result<RelationSet, FormatError> {
    let mut set = RelationSet::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split('\t').collect();
        let [lemma, pos, relation, related] = fields[..] else {
            return Err(FormatError::parse(
                line,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        };
        let pos: Pos = pos
            .parse()
            .map_err(|e| FormatError::parse(line, format!("{e}")))?;
        let relation: Relation = relation
            .parse()
            .map_err(|e| FormatError::parse(line, format!("{e}")))?;
        set.insert(lemma, pos, relation, related);
    }
    Ok(set)
}

pub type SenseCounts = BTreeMap<(String, Pos), u32>;

pub fn load_senses<R: BufRead>(reader: R) -> Result<SenseCounts, FormatError> {
    let mut out = SenseCounts::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let fields: Vec<&str> = text.split('\t').collect();
        let [lemma, pos, count] = fields[..] else {
            return Err(FormatError::parse(
                line,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        };
        let pos: Pos = pos
            .parse()
            .map_err(|e| FormatError::parse(line, format!("{e}")))?;
        let count = u32::try_from(parse_count(count, line)?)
            .map_err(|_| FormatError::parse(line, "count too large"))?;
        out.insert((lemma.to_lowercase(), pos), count);
    }
    Ok(out)
}

/// Target list: `word` or `word\tPOS` per line; a bare word is a noun.
pub fn load_word_list<R: BufRead>(reader: R) -> Result<Vec<(String, Pos)>, FormatError> {
    let mut out = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let mut fields = text.split('\t');
        let word = fields.next().unwrap_or("").trim().to_lowercase();
        let pos = match fields.next() {
            Some(p) => p
                .trim()
                .parse()
                .map_err(|e| FormatError::parse(line, format!("{e}")))?,
            None => Pos::Noun,
        };
        out.push((word, pos));
    }
    Ok(out)
}
