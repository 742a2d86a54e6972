//! Relation and sense-count extraction from WordNet `data.*` files.
//!
//! Each synset line reads
//! `offset lex_filenum ss_type w_cnt (word lex_id)* p_cnt (sym offset pos st)* ... | gloss`
//! with `w_cnt` in hex. Lines starting with a space are the license header.
//! Only semantic pointers (`st == 0000`) are followed: `@`/`@i` give
//! hypernyms, `~`/`~i` hyponyms. Synonyms are the other words of a synset.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use infolab_core::corpus::Pos;
use infolab_core::resources::Relation;

use crate::error::FormatError;
use crate::resources_io::SenseCounts;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub offset: u64,
    pub words: Vec<String>,
    pub hypernyms: Vec<u64>,
    pub hyponyms: Vec<u64>,
}

/// Lowercase, drop adjective markers such as `(a)`, keep underscores.
fn normalize_word(raw: &str) -> String {
    let w = match raw.find('(') {
        Some(i) if raw.ends_with(')') => &raw[..i],
        _ => raw,
    };
    w.to_lowercase()
}

fn field<'a>(
    it: &mut impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<&'a str, FormatError> {
    it.next()
        .ok_or_else(|| FormatError::parse(line, format!("missing {what}")))
}

pub fn parse_synset(text: &str, line: usize) -> Result<Synset, FormatError> {
    let head = text.split(" | ").next().unwrap_or(text);
    let mut it = head.split_whitespace();
    let offset = field(&mut it, line, "offset")?
        .parse()
        .map_err(|_| FormatError::parse(line, "bad synset offset"))?;
    field(&mut it, line, "lex_filenum")?;
    field(&mut it, line, "ss_type")?;
    let w_cnt = usize::from_str_radix(field(&mut it, line, "w_cnt")?, 16)
        .map_err(|_| FormatError::parse(line, "bad word count"))?;
    let mut words = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        words.push(normalize_word(field(&mut it, line, "word")?));
        field(&mut it, line, "lex_id")?;
    }
    let p_cnt: usize = field(&mut it, line, "p_cnt")?
        .parse()
        .map_err(|_| FormatError::parse(line, "bad pointer count"))?;
    let (mut hypernyms, mut hyponyms) = (Vec::new(), Vec::new());
    for _ in 0..p_cnt {
        let symbol = field(&mut it, line, "pointer symbol")?;
        let target: u64 = field(&mut it, line, "pointer offset")?
            .parse()
            .map_err(|_| FormatError::parse(line, "bad pointer offset"))?;
        field(&mut it, line, "pointer pos")?;
        let source_target = field(&mut it, line, "pointer source/target")?;
        if source_target != "0000" {
            continue;
        }
        match symbol {
            "@" | "@i" => hypernyms.push(target),
            "~" | "~i" => hyponyms.push(target),
            _ => {}
        }
    }
    Ok(Synset {
        offset,
        words,
        hypernyms,
        hyponyms,
    })
}

pub fn parse_data_file<R: BufRead>(reader: R) -> Result<Vec<Synset>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.starts_with(' ') || line.trim().is_empty() {
            continue;
        }
        out.push(parse_synset(&line, i + 1)?);
    }
    Ok(out)
}

pub type RelationRow = (String, Pos, Relation, String);

/// Relation rows and sense counts for one part of speech.
pub fn extract(synsets: &[Synset], pos: Pos) -> (BTreeSet<RelationRow>, SenseCounts) {
    let by_offset: BTreeMap<u64, &Synset> = synsets.iter().map(|s| (s.offset, s)).collect();
    let mut rows = BTreeSet::new();
    let mut senses = SenseCounts::new();
    for s in synsets {
        let unique: BTreeSet<&String> = s.words.iter().collect();
        for w in &unique {
            *senses.entry(((*w).clone(), pos)).or_default() += 1;
            for other in &unique {
                if other != w {
                    rows.insert(((*w).clone(), pos, Relation::Synonym, (*other).clone()));
                }
            }
            for (relation, targets) in [
                (Relation::Hypernym, &s.hypernyms),
                (Relation::Hyponym, &s.hyponyms),
            ] {
                for t in targets.iter().filter_map(|o| by_offset.get(o)) {
                    for related in t.words.iter().filter(|r| r != w) {
                        rows.insert(((*w).clone(), pos, relation, related.clone()));
                    }
                }
            }
        }
    }
    (rows, senses)
}

pub const DATA_FILES: [(&str, Pos); 4] = [
    ("data.noun", Pos::Noun),
    ("data.verb", Pos::Verb),
    ("data.adj", Pos::Adj),
    ("data.adv", Pos::Adv),
];

/// Read every present `data.*` file in a WordNet dictionary directory.
pub fn extract_dir(dir: &Path) -> Result<(BTreeSet<RelationRow>, SenseCounts), crate::Error> {
    let mut rows = BTreeSet::new();
    let mut senses = SenseCounts::new();
    let mut found = 0;
    for (name, pos) in DATA_FILES {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        found += 1;
        let file = std::fs::File::open(&path).map_err(|e| crate::Error::io(&path, e))?;
        let synsets = parse_data_file(std::io::BufReader::new(file))
            .map_err(|e| crate::Error::format(&path, e))?;
        let (r, s) = extract(&synsets, pos);
        rows.extend(r);
        senses.extend(s);
    }
    if found == 0 {
        return Err(crate::Error::MissingInput(dir.join("data.noun")));
    }
    Ok((rows, senses))
}

pub fn write_relations<W: Write>(mut w: W, rows: &BTreeSet<RelationRow>) -> std::io::Result<()> {
    for (lemma, pos, relation, related) in rows {
        writeln!(w, "{lemma}\t{pos}\t{relation}\t{related}")?;
    }
    Ok(())
}

pub fn write_senses<W: Write>(mut w: W, senses: &SenseCounts) -> std::io::Result<()> {
    for ((lemma, pos), n) in senses {
        writeln!(w, "{lemma}\t{pos}\t{n}")?;
    }
    Ok(())
}
