//! ARPA backoff language model files, orders 1 to 3.

use std::io::{BufRead, Write};

use infolab_core::lm::{LmBuilder, TrigramLm, LOG_ZERO};

use crate::error::FormatError;

/// Decimal places written by [`write_arpa`].
pub const DEFAULT_DECIMALS: usize = 6;

fn parse_num(s: &str, line: usize) -> Result<f64, FormatError> {
    match s {
        "-inf" | "-Infinity" => Ok(LOG_ZERO),
        _ => s
            .parse()
            .map_err(|_| FormatError::parse(line, format!("bad number {s:?}"))),
    }
}

enum Section {
    Preamble,
    Data,
    Grams(usize),
    End,
}

pub fn parse_arpa<R: BufRead>(reader: R) -> Result<TrigramLm, FormatError> {
    let mut declared = [None::<usize>; 3];
    let mut seen = [0usize; 3];
    let mut builder = LmBuilder::new();
    let mut section = Section::Preamble;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text == "\\data\\" {
            section = Section::Data;
            continue;
        }
        if text == "\\end\\" {
            section = Section::End;
            break;
        }
        if let Some(n) = text
            .strip_prefix('\\')
            .and_then(|t| t.strip_suffix("-grams:"))
        {
            let n: usize = n
                .parse()
                .map_err(|_| FormatError::parse(line_no, format!("bad section {text:?}")))?;
            if !(1..=3).contains(&n) {
                return Err(FormatError::parse(
                    line_no,
                    format!("order {n} is not supported"),
                ));
            }
            if declared[n - 1].is_none() {
                return Err(FormatError::Integrity(format!(
                    "section for order {n} missing from the data header"
                )));
            }
            section = Section::Grams(n);
            continue;
        }
        match section {
            Section::Preamble => {}
            Section::End => unreachable!(),
            Section::Data => {
                let (n, count) = text
                    .strip_prefix("ngram ")
                    .and_then(|t| t.split_once('='))
                    .ok_or_else(|| {
                        FormatError::parse(
                            line_no,
                            format!("expected `ngram N=count`, found {text:?}"),
                        )
                    })?;
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| FormatError::parse(line_no, "bad order"))?;
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| FormatError::parse(line_no, "bad count"))?;
                if !(1..=3).contains(&n) {
                    return Err(FormatError::parse(
                        line_no,
                        format!("order {n} is not supported"),
                    ));
                }
                declared[n - 1] = Some(count);
            }
            Section::Grams(n) => {
                let parts: Vec<&str> = text.split_whitespace().collect();
                if parts.len() != n + 1 && parts.len() != n + 2 {
                    return Err(FormatError::parse(
                        line_no,
                        format!("expected {} or {} fields", n + 1, n + 2),
                    ));
                }
                let logp = parse_num(parts[0], line_no)?;
                let backoff = match parts.get(n + 1) {
                    Some(b) if n < 3 => parse_num(b, line_no)?,
                    Some(_) => {
                        return Err(FormatError::parse(
                            line_no,
                            "highest order entries take no backoff",
                        ))
                    }
                    None => 0.0,
                };
                let w = &parts[1..=n];
                match n {
                    1 => builder.unigram(w[0], logp, backoff),
                    2 => builder.bigram([w[0], w[1]], logp, backoff),
                    _ => builder.trigram([w[0], w[1], w[2]], logp),
                };
                seen[n - 1] += 1;
            }
        }
    }
    if !matches!(section, Section::End) {
        return Err(FormatError::Truncated("no \\end\\ marker".into()));
    }
    for n in 0..3 {
        let want = declared[n].unwrap_or(0);
        if want != seen[n] {
            return Err(FormatError::Integrity(format!(
                "header declares {want} {}-grams, file has {}",
                n + 1,
                seen[n]
            )));
        }
    }
    if declared[0].is_none() {
        return Err(FormatError::Integrity("no unigrams declared".into()));
    }
    builder
        .build()
        .map_err(|e| FormatError::Data(e.to_string()))
}

pub fn write_arpa<W: Write>(w: W, lm: &TrigramLm) -> std::io::Result<()> {
    write_arpa_with_precision(w, lm, DEFAULT_DECIMALS)
}

pub fn write_arpa_with_precision<W: Write>(
    mut w: W,
    lm: &TrigramLm,
    decimals: usize,
) -> std::io::Result<()> {
    let (n1, n2, n3) = lm.counts();
    writeln!(w, "\\data\\")?;
    writeln!(w, "ngram 1={n1}")?;
    if n2 > 0 || n3 > 0 {
        writeln!(w, "ngram 2={n2}")?;
    }
    if n3 > 0 {
        writeln!(w, "ngram 3={n3}")?;
    }
    writeln!(w)?;
    writeln!(w, "\\1-grams:")?;
    for (word, logp, bo) in lm.unigram_entries() {
        writeln!(w, "{logp:.decimals$}\t{word}\t{bo:.decimals$}")?;
    }
    if n2 > 0 || n3 > 0 {
        writeln!(w)?;
        writeln!(w, "\\2-grams:")?;
        for ([a, b], logp, bo) in lm.bigram_entries() {
            writeln!(w, "{logp:.decimals$}\t{a} {b}\t{bo:.decimals$}")?;
        }
    }
    if n3 > 0 {
        writeln!(w)?;
        writeln!(w, "\\3-grams:")?;
        for ([a, b, c], logp) in lm.trigram_entries() {
            writeln!(w, "{logp:.decimals$}\t{a} {b} {c}")?;
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")
}
