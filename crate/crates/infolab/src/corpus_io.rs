//! Tagged corpus files.
//!
//! One token per line as `form\tlemma\tpos_fine\tpos_coarse`, sentences
//! separated by blank lines, each optionally preceded by
//! `# doc_id=<s> sent_id=<s>`. A coarse tag of `_` is derived from the fine
//! tag with [`Pos::from_penn`]; a lemma of `_` becomes the lowercased form.
//! Blocks without a header get doc id `doc` and their 1-based block number,
//! zero-padded to six digits, as sentence id.

use std::io::{BufRead, Write};

use infolab_core::corpus::{Pos, Sentence, SentenceStore, Token};

use crate::error::FormatError;

const DEFAULT_DOC: &str = "doc";

fn parse_header(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix('#')?;
    let mut doc = None;
    let mut sent = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("doc_id=") {
            doc = Some(v.to_string());
        } else if let Some(v) = field.strip_prefix("sent_id=") {
            sent = Some(v.to_string());
        }
    }
    Some((doc?, sent?))
}

fn parse_token(line: &str, line_no: usize) -> Result<Token, FormatError> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [form, lemma, fine, coarse] = fields[..] else {
        return Err(FormatError::parse(
            line_no,
            format!("expected 4 tab-separated fields, found {}", fields.len()),
        ));
    };
    let pos = if coarse == "_" {
        Pos::from_penn(fine)
    } else {
        coarse
            .parse()
            .map_err(|e| FormatError::parse(line_no, format!("{e}")))?
    };
    let lemma = if lemma == "_" {
        form.to_lowercase()
    } else {
        lemma.to_string()
    };
    Token::new(form, lemma, pos).map_err(|e| FormatError::parse(line_no, e.to_string()))
}

/// Parse sentences in file order.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<Vec<Sentence>, FormatError> {
    let mut out = Vec::new();
    let mut header: Option<(String, String)> = None;
    let mut tokens = Vec::new();
    let mut blocks = 0usize;

    let mut flush = |header: &mut Option<(String, String)>,
                     tokens: &mut Vec<Token>,
                     out: &mut Vec<Sentence>| {
        if tokens.is_empty() {
            return;
        }
        blocks += 1;
        let (doc, sent) = header
            .take()
            .unwrap_or_else(|| (DEFAULT_DOC.to_string(), format!("{blocks:06}")));
        out.push(Sentence {
            doc_id: doc,
            sent_id: sent,
            tokens: std::mem::take(tokens),
        });
    };

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            flush(&mut header, &mut tokens, &mut out);
            continue;
        }
        if line.starts_with('#') && !line.contains('\t') {
            if let Some(h) = parse_header(line) {
                if !tokens.is_empty() {
                    return Err(FormatError::parse(
                        line_no,
                        "header inside a sentence block",
                    ));
                }
                header = Some(h);
            }
            continue;
        }
        tokens.push(parse_token(line, line_no)?);
    }
    flush(&mut header, &mut tokens, &mut out);
    Ok(out)
}

/// Parse and index a corpus. Duplicate sentence ids are a data error.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<SentenceStore, FormatError> {
    let sentences = read_sentences(reader)?;
    SentenceStore::from_sentences(sentences).map_err(|e| FormatError::Data(e.to_string()))
}

/// Write sentences with headers. The fine tag column repeats the coarse tag.
pub fn write_corpus<'a, W: Write>(
    mut w: W,
    sentences: impl IntoIterator<Item = &'a Sentence>,
) -> std::io::Result<()> {
    for (i, s) in sentences.into_iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        writeln!(w, "# doc_id={} sent_id={}", s.doc_id, s.sent_id)?;
        for t in &s.tokens {
            writeln!(w, "{}\t{}\t{}\t{}", t.form, t.lemma, t.pos, t.pos)?;
        }
    }
    Ok(())
}

/// Convert one-sentence-per-line text into the tagged format, splitting on
/// whitespace. Returns the number of sentences written.
pub fn convert_plain<R: BufRead, W: Write>(
    reader: R,
    mut w: W,
    doc_id: &str,
) -> Result<usize, FormatError> {
    let mut n = 0usize;
    for line in reader.lines() {
        let line = line?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        if n > 0 {
            writeln!(w)?;
        }
        n += 1;
        writeln!(w, "# doc_id={doc_id} sent_id={n:06}")?;
        for word in words {
            writeln!(w, "{word}\t{}\tOTHER\tOTHER", word.to_lowercase())?;
        }
    }
    Ok(n)
}
