//! Word vector files in the word2vec text and binary layouts.

use std::io::{BufRead, Read, Write};

use infolab_core::vectors::{VectorError, VectorStore};

use crate::error::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorFormat {
    Text,
    Binary,
}

impl std::str::FromStr for VectorFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(VectorFormat::Text),
            "binary" | "bin" => Ok(VectorFormat::Binary),
            other => Err(format!("unknown vector format {other:?}")),
        }
    }
}

impl VectorFormat {
    /// `.bin` means binary, anything else text.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => VectorFormat::Binary,
            _ => VectorFormat::Text,
        }
    }
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), FormatError> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize, FormatError> {
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| FormatError::parse(line_no, "header must be `count dim`"))
    };
    let count = next()?;
    let dim = next()?;
    if dim == 0 {
        return Err(FormatError::parse(line_no, "dimension must be positive"));
    }
    Ok((count, dim))
}

fn push(store: &mut VectorStore, word: &str, v: &[f32]) -> Result<(), FormatError> {
    store.push(word, v).map_err(|e| match e {
        VectorError::NonFinite(w) => {
            FormatError::Data(format!("non-finite component in vector for {w:?}"))
        }
        other => FormatError::Data(other.to_string()),
    })
}

pub fn read_text<R: BufRead>(reader: R) -> Result<VectorStore, FormatError> {
    let mut lines = reader.lines().enumerate();
    let (count, dim) = match lines.next() {
        Some((_, line)) => parse_header(&line?, 1)?,
        None => return Err(FormatError::Truncated("empty vector file".into())),
    };
    let mut store = VectorStore::new(dim);
    let mut v = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        v.clear();
        for p in parts {
            v.push(
                p.parse::<f32>()
                    .map_err(|_| FormatError::parse(line_no, format!("bad component {p:?}")))?,
            );
        }
        if v.len() != dim {
            return Err(FormatError::parse(
                line_no,
                format!("expected {dim} components, found {}", v.len()),
            ));
        }
        if store.len() == count {
            return Err(FormatError::Integrity(format!(
                "header declares {count} vectors, file has more"
            )));
        }
        push(&mut store, word, &v)?;
    }
    if store.len() != count {
        return Err(FormatError::Integrity(format!(
            "header declares {count} vectors, file has {}",
            store.len()
        )));
    }
    Ok(store)
}

/// Components are written in shortest round-trip form, so reading back is exact.
pub fn write_text<W: Write>(mut w: W, store: &VectorStore) -> std::io::Result<()> {
    writeln!(w, "{} {}", store.len(), store.dim())?;
    for (word, v) in store.iter() {
        write!(w, "{word}")?;
        for x in v {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(reader: R) -> Result<VectorStore, FormatError> {
    let mut bytes = Vec::new();
    let mut reader = reader;
    reader.read_to_end(&mut bytes)?;
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| FormatError::Truncated("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| FormatError::parse(1, "header is not ASCII"))?;
    let (count, dim) = parse_header(header, 1)?;
    let mut store = VectorStore::new(dim);
    let mut pos = nl + 1;
    let mut v = vec![0f32; dim];
    for n in 0..count {
        while bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(FormatError::Integrity(format!(
                "header declares {count} vectors, file has {n}"
            )));
        }
        let space = bytes[pos..]
            .iter()
            .position(|b| *b == b' ')
            .ok_or_else(|| FormatError::Truncated(format!("word {n} is not terminated")))?;
        let word = std::str::from_utf8(&bytes[pos..pos + space])
            .map_err(|_| FormatError::Data(format!("word {n} is not UTF-8")))?
            .to_string();
        pos += space + 1;
        let end = pos + 4 * dim;
        if end > bytes.len() {
            return Err(FormatError::Truncated(format!(
                "vector for {word:?} is cut short"
            )));
        }
        for (x, chunk) in v.iter_mut().zip(bytes[pos..end].chunks_exact(4)) {
            *x = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        pos = end;
        push(&mut store, &word, &v)?;
    }
    if bytes[pos..].iter().any(|b| !b.is_ascii_whitespace()) {
        return Err(FormatError::Integrity(format!(
            "header declares {count} vectors, file has more"
        )));
    }
    Ok(store)
}

/// Each vector is followed by a newline.
pub fn write_binary<W: Write>(mut w: W, store: &VectorStore) -> std::io::Result<()> {
    writeln!(w, "{} {}", store.len(), store.dim())?;
    for (word, v) in store.iter() {
        w.write_all(word.as_bytes())?;
        w.write_all(b" ")?;
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_vectors<R: BufRead>(
    reader: R,
    format: VectorFormat,
) -> Result<VectorStore, FormatError> {
    match format {
        VectorFormat::Text => read_text(reader),
        VectorFormat::Binary => read_binary(reader),
    }
}

pub fn write_vectors<W: Write>(
    w: W,
    store: &VectorStore,
    format: VectorFormat,
) -> std::io::Result<()> {
    match format {
        VectorFormat::Text => write_text(w, store),
        VectorFormat::Binary => write_binary(w, store),
    }
}
