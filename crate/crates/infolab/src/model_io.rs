//! `CILM` classifier model container.
//!
//! ```text
//! "CILM" | version u16 | kind u8 | hyperparameters | parameter blocks | sha256
//! ```
//!
//! Integers are little-endian u64 (bucket count u32), reals in
//! hyperparameters are f64, and every learned parameter is an f32. Trained
//! models hold f32-exact values, so a saved model predicts bit-identically
//! after loading. The trailing digest covers every preceding byte.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use infolab_core::classify::bag::{BagHyper, BagNgramModel};
use infolab_core::classify::feature_lr::{FeatureLrHyper, FeatureLrModel, N_FEATURES};
use infolab_core::classify::ffnn::{ContextFfnnModel, FfnnHyper, Layer};
use infolab_core::classify::Classifier;
use sha2::{Digest, Sha256};

use crate::error::FormatError;

pub const MAGIC: &[u8; 4] = b"CILM";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ModelKind {
    BagNgram = 1,
    FeatureLr = 2,
    ContextFfnn = 3,
}

impl ModelKind {
    pub fn of(model: &Classifier) -> Self {
        match model {
            Classifier::BagNgram(_) => ModelKind::BagNgram,
            Classifier::FeatureLr(_) => ModelKind::FeatureLr,
            Classifier::ContextFfnn(_) => ModelKind::ContextFfnn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::BagNgram => "bag_ngram",
            ModelKind::FeatureLr => "feature_lr",
            ModelKind::ContextFfnn => "context_ffnn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bag_ngram" | "bag" => Ok(ModelKind::BagNgram),
            "feature_lr" | "lr" => Ok(ModelKind::FeatureLr),
            "context_ffnn" | "ffnn" => Ok(ModelKind::ContextFfnn),
            other => Err(format!("unknown classifier {other:?}")),
        }
    }
}

#[derive(Default)]
struct Encoder(Vec<u8>);

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.0.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            FormatError::Truncated(format!("model ends before byte {}", self.pos + n))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn len(&mut self) -> Result<usize, FormatError> {
        let n = self.u64()?;
        usize::try_from(n)
            .ok()
            .filter(|n| *n <= self.bytes.len())
            .ok_or_else(|| FormatError::Data(format!("implausible length {n}")))
    }
    fn count(&mut self) -> Result<usize, FormatError> {
        let n = self.u64()?;
        usize::try_from(n).map_err(|_| FormatError::Data(format!("count {n} out of range")))
    }
    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or_else(|| FormatError::Data("block too large".into()))?,
        )?;
        let out: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if out.iter().any(|x| !x.is_finite()) {
            return Err(FormatError::Data("non-finite parameter".into()));
        }
        Ok(out)
    }
}

pub fn encode_model(model: &Classifier) -> Vec<u8> {
    let mut e = Encoder::default();
    e.0.extend_from_slice(MAGIC);
    e.0.extend_from_slice(&VERSION.to_le_bytes());
    e.u8(ModelKind::of(model) as u8);
    match model {
        Classifier::BagNgram(m) => {
            e.u32(m.hyper.buckets);
            e.len(m.hyper.dim);
            e.f64(m.hyper.lr0);
            e.len(m.hyper.epochs);
            e.u64(m.hash_seed);
            e.u64(m.init_seed);
            e.len(m.rows.len());
            for (id, row) in &m.rows {
                e.u32(*id);
                e.f32s(row);
            }
            e.f32s(&m.output);
            e.f32s([&m.bias]);
        }
        Classifier::FeatureLr(m) => {
            e.f64(m.hyper.lr);
            e.len(m.hyper.iters);
            e.f32s(&m.weights);
            e.f32s([&m.bias]);
            e.f32s(&m.mean);
            e.f32s(&m.std);
        }
        Classifier::ContextFfnn(m) => {
            e.len(m.hyper.h1);
            e.len(m.hyper.h2);
            e.f64(m.hyper.lr);
            e.len(m.hyper.epochs);
            e.len(m.layers.len());
            for layer in &m.layers {
                e.len(layer.inputs);
                e.len(layer.outputs);
                e.f32s(&layer.weights);
                e.f32s(&layer.bias);
            }
        }
    }
    let digest = Sha256::digest(&e.0);
    e.0.extend_from_slice(&digest);
    e.0
}

pub fn decode_model(bytes: &[u8]) -> Result<Classifier, FormatError> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(FormatError::Data("not a CILM model file".into()));
    }
    if bytes.len() < 4 + 2 + 1 + 32 {
        return Err(FormatError::Truncated("model file too short".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(FormatError::Integrity("model checksum mismatch".into()));
    }
    let mut d = Decoder {
        bytes: body,
        pos: 4,
    };
    let version = d.u16()?;
    if version != VERSION {
        return Err(FormatError::Data(format!(
            "unsupported model version {version}"
        )));
    }
    let kind = d.u8()?;
    let model = match kind {
        1 => {
            let hyper = BagHyper {
                buckets: d.u32()?,
                dim: d.len()?,
                lr0: d.f64()?,
                epochs: d.count()?,
            };
            let hash_seed = d.u64()?;
            let init_seed = d.u64()?;
            let n_rows = d.len()?;
            let mut rows = BTreeMap::new();
            for _ in 0..n_rows {
                let id = d.u32()?;
                rows.insert(id, d.f32s(hyper.dim)?);
            }
            let output = d.f32s(hyper.dim)?;
            let bias = d.f32s(1)?[0];
            Classifier::BagNgram(BagNgramModel {
                hyper,
                hash_seed,
                init_seed,
                rows,
                output,
                bias,
            })
        }
        2 => {
            let hyper = FeatureLrHyper {
                lr: d.f64()?,
                iters: d.count()?,
            };
            let arr = |v: Vec<f64>| -> [f64; N_FEATURES] { v.try_into().expect("sized block") };
            let weights = arr(d.f32s(N_FEATURES)?);
            let bias = d.f32s(1)?[0];
            let mean = arr(d.f32s(N_FEATURES)?);
            let std = arr(d.f32s(N_FEATURES)?);
            Classifier::FeatureLr(FeatureLrModel {
                hyper,
                weights,
                bias,
                mean,
                std,
            })
        }
        3 => {
            let hyper = FfnnHyper {
                h1: d.count()?,
                h2: d.count()?,
                lr: d.f64()?,
                epochs: d.count()?,
            };
            let n_layers = d.len()?;
            if n_layers != 3 {
                return Err(FormatError::Data(format!(
                    "expected 3 layers, found {n_layers}"
                )));
            }
            let mut layers = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let (inputs, outputs) = (d.len()?, d.len()?);
                let weights = d.f32s(inputs.saturating_mul(outputs))?;
                let bias = d.f32s(outputs)?;
                layers.push(Layer {
                    inputs,
                    outputs,
                    weights,
                    bias,
                });
            }
            Classifier::ContextFfnn(ContextFfnnModel { hyper, layers })
        }
        other => return Err(FormatError::Data(format!("unknown model kind {other}"))),
    };
    if d.pos != body.len() {
        return Err(FormatError::Integrity(format!(
            "{} trailing bytes after model",
            body.len() - d.pos
        )));
    }
    Ok(model)
}

pub fn write_model<W: Write>(mut w: W, model: &Classifier) -> std::io::Result<()> {
    w.write_all(&encode_model(model))
}

pub fn read_model<R: Read>(mut r: R) -> Result<Classifier, FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_model(&bytes)
}
