//! Run configuration, overrides, config hashing and the output manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use infolab_core::classify::bag::BagHyper;
use infolab_core::classify::feature_lr::FeatureLrHyper;
use infolab_core::classify::ffnn::FfnnHyper;
use infolab_core::classify::DatasetConfig;
use infolab_core::curate::{RegimeSizes, SgnsParams};
use infolab_core::distractors::{CandidateRule, DEFAULT_DISTRACTORS};
use infolab_core::resources::MinCounts;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "INFOLAB_DATA_DIR";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_WORDS: &str = include_str!("../resources/words20.txt");

/// Input paths. Relative paths are resolved against the data root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub corpus: Option<PathBuf>,
    pub ngrams: Option<PathBuf>,
    pub unigrams: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    /// Pretrained ARPA model; `ingest` trains one from the corpus when absent.
    pub lm: Option<PathBuf>,
    pub senses: Option<PathBuf>,
    /// Target list; defaults to the bundled 20-word list.
    pub words: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub min_counts: MinCounts,
    pub distractors: usize,
    pub candidate_rule: CandidateRule,
    pub dataset: DatasetConfig,
    /// Half-width of the context window; `None` is the whole sentence.
    pub context_window: Option<usize>,
    pub bag: BagHyper,
    pub feature_lr: FeatureLrHyper,
    pub ffnn: FfnnHyper,
    pub sgns: SgnsParams,
    pub sizes: RegimeSizes,
    pub permutations: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Inputs::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            min_counts: MinCounts::default(),
            distractors: DEFAULT_DISTRACTORS,
            candidate_rule: CandidateRule::default(),
            dataset: DatasetConfig::default(),
            context_window: None,
            bag: BagHyper::default(),
            feature_lr: FeatureLrHyper::default(),
            ffnn: FfnnHyper::default(),
            sgns: SgnsParams::default(),
            sizes: RegimeSizes::default(),
            permutations: 10_000,
        }
    }
}

fn set_path(root: &mut serde_json::Value, key: &str, value: serde_json::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::Usage(format!(
                "--set {key}: {} is not a section",
                parts[..i].join(".")
            ))
        })?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(Error::Usage(format!("--set {key}: unknown key {part:?}")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Usage(format!("--set {key}: unknown section {part:?}")))?;
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }

    /// Apply `key.path=value` overrides; values parse as JSON, else as strings.
    pub fn with_overrides<'a>(self, overrides: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut value = serde_json::to_value(&self).expect("config serializes");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--set expects key=value, got {item:?}")))?;
            let parsed = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            set_path(&mut value, key.trim(), parsed)?;
        }
        serde_json::from_value(value).map_err(|e| Error::Usage(format!("--set: {e}")))
    }

    /// SHA-256 of the canonical JSON with `out_dir` left out, so the same
    /// run written to two places carries one hash.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value
            .as_object_mut()
            .expect("config is an object")
            .remove("out_dir");
        let canonical = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

/// `--data-root`, then `$INFOLAB_DATA_DIR`, then the working directory.
pub fn data_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn resolve(root: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        root.join(path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub command: String,
    pub config_hash: String,
    pub sha256: String,
}

/// Which command produced each output file, under which config, with what
/// content. Keys are paths relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            tool: "infolab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            artifacts: BTreeMap::new(),
        }
    }
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| Error::Integrity(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(&out_dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_partial_files() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let partial: RunConfig = serde_json::from_str(r#"{"seed": 9, "ffnn": {"epochs": 3}}"#)
            .unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(partial.seed, 9);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).is_err());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = RunConfig::default()
            .with_overrides([
                "seed=5",
                "sgns.epochs=2",
                "inputs.corpus=c.tsv",
                "candidate_rule=shared_context",
            ])
            .unwrap();
        assert_eq!((c.seed, c.sgns.epochs), (5, 2));
        assert_eq!(c.inputs.corpus.as_deref(), Some(Path::new("c.tsv")));
        assert_eq!(c.candidate_rule, CandidateRule::SharedContext);
        assert!(RunConfig::default()
            .with_overrides(["sgns.nope=1"])
            .is_err());
        assert!(RunConfig::default().with_overrides(["seed"]).is_err());
    }

    #[test]
    fn hash_ignores_out_dir_only() {
        let a = RunConfig::default();
        let b = RunConfig {
            out_dir: "elsewhere".into(),
            ..a.clone()
        };
        let c = RunConfig {
            seed: 1,
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn default_word_list_has_twenty_entries() {
        let words = crate::resources_io::load_word_list(DEFAULT_WORDS.as_bytes()).unwrap();
        assert_eq!(words.len(), 20);
        assert_eq!(words[0].0, "call");
    }
}
