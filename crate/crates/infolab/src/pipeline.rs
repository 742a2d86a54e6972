//! Pipeline stages behind the CLI subcommands.
//!
//! Every stage reads its inputs from the configured paths or from earlier
//! stages' files under the output directory and writes its own files there,
//! recording each one in the manifest with the config hash.
//!
//! ```text
//! ingest         corpus.tsv  lm.arpa  ingest.json
//! distractors    distractors/<key>.json
//! build-dataset  datasets/<key>.json  datasets/<key>.{train,dev,test}.jsonl
//! train          models/<key>.<kind>.cilm  models/<key>.<kind>.json
//! score          pools/<key>.<kind>.jsonl
//! baseline       baseline/<key>.json
//! finetune       finetune/<key>.json
//! experiment     experiment.json  experiment.tsv
//! report         report.json  report.tsv
//! ```
//!
//! `<key>` is the word and its lowercased POS, e.g. `test.noun`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use infolab_core::classify::bag::train_bag_ngram;
use infolab_core::classify::feature_lr::train_feature_lr;
use infolab_core::classify::ffnn::train_context_ffnn;
use infolab_core::classify::{
    build_dataset, evaluate_accuracy, Classifier, ClozeClassifier, ClozeDataset, FeatureSource,
    RankBaseline,
};
use infolab_core::corpus::{normalize_numbers, Pos, SentenceStore};
use infolab_core::curate::experiment::frequency_polysemy_analysis;
use infolab_core::curate::{
    run_regime, ExperimentReport, Regime, ScoredSentence, WordPool, WordRow,
};
use infolab_core::distractors::{candidate_fillers, select_distractors, DistractorSet};
use infolab_core::lm::{train_trigram_on, TrainConfig, TrigramLm};
use infolab_core::resources::{FreqTable, NgramTable, RelationSet};
use infolab_core::rng::derive_seed;
use infolab_core::vectors::{MeanContextEncoder, VectorStore};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, write_atomic, Manifest, RunConfig, DEFAULT_WORDS};
use crate::error::{Error, FormatError, Result};
use crate::jsonl::{read_jsonl, resolve_pool, write_dataset, write_jsonl, PoolRow};
use crate::model_io::{decode_model, encode_model, ModelKind};
use crate::report::{write_frequency_polysemy, write_tsv, ReportDoc};
use crate::vectors_io::{read_vectors, VectorFormat};
use crate::{arpa, corpus_io, resources_io};

/// A JSON artifact body tagged with the hash of the config that made it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub sentences: usize,
    pub tokens: usize,
    pub indexed_lemmas: usize,
    pub lm_source: String,
    /// Unigram, bigram and trigram entry counts.
    pub lm_counts: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub train: f64,
    pub dev: Option<f64>,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub target: String,
    pub pos: Pos,
    pub classifier: String,
    pub accuracy: Accuracy,
    pub model_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub target: String,
    pub pos: Pos,
    pub dev: Option<f64>,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRow {
    pub target: String,
    pub pos: Pos,
    pub classifier: String,
    /// Similarity per report column; regimes that were not run are absent.
    pub sims: BTreeMap<String, f64>,
}

/// File-name key of a target.
pub fn target_key(word: &str, pos: Pos) -> String {
    format!("{word}.{}", pos.as_str().to_lowercase())
}

/// `all` or a comma-separated list of column names, with or without `sim_`.
pub fn parse_regimes(spec: &str) -> Result<Vec<Regime>> {
    if spec.trim() == "all" {
        return Ok(Regime::ALL.to_vec());
    }
    let mut out = BTreeSet::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let name = item.strip_prefix("sim_").unwrap_or(item);
        let regime = Regime::ALL
            .into_iter()
            .find(|r| r.column().strip_prefix("sim_") == Some(name))
            .ok_or_else(|| Error::Usage(format!("unknown regime {item:?}")))?;
        out.insert(regime);
    }
    if out.is_empty() {
        return Err(Error::Usage("no regimes selected".into()));
    }
    Ok(out.into_iter().collect())
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_vec_pretty(value).expect("artifacts serialize");
    text.push(b'\n');
    text
}

pub struct Pipeline {
    pub config: RunConfig,
    pub root: PathBuf,
    pub out: PathBuf,
    pub hash: String,
    pub jobs: usize,
    manifest: Mutex<Manifest>,
}

impl Pipeline {
    pub fn new(config: RunConfig, root: PathBuf) -> Result<Self> {
        let out = config.out_dir.clone();
        let manifest = Manifest::load(&out)?;
        Ok(Self {
            hash: config.hash(),
            config,
            root,
            out,
            jobs: 1,
            manifest: Mutex::new(manifest),
        })
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    fn input(&self, name: &str, path: &Option<PathBuf>) -> Result<PathBuf> {
        let path = path.as_ref().ok_or_else(|| {
            Error::Usage(format!(
                "no {name} input configured (set inputs.{name} or pass --{name})"
            ))
        })?;
        let path = crate::config::resolve(&self.root, path);
        if !path.exists() {
            return Err(Error::MissingInput(path));
        }
        Ok(path)
    }

    fn artifact(&self, rel: &str, producer: &'static str) -> Result<PathBuf> {
        let path = self.out.join(rel);
        if !path.exists() {
            return Err(Error::MissingArtifact { path, producer });
        }
        Ok(path)
    }

    fn read_stamped<T: DeserializeOwned>(&self, rel: &str, producer: &'static str) -> Result<T> {
        let path = self.artifact(rel, producer)?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let doc: Stamped<T> = serde_json::from_str(&text)
            .map_err(|e| Error::format(&path, FormatError::parse(e.line(), e.to_string())))?;
        if doc.config_hash != self.hash {
            log::warn!(
                "{} was produced under config {}, current is {}",
                path.display(),
                doc.config_hash,
                self.hash
            );
        }
        Ok(doc.body)
    }

    fn emit(&self, command: &str, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(rel);
        write_atomic(&path, bytes)?;
        let entry = crate::config::ArtifactEntry {
            command: command.to_string(),
            config_hash: self.hash.clone(),
            sha256: sha256_hex(bytes),
        };
        self.manifest
            .lock()
            .expect("manifest lock")
            .artifacts
            .insert(rel.to_string(), entry);
        Ok(path)
    }

    fn emit_json<T: Serialize>(&self, command: &str, rel: &str, body: &T) -> Result<PathBuf> {
        let doc = Stamped {
            config_hash: self.hash.clone(),
            body,
        };
        self.emit(command, rel, &to_json(&doc))
    }

    /// Persist the manifest; call once a command has written its files.
    pub fn finish(&self) -> Result<()> {
        self.manifest.lock().expect("manifest lock").save(&self.out)
    }

    pub fn manifest(&self) -> Manifest {
        self.manifest.lock().expect("manifest lock").clone()
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Usage(format!("--jobs {}: {e}", self.jobs)))
    }

    // ---- inputs ----

    fn open(path: &Path) -> Result<BufReader<std::fs::File>> {
        std::fs::File::open(path)
            .map(BufReader::new)
            .map_err(|e| Error::io(path, e))
    }

    fn corpus_input(&self) -> Result<SentenceStore> {
        let path = self.input("corpus", &self.config.inputs.corpus)?;
        corpus_io::read_corpus(Self::open(&path)?).map_err(|e| Error::format(&path, e))
    }

    fn ingested_store(&self) -> Result<SentenceStore> {
        let path = self.artifact("corpus.tsv", "ingest")?;
        corpus_io::read_corpus(Self::open(&path)?).map_err(|e| Error::format(&path, e))
    }

    fn ingested_lm(&self) -> Result<TrigramLm> {
        let path = self.artifact("lm.arpa", "ingest")?;
        arpa::parse_arpa(Self::open(&path)?).map_err(|e| Error::format(&path, e))
    }

    pub fn vectors(&self) -> Result<VectorStore> {
        let path = self.input("vectors", &self.config.inputs.vectors)?;
        read_vectors(Self::open(&path)?, VectorFormat::from_path(&path))
            .map_err(|e| Error::format(&path, e))
    }

    fn ngrams(&self) -> Result<NgramTable> {
        let path = self.input("ngrams", &self.config.inputs.ngrams)?;
        resources_io::load_ngrams(Self::open(&path)?, &self.config.min_counts)
            .map_err(|e| Error::format(&path, e))
    }

    pub fn unigrams(&self) -> Result<FreqTable> {
        let path = self.input("unigrams", &self.config.inputs.unigrams)?;
        let (table, duplicates) = resources_io::load_unigram_freq(Self::open(&path)?)
            .map_err(|e| Error::format(&path, e))?;
        if !duplicates.is_empty() {
            log::warn!(
                "{}: {} duplicate words, last entry kept",
                path.display(),
                duplicates.len()
            );
        }
        Ok(table)
    }

    fn relations(&self) -> Result<RelationSet> {
        let path = self.input("relations", &self.config.inputs.relations)?;
        resources_io::load_relations(Self::open(&path)?).map_err(|e| Error::format(&path, e))
    }

    /// `--target` when given, else the configured or bundled word list.
    pub fn targets(
        &self,
        target: Option<&str>,
        pos: Pos,
        words: Option<&Path>,
    ) -> Result<Vec<(String, Pos)>> {
        if let Some(word) = target {
            return Ok(vec![(word.to_lowercase(), pos)]);
        }
        let path = match words {
            Some(p) => Some(crate::config::resolve(&self.root, p)),
            None => self
                .config
                .inputs
                .words
                .as_ref()
                .map(|p| crate::config::resolve(&self.root, p)),
        };
        match path {
            Some(path) => resources_io::load_word_list(Self::open(&path)?)
                .map_err(|e| Error::format(&path, e)),
            None => Ok(resources_io::load_word_list(DEFAULT_WORDS.as_bytes())
                .expect("bundled list parses")),
        }
    }

    // ---- stages ----

    pub fn ingest(&self) -> Result<IngestSummary> {
        let store = self.corpus_input()?;
        let (lm, lm_source) = match &self.config.inputs.lm {
            Some(_) => {
                let path = self.input("lm", &self.config.inputs.lm)?;
                (
                    arpa::parse_arpa(Self::open(&path)?).map_err(|e| Error::format(&path, e))?,
                    "input",
                )
            }
            None => {
                let forms: Vec<Vec<String>> = store
                    .sentences()
                    .iter()
                    .map(|s| {
                        normalize_numbers(s.clone())
                            .forms()
                            .map(str::to_string)
                            .collect()
                    })
                    .collect();
                (
                    train_trigram_on(&forms, TrainConfig::default()).map_err(Error::data)?,
                    "trained",
                )
            }
        };

        let mut corpus = format!("# config_hash={}\n", self.hash).into_bytes();
        corpus_io::write_corpus(&mut corpus, store.sentences()).expect("writing to memory");
        self.emit("ingest", "corpus.tsv", &corpus)?;
        let mut lm_bytes = format!("# config_hash={}\n", self.hash).into_bytes();
        arpa::write_arpa(&mut lm_bytes, &lm).expect("writing to memory");
        self.emit("ingest", "lm.arpa", &lm_bytes)?;

        let (u, b, t) = lm.counts();
        let summary = IngestSummary {
            sentences: store.len(),
            tokens: store.sentences().iter().map(|s| s.len()).sum(),
            indexed_lemmas: store.index_len(),
            lm_source: lm_source.to_string(),
            lm_counts: [u, b, t],
        };
        self.emit_json("ingest", "ingest.json", &summary)?;
        Ok(summary)
    }

    pub fn distractors(&self, targets: &[(String, Pos)]) -> Result<Vec<DistractorSet>> {
        let ngrams = self.ngrams()?;
        let freqs = self.unigrams()?;
        let relations = self.relations()?;
        let mut out = Vec::with_capacity(targets.len());
        for (word, pos) in targets {
            let candidates = candidate_fillers(word, *pos, &ngrams, self.config.candidate_rule);
            let set = select_distractors(
                word,
                *pos,
                &candidates,
                &relations,
                &freqs,
                self.config.distractors,
                self.config.seed,
            )
            .map_err(|e| Error::Data(format!("{word}/{pos}: {e}", pos = pos.as_str())))?;
            self.emit_json(
                "distractors",
                &format!("distractors/{}.json", target_key(word, *pos)),
                &set,
            )?;
            out.push(set);
        }
        Ok(out)
    }

    fn dataset_seed(&self, key: &str) -> u64 {
        derive_seed(self.config.seed, key)
    }

    pub fn build_datasets(&self, targets: &[(String, Pos)]) -> Result<Vec<ClozeDataset>> {
        let store = self.ingested_store()?;
        let mut out = Vec::with_capacity(targets.len());
        for (word, pos) in targets {
            let key = target_key(word, *pos);
            let set: DistractorSet =
                self.read_stamped(&format!("distractors/{key}.json"), "distractors")?;
            let config = infolab_core::classify::DatasetConfig {
                seed: self.dataset_seed(&key),
                ..self.config.dataset
            };
            let data = build_dataset(&store, &set, &config)
                .map_err(|e| Error::Data(format!("{key}: {e}")))?;
            self.emit_json("build-dataset", &format!("datasets/{key}.json"), &data)?;
            for (name, split) in [
                ("train", &data.train),
                ("dev", &data.dev),
                ("test", &data.test),
            ] {
                let mut buf = Vec::new();
                write_dataset(&mut buf, split).expect("writing to memory");
                self.emit(
                    "build-dataset",
                    &format!("datasets/{key}.{name}.jsonl"),
                    &buf,
                )?;
            }
            out.push(data);
        }
        Ok(out)
    }

    fn dataset(&self, key: &str) -> Result<ClozeDataset> {
        self.read_stamped(&format!("datasets/{key}.json"), "build-dataset")
    }

    fn train_one(
        &self,
        data: &ClozeDataset,
        kind: ModelKind,
        source: &FeatureSource<'_>,
    ) -> Result<(Classifier, Accuracy)> {
        let key = target_key(&data.target, data.pos);
        let seed = derive_seed(self.dataset_seed(&key), kind.as_str());
        let err = |e: infolab_core::classify::ClassifyError| {
            Error::Data(format!("{key} {}: {e}", kind.as_str()))
        };
        let model = match kind {
            ModelKind::BagNgram => Classifier::BagNgram(
                train_bag_ngram(&data.train, self.config.bag, seed).map_err(err)?,
            ),
            ModelKind::FeatureLr => Classifier::FeatureLr(
                train_feature_lr(&data.train, source, self.config.feature_lr).map_err(err)?,
            ),
            ModelKind::ContextFfnn => Classifier::ContextFfnn(
                train_context_ffnn(&data.train, source, self.config.ffnn, seed).map_err(err)?,
            ),
        };
        // evaluate the stored (f32) parameters, which is what later stages load
        let model = decode_model(&encode_model(&model)).expect("fresh encoding decodes");
        let acc = |split: &[infolab_core::classify::LabeledExample]| {
            evaluate_accuracy(&model, split, source).map_err(err)
        };
        let accuracy = Accuracy {
            train: acc(&data.train)?,
            dev: if data.dev.is_empty() {
                None
            } else {
                Some(acc(&data.dev)?)
            },
            test: acc(&data.test)?,
        };
        Ok((model, accuracy))
    }

    pub fn train(
        &self,
        targets: &[(String, Pos)],
        kinds: &[ModelKind],
    ) -> Result<Vec<ModelSummary>> {
        let needs_vectors = kinds.iter().any(|k| *k != ModelKind::BagNgram);
        let needs_lm = kinds.contains(&ModelKind::FeatureLr);
        let lm = if needs_lm {
            Some(self.ingested_lm()?)
        } else {
            None
        };
        let vectors = if needs_vectors {
            Some(self.vectors()?)
        } else {
            None
        };
        let encoder = vectors
            .as_ref()
            .map(|v| MeanContextEncoder::new(v, self.config.context_window));
        let datasets: Vec<ClozeDataset> = targets
            .iter()
            .map(|(w, p)| self.dataset(&target_key(w, *p)))
            .collect::<Result<_>>()?;

        let trained: Vec<Vec<(Classifier, Accuracy)>> = self.thread_pool()?.install(|| {
            datasets
                .par_iter()
                .map(|data| {
                    let mut source =
                        FeatureSource::new(&data.target, &data.distractors.distractors);
                    if let Some(lm) = &lm {
                        source = source.with_lm(lm);
                    }
                    if let (Some(v), Some(e)) = (&vectors, &encoder) {
                        source = source.with_vectors(v, e);
                    }
                    kinds
                        .iter()
                        .map(|k| self.train_one(data, *k, &source))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut out = Vec::new();
        for (data, models) in datasets.iter().zip(trained) {
            let key = target_key(&data.target, data.pos);
            for (kind, (model, accuracy)) in kinds.iter().zip(models) {
                let bytes = encode_model(&model);
                self.emit(
                    "train",
                    &format!("models/{key}.{}.cilm", kind.as_str()),
                    &bytes,
                )?;
                let summary = ModelSummary {
                    target: data.target.clone(),
                    pos: data.pos,
                    classifier: kind.as_str().to_string(),
                    accuracy,
                    model_sha256: sha256_hex(&bytes),
                };
                self.emit_json(
                    "train",
                    &format!("models/{key}.{}.json", kind.as_str()),
                    &summary,
                )?;
                out.push(summary);
            }
        }
        Ok(out)
    }

    pub fn load_model(&self, key: &str, kind: ModelKind) -> Result<Classifier> {
        let path = self.artifact(&format!("models/{key}.{}.cilm", kind.as_str()), "train")?;
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        decode_model(&bytes).map_err(|e| Error::format(&path, e))
    }

    /// Score the positive test sentences with a trained classifier.
    pub fn score(&self, targets: &[(String, Pos)], kind: ModelKind) -> Result<Vec<Vec<PoolRow>>> {
        let lm = if kind == ModelKind::FeatureLr {
            Some(self.ingested_lm()?)
        } else {
            None
        };
        let vectors = if kind == ModelKind::BagNgram {
            None
        } else {
            Some(self.vectors()?)
        };
        let encoder = vectors
            .as_ref()
            .map(|v| MeanContextEncoder::new(v, self.config.context_window));
        let mut out = Vec::new();
        for (word, pos) in targets {
            let key = target_key(word, *pos);
            let data = self.dataset(&key)?;
            let model = self.load_model(&key, kind)?;
            let mut source = FeatureSource::new(&data.target, &data.distractors.distractors);
            if let Some(lm) = &lm {
                source = source.with_lm(lm);
            }
            if let (Some(v), Some(e)) = (&vectors, &encoder) {
                source = source.with_vectors(v, e);
            }
            let rows = data
                .test
                .iter()
                .filter(|ex| ex.label)
                .map(|ex| {
                    let prob = model
                        .predict_proba(&ex.masked, &source)
                        .map_err(|e| Error::Data(format!("{key}: {e}")))?;
                    Ok(PoolRow {
                        doc_id: ex.doc_id.clone(),
                        sent_id: ex.sent_id.clone(),
                        position: ex.masked.slot_index,
                        prob,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &rows).expect("writing to memory");
            self.emit(
                "score",
                &format!("pools/{key}.{}.jsonl", kind.as_str()),
                &buf,
            )?;
            out.push(rows);
        }
        Ok(out)
    }

    pub fn baseline(&self, targets: &[(String, Pos)]) -> Result<Vec<BaselineSummary>> {
        let vectors = self.vectors()?;
        let encoder = MeanContextEncoder::new(&vectors, self.config.context_window);
        let mut out = Vec::new();
        for (word, pos) in targets {
            let key = target_key(word, *pos);
            let data = self.dataset(&key)?;
            let source = FeatureSource::new(&data.target, &data.distractors.distractors)
                .with_vectors(&vectors, &encoder);
            let acc = |split| {
                evaluate_accuracy(&RankBaseline, split, &source)
                    .map_err(|e| Error::Data(format!("{key}: {e}")))
            };
            let summary = BaselineSummary {
                target: data.target.clone(),
                pos: data.pos,
                dev: if data.dev.is_empty() {
                    None
                } else {
                    Some(acc(&data.dev)?)
                },
                test: acc(&data.test)?,
            };
            self.emit_json("baseline", &format!("baseline/{key}.json"), &summary)?;
            out.push(summary);
        }
        Ok(out)
    }

    fn word_pool(
        &self,
        store: &SentenceStore,
        word: &str,
        pos: Pos,
        kind: ModelKind,
    ) -> Result<WordPool> {
        let rel = format!("pools/{}.{}.jsonl", target_key(word, pos), kind.as_str());
        let path = self.artifact(&rel, "score")?;
        let rows: Vec<PoolRow> =
            read_jsonl(Self::open(&path)?).map_err(|e| Error::format(&path, e))?;
        let pool: Vec<ScoredSentence> =
            resolve_pool(&rows, store).map_err(|e| Error::format(&path, e))?;
        Ok(WordPool {
            word: word.to_string(),
            pos,
            pool,
        })
    }

    /// Fine-tune under each selected regime; unselected regimes are NaN.
    pub fn finetune(
        &self,
        targets: &[(String, Pos)],
        kind: ModelKind,
        regimes: &[Regime],
    ) -> Result<Vec<WordRow>> {
        let store = self.ingested_store()?;
        let pretrained = self.vectors()?;
        let pools: Vec<WordPool> = targets
            .iter()
            .map(|(w, p)| self.word_pool(&store, w, *p, kind))
            .collect::<Result<_>>()?;
        let params = infolab_core::curate::SgnsParams {
            seed: self.config.seed,
            ..self.config.sgns
        };
        let jobs: Vec<(usize, Regime)> = (0..pools.len())
            .flat_map(|i| regimes.iter().map(move |r| (i, *r)))
            .collect();
        let sims: Vec<f64> = self.thread_pool()?.install(|| {
            jobs.par_iter()
                .map(|(i, regime)| {
                    run_regime(
                        &pools[*i],
                        *regime,
                        &pretrained,
                        &params,
                        &self.config.sizes,
                    )
                    .map_err(|e| Error::Data(format!("{} {regime}: {e}", pools[*i].word)))
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut rows: Vec<WordRow> = pools
            .iter()
            .map(|p| WordRow {
                word: p.word.clone(),
                sims: [f64::NAN; 6],
            })
            .collect();
        for ((i, regime), sim) in jobs.iter().zip(sims) {
            let col = Regime::ALL
                .iter()
                .position(|r| r == regime)
                .expect("regime in ALL");
            rows[*i].sims[col] = sim;
        }
        for (row, pool) in rows.iter().zip(&pools) {
            let doc = FinetuneRow {
                target: row.word.clone(),
                pos: pool.pos,
                classifier: kind.as_str().to_string(),
                sims: Regime::ALL
                    .iter()
                    .filter(|r| !row.get(**r).is_nan())
                    .map(|r| (r.column().to_string(), row.get(*r)))
                    .collect(),
            };
            self.emit_json(
                "finetune",
                &format!("finetune/{}.json", target_key(&row.word, pool.pos)),
                &doc,
            )?;
        }
        Ok(rows)
    }

    pub fn experiment(
        &self,
        targets: &[(String, Pos)],
        kind: ModelKind,
        regimes: &[Regime],
    ) -> Result<ExperimentReport> {
        let rows = self.finetune(targets, kind, regimes)?;
        let report = ExperimentReport::from_rows(
            rows,
            format!("test-split positives scored by {}", kind.as_str()),
        );
        self.emit(
            "experiment",
            "experiment.json",
            &to_json(&ReportDoc::new(&report, &self.hash)),
        )?;
        let mut tsv = Vec::new();
        write_tsv(&mut tsv, &report, &self.hash).expect("writing to memory");
        self.emit("experiment", "experiment.tsv", &tsv)?;
        Ok(report)
    }

    /// Check every manifest entry against the file on disk. Content drift
    /// is always an integrity error; mixed config hashes are one unless
    /// `force` is set.
    pub fn verify_manifest(&self, force: bool) -> Result<()> {
        let manifest = self.manifest();
        let mut hashes = BTreeSet::new();
        for (rel, entry) in &manifest.artifacts {
            let path = self.out.join(rel);
            let bytes = std::fs::read(&path).map_err(|_| {
                Error::Integrity(format!(
                    "{} is listed in the manifest but missing",
                    path.display()
                ))
            })?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::Integrity(format!(
                    "{} does not match its manifest digest",
                    path.display()
                )));
            }
            if !rel.starts_with("report.") {
                hashes.insert(entry.config_hash.clone());
            }
        }
        hashes.insert(self.hash.clone());
        if hashes.len() > 1 && !force {
            return Err(Error::Integrity(format!(
                "artifacts come from {} different configs ({}); rerun the stale stages or pass --force",
                hashes.len(),
                hashes.iter().map(|h| &h[..12]).collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(())
    }

    pub fn report(&self, force: bool) -> Result<ReportDoc> {
        self.verify_manifest(force)?;
        let path = self.artifact("experiment.json", "experiment")?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut doc: ReportDoc = serde_json::from_str(&text)
            .map_err(|e| Error::format(&path, FormatError::parse(e.line(), e.to_string())))?;
        let report = doc
            .to_report()
            .map_err(|e| Error::format(&path, FormatError::Data(e)))?;

        let freqs = self.unigrams()?;
        let word_pos: BTreeMap<String, Pos> =
            self.targets(None, Pos::Noun, None)?.into_iter().collect();
        let senses: BTreeMap<String, u32> = match &self.config.inputs.senses {
            Some(_) => {
                let path = self.input("senses", &self.config.inputs.senses)?;
                let table = resources_io::load_senses(Self::open(&path)?)
                    .map_err(|e| Error::format(&path, e))?;
                report
                    .rows
                    .iter()
                    .filter_map(|r| {
                        let pos = word_pos.get(&r.word).copied().unwrap_or(Pos::Noun);
                        table
                            .get(&(r.word.clone(), pos))
                            .map(|n| (r.word.clone(), *n))
                    })
                    .collect()
            }
            None => BTreeMap::new(),
        };
        let fp = frequency_polysemy_analysis(
            &report,
            &freqs,
            &senses,
            self.config.permutations,
            self.config.seed,
        )
        .map_err(|e| Error::Data(format!("frequency analysis: {e}")))?;
        doc.config_hash = self.hash.clone();
        doc.frequency_polysemy = Some(fp.clone());
        self.emit("report", "report.json", &to_json(&doc))?;
        let mut tsv = Vec::new();
        write_tsv(&mut tsv, &report, &self.hash).expect("writing to memory");
        tsv.push(b'\n');
        write_frequency_polysemy(&mut tsv, &fp).expect("writing to memory");
        self.emit("report", "report.tsv", &tsv)?;
        Ok(doc)
    }
}
