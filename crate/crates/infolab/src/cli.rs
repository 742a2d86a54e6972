//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use infolab_core::annotate::{
    agreement, classifier_annotation_correlation, AnnotationRecord, AnnotationState, Measure,
    Provenance,
};
use infolab_core::corpus::Pos;
use serde_json::json;

use crate::annoserve::{http, load_task_set, AnnotationService, SystemClock};
use crate::config::{data_root, RunConfig};
use crate::error::{Error, ExitCode, Result};
use crate::model_io::ModelKind;
use crate::pipeline::{parse_regimes, Pipeline};

#[derive(Parser, Debug)]
#[command(name = "infolab", version, about = "Sentence informativeness pipeline")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root for relative input paths.
    #[arg(long, global = true, env = "INFOLAB_DATA_DIR")]
    pub data_root: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Config override as `key.path=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub inputs: InputFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct InputFlags {
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub ngrams: Option<PathBuf>,
    #[arg(long, global = true)]
    pub unigrams: Option<PathBuf>,
    #[arg(long, global = true)]
    pub relations: Option<PathBuf>,
    #[arg(long, global = true)]
    pub vectors: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lm: Option<PathBuf>,
    #[arg(long, global = true)]
    pub senses: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Targets {
    /// A single target lemma; without it the word list is used.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value = "NOUN")]
    pub pos: Pos,
    /// Word list (`word` or `word<TAB>POS` per line).
    #[arg(long)]
    pub words: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    #[value(alias = "bag_ngram")]
    Bag,
    #[value(alias = "feature_lr")]
    Lr,
    #[value(alias = "context_ffnn")]
    Ffnn,
    All,
}

impl ClassifierArg {
    fn kinds(self) -> Vec<ModelKind> {
        match self {
            ClassifierArg::Bag => vec![ModelKind::BagNgram],
            ClassifierArg::Lr => vec![ModelKind::FeatureLr],
            ClassifierArg::Ffnn => vec![ModelKind::ContextFfnn],
            ClassifierArg::All => vec![
                ModelKind::BagNgram,
                ModelKind::FeatureLr,
                ModelKind::ContextFfnn,
            ],
        }
    }

    fn single(self) -> Result<ModelKind> {
        match self.kinds()[..] {
            [k] => Ok(k),
            _ => Err(Error::Usage("choose one classifier".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProvenanceArg {
    Corpus,
    Definition,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Index the corpus and prepare the language model.
    Ingest,
    /// Select distractors for each target.
    Distractors {
        #[command(flatten)]
        targets: Targets,
        /// Include the per-candidate filter log.
        #[arg(long)]
        verbose: bool,
    },
    /// Build cloze datasets from the corpus and distractor sets.
    BuildDataset {
        #[command(flatten)]
        targets: Targets,
    },
    /// Train classifiers on each dataset.
    Train {
        #[command(flatten)]
        targets: Targets,
        #[arg(long, value_enum, default_value = "all")]
        classifier: ClassifierArg,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score the positive test sentences with a trained classifier.
    Score {
        #[command(flatten)]
        targets: Targets,
        #[arg(long, value_enum, default_value = "bag")]
        classifier: ClassifierArg,
    },
    /// Accuracy of the context-similarity ranking baseline.
    Baseline {
        #[command(flatten)]
        targets: Targets,
    },
    /// Serve annotation sessions over HTTP.
    AnnotateServe {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory holding the annotation log.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Task set JSON file; repeatable.
        #[arg(long = "task-set")]
        task_sets: Vec<PathBuf>,
        /// Mark every imported task with this provenance.
        #[arg(long, value_enum)]
        provenance: Option<ProvenanceArg>,
        /// Sync the log to disk after every write.
        #[arg(long)]
        fsync: bool,
    },
    /// Inter-annotator agreement from exported records.
    Agreement {
        #[arg(long)]
        records: PathBuf,
        #[arg(long = "task-set", required = true)]
        task_sets: Vec<PathBuf>,
        /// Task set id; may be omitted when only one set is given.
        #[arg(long = "set-id")]
        set_id: Option<String>,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        measure: Measure,
        /// JSON object of task id to classifier probability.
        #[arg(long)]
        probs: Option<PathBuf>,
    },
    /// Fine-tune embeddings per selection regime.
    Finetune {
        #[command(flatten)]
        targets: Targets,
        #[arg(long, value_enum, default_value = "bag")]
        classifier: ClassifierArg,
        #[arg(long, default_value = "all")]
        regimes: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Fine-tune and aggregate the selection experiment table.
    Experiment {
        #[command(flatten)]
        targets: Targets,
        #[arg(long, value_enum, default_value = "bag")]
        classifier: ClassifierArg,
        #[arg(long, default_value = "all")]
        regimes: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Verify artifacts and add the frequency and polysemy analysis.
    Report {
        /// Accept artifacts produced under different configs.
        #[arg(long)]
        force: bool,
    },
    /// Convert one-sentence-per-line text to the tagged corpus format.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "doc")]
        doc_id: String,
    },
    /// Extract relation and sense tables from a WordNet dict directory.
    ExtractWordnet {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        relations: PathBuf,
        #[arg(long)]
        senses: PathBuf,
    },
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let inputs = &mut config.inputs;
    let flags = &cli.inputs;
    for (slot, flag) in [
        (&mut inputs.corpus, &flags.corpus),
        (&mut inputs.ngrams, &flags.ngrams),
        (&mut inputs.unigrams, &flags.unigrams),
        (&mut inputs.relations, &flags.relations),
        (&mut inputs.vectors, &flags.vectors),
        (&mut inputs.lm, &flags.lm),
        (&mut inputs.senses, &flags.senses),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    if let Some(out) = &cli.out {
        config.out_dir.clone_from(out);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.with_overrides(cli.overrides.iter().map(String::as_str))
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    writeln!(out, "{text}").map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format(path, crate::FormatError::parse(e.line(), e.to_string())))
}

#[allow(clippy::too_many_arguments)]
fn run_agreement(
    out: &mut dyn Write,
    records: &Path,
    task_sets: &[PathBuf],
    set_id: Option<&str>,
    (a, b): (&str, &str),
    measure: Measure,
    probs: Option<&Path>,
    config: &RunConfig,
) -> Result<()> {
    let sets = task_sets
        .iter()
        .map(|p| load_task_set(p, None))
        .collect::<Result<Vec<_>>>()?;
    let set_id = match set_id {
        Some(id) => id.to_string(),
        None if sets.len() == 1 => sets[0].id.clone(),
        None => {
            return Err(Error::Usage(
                "several task sets given; choose one with --set".into(),
            ))
        }
    };
    let file = std::fs::File::open(records).map_err(|e| Error::io(records, e))?;
    let records: Vec<AnnotationRecord> = crate::jsonl::read_jsonl(std::io::BufReader::new(file))
        .map_err(|e| Error::format(records, e))?;
    let mut state = AnnotationState::new(sets).map_err(Error::data)?;
    state.import_records(records.clone()).map_err(Error::data)?;
    let agree = agreement(&state, &set_id, a, b, measure).map_err(Error::data)?;
    let mut doc = json!({"set": set_id, "a": a, "b": b, "measure": measure, "agreement": agree});
    if let Some(path) = probs {
        let probs: BTreeMap<String, f64> = read_json(path)?;
        let corr = classifier_annotation_correlation(
            &probs,
            &records,
            measure,
            config.permutations,
            config.seed,
        )
        .map_err(Error::data)?;
        doc["classifier_correlation"] = serde_json::to_value(corr).expect("serializes");
    }
    print_json(out, &doc)
}

fn serve(
    data_dir: PathBuf,
    task_sets: &[PathBuf],
    provenance: Option<ProvenanceArg>,
    fsync: bool,
    addr: std::net::SocketAddr,
) -> Result<()> {
    let provenance = provenance.map(|p| match p {
        ProvenanceArg::Corpus => Provenance::Corpus,
        ProvenanceArg::Definition => Provenance::Definition,
    });
    let sets = task_sets
        .iter()
        .map(|p| load_task_set(p, provenance))
        .collect::<Result<Vec<_>>>()?;
    let service = AnnotationService::open(&data_dir, sets, Arc::new(SystemClock))
        .map_err(|e| match e {
            crate::annoserve::ServiceError::Annotate(a) => Error::data(a),
            crate::annoserve::ServiceError::Log { .. } => Error::Integrity(e.to_string()),
            crate::annoserve::ServiceError::Io(io) => Error::io(&data_dir, io),
        })?
        .with_fsync(fsync);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io(Path::new("<runtime>"), e))?;
    runtime
        .block_on(http::serve(Arc::new(service), addr))
        .map_err(|e| Error::io(Path::new(&addr.to_string()), e))
}

/// Run a parsed command, writing its report to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let config = effective_config(&cli)?;
    let root = data_root(cli.data_root.as_deref());
    let pipeline = || Pipeline::new(config.clone(), root.clone());
    let targets =
        |p: &Pipeline, t: &Targets| p.targets(t.target.as_deref(), t.pos, t.words.as_deref());

    match cli.command {
        Command::Ingest => {
            let p = pipeline()?;
            let summary = p.ingest()?;
            p.finish()?;
            print_json(out, &serde_json::to_value(summary).expect("serializes"))
        }
        Command::Distractors {
            targets: t,
            verbose,
        } => {
            let p = pipeline()?;
            let sets = p.distractors(&targets(&p, &t)?)?;
            p.finish()?;
            for set in sets {
                let mut doc = json!({
                    "target": set.target, "pos": set.pos, "distractors": set.distractors,
                    "seed": set.seed, "pool_size": set.pool_size,
                });
                if verbose {
                    doc["filter_log"] = serde_json::to_value(&set.filter_log).expect("serializes");
                }
                print_json(out, &doc)?;
            }
            Ok(())
        }
        Command::BuildDataset { targets: t } => {
            let p = pipeline()?;
            let sets = p.build_datasets(&targets(&p, &t)?)?;
            p.finish()?;
            for d in sets {
                print_json(
                    out,
                    &json!({"target": d.target, "pos": d.pos, "train": d.train.len(), "dev": d.dev.len(), "test": d.test.len()}),
                )?;
            }
            Ok(())
        }
        Command::Train {
            targets: t,
            classifier,
            jobs,
        } => {
            let p = pipeline()?.with_jobs(jobs);
            let summaries = p.train(&targets(&p, &t)?, &classifier.kinds())?;
            p.finish()?;
            print_json(out, &serde_json::to_value(summaries).expect("serializes"))
        }
        Command::Score {
            targets: t,
            classifier,
        } => {
            let p = pipeline()?;
            let pools = p.score(&targets(&p, &t)?, classifier.single()?)?;
            p.finish()?;
            print_json(
                out,
                &json!({"pools": pools.iter().map(Vec::len).collect::<Vec<_>>()}),
            )
        }
        Command::Baseline { targets: t } => {
            let p = pipeline()?;
            let rows = p.baseline(&targets(&p, &t)?)?;
            p.finish()?;
            print_json(out, &serde_json::to_value(rows).expect("serializes"))
        }
        Command::Finetune {
            targets: t,
            classifier,
            regimes,
            jobs,
        } => {
            let p = pipeline()?.with_jobs(jobs);
            let rows = p.finetune(
                &targets(&p, &t)?,
                classifier.single()?,
                &parse_regimes(&regimes)?,
            )?;
            p.finish()?;
            for row in rows {
                let sims: BTreeMap<&str, f64> = infolab_core::curate::Regime::ALL
                    .iter()
                    .filter(|r| !row.get(**r).is_nan())
                    .map(|r| (r.column(), row.get(*r)))
                    .collect();
                print_json(out, &json!({"word": row.word, "sims": sims}))?;
            }
            Ok(())
        }
        Command::Experiment {
            targets: t,
            classifier,
            regimes,
            jobs,
        } => {
            let p = pipeline()?.with_jobs(jobs);
            let report = p.experiment(
                &targets(&p, &t)?,
                classifier.single()?,
                &parse_regimes(&regimes)?,
            )?;
            p.finish()?;
            crate::report::write_tsv(&mut *out, &report, &p.hash)
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
        Command::Report { force } => {
            let p = pipeline()?;
            let doc = p.report(force)?;
            p.finish()?;
            print_json(out, &serde_json::to_value(doc).expect("serializes"))
        }
        Command::AnnotateServe {
            port,
            host,
            data_dir,
            task_sets,
            provenance,
            fsync,
        } => {
            let data_dir = data_dir.unwrap_or_else(|| config.out_dir.join("annotations"));
            serve(data_dir, &task_sets, provenance, fsync, (host, port).into())
        }
        Command::Agreement {
            records,
            task_sets,
            set_id,
            a,
            b,
            measure,
            probs,
        } => run_agreement(
            out,
            &records,
            &task_sets,
            set_id.as_deref(),
            (&a, &b),
            measure,
            probs.as_deref(),
            &config,
        ),
        Command::Convert {
            input,
            output,
            doc_id,
        } => {
            let reader = std::fs::File::open(&input).map_err(|e| Error::io(&input, e))?;
            let mut buf = Vec::new();
            let n =
                crate::corpus_io::convert_plain(std::io::BufReader::new(reader), &mut buf, &doc_id)
                    .map_err(|e| Error::format(&input, e))?;
            crate::config::write_atomic(&output, &buf)?;
            print_json(out, &json!({"sentences": n}))
        }
        Command::ExtractWordnet {
            dict,
            relations,
            senses,
        } => {
            let (rows, counts) = crate::wordnet::extract_dir(&dict)?;
            let mut buf = Vec::new();
            crate::wordnet::write_relations(&mut buf, &rows).expect("writing to memory");
            crate::config::write_atomic(&relations, &buf)?;
            let mut buf = Vec::new();
            crate::wordnet::write_senses(&mut buf, &counts).expect("writing to memory");
            crate::config::write_atomic(&senses, &buf)?;
            print_json(
                out,
                &json!({"relations": rows.len(), "senses": counts.len()}),
            )
        }
    }
}

/// Parse, run and map the outcome to a process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::Usage as i32
            } else {
                ExitCode::Ok as i32
            };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code() as i32
        }
    }
}
