//! Generated corpora with known structure, for tests, benchmarks and demos.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use infolab_core::classify::{build_dataset, ClozeDataset, DatasetConfig};
use infolab_core::corpus::{Pos, Sentence, SentenceStore, Token};
use infolab_core::curate::{ScoredSentence, WordPool};
use infolab_core::distractors::DistractorSet;
use infolab_core::lm::{train_trigram_on, TrainConfig, TrigramLm};
use infolab_core::rng::{derive_seed, seeded};
use infolab_core::vectors::VectorStore;
use rand::Rng;

fn noisy<R: Rng>(rng: &mut R, base: &[f64], scale: f64) -> Vec<f32> {
    base.iter()
        .map(|b| (b + scale * rng.gen_range(-1.0..1.0)) as f32)
        .collect()
}

fn unit(dim: usize, axis: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| if i == axis { 1.0 } else { 0.0 })
        .collect()
}

fn token(form: &str, pos: Pos) -> Token {
    Token::new(form, form, pos).expect("generated forms are non-empty")
}

/// Cloze task where target and distractor sentences draw their context
/// from two disjoint vocabularies.
pub struct SeparableCloze {
    pub store: SentenceStore,
    pub distractors: DistractorSet,
    pub dataset: ClozeDataset,
    /// Trained on a separate batch of generated sentences.
    pub lm: TrigramLm,
    pub vectors: VectorStore,
}

pub const SEPARABLE_TARGET: &str = "anchor";
const VOCAB: usize = 40;
const DIM: usize = 16;

fn separable_sentence<R: Rng>(rng: &mut R, head: &str, side: char, pos: Pos) -> Vec<Token> {
    let len = rng.gen_range(6..=10);
    let slot = rng.gen_range(0..len);
    (0..len)
        .map(|i| {
            if i == slot {
                token(head, pos)
            } else {
                token(
                    &format!("ctx{side}{:02}", rng.gen_range(0..VOCAB)),
                    Pos::Other,
                )
            }
        })
        .collect()
}

/// `n_train` and `n_test` examples per class; ten distractors share the
/// negative class evenly, so both counts must be multiples of ten.
pub fn separable_cloze(seed: u64, n_train: usize, n_test: usize) -> SeparableCloze {
    assert!(
        n_train.is_multiple_of(10) && n_test.is_multiple_of(10),
        "per-class counts must be multiples of 10"
    );
    let mut rng = seeded(derive_seed(seed, "separable"));
    let decoys: Vec<String> = (0..10).map(|i| format!("decoy{i}")).collect();
    let per_class = n_train + n_test;

    let mut sentences = Vec::new();
    let push = |tokens: Vec<Token>, sentences: &mut Vec<Sentence>| {
        let id = format!("{:06}", sentences.len());
        sentences.push(Sentence::new("synthetic", id, tokens).expect("non-empty"));
    };
    for _ in 0..per_class {
        push(
            separable_sentence(&mut rng, SEPARABLE_TARGET, 'a', Pos::Noun),
            &mut sentences,
        );
    }
    for d in &decoys {
        for _ in 0..per_class / 10 {
            push(
                separable_sentence(&mut rng, d, 'b', Pos::Noun),
                &mut sentences,
            );
        }
    }
    let store = SentenceStore::from_sentences(sentences).expect("unique ids");

    let mut lm_rng = seeded(derive_seed(seed, "separable-lm"));
    let mut lm_corpus: Vec<Vec<String>> = Vec::new();
    for i in 0..400 {
        let (head, side) = if i % 2 == 0 {
            (SEPARABLE_TARGET, 'a')
        } else {
            (decoys[(i / 2) % 10].as_str(), 'b')
        };
        lm_corpus.push(
            separable_sentence(&mut lm_rng, head, side, Pos::Noun)
                .into_iter()
                .map(|t| t.form)
                .collect(),
        );
    }
    let lm = train_trigram_on(&lm_corpus, TrainConfig::default()).expect("valid config");

    let mut v_rng = seeded(derive_seed(seed, "separable-vectors"));
    let mut vectors = VectorStore::new(DIM);
    let (ua, ub) = (unit(DIM, 0), unit(DIM, 1));
    vectors
        .push(SEPARABLE_TARGET, &noisy(&mut v_rng, &ua, 0.1))
        .expect("fresh word");
    for d in &decoys {
        vectors
            .push(d.clone(), &noisy(&mut v_rng, &ub, 0.3))
            .expect("fresh word");
    }
    for (side, base) in [('a', &ua), ('b', &ub)] {
        for k in 0..VOCAB {
            vectors
                .push(format!("ctx{side}{k:02}"), &noisy(&mut v_rng, base, 0.4))
                .expect("fresh word");
        }
    }

    let distractors = DistractorSet {
        target: SEPARABLE_TARGET.into(),
        pos: Pos::Noun,
        distractors: decoys,
        pool_size: 10,
        seed,
        filter_log: Vec::new(),
    };
    let train_share = n_train as f64 / per_class as f64;
    let config = DatasetConfig {
        n_pos: per_class,
        n_per_distractor: per_class / 10,
        split: (train_share, 0.0, 1.0 - train_share),
        seed,
        ..DatasetConfig::default()
    };
    let dataset =
        build_dataset(&store, &distractors, &config).expect("generated corpus is large enough");
    SeparableCloze {
        store,
        distractors,
        dataset,
        lm,
        vectors,
    }
}

/// Replace every label with a fair coin flip.
pub fn coin_flip_labels(dataset: &ClozeDataset, seed: u64) -> ClozeDataset {
    let mut rng = seeded(derive_seed(seed, "coin"));
    let mut out = dataset.clone();
    for ex in out
        .train
        .iter_mut()
        .chain(out.dev.iter_mut())
        .chain(out.test.iter_mut())
    {
        ex.label = rng.gen_bool(0.5);
    }
    out
}

/// A scored pool where high-probability sentences carry topical neighbours
/// of the target and low-probability ones only unrelated fillers.
pub struct SelectionWorld {
    pub pool: WordPool,
    pub pretrained: VectorStore,
}

pub const SELECTION_DIM: usize = 20;

pub fn selection_world(seed: u64, pool_size: usize) -> SelectionWorld {
    let mut rng = seeded(derive_seed(seed, "selection"));
    let gold: Vec<f64> = (0..SELECTION_DIM)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let mut pretrained = VectorStore::new(SELECTION_DIM);
    pretrained
        .push(
            SEPARABLE_TARGET,
            &gold.iter().map(|x| *x as f32).collect::<Vec<_>>(),
        )
        .expect("fresh word");
    let neighbours: Vec<String> = (0..30).map(|i| format!("near{i:02}")).collect();
    for w in &neighbours {
        pretrained
            .push(w.clone(), &noisy(&mut rng, &gold, 0.5))
            .expect("fresh word");
    }
    let fillers: Vec<String> = (0..300).map(|i| format!("fill{i:03}")).collect();
    let zero = vec![0.0; SELECTION_DIM];
    for w in &fillers {
        pretrained
            .push(w.clone(), &noisy(&mut rng, &zero, 1.0))
            .expect("fresh word");
    }

    let mut pool = Vec::with_capacity(pool_size);
    for i in 0..pool_size {
        let informative = i % 2 == 0;
        let len = 10;
        let slot = rng.gen_range(0..len);
        let tokens: Vec<Token> = (0..len)
            .map(|k| {
                if k == slot {
                    token(SEPARABLE_TARGET, Pos::Noun)
                } else if informative && rng.gen_bool(0.5) {
                    token(&neighbours[rng.gen_range(0..neighbours.len())], Pos::Other)
                } else {
                    token(&fillers[rng.gen_range(0..fillers.len())], Pos::Other)
                }
            })
            .collect();
        let prob = if informative {
            rng.gen_range(0.4..1.0)
        } else {
            rng.gen_range(0.0..0.6)
        };
        let sentence = Sentence::new("pool", format!("{i:06}"), tokens).expect("non-empty");
        pool.push(ScoredSentence::new(sentence, slot, prob).expect("valid probability"));
    }
    SelectionWorld {
        pool: WordPool {
            word: SEPARABLE_TARGET.into(),
            pos: Pos::Noun,
            pool,
        },
        pretrained,
    }
}

/// Paths written by [`write_pipeline_fixture`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub dir: PathBuf,
    pub corpus: PathBuf,
    pub ngrams: PathBuf,
    pub unigrams: PathBuf,
    pub relations: PathBuf,
    pub senses: PathBuf,
    pub vectors: PathBuf,
    pub words: PathBuf,
}

pub const FIXTURE_TARGETS: [&str; 3] = ["anchor", "harbor", "lantern"];
const FIXTURE_NOUNS: [&str; 14] = [
    "anchor", "harbor", "lantern", "mooring", "pebble", "meadow", "kettle", "saddle", "violin",
    "glacier", "orchard", "ledger", "compass", "tundra",
];
const FUNCTION_WORDS: [&str; 8] = ["the", "a", "of", "in", "and", "near", "with", "was"];

/// A small end-to-end input set: 14 nouns with topical cue words, n-gram
/// slots shared by all of them, one synonym pair and one rare noun. The
/// three targets are the least frequent of the rest, so each keeps at
/// least ten distractors.
pub fn write_pipeline_fixture(
    dir: &Path,
    seed: u64,
    sentences_per_noun: usize,
) -> std::io::Result<FixturePaths> {
    std::fs::create_dir_all(dir)?;
    let paths = FixturePaths {
        dir: dir.to_path_buf(),
        corpus: dir.join("corpus.tsv"),
        ngrams: dir.join("ngrams.tsv"),
        unigrams: dir.join("unigrams.tsv"),
        relations: dir.join("relations.tsv"),
        senses: dir.join("senses.tsv"),
        vectors: dir.join("vectors.txt"),
        words: dir.join("words.txt"),
    };
    let mut rng = seeded(derive_seed(seed, "fixture"));
    let cue = |noun: &str, k: usize| format!("{noun}_cue{k}");

    let mut sentences = Vec::new();
    for noun in FIXTURE_NOUNS {
        for _ in 0..sentences_per_noun {
            let len = rng.gen_range(6..=9);
            let slot = rng.gen_range(0..len);
            let cue_rate = rng.gen_range(0.0..0.8);
            let tokens: Vec<Token> = (0..len)
                .map(|i| {
                    if i == slot {
                        token(noun, Pos::Noun)
                    } else if rng.gen_bool(cue_rate) {
                        token(&cue(noun, rng.gen_range(0..4)), Pos::Other)
                    } else if rng.gen_bool(0.05) {
                        token(&rng.gen_range(1..100).to_string(), Pos::Other)
                    } else {
                        token(
                            FUNCTION_WORDS[rng.gen_range(0..FUNCTION_WORDS.len())],
                            Pos::Other,
                        )
                    }
                })
                .collect();
            let id = format!("{:06}", sentences.len());
            sentences.push(Sentence::new("fixture", id, tokens).expect("non-empty"));
        }
    }
    crate::corpus_io::write_corpus(std::fs::File::create(&paths.corpus)?, &sentences)?;

    let mut ngrams = std::io::BufWriter::new(std::fs::File::create(&paths.ngrams)?);
    for noun in FIXTURE_NOUNS {
        writeln!(ngrams, "50\tthe/DT\t{noun}/NN\tof/IN")?;
        writeln!(ngrams, "25\tnear/IN\tthe/DT\t{noun}/NN\twas/VBD")?;
    }
    ngrams.flush()?;

    let mut unigrams = std::io::BufWriter::new(std::fs::File::create(&paths.unigrams)?);
    for (i, noun) in FIXTURE_NOUNS.iter().enumerate() {
        let count = match *noun {
            "tundra" => 10,
            _ if i < FIXTURE_TARGETS.len() => 1000 + i,
            _ => 5000 + 100 * i,
        };
        writeln!(unigrams, "{noun}\t{count}")?;
    }
    unigrams.flush()?;

    std::fs::write(
        &paths.relations,
        "anchor\tNOUN\tsynonym\tmooring\nharbor\tNOUN\thypernym\tport\n",
    )?;
    std::fs::write(
        &paths.senses,
        "anchor\tNOUN\t6\nharbor\tNOUN\t3\nlantern\tNOUN\t2\n",
    )?;
    std::fs::write(
        &paths.words,
        FIXTURE_TARGETS
            .iter()
            .map(|w| format!("{w}\tNOUN\n"))
            .collect::<String>(),
    )?;

    let dim = 8;
    let mut store = VectorStore::new(dim);
    let mut axes: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for noun in FIXTURE_NOUNS {
        let axis: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        store
            .push(noun, &noisy(&mut rng, &axis, 0.1))
            .expect("fresh word");
        axes.insert(noun, axis);
    }
    for noun in FIXTURE_NOUNS {
        for k in 0..4 {
            store
                .push(cue(noun, k), &noisy(&mut rng, &axes[noun], 0.3))
                .expect("fresh word");
        }
    }
    for w in FUNCTION_WORDS {
        store
            .push(w, &noisy(&mut rng, &vec![0.0; dim], 0.5))
            .expect("fresh word");
    }
    store
        .push("NUMBER", &noisy(&mut rng, &vec![0.0; dim], 0.5))
        .expect("fresh word");
    crate::vectors_io::write_text(
        std::io::BufWriter::new(std::fs::File::create(&paths.vectors)?),
        &store,
    )?;
    Ok(paths)
}

/// Config for [`write_pipeline_fixture`] output, scaled so every stage runs
/// in well under a second per target.
pub fn fixture_config(paths: &FixturePaths, out_dir: &Path) -> crate::config::RunConfig {
    use infolab_core::classify::bag::BagHyper;
    use infolab_core::classify::ffnn::FfnnHyper;
    use infolab_core::curate::{RegimeSizes, SgnsParams};
    let defaults = crate::config::RunConfig::default();
    crate::config::RunConfig {
        inputs: crate::config::Inputs {
            corpus: Some(paths.corpus.clone()),
            ngrams: Some(paths.ngrams.clone()),
            unigrams: Some(paths.unigrams.clone()),
            relations: Some(paths.relations.clone()),
            vectors: Some(paths.vectors.clone()),
            lm: None,
            senses: Some(paths.senses.clone()),
            words: Some(paths.words.clone()),
        },
        out_dir: out_dir.to_path_buf(),
        seed: 11,
        dataset: DatasetConfig {
            n_pos: 60,
            n_per_distractor: 6,
            split: (0.5, 0.1, 0.4),
            ..DatasetConfig::default()
        },
        bag: BagHyper {
            dim: 16,
            epochs: 40,
            lr0: 0.5,
            ..BagHyper::default()
        },
        ffnn: FfnnHyper {
            h1: 16,
            h2: 8,
            epochs: 5,
            ..FfnnHyper::default()
        },
        sgns: SgnsParams {
            epochs: 2,
            ..SgnsParams::default()
        },
        sizes: RegimeSizes {
            n: 8,
            n_small: 6,
            m_bottom: 2,
        },
        permutations: 2000,
        ..defaults
    }
}
