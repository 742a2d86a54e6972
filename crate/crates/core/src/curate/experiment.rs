//! The six selection regimes, the per-word report, and the frequency and
//! polysemy follow-up.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::sgns::{fine_tune, sentence_forms, SgnsParams};
use super::{
    eval_similarity, retarget, select_sentences, CurateError, ScoredSentence, SelectionMode,
};
use crate::corpus::Pos;
use crate::resources::FreqTable;
use crate::rng::derive_seed;
use crate::stats::{spearman, spearman_pvalue};
use crate::vectors::VectorStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Inf,
    Uninf,
    InfUninf,
    Rand250,
    Rand200,
    RandUninf,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::Inf,
        Regime::Uninf,
        Regime::InfUninf,
        Regime::Rand250,
        Regime::Rand200,
        Regime::RandUninf,
    ];

    /// Report column name.
    pub fn column(self) -> &'static str {
        match self {
            Regime::Inf => "sim_inf",
            Regime::Uninf => "sim_uninf",
            Regime::InfUninf => "sim_inf_uninf",
            Regime::Rand250 => "sim_rand250",
            Regime::Rand200 => "sim_rand200",
            Regime::RandUninf => "sim_rand_uninf",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Column each regime's mean is compared with; `None` for the reference
    /// columns of the two blocks.
    pub fn reference(self) -> Option<Regime> {
        match self {
            Regime::Inf | Regime::Rand200 => None,
            Regime::Uninf | Regime::InfUninf | Regime::Rand250 => Some(Regime::Inf),
            Regime::RandUninf => Some(Regime::Rand200),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Selection sizes; the defaults give 250-sentence sets and 200 + 50.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeSizes {
    pub n: usize,
    pub n_small: usize,
    pub m_bottom: usize,
}

impl Default for RegimeSizes {
    fn default() -> Self {
        Self {
            n: 250,
            n_small: 200,
            m_bottom: 50,
        }
    }
}

impl RegimeSizes {
    pub fn selection(&self, regime: Regime) -> (SelectionMode, usize, usize) {
        match regime {
            Regime::Inf => (SelectionMode::Top, self.n, 0),
            Regime::Uninf => (SelectionMode::Bottom, self.n, 0),
            Regime::InfUninf => (SelectionMode::TopPlusBottom, self.n, 0),
            Regime::Rand250 => (SelectionMode::Random, self.n, 0),
            Regime::Rand200 => (SelectionMode::Random, self.n_small, 0),
            Regime::RandUninf => (SelectionMode::RandomPlusBottom, self.n_small, self.m_bottom),
        }
    }
}

/// Scored target-word sentences for one word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPool {
    pub word: String,
    pub pos: Pos,
    pub pool: Vec<ScoredSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRow {
    pub word: String,
    /// Similarities in [`Regime::ALL`] order.
    pub sims: [f64; 6],
}

impl WordRow {
    pub fn get(&self, regime: Regime) -> f64 {
        self.sims[regime.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<WordRow>,
    pub mean: [f64; 6],
    /// `mean(reference) - mean(column)` on the left block and
    /// `mean(column) - mean(reference)` on the right block.
    pub diff: [Option<f64>; 6],
    /// Where the pools came from, e.g. `test` or `dev`.
    pub provenance: String,
}

impl ExperimentReport {
    /// Aggregate rows; an empty row set gives zero means.
    pub fn from_rows(rows: Vec<WordRow>, provenance: impl Into<String>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean: [f64; 6] =
            core::array::from_fn(|i| rows.iter().map(|r| r.sims[i]).sum::<f64>() / n);
        let diff = Regime::ALL.map(|r| {
            r.reference().map(|base| match r {
                Regime::RandUninf => mean[r.index()] - mean[base.index()],
                _ => mean[base.index()] - mean[r.index()],
            })
        });
        Self {
            rows,
            mean,
            diff,
            provenance: provenance.into(),
        }
    }

    pub fn mean_of(&self, regime: Regime) -> f64 {
        self.mean[regime.index()]
    }

    pub fn diff_of(&self, regime: Regime) -> Option<f64> {
        self.diff[regime.index()]
    }

    pub fn row(&self, word: &str) -> Option<&WordRow> {
        self.rows.iter().find(|r| r.word == word)
    }
}

/// Seed of one (word, regime) job.
pub fn job_seed(seed: u64, word: &str, regime: Regime) -> u64 {
    derive_seed(derive_seed(seed, word), regime.column())
}

/// Select, retarget, fine-tune from fresh initialization and score one regime.
pub fn run_regime(
    pool: &WordPool,
    regime: Regime,
    pretrained: &VectorStore,
    params: &SgnsParams,
    sizes: &RegimeSizes,
) -> Result<f64, CurateError> {
    let seed = job_seed(params.seed, &pool.word, regime);
    let (mode, n, m) = sizes.selection(regime);
    let chosen = select_sentences(&pool.pool, mode, n, m, seed)?;
    let sentences: Vec<Vec<String>> = retarget(&chosen, &pool.word, pool.pos)?
        .iter()
        .map(sentence_forms)
        .collect();
    let job = SgnsParams { seed, ..*params };
    let trained = fine_tune(pretrained, &sentences, &job)?;
    eval_similarity(&trained, pretrained, &pool.word)
}

/// Run every regime for every word, sequentially.
pub fn run_selection_experiment(
    pools: &[WordPool],
    pretrained: &VectorStore,
    params: &SgnsParams,
    sizes: &RegimeSizes,
    provenance: &str,
) -> Result<ExperimentReport, CurateError> {
    let rows = pools
        .iter()
        .map(|pool| {
            let mut sims = [0.0; 6];
            for regime in Regime::ALL {
                sims[regime.index()] = run_regime(pool, regime, pretrained, params, sizes)?;
            }
            Ok(WordRow {
                word: pool.word.clone(),
                sims,
            })
        })
        .collect::<Result<Vec<_>, CurateError>>()?;
    Ok(ExperimentReport::from_rows(rows, provenance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub n: usize,
    /// Mean of `sim_inf - sim_rand250`; `None` for an empty group.
    pub mean_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPolysemy {
    pub n_freq: usize,
    pub rho_freq: f64,
    pub degenerate: bool,
    pub p_freq: f64,
    /// Sense count separating the groups: low is `< threshold`.
    pub threshold: u32,
    pub low: GroupMean,
    pub high: GroupMean,
}

/// Lower-middle element of the sorted sense counts.
pub fn polysemy_threshold(senses: &[u32]) -> Option<u32> {
    let mut s = senses.to_vec();
    s.sort_unstable();
    s.get(s.len().checked_sub(1)? / 2).copied()
}

/// Rank correlation of word frequency with `sim_inf - sim_rand250`, and the
/// same difference averaged over a median split by sense count. Words
/// missing from a table are left out of that part.
pub fn frequency_polysemy_analysis(
    report: &ExperimentReport,
    freqs: &FreqTable,
    senses: &BTreeMap<String, u32>,
    permutations: usize,
    seed: u64,
) -> Result<FrequencyPolysemy, CurateError> {
    let gap = |r: &WordRow| r.get(Regime::Inf) - r.get(Regime::Rand250);
    let (xs, ys): (Vec<f64>, Vec<f64>) = report
        .rows
        .iter()
        .filter_map(|r| freqs.get(&r.word).map(|f| (f as f64, gap(r))))
        .unzip();
    let rho = spearman(&xs, &ys)?;
    let p = spearman_pvalue(&xs, &ys, permutations, seed)?;

    let with_senses: Vec<(u32, f64)> = report
        .rows
        .iter()
        .filter_map(|r| senses.get(&r.word).map(|s| (*s, gap(r))))
        .collect();
    let counts: Vec<u32> = with_senses.iter().map(|p| p.0).collect();
    let threshold = polysemy_threshold(&counts).unwrap_or(0);
    let group = |low: bool| {
        let vals: Vec<f64> = with_senses
            .iter()
            .filter(|(s, _)| (*s < threshold) == low)
            .map(|p| p.1)
            .collect();
        GroupMean {
            n: vals.len(),
            mean_diff: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
        }
    };
    Ok(FrequencyPolysemy {
        n_freq: xs.len(),
        rho_freq: rho.rho,
        degenerate: rho.degenerate,
        p_freq: p,
        threshold,
        low: group(true),
        high: group(false),
    })
}
