//! Frequency and polysemy analysis on the published 20-word selection table.
//!
//! Reference values computed with scipy.stats.spearmanr and a hand median
//! split over the same rows.

use std::collections::BTreeMap;

use infolab_core::curate::experiment::{frequency_polysemy_analysis, polysemy_threshold};
use infolab_core::curate::{ExperimentReport, WordRow};
use infolab_core::resources::FreqTable;

/// word, unigram frequency, WordNet senses, six similarity columns.
const ROWS: [(&str, u64, u32, [f64; 6]); 20] = [
    (
        "call",
        129441538,
        28,
        [0.734, 0.358, 0.421, 0.727, 0.562, 0.576],
    ),
    (
        "carry",
        66119364,
        40,
        [0.666, 0.348, 0.544, 0.616, 0.43, 0.387],
    ),
    (
        "charge",
        77250996,
        25,
        [0.52, 0.524, 0.546, 0.442, 0.574, 0.586],
    ),
    (
        "check",
        44237658,
        25,
        [0.662, 0.371, 0.583, 0.641, 0.545, 0.509],
    ),
    (
        "coach",
        10058922,
        5,
        [0.637, 0.367, 0.457, 0.658, 0.587, 0.549],
    ),
    (
        "education",
        146157216,
        6,
        [0.403, 0.367, 0.646, 0.509, 0.675, 0.665],
    ),
    (
        "figure",
        87473560,
        13,
        [0.325, 0.312, 0.717, 0.336, 0.435, 0.424],
    ),
    (
        "fire",
        99808148,
        9,
        [0.682, 0.595, 0.467, 0.541, 0.561, 0.62],
    ),
    (
        "go",
        303838612,
        30,
        [0.515, 0.409, 0.632, 0.536, 0.725, 0.717],
    ),
    (
        "hold",
        94694706,
        36,
        [0.789, 0.504, 0.827, 0.746, 0.627, 0.6],
    ),
    (
        "investigator",
        4350200,
        3,
        [0.75, 0.383, 0.769, 0.631, 0.289, 0.238],
    ),
    (
        "paper",
        116818356,
        7,
        [0.537, 0.321, 0.712, 0.589, 0.577, 0.608],
    ),
    (
        "post",
        64930360,
        11,
        [0.547, 0.384, 0.654, 0.486, 0.488, 0.493],
    ),
    ("put", 225568038, 9, [0.215, 0.515, 0.8, 0.44, 0.473, 0.467]),
    (
        "range",
        110466336,
        9,
        [0.627, 0.285, 0.709, 0.599, 0.582, 0.568],
    ),
    (
        "return",
        131744158,
        16,
        [0.336, 0.17, 0.605, 0.515, 0.432, 0.559],
    ),
    (
        "shot",
        40508648,
        17,
        [0.632, 0.466, 0.678, 0.632, 0.663, 0.652],
    ),
    (
        "side",
        236035794,
        12,
        [0.371, 0.554, 0.38, 0.607, 0.681, 0.687],
    ),
    (
        "tell",
        133296324,
        8,
        [0.615, 0.266, 0.689, 0.614, 0.647, 0.685],
    ),
    (
        "test",
        111542000,
        6,
        [0.773, 0.354, 0.381, 0.712, 0.631, 0.599],
    ),
];

const RHO: f64 = -0.5891649523380547;
const LOW_MEAN: f64 = -0.005999999999999984;
const HIGH_MEAN: f64 = -0.016999999999999984;

#[test]
fn frequency_correlation_and_sense_split() {
    let rows = ROWS
        .iter()
        .map(|(w, _, _, sims)| WordRow {
            word: w.to_string(),
            sims: *sims,
        })
        .collect();
    let report = ExperimentReport::from_rows(rows, "table");
    let mut freqs = FreqTable::new();
    for (w, f, _, _) in ROWS {
        freqs.insert(w, f).unwrap();
    }
    let senses: BTreeMap<String, u32> = ROWS
        .iter()
        .map(|(w, _, s, _)| (w.to_string(), *s))
        .collect();
    let fp = frequency_polysemy_analysis(&report, &freqs, &senses, 10_000, 1).unwrap();
    assert_eq!(fp.n_freq, 20);
    assert!((fp.rho_freq - RHO).abs() < 1e-12, "{}", fp.rho_freq);
    assert!(fp.p_freq < 0.05, "{}", fp.p_freq);
    assert_eq!(fp.threshold, 11);
    assert_eq!(
        polysemy_threshold(&senses.values().copied().collect::<Vec<_>>()),
        Some(11)
    );
    assert_eq!((fp.low.n, fp.high.n), (9, 11));
    assert!((fp.low.mean_diff.unwrap() - LOW_MEAN).abs() < 1e-12);
    assert!((fp.high.mean_diff.unwrap() - HIGH_MEAN).abs() < 1e-12);
}

/// The four left-hand columns reproduce the summary row; the two right-hand
/// columns of the per-word rows average lower than their summary cells
/// (0.574 and 0.580).
#[test]
fn column_means_of_the_rows() {
    let rows = ROWS
        .iter()
        .map(|(w, _, _, sims)| WordRow {
            word: w.to_string(),
            sims: *sims,
        })
        .collect();
    let report = ExperimentReport::from_rows(rows, "table");
    // summary cells carry three decimals, some truncated rather than rounded
    let summary = [0.567, 0.393, 0.611, 0.578];
    for (got, want) in report.mean.iter().zip(summary) {
        assert!((got - want).abs() < 0.001, "{got} vs {want}");
    }
    assert!((report.mean[4] - 0.5592).abs() < 1e-9, "{}", report.mean[4]);
    assert!(
        (report.mean[5] - 0.55945).abs() < 1e-9,
        "{}",
        report.mean[5]
    );
    assert!((report.diff[5].unwrap() - 0.00025).abs() < 1e-9);
}
