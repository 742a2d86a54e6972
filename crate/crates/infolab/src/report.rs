//! Selection-experiment reports as TSV and JSON.

use std::collections::BTreeMap;
use std::io::Write;

use infolab_core::curate::experiment::FrequencyPolysemy;
use infolab_core::curate::{ExperimentReport, Regime};
use serde::{Deserialize, Serialize};

/// JSON form of a report plus the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub config_hash: String,
    pub provenance: String,
    pub columns: Vec<String>,
    pub rows: Vec<BTreeMap<String, serde_json::Value>>,
    pub mean: BTreeMap<String, f64>,
    pub diff: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_polysemy: Option<FrequencyPolysemy>,
}

pub fn columns() -> Vec<String> {
    Regime::ALL.iter().map(|r| r.column().to_string()).collect()
}

impl ReportDoc {
    pub fn new(report: &ExperimentReport, config_hash: &str) -> Self {
        let rows = report
            .rows
            .iter()
            .map(|r| {
                let mut m = BTreeMap::new();
                m.insert("word".to_string(), serde_json::Value::from(r.word.clone()));
                for regime in Regime::ALL {
                    m.insert(
                        regime.column().to_string(),
                        serde_json::Value::from(r.get(regime)),
                    );
                }
                m
            })
            .collect();
        let mean = Regime::ALL
            .iter()
            .map(|r| (r.column().to_string(), report.mean_of(*r)))
            .filter(|(_, m)| !m.is_nan())
            .collect();
        let diff = Regime::ALL
            .iter()
            .filter_map(|r| report.diff_of(*r).map(|d| (r.column().to_string(), d)))
            .filter(|(_, d)| !d.is_nan())
            .collect();
        Self {
            config_hash: config_hash.to_string(),
            provenance: report.provenance.clone(),
            columns: columns(),
            rows,
            mean,
            diff,
            frequency_polysemy: None,
        }
    }

    /// Rebuild the numeric report.
    pub fn to_report(&self) -> Result<ExperimentReport, String> {
        let rows = self
            .rows
            .iter()
            .map(|m| {
                let word = m
                    .get("word")
                    .and_then(|v| v.as_str())
                    .ok_or("row without a word")?
                    .to_string();
                let mut sims = [0.0; 6];
                for (i, regime) in Regime::ALL.iter().enumerate() {
                    sims[i] = match m.get(regime.column()) {
                        Some(serde_json::Value::Null) => f64::NAN,
                        v => v
                            .and_then(|v| v.as_f64())
                            .ok_or_else(|| format!("row {word:?} lacks {}", regime.column()))?,
                    };
                }
                Ok(infolab_core::curate::WordRow { word, sims })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(ExperimentReport::from_rows(rows, self.provenance.clone()))
    }
}

/// Regimes that were not run hold NaN and print as `-`.
fn cell(x: f64) -> String {
    if x.is_nan() {
        "-".to_string()
    } else {
        format!("{x:.3}")
    }
}

/// Per-word rows, then `mean` and `diff` lines; `-` marks the two
/// reference columns in `diff`.
pub fn write_tsv<W: Write>(
    mut w: W,
    report: &ExperimentReport,
    config_hash: &str,
) -> std::io::Result<()> {
    writeln!(
        w,
        "# config_hash={config_hash} provenance={}",
        report.provenance
    )?;
    let header: Vec<&str> = Regime::ALL.iter().map(|r| r.column()).collect();
    writeln!(w, "word\t{}", header.join("\t"))?;
    let line =
        |w: &mut W, label: &str, cells: Vec<String>| writeln!(w, "{label}\t{}", cells.join("\t"));
    for r in &report.rows {
        line(
            &mut w,
            &r.word,
            Regime::ALL.iter().map(|g| cell(r.get(*g))).collect(),
        )?;
    }
    line(
        &mut w,
        "mean",
        Regime::ALL
            .iter()
            .map(|g| cell(report.mean_of(*g)))
            .collect(),
    )?;
    line(
        &mut w,
        "diff",
        Regime::ALL
            .iter()
            .map(|g| report.diff_of(*g).map_or_else(|| "-".to_string(), cell))
            .collect(),
    )
}

pub fn write_frequency_polysemy<W: Write>(mut w: W, fp: &FrequencyPolysemy) -> std::io::Result<()> {
    writeln!(
        w,
        "frequency_rho\t{:.4}\tp\t{:.4}\tn\t{}",
        fp.rho_freq, fp.p_freq, fp.n_freq
    )?;
    let g = |m: Option<f64>| m.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    writeln!(
        w,
        "senses_below_{}\t{}\tn\t{}",
        fp.threshold,
        g(fp.low.mean_diff),
        fp.low.n
    )?;
    writeln!(
        w,
        "senses_from_{}\t{}\tn\t{}",
        fp.threshold,
        g(fp.high.mean_diff),
        fp.high.n
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use infolab_core::curate::WordRow;

    fn report() -> ExperimentReport {
        let rows = vec![
            WordRow {
                word: "call".into(),
                sims: [0.734, 0.358, 0.421, 0.727, 0.562, 0.576],
            },
            WordRow {
                word: "go".into(),
                sims: [0.515, 0.409, 0.632, 0.536, 0.725, 0.717],
            },
        ];
        ExperimentReport::from_rows(rows, "test")
    }

    #[test]
    fn tsv_layout() {
        let mut buf = Vec::new();
        write_tsv(&mut buf, &report(), "abc").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc provenance=test");
        assert_eq!(
            lines[1],
            "word\tsim_inf\tsim_uninf\tsim_inf_uninf\tsim_rand250\tsim_rand200\tsim_rand_uninf"
        );
        assert_eq!(lines[2], "call\t0.734\t0.358\t0.421\t0.727\t0.562\t0.576");
        assert!(lines[5].starts_with("diff\t-\t"));
        assert_eq!(lines[5].split('\t').nth(5), Some("-"));
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let doc = ReportDoc::new(&r, "abc");
        let text = serde_json::to_string(&doc).unwrap();
        let back: ReportDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_report().unwrap(), r);
        assert!(!doc.diff.contains_key("sim_inf"));
    }
}
