use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AnnotateError, AnnotationRecord, AnnotationState, Measure};
use crate::corpus::Pos;
use crate::stats::{spearman, spearman_pvalue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosAgreement {
    pub pos: Pos,
    pub n: usize,
    /// `None` with fewer than two shared tasks of this POS.
    pub rho: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub n: usize,
    pub rho: f64,
    pub degenerate: bool,
    pub per_pos: Vec<PosAgreement>,
}

/// Spearman agreement of two annotators on the tasks of `task_set` both
/// scored with `measure`, pooled and per POS.
pub fn agreement(
    state: &AnnotationState,
    task_set: &str,
    a: &str,
    b: &str,
    measure: Measure,
) -> Result<Agreement, AnnotateError> {
    let set = state
        .task_set(task_set)
        .ok_or_else(|| AnnotateError::UnknownTaskSet(task_set.into()))?;
    let score_of = |annotator: &str| -> BTreeMap<&str, f64> {
        state
            .records()
            .iter()
            .filter(|r| r.annotator == annotator && r.measure == measure)
            .map(|r| (r.task_id.as_str(), r.score as f64))
            .collect()
    };
    let (sa, sb) = (score_of(a), score_of(b));
    let shared: Vec<(Pos, f64, f64)> = set
        .tasks
        .iter()
        .filter_map(|t| {
            Some((
                t.pos,
                *sa.get(t.task_id.as_str())?,
                *sb.get(t.task_id.as_str())?,
            ))
        })
        .collect();
    if shared.len() < 2 {
        return Err(AnnotateError::InsufficientOverlap {
            needed: 2,
            found: shared.len(),
        });
    }
    let corr = |rows: &[&(Pos, f64, f64)]| {
        let x: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
        spearman(&x, &y)
    };
    let all: Vec<&(Pos, f64, f64)> = shared.iter().collect();
    let pooled = corr(&all)?;
    let mut per_pos = Vec::new();
    for pos in Pos::ALL {
        let rows: Vec<&(Pos, f64, f64)> = shared.iter().filter(|r| r.0 == pos).collect();
        if rows.is_empty() {
            continue;
        }
        let s = if rows.len() >= 2 {
            Some(corr(&rows)?)
        } else {
            None
        };
        per_pos.push(PosAgreement {
            pos,
            n: rows.len(),
            rho: s.map(|s| s.rho),
            degenerate: s.is_some_and(|s| s.degenerate),
        });
    }
    Ok(Agreement {
        n: shared.len(),
        rho: pooled.rho,
        degenerate: pooled.degenerate,
        per_pos,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub n: usize,
    pub rho: f64,
    pub degenerate: bool,
    /// Permutation p-value; `None` below three shared tasks.
    pub p: Option<f64>,
}

/// Spearman correlation between classifier probabilities and human scores
/// over shared tasks. Each task's human score is the mean over annotators.
pub fn classifier_annotation_correlation(
    probs: &BTreeMap<String, f64>,
    records: &[AnnotationRecord],
    measure: Measure,
    permutations: usize,
    seed: u64,
) -> Result<Correlation, AnnotateError> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.measure == measure) {
        let e = sums.entry(r.task_id.as_str()).or_default();
        e.0 += r.score as f64;
        e.1 += 1;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = sums
        .iter()
        .filter_map(|(task, (sum, n))| probs.get(*task).map(|p| (*p, sum / *n as f64)))
        .unzip();
    if x.len() < 2 {
        return Err(AnnotateError::InsufficientOverlap {
            needed: 2,
            found: x.len(),
        });
    }
    let s = spearman(&x, &y)?;
    let p = if x.len() >= 3 {
        Some(spearman_pvalue(&x, &y, permutations, seed)?)
    } else {
        None
    };
    Ok(Correlation {
        n: x.len(),
        rho: s.rho,
        degenerate: s.degenerate,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{AnnotationTask, Provenance, Scheme, TaskSet};
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn state_with(scores_a: &[u8], scores_b: &[u8], pos: &[Pos]) -> AnnotationState {
        let tasks = pos
            .iter()
            .enumerate()
            .map(|(i, p)| AnnotationTask {
                task_id: format!("t{i:02}"),
                tokens: vec!["a".into(), "word".into(), "here".into()],
                position: 1,
                pos: *p,
                provenance: Provenance::Corpus,
            })
            .collect();
        let mut st = AnnotationState::new(vec![TaskSet {
            id: "s".into(),
            tasks,
        }])
        .unwrap();
        for (ann, scores) in [("a", scores_a), ("b", scores_b)] {
            let (sid, _) = st.create_session(ann, Scheme::Info3, "s", 0, 0).unwrap();
            while let Some(t) = st.current_task(&sid).unwrap().map(str::to_string) {
                let i: usize = t[1..].parse().unwrap();
                st.submit_score(&sid, &t, Measure::Info3, scores[i] as i64, 0)
                    .unwrap();
            }
        }
        st
    }

    #[test]
    fn identical_and_reversed() {
        let nouns = [Pos::Noun; 5];
        let st = state_with(&[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5], &nouns);
        assert_eq!(
            agreement(&st, "s", "a", "b", Measure::Info3).unwrap().rho,
            1.0
        );
        let st = state_with(&[1, 2, 3, 4, 5], &[5, 4, 3, 2, 1], &nouns);
        assert_eq!(
            agreement(&st, "s", "a", "b", Measure::Info3).unwrap().rho,
            -1.0
        );
        assert!(matches!(
            agreement(&st, "s", "a", "c", Measure::Info3),
            Err(AnnotateError::InsufficientOverlap {
                needed: 2,
                found: 0
            })
        ));
    }

    #[test]
    fn ten_shared_tasks_against_stats_oracle() {
        let a = [3, 1, 4, 1, 5, 2, 2, 4, 5, 3];
        let b = [2, 1, 5, 2, 4, 3, 1, 4, 5, 2];
        let pos = [
            Pos::Noun,
            Pos::Verb,
            Pos::Noun,
            Pos::Adj,
            Pos::Verb,
            Pos::Noun,
            Pos::Adj,
            Pos::Verb,
            Pos::Noun,
            Pos::Verb,
        ];
        let st = state_with(&a, &b, &pos);
        let got = agreement(&st, "s", "a", "b", Measure::Info3).unwrap();
        let fa: Vec<f64> = a.iter().map(|x| *x as f64).collect();
        let fb: Vec<f64> = b.iter().map(|x| *x as f64).collect();
        assert_eq!(got.rho, spearman(&fa, &fb).unwrap().rho);
        assert_eq!(got.n, 10);
        let adj = got.per_pos.iter().find(|p| p.pos == Pos::Adj).unwrap();
        assert_eq!(adj.n, 2);
        let nouns: Vec<usize> = (0..10).filter(|i| pos[*i] == Pos::Noun).collect();
        let na: Vec<f64> = nouns.iter().map(|i| fa[*i]).collect();
        let nb: Vec<f64> = nouns.iter().map(|i| fb[*i]).collect();
        let noun = got.per_pos.iter().find(|p| p.pos == Pos::Noun).unwrap();
        assert_eq!(noun.rho, Some(spearman(&na, &nb).unwrap().rho));
    }

    #[test]
    fn classifier_correlation_uses_mean_scores() {
        let a = [1, 2, 3, 4, 5, 4, 2];
        let b = [1, 3, 3, 5, 5, 4, 1];
        let st = state_with(&a, &b, &[Pos::Noun; 7]);
        let rescaled: BTreeMap<String, f64> = (0..7)
            .map(|i| (format!("t{i:02}"), (a[i] + b[i]) as f64 / 20.0))
            .collect();
        let c = classifier_annotation_correlation(&rescaled, st.records(), Measure::Info3, 500, 1)
            .unwrap();
        assert_eq!(c.rho, 1.0);
        assert_eq!(c.n, 7);
        let probs: BTreeMap<String, f64> = [0.9, 0.1, 0.4, 0.7, 0.3, 0.8, 0.2]
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("t{i:02}"), *p))
            .collect();
        let mean: Vec<f64> = (0..7).map(|i| (a[i] + b[i]) as f64 / 2.0).collect();
        let pv: Vec<f64> = probs.values().copied().collect();
        let c = classifier_annotation_correlation(&probs, st.records(), Measure::Info3, 500, 1)
            .unwrap();
        assert_eq!(c.rho, spearman(&pv, &mean).unwrap().rho);
        assert_eq!(c.p, Some(spearman_pvalue(&pv, &mean, 500, 1).unwrap()));
        let one: BTreeMap<String, f64> = [("t00".to_string(), 0.5)].into_iter().collect();
        assert!(
            classifier_annotation_correlation(&one, st.records(), Measure::Info3, 10, 0).is_err()
        );
    }
}
