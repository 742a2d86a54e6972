//! Rank statistics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::math::sqrt;
use crate::rng::seeded;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("mean of an empty collection")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// Set when either variable is constant; `rho` is then 0.
    pub degenerate: bool,
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        cov += da * db;
        vx += da * da;
        vy += db * db;
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((cov / sqrt(vx * vy)).clamp(-1.0, 1.0))
}

fn check(x: &[f64], y: &[f64], needed: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < needed {
        return Err(StatsError::TooFew {
            needed,
            got: x.len(),
        });
    }
    Ok(())
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman, StatsError> {
    check(x, y, 2)?;
    Ok(match pearson(&average_ranks(x), &average_ranks(y)) {
        Some(rho) => Spearman {
            rho,
            degenerate: false,
        },
        None => Spearman {
            rho: 0.0,
            degenerate: true,
        },
    })
}

/// Two-sided permutation p-value for Spearman's rho.
///
/// `p = (1 + #{perm : |rho_perm| >= |rho_obs|}) / (1 + permutations)`, with
/// the y ranks shuffled by a ChaCha8 stream seeded from `seed`. A degenerate
/// observed correlation gives `p = 1`.
pub fn spearman_pvalue(
    x: &[f64],
    y: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<f64, StatsError> {
    check(x, y, 3)?;
    let rx = average_ranks(x);
    let mut ry = average_ranks(y);
    let Some(observed) = pearson(&rx, &ry) else {
        return Ok(1.0);
    };
    let threshold = observed.abs() - 1e-12;
    let mut rng = seeded(seed);
    let mut hits = 0usize;
    for _ in 0..permutations {
        ry.shuffle(&mut rng);
        if pearson(&rx, &ry).is_some_and(|r| r.abs() >= threshold) {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (1 + permutations) as f64)
}

/// Unweighted mean over words.
pub fn mean_accuracy(per_word: &BTreeMap<String, f64>) -> Result<f64, StatsError> {
    if per_word.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(per_word.values().sum::<f64>() / per_word.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 5.0]),
            [2.0, 3.5, 3.5, 1.0]
        );
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn monotone_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap().rho, 1.0);
        assert_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap().rho, -1.0);
    }

    #[test]
    fn one_tie_against_hand_oracle() {
        // ranks x = 1 2 3 4, y = 1.5 1.5 3 4
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 1.0, 3.0, 4.0];
        let (rx, ry) = ([1.0, 2.0, 3.0, 4.0], [1.5, 1.5, 3.0, 4.0]);
        let m = 2.5;
        let cov: f64 = rx.iter().zip(ry).map(|(a, b)| (a - m) * (b - m)).sum();
        let vx: f64 = rx.iter().map(|a| (a - m) * (a - m)).sum();
        let vy: f64 = ry.iter().map(|b| (b - m) * (b - m)).sum();
        let oracle = cov / (vx * vy).sqrt();
        assert!((spearman(&x, &y).unwrap().rho - oracle).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_errors() {
        let s = spearman(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(
            s,
            Spearman {
                rho: 0.0,
                degenerate: true
            }
        );
        assert!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0])
                .unwrap()
                .degenerate
        );
        assert_eq!(
            spearman(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(1, 2))
        );
        assert_eq!(
            spearman(&[1.0], &[1.0]),
            Err(StatsError::TooFew { needed: 2, got: 1 })
        );
        assert_eq!(
            spearman_pvalue(&[1.0, 2.0], &[1.0, 2.0], 10, 0),
            Err(StatsError::TooFew { needed: 3, got: 2 })
        );
    }

    #[test]
    fn pvalue_is_smoothed_and_seeded() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let p = spearman_pvalue(&x, &x, 2000, 1).unwrap();
        assert!(p > 0.0 && p <= 0.01);
        assert_eq!(p, spearman_pvalue(&x, &x, 2000, 1).unwrap());
        assert_eq!(spearman_pvalue(&x, &[1.0; 8], 50, 1).unwrap(), 1.0);
    }

    #[test]
    fn mean_accuracy_cases() {
        let m: BTreeMap<String, f64> = [("a".to_string(), 1.0), ("b".to_string(), 0.0)]
            .into_iter()
            .collect();
        assert_eq!(mean_accuracy(&m).unwrap(), 0.5);
        let one: BTreeMap<String, f64> = [("a".to_string(), 0.37)].into_iter().collect();
        assert_eq!(mean_accuracy(&one).unwrap(), 0.37);
        assert_eq!(mean_accuracy(&BTreeMap::new()), Err(StatsError::Empty));
        let twenty: BTreeMap<String, f64> = (0..20)
            .map(|i| (alloc::format!("w{i:02}"), (i * 7 % 13) as f64 / 13.0))
            .collect();
        let direct = (0..20).map(|i| (i * 7 % 13) as f64 / 13.0).sum::<f64>() / 20.0;
        assert!((mean_accuracy(&twenty).unwrap() - direct).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_rank_invariant(
            pairs in prop::collection::vec((-50i32..50, -50i32..50), 2..30)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let a = spearman(&x, &y).unwrap();
            let b = spearman(&y, &x).unwrap();
            prop_assert!((-1.0..=1.0).contains(&a.rho));
            prop_assert!((a.rho - b.rho).abs() < 1e-12);
            let tx: Vec<f64> = x.iter().map(|v| (v / 10.0).exp() + 3.0 * v).collect();
            let c = spearman(&tx, &y).unwrap();
            prop_assert!((a.rho - c.rho).abs() < 1e-12);
        }
    }

    #[test]
    fn pvalue_nonincreasing_in_strength() {
        // y = x with k adjacent swaps undone progressively: stronger rho, smaller p
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let weak = vec![3.0, 9.0, 0.0, 7.0, 1.0, 8.0, 2.0, 6.0, 4.0, 5.0];
        let mid = vec![1.0, 0.0, 3.0, 2.0, 5.0, 9.0, 4.0, 7.0, 6.0, 8.0];
        let strong = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0, 8.0];
        let rs: Vec<f64> = [&weak, &mid, &strong]
            .iter()
            .map(|y| spearman(&x, y).unwrap().rho.abs())
            .collect();
        assert!(rs[0] < rs[1] && rs[1] < rs[2]);
        let ps: Vec<f64> = [&weak, &mid, &strong]
            .iter()
            .map(|y| spearman_pvalue(&x, y, 5000, 11).unwrap())
            .collect();
        assert!(ps[0] >= ps[1] && ps[1] >= ps[2], "{ps:?}");
    }
}
