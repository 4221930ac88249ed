//! Exhaustive reference implementations over tiny instances.
//!
//! Everything here enumerates all `d*(d-1)*...*(d-k+1)` candidate sequences,
//! so instance sizes are hard-capped and exceeding them is a refusal error.
//! These routines exist to check the efficient mechanisms, not to be fast.

use std::collections::BTreeMap;

use rand::Rng;

use crate::counts::SortedCounts;
use crate::error::{Error, Result};
use crate::joint::{cell_key, counts_as_i64, utility};
use crate::noise::{sample_expo, ExpoParams};

const MAX_D: usize = 8;
const MAX_K: usize = 4;

fn check_limits(d: usize, k: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::domain(format!("k must satisfy 1 <= k <= d = {d}, got {k}")));
    }
    if d > MAX_D || k > MAX_K {
        return Err(Error::TooLarge(format!(
            "d = {d}, k = {k} exceeds the enumeration cap d <= {MAX_D}, k <= {MAX_K}"
        )));
    }
    Ok(())
}

/// All length-k sequences of distinct ranks from `0..d`.
pub fn enumerate_sequences(d: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    check_limits(d, k)?;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(k);
    fn extend(d: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for s in 0..d {
            if !prefix.contains(&s) {
                prefix.push(s);
                extend(d, k, prefix, out);
                prefix.pop();
            }
        }
    }
    extend(d, k, &mut prefix, &mut out);
    Ok(out)
}

/// The exact output distribution of the exponential mechanism over sequences,
/// with sensitivity 1: `P[S] ~ exp(epsilon * u(S) / 2)`.
pub fn naive_em_distribution(
    sc: &SortedCounts,
    k: usize,
    epsilon: f64,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    check_limits(sc.d(), k)?;
    let seqs = enumerate_sequences(sc.d(), k)?;
    let mut log_weights = Vec::with_capacity(seqs.len());
    for seq in &seqs {
        let u = utility(sc, k, seq)?.expect("enumerated sequences are distinct");
        log_weights.push(epsilon * u as f64 / 2.0);
    }
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + log_weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
    Ok(seqs
        .into_iter()
        .zip(log_weights)
        .map(|(seq, w)| (seq, (w - log_z).exp()))
        .collect())
}

/// Sequence tallies found by scoring every sequence directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteCounts {
    /// Count of sequences whose perturbed score lands exactly on cell
    /// `(row, col)`.
    pub per_cell: BTreeMap<(usize, usize), u64>,
    /// Count of sequences per raw integer utility value.
    pub per_utility: BTreeMap<i64, u64>,
}

/// Tallies sequences by their perturbed score cell and by their integer
/// utility. Grouping `per_cell` by cell ceiling must reproduce `per_utility`.
pub fn brute_force_counts(sc: &SortedCounts, k: usize) -> Result<BruteCounts> {
    check_limits(sc.d(), k)?;
    let d = sc.d();
    let counts = counts_as_i64(sc)?;
    let mut per_cell = BTreeMap::new();
    let mut per_utility = BTreeMap::new();
    for seq in enumerate_sequences(d, k)? {
        let (mut best_row, mut best_key) = (0usize, i128::MAX);
        for (row, &col) in seq.iter().enumerate() {
            let key = cell_key(&counts, d, k, row, col);
            if key < best_key {
                best_key = key;
                best_row = row;
            }
        }
        *per_cell.entry((best_row, seq[best_row])).or_insert(0) += 1;
        let u = utility(sc, k, &seq)?.expect("distinct");
        *per_utility.entry(u).or_insert(0) += 1;
    }
    Ok(BruteCounts { per_cell, per_utility })
}

/// Empirical distribution of report-noisy-max with exponential noise applied
/// naively: every sequence gets its own `Expo(epsilon/2)` draw, the argmax
/// wins.
pub fn noisy_max_reference_distribution<R: Rng + ?Sized>(
    sc: &SortedCounts,
    k: usize,
    epsilon: f64,
    trials: usize,
    rng: &mut R,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    check_limits(sc.d(), k)?;
    if trials < 10_000 {
        return Err(Error::domain(format!("reference needs >= 10^4 trials, got {trials}")));
    }
    let noise = ExpoParams::new(epsilon / 2.0)?;
    let seqs = enumerate_sequences(sc.d(), k)?;
    let utilities: Vec<i64> = seqs
        .iter()
        .map(|s| Ok(utility(sc, k, s)?.expect("distinct")))
        .collect::<Result<_>>()?;
    let mut tally: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for _ in 0..trials {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &u) in utilities.iter().enumerate() {
            let v = u as f64 + sample_expo(&noise, rng);
            if v > best.1 {
                best = (i, v);
            }
        }
        *tally.entry(seqs[best.0].clone()).or_insert(0) += 1;
    }
    Ok(tally
        .into_iter()
        .map(|(seq, n)| (seq, n as f64 / trials as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::CellTable;
    use crate::rng::stream;

    fn sc(counts: &[u64]) -> SortedCounts {
        SortedCounts::from_counts(counts.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_sequences(3, 2).unwrap().len(), 6);
        assert_eq!(enumerate_sequences(3, 3).unwrap().len(), 6);
        assert_eq!(enumerate_sequences(8, 4).unwrap().len(), 1680);
    }

    #[test]
    fn enumeration_refuses_large_instances() {
        assert!(matches!(enumerate_sequences(9, 2), Err(Error::TooLarge(_))));
        assert!(matches!(enumerate_sequences(8, 5), Err(Error::TooLarge(_))));
    }

    #[test]
    fn em_distribution_normalizes() {
        let dist = naive_em_distribution(&sc(&[10, 5, 1, 1]), 2, 1.0).unwrap();
        let total: f64 = dist.values().sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn em_distribution_matches_reference_probability() {
        let dist = naive_em_distribution(&sc(&[10, 5, 1, 1]), 2, 1.0).unwrap();
        let p = dist[&vec![0, 1]];
        assert!((p - 0.6315).abs() < 0.001, "P[(0,1)] = {p}");
    }

    #[test]
    fn em_distribution_uniform_cases() {
        let dist = naive_em_distribution(&sc(&[4, 3, 2]), 2, 0.0).unwrap();
        for &p in dist.values() {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
        let dist = naive_em_distribution(&sc(&[7, 7, 7]), 2, 3.0).unwrap();
        for &p in dist.values() {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_counts_on_the_small_example() {
        let b = brute_force_counts(&sc(&[5, 3, 1]), 2).unwrap();
        // Sorted cell order is (1,0), (1,1), (0,0), (1,2), (0,1), (0,2).
        assert_eq!(b.per_cell.get(&(0, 0)), Some(&1));
        assert_eq!(b.per_cell.get(&(1, 2)), Some(&1));
        assert_eq!(b.per_cell.get(&(0, 1)), Some(&2));
        assert_eq!(b.per_cell.get(&(0, 2)), Some(&2));
        assert_eq!(b.per_utility, BTreeMap::from([(0, 1), (-2, 3), (-4, 2)]));
    }

    #[test]
    fn grouping_cells_by_ceiling_reproduces_utility_counts() {
        for counts in [vec![5, 3, 1], vec![9, 9, 2, 0], vec![4, 4, 4, 4, 1]] {
            let s = sc(&counts);
            for k in 1..=3.min(s.d()) {
                let b = brute_force_counts(&s, k).unwrap();
                let cs = counts_as_i64(&s).unwrap();
                let mut grouped: BTreeMap<i64, u64> = BTreeMap::new();
                for (&(row, col), &n) in &b.per_cell {
                    *grouped.entry(cs[col] - cs[row]).or_insert(0) += n;
                }
                assert_eq!(grouped, b.per_utility, "counts {counts:?}, k {k}");
            }
        }
    }

    #[test]
    fn single_rank_counts_one_sequence_per_column() {
        let b = brute_force_counts(&sc(&[6, 4, 4, 1]), 1).unwrap();
        assert!(b.per_cell.values().all(|&n| n == 1));
        assert_eq!(b.per_cell.len(), 4);
    }

    #[test]
    fn all_ties_put_every_sequence_at_utility_zero() {
        let b = brute_force_counts(&sc(&[3, 3, 3, 3]), 2).unwrap();
        assert_eq!(b.per_utility, BTreeMap::from([(0, 12)]));
    }

    #[test]
    fn efficient_counts_match_brute_force() {
        for counts in [vec![5, 3, 1], vec![10, 5, 1, 1], vec![2, 2, 2], vec![8, 6, 6, 3, 0]] {
            let s = sc(&counts);
            for k in 1..=3.min(s.d()) {
                let table = CellTable::build(&s, k).unwrap();
                let b = brute_force_counts(&s, k).unwrap();
                for a in 0..table.len() {
                    let (row, col) = table.cell_at(a);
                    let want = b.per_cell.get(&(row, col)).copied().unwrap_or(0);
                    assert_eq!(
                        table.exact_count_at(a).unwrap(),
                        want as u128,
                        "counts {counts:?}, k {k}, cell ({row},{col})"
                    );
                }
            }
        }
    }

    #[test]
    fn reference_distribution_sanity() {
        let mut rng = stream(41, &[0]);
        let dist =
            noisy_max_reference_distribution(&sc(&[3, 3]), 1, 1.0, 20_000, &mut rng).unwrap();
        let p0 = dist.get(&vec![0]).copied().unwrap_or(0.0);
        assert!((p0 - 0.5).abs() < 0.02, "P[0] = {p0}");
    }

    #[test]
    fn reference_distribution_on_the_four_item_instance() {
        let mut rng = stream(43, &[0]);
        let dist =
            noisy_max_reference_distribution(&sc(&[10, 5, 1, 1]), 2, 1.0, 100_000, &mut rng)
                .unwrap();
        let p = dist[&vec![0, 1]];
        assert!((p - 0.75).abs() < 0.01, "P[(0,1)] = {p}");
    }

    #[test]
    fn reference_distribution_requires_enough_trials() {
        let mut rng = stream(42, &[0]);
        assert!(noisy_max_reference_distribution(&sc(&[3, 3]), 1, 1.0, 100, &mut rng).is_err());
    }
}
