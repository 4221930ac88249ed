//! The joint exponential mechanism over length-k ranked sequences.
//!
//! The output space is every sequence of k distinct items. A sequence scores
//! the negated worst shortfall against the true top-k counts, so the true
//! top-k sequence scores 0 and everything else is negative. Sampling runs in
//! three stages over the k-by-d matrix of per-(rank, item) scores:
//!
//! 1. enumerate the dk cell scores in decreasing order by merging the k
//!    already-sorted rows with a heap;
//! 2. count, for each cell, how many full sequences attain exactly that
//!    score, in one streaming pass with O(1) work per cell;
//! 3. pick a cell with probability proportional to
//!    `count * exp(epsilon * ceil(score) / 2)`, then pick a sequence
//!    uniformly among those attaining it.
//!
//! Each cell score is perturbed by a distinct offset in (0, 1/2], which makes
//! all dk values strictly ordered while keeping their ceilings equal to the
//! raw integer count differences. Scores are compared through an exact
//! integer scaling, never through floats.

use std::collections::BinaryHeap;
use std::collections::HashSet;

use rand::Rng;

use crate::counts::SortedCounts;
use crate::error::{Error, Result};
use crate::noise::sample_log_categorical_iter;

/// One entry of the perturbed score matrix. `row` is a rank in `0..k`, `col`
/// an item rank in `0..d`; `ceiling` is the raw integer score
/// `counts[col] - counts[row]`, and `value` the perturbed score just below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityCell {
    pub row: usize,
    pub col: usize,
    pub ceiling: i64,
    pub value: f64,
}

/// A mechanism output: item ranks in selection order, the corresponding item
/// ids, and (for the joint mechanisms) the score cell the sequence was drawn
/// at.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKSample {
    pub ranks: Vec<usize>,
    pub item_ids: Vec<String>,
    pub cell: Option<UtilityCell>,
}

impl TopKSample {
    pub(crate) fn new(sc: &SortedCounts, ranks: Vec<usize>, cell: Option<UtilityCell>) -> Self {
        let item_ids = ranks.iter().map(|&r| sc.id_at(r).to_string()).collect();
        TopKSample { ranks, item_ids, cell }
    }

    pub fn k(&self) -> usize {
        self.ranks.len()
    }
}

/// Negated worst shortfall of `seq` against the true top-k counts, or `None`
/// for sequences with repeated entries (which carry no mass).
///
/// `seq` holds ranks into the sorted counts; the true top-k in order scores
/// `Some(0)`.
pub fn utility(sc: &SortedCounts, k: usize, seq: &[usize]) -> Result<Option<i64>> {
    let counts = counts_as_i64(sc)?;
    check_k(sc.d(), k)?;
    if seq.len() != k {
        return Err(Error::domain(format!(
            "sequence length {} does not match k = {k}",
            seq.len()
        )));
    }
    let mut seen = HashSet::with_capacity(k);
    for &s in seq {
        if s >= sc.d() {
            return Err(Error::domain(format!("rank {s} out of range for d = {}", sc.d())));
        }
        if !seen.insert(s) {
            return Ok(None);
        }
    }
    let worst = seq
        .iter()
        .enumerate()
        .map(|(i, &s)| counts[i] - counts[s])
        .max()
        .expect("k >= 1");
    Ok(Some(-worst))
}

fn check_k(d: usize, k: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::domain(format!("k must satisfy 1 <= k <= d = {d}, got {k}")));
    }
    Ok(())
}

pub(crate) fn counts_as_i64(sc: &SortedCounts) -> Result<Vec<i64>> {
    // counts[0] is the maximum, so this bounds every pairwise difference.
    if sc.counts().first().is_some_and(|&c| c > i64::MAX as u64) {
        return Err(Error::Overflow(
            "counts above i64::MAX make count differences unrepresentable".into(),
        ));
    }
    Ok(sc.counts().iter().map(|&c| c as i64).collect())
}

/// One cell of the score matrix in merge order. `key` is the perturbed score
/// times `2dk`, an exact integer: comparisons on `key` are comparisons on the
/// true perturbed scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub key: i128,
    pub ceiling: i64,
}

#[inline]
pub(crate) fn cell_key(counts: &[i64], d: usize, k: usize, row: usize, col: usize) -> i128 {
    let diff = counts[row] - counts[col];
    let offset = (d * (k - 1 - row) + col + 1) as i128;
    -(diff as i128) * (2 * d * k) as i128 - offset
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct HeapEntry {
    key: i128,
    row: u32,
    col: u32,
}

/// Streams all `d*k` score cells in strictly decreasing order.
///
/// Each row is decreasing left to right, so a k-way heap merge yields the
/// global order without materializing and sorting the matrix.
pub struct SortedCells {
    counts: Vec<i64>,
    d: usize,
    k: usize,
    heap: BinaryHeap<HeapEntry>,
}

pub fn sorted_cells(sc: &SortedCounts, k: usize) -> Result<SortedCells> {
    let d = sc.d();
    check_k(d, k)?;
    let counts = counts_as_i64(sc)?;
    // Key arithmetic stays within i128 as long as 2dk fits in i64.
    2u64.checked_mul(d as u64)
        .and_then(|x| x.checked_mul(k as u64))
        .filter(|&x| x <= i64::MAX as u64)
        .ok_or_else(|| Error::Overflow(format!("2*d*k out of range for d = {d}, k = {k}")))?;
    let mut heap = BinaryHeap::with_capacity(k);
    for row in 0..k {
        heap.push(HeapEntry {
            key: cell_key(&counts, d, k, row, 0),
            row: row as u32,
            col: 0,
        });
    }
    Ok(SortedCells { counts, d, k, heap })
}

impl SortedCells {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Iterator for SortedCells {
    type Item = Cell;

    fn next(&mut self) -> Option<Cell> {
        let top = self.heap.pop()?;
        let (row, col) = (top.row as usize, top.col as usize);
        if col + 1 < self.d {
            self.heap.push(HeapEntry {
                key: cell_key(&self.counts, self.d, self.k, row, col + 1),
                row: top.row,
                col: top.col + 1,
            });
        }
        Some(Cell {
            row,
            col,
            key: top.key,
            ceiling: self.counts[col] - self.counts[row],
        })
    }
}

/// Per-cell sequence counts. Exact integers whenever the largest possible
/// product fits comfortably in u128; logarithms otherwise, updated by
/// adding and subtracting single-row log factors.
#[derive(Debug, Clone)]
pub enum SeqCounts {
    Exact(Vec<u128>),
    Log(Vec<f64>),
}

/// The sorted score cells together with the number of distinct-element
/// sequences attaining each score.
#[derive(Debug, Clone)]
pub struct CellTable {
    d: usize,
    k: usize,
    counts: Vec<i64>,
    rows: Vec<u32>,
    cols: Vec<u32>,
    seq_counts: SeqCounts,
}

impl CellTable {
    pub fn build(sc: &SortedCounts, k: usize) -> Result<CellTable> {
        Ok(Self::from_sorted_cells(sorted_cells(sc, k)?))
    }

    /// Consumes the cell stream, computing every sequence count in one pass.
    ///
    /// `avail[r]` tracks how many columns of row `r` score at least the
    /// current cell, minus the `r` slots reserved for earlier rows. A cell's
    /// count is the product of `avail` over the other rows. Until every row
    /// has appeared in the stream at least once one factor is zero, so that
    /// prefix is emitted as explicit zeros.
    pub fn from_sorted_cells(cells: SortedCells) -> CellTable {
        let (d, k) = (cells.d, cells.k);
        let exact = (k as f64) * (d.max(2) as f64).log2() < 120.0;
        let counts = cells.counts.clone();
        let total = d * k;
        let mut rows = Vec::with_capacity(total);
        let mut cols = Vec::with_capacity(total);
        let mut avail = vec![0i64; k];
        let mut seen = vec![false; k];
        let mut n_seen = 0usize;

        let mut cells = cells;
        let mut exact_counts = if exact { Vec::with_capacity(total) } else { Vec::new() };
        let mut log_counts = if exact { Vec::new() } else { Vec::with_capacity(total) };

        // Zero prefix: cells seen before every row has entered the merge.
        let mut first_positive: Option<usize> = None;
        for cell in cells.by_ref() {
            rows.push(cell.row as u32);
            cols.push(cell.col as u32);
            avail[cell.row] = (cell.col + 1) as i64 - cell.row as i64;
            if !seen[cell.row] {
                seen[cell.row] = true;
                n_seen += 1;
            }
            if n_seen == k {
                first_positive = Some(cell.row);
                break;
            }
            if exact {
                exact_counts.push(0u128);
            } else {
                log_counts.push(f64::NEG_INFINITY);
            }
        }
        let break_row = first_positive.expect("every row enters the merge");
        debug_assert!(avail.iter().all(|&a| a >= 1));

        if exact {
            let mut product: u128 = avail.iter().map(|&a| a as u128).product();
            exact_counts.push(product / avail[break_row] as u128);
            for cell in cells {
                rows.push(cell.row as u32);
                cols.push(cell.col as u32);
                let m = product / avail[cell.row] as u128;
                exact_counts.push(m);
                avail[cell.row] += 1;
                product = m * avail[cell.row] as u128;
            }
        } else {
            let mut log_product: f64 = avail.iter().map(|&a| (a as f64).ln()).sum();
            log_counts.push(log_product - (avail[break_row] as f64).ln());
            for cell in cells {
                rows.push(cell.row as u32);
                cols.push(cell.col as u32);
                let m = log_product - (avail[cell.row] as f64).ln();
                log_counts.push(m);
                avail[cell.row] += 1;
                log_product = m + (avail[cell.row] as f64).ln();
            }
        }

        CellTable {
            d,
            k,
            counts,
            rows,
            cols,
            seq_counts: if exact {
                SeqCounts::Exact(exact_counts)
            } else {
                SeqCounts::Log(log_counts)
            },
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (row, col) of the a-th cell in decreasing score order.
    pub fn cell_at(&self, a: usize) -> (usize, usize) {
        (self.rows[a] as usize, self.cols[a] as usize)
    }

    pub fn ceiling_at(&self, a: usize) -> i64 {
        self.counts[self.cols[a] as usize] - self.counts[self.rows[a] as usize]
    }

    /// Exact sequence count of the a-th cell, when tracked exactly.
    pub fn exact_count_at(&self, a: usize) -> Option<u128> {
        match &self.seq_counts {
            SeqCounts::Exact(v) => Some(v[a]),
            SeqCounts::Log(_) => None,
        }
    }

    /// `ln` of the a-th cell's sequence count; `-inf` for zero.
    pub fn log_count_at(&self, a: usize) -> f64 {
        match &self.seq_counts {
            SeqCounts::Exact(v) => {
                if v[a] == 0 {
                    f64::NEG_INFINITY
                } else {
                    (v[a] as f64).ln()
                }
            }
            SeqCounts::Log(v) => v[a],
        }
    }

    fn key(&self, row: usize, col: usize) -> i128 {
        cell_key(&self.counts, self.d, self.k, row, col)
    }

    /// The a-th cell in decreasing score order, as a sampled-cell value.
    pub fn utility_cell_at(&self, a: usize) -> UtilityCell {
        let (row, col) = self.cell_at(a);
        let denom = (2 * self.d * self.k) as f64;
        UtilityCell {
            row,
            col,
            ceiling: self.ceiling_at(a),
            value: self.key(row, col) as f64 / denom,
        }
    }

    /// Draws a cell with probability proportional to
    /// `count * exp(epsilon * ceiling / 2)`; zero-count cells carry no mass.
    pub fn sample_utility<R: Rng + ?Sized>(&self, epsilon: f64, rng: &mut R) -> Result<UtilityCell> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        // Log weights streamed so they are never materialized.
        let weights =
            (0..self.len()).map(|a| self.log_count_at(a) + epsilon * self.ceiling_at(a) as f64 / 2.0);
        let a = sample_log_categorical_iter(weights, rng)
            .expect("the true top-k cell always has a positive count");
        Ok(self.utility_cell_at(a))
    }

    /// Number of columns in `row` scoring at least the given key. Rows are
    /// decreasing, so a binary search suffices.
    fn reach(&self, row: usize, key: i128) -> usize {
        let (mut lo, mut hi) = (0usize, self.d);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.key(row, mid) >= key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Uniformly samples one sequence among those scoring exactly at `cell`.
    ///
    /// The cell's own row is pinned to its column; the remaining rows are
    /// filled in increasing row order, each uniform over the columns within
    /// reach minus the already-taken ones. Processing rows in increasing
    /// order is what makes every admissible sequence equally likely.
    pub fn sample_sequence<R: Rng + ?Sized>(&self, cell: &UtilityCell, rng: &mut R) -> Vec<usize> {
        let key = self.key(cell.row, cell.col);
        let mut seq = vec![usize::MAX; self.k];
        seq[cell.row] = cell.col;
        let mut taken: HashSet<usize> = HashSet::with_capacity(self.k);
        taken.insert(cell.col);
        for (row, slot) in seq.iter_mut().enumerate() {
            if row == cell.row {
                continue;
            }
            let t = self.reach(row, key);
            assert!(t > row, "no admissible column in row {row}; cell has zero sequences");
            // Rejection is expected O(1); the dense fallback keeps degenerate
            // cases (nearly all columns taken) linear.
            let mut pick = None;
            for _ in 0..64 {
                let c = rng.random_range(0..t);
                if !taken.contains(&c) {
                    pick = Some(c);
                    break;
                }
            }
            let c = pick.unwrap_or_else(|| {
                let free: Vec<usize> = (0..t).filter(|c| !taken.contains(c)).collect();
                assert!(!free.is_empty(), "row {row} has no free column within reach {t}");
                free[rng.random_range(0..free.len())]
            });
            *slot = c;
            taken.insert(c);
        }
        seq
    }
}

/// Runs the full mechanism: build the table, draw a score cell, draw a
/// sequence at that score, and map ranks back to item ids.
pub fn run_joint<R: Rng + ?Sized>(
    sc: &SortedCounts,
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<TopKSample> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let table = CellTable::build(sc, k)?;
    let cell = table.sample_utility(epsilon, rng)?;
    let ranks = table.sample_sequence(&cell, rng);
    Ok(TopKSample::new(sc, ranks, Some(cell)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn sc(counts: &[u64]) -> SortedCounts {
        SortedCounts::from_counts(counts.to_vec()).unwrap()
    }

    #[test]
    fn utility_of_displaced_sequences() {
        // d = 10 with counts 100, 90, ..., 10 and k = 5.
        let s = sc(&[100, 90, 80, 70, 60, 50, 40, 30, 20, 10]);
        // Ranks are 0-based: (1,3,4,5,2) and (1,3,4,5,6) in 1-based terms.
        assert_eq!(utility(&s, 5, &[0, 2, 3, 4, 1]).unwrap(), Some(-10));
        assert_eq!(utility(&s, 5, &[0, 2, 3, 4, 5]).unwrap(), Some(-10));
        assert_eq!(utility(&s, 5, &[0, 1, 2, 3, 4]).unwrap(), Some(0));
    }

    #[test]
    fn utility_of_repeats_is_none() {
        let s = sc(&[5, 3, 1]);
        assert_eq!(utility(&s, 2, &[0, 0]).unwrap(), None);
    }

    #[test]
    fn utility_rejects_bad_arguments() {
        let s = sc(&[5, 3, 1]);
        assert!(utility(&s, 2, &[0]).is_err());
        assert!(utility(&s, 4, &[0, 1, 2, 3]).is_err());
        assert!(utility(&s, 2, &[0, 9]).is_err());
    }

    #[test]
    fn utility_overflows_on_huge_counts() {
        let s = sc(&[u64::MAX, 1]);
        assert!(matches!(utility(&s, 1, &[0]), Err(Error::Overflow(_))));
    }

    // Counts (5,3,1) with k = 2 sort to keys (x12):
    // (1,0) 23, (1,1) -2, (0,0) -4, (1,2) -27, (0,1) -29, (0,2) -54.
    #[test]
    fn cells_merge_in_exact_order() {
        let cells: Vec<Cell> = sorted_cells(&sc(&[5, 3, 1]), 2).unwrap().collect();
        let got: Vec<(usize, usize, i128)> = cells.iter().map(|c| (c.row, c.col, c.key)).collect();
        assert_eq!(
            got,
            vec![
                (1, 0, 23),
                (1, 1, -2),
                (0, 0, -4),
                (1, 2, -27),
                (0, 1, -29),
                (0, 2, -54),
            ]
        );
        let ceilings: Vec<i64> = cells.iter().map(|c| c.ceiling).collect();
        assert_eq!(ceilings, vec![2, 0, 0, -2, -2, -4]);
    }

    #[test]
    fn single_row_is_already_sorted() {
        let cells: Vec<Cell> = sorted_cells(&sc(&[5, 3, 1]), 1).unwrap().collect();
        let cols: Vec<usize> = cells.iter().map(|c| c.col).collect();
        assert_eq!(cols, vec![0, 1, 2]);
        assert!(cells.iter().all(|c| c.row == 0));
    }

    #[test]
    fn sorted_cells_rejects_k_above_d() {
        assert!(sorted_cells(&sc(&[5, 3, 1]), 4).is_err());
    }

    #[test]
    fn sequence_counts_on_small_example() {
        let table = CellTable::build(&sc(&[5, 3, 1]), 2).unwrap();
        let got: Vec<u128> = (0..table.len()).map(|a| table.exact_count_at(a).unwrap()).collect();
        assert_eq!(got, vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(got.iter().sum::<u128>(), 6); // 3 * 2 distinct sequences
    }

    #[test]
    fn high_epsilon_selects_the_optimal_cell() {
        let table = CellTable::build(&sc(&[5, 3, 1]), 2).unwrap();
        let mut rng = stream(31, &[0]);
        for _ in 0..100 {
            let cell = table.sample_utility(1e6, &mut rng).unwrap();
            assert_eq!((cell.row, cell.col), (0, 0));
            assert_eq!(cell.ceiling, 0);
        }
    }

    #[test]
    fn zero_epsilon_is_uniform_over_sequences() {
        let table = CellTable::build(&sc(&[5, 3, 1]), 2).unwrap();
        let mut rng = stream(32, &[0]);
        let n = 100_000;
        let mut hits = vec![0u64; table.len()];
        for _ in 0..n {
            let cell = table.sample_utility(0.0, &mut rng).unwrap();
            let a = (0..table.len())
                .find(|&a| table.cell_at(a) == (cell.row, cell.col))
                .unwrap();
            hits[a] += 1;
        }
        let want = [0.0, 0.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0];
        for (a, &h) in hits.iter().enumerate() {
            let freq = h as f64 / n as f64;
            assert!((freq - want[a]).abs() < 0.01, "cell {a}: {freq} vs {}", want[a]);
        }
    }

    #[test]
    fn sequence_sampling_is_uniform_within_a_cell() {
        let table = CellTable::build(&sc(&[5, 3, 1]), 2).unwrap();
        // Cell (0, 1) counts two sequences: (1,0) and (1,2) in 0-based ranks.
        let cell = table.utility_cell_at(4);
        assert_eq!((cell.row, cell.col), (0, 1));
        let mut rng = stream(33, &[0]);
        let n = 10_000;
        let mut first = 0u64;
        for _ in 0..n {
            let seq = table.sample_sequence(&cell, &mut rng);
            match seq.as_slice() {
                [1, 0] => first += 1,
                [1, 2] => {}
                other => panic!("unexpected sequence {other:?}"),
            }
        }
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "split {freq}");
    }

    #[test]
    fn singleton_cell_is_deterministic() {
        let table = CellTable::build(&sc(&[5, 3, 1]), 2).unwrap();
        let cell = table.utility_cell_at(2); // (0,0), the optimal cell, count 1
        let mut rng = stream(34, &[0]);
        for _ in 0..50 {
            assert_eq!(table.sample_sequence(&cell, &mut rng), vec![0, 1]);
        }
    }

    #[test]
    fn k_of_one_sequences_are_single_columns() {
        let table = CellTable::build(&sc(&[5, 3, 1]), 1).unwrap();
        let mut rng = stream(35, &[0]);
        for a in 0..table.len() {
            let cell = table.utility_cell_at(a);
            assert_eq!(table.sample_sequence(&cell, &mut rng), vec![cell.col]);
        }
    }

    #[test]
    fn run_joint_high_epsilon_returns_true_top_k() {
        let s = sc(&[9, 7, 5, 3, 1]);
        let mut rng = stream(36, &[0]);
        for _ in 0..50 {
            let sample = run_joint(&s, 3, 1e6, &mut rng).unwrap();
            assert_eq!(sample.ranks, vec![0, 1, 2]);
            assert_eq!(sample.item_ids, vec!["0", "1", "2"]);
        }
    }

    #[test]
    fn sampled_sequence_scores_the_sampled_cell() {
        let s = sc(&[14, 9, 9, 2, 0]);
        let mut rng = stream(37, &[0]);
        for _ in 0..500 {
            let sample = run_joint(&s, 3, 0.7, &mut rng).unwrap();
            let cell = sample.cell.unwrap();
            assert_eq!(utility(&s, 3, &sample.ranks).unwrap(), Some(cell.ceiling));
            assert_eq!(cell.value.ceil() as i64, cell.ceiling);
        }
    }

    #[test]
    fn run_joint_rejects_bad_epsilon() {
        let s = sc(&[5, 3, 1]);
        let mut rng = stream(38, &[0]);
        assert!(run_joint(&s, 2, 0.0, &mut rng).is_err());
        assert!(run_joint(&s, 2, -1.0, &mut rng).is_err());
    }

    // The streaming log-count pass against a direct O(dk*k) evaluation of the
    // product formula, cell by cell.
    #[test]
    fn log_mode_counts_match_direct_computation() {
        let mut rng = stream(39, &[0]);
        for (d, k) in [(50usize, 25usize), (40, 32), (64, 20)] {
            let counts: Vec<u64> = (0..d).map(|_| rng.random_range(0..200u64)).collect();
            let s = sc(&counts);
            let table = CellTable::build(&s, k).unwrap();
            assert!(table.exact_count_at(0).is_none(), "want log mode for d={d}, k={k}");
            for a in (0..table.len()).step_by(7) {
                let (row, col) = table.cell_at(a);
                let key = table.key(row, col);
                let mut direct = 0.0f64;
                let mut zero = false;
                for r in 0..k {
                    if r == row {
                        continue;
                    }
                    let t = table.reach(r, key) as i64;
                    if t - r as i64 <= 0 {
                        zero = true;
                        break;
                    }
                    direct += ((t - r as i64) as f64).ln();
                }
                let got = table.log_count_at(a);
                if zero {
                    assert_eq!(got, f64::NEG_INFINITY, "cell {a} of d={d}, k={k}");
                } else {
                    assert!(
                        (got - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                        "cell {a} of d={d}, k={k}: streaming {got} vs direct {direct}"
                    );
                }
            }
        }
    }

    proptest! {
        // Strictly decreasing keys, every (row, col) exactly once, ceilings
        // consistent with the raw count differences.
        #[test]
        fn cell_stream_is_a_strict_total_order(
            counts in prop::collection::vec(0u64..30, 1..12),
            k_seed in 0usize..12,
        ) {
            let s = SortedCounts::from_counts(counts).unwrap();
            let k = 1 + k_seed % s.d();
            let cells: Vec<Cell> = sorted_cells(&s, k).unwrap().collect();
            prop_assert_eq!(cells.len(), s.d() * k);
            let mut seen = HashSet::new();
            for w in cells.windows(2) {
                prop_assert!(w[0].key > w[1].key);
            }
            for c in &cells {
                prop_assert!(seen.insert((c.row, c.col)));
                let want = s.counts()[c.col] as i64 - s.counts()[c.row] as i64;
                prop_assert_eq!(c.ceiling, want);
            }
        }

        // Total sequence count equals d * (d-1) * ... * (d-k+1).
        #[test]
        fn counts_conserve_the_number_of_sequences(
            counts in prop::collection::vec(0u64..50, 1..16),
            k_seed in 0usize..16,
        ) {
            let s = SortedCounts::from_counts(counts).unwrap();
            let k = 1 + k_seed % s.d().min(5);
            let table = CellTable::build(&s, k).unwrap();
            let total: u128 = (0..table.len()).map(|a| table.exact_count_at(a).unwrap()).sum();
            let want: u128 = (0..k as u128).map(|r| s.d() as u128 - r).product();
            prop_assert_eq!(total, want);
        }
    }
}
