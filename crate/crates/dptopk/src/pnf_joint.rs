//! Permute-and-flip variant of the joint mechanism.
//!
//! Same table, same sequence sampling; only the score-selection step changes.
//! Instead of sampling a cell from the exponential weights, every distinct
//! integer score gets one draw from the maximum of as many exponentials as
//! it has sequences, and the highest noisy score wins. This is report-noisy-
//! max with exponential noise run over the full sequence space, collapsed to
//! one draw per distinct score.
//!
//! The multiplicities ride through [`MaxExpoParams`] as logarithms, so the
//! variant stays usable when sequence counts overflow any fixed-width
//! integer.

use rand::Rng;

use crate::counts::SortedCounts;
use crate::error::{Error, Result};
use crate::joint::{CellTable, TopKSample, UtilityCell};
use crate::noise::{sample_log_categorical_iter, sample_max_expo, MaxExpoParams};

/// Log of the summed sequence count over a run of equal-ceiling cells.
fn run_log_total(table: &CellTable, start: usize, end: usize) -> f64 {
    if let Some(mut total) = table.exact_count_at(start) {
        for a in start + 1..end {
            total += table.exact_count_at(a).expect("mode is uniform across the table");
        }
        return if total == 0 { f64::NEG_INFINITY } else { (total as f64).ln() };
    }
    let max = (start..end).map(|a| table.log_count_at(a)).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + (start..end)
        .map(|a| (table.log_count_at(a) - max).exp())
        .sum::<f64>()
        .ln()
}

/// Report-noisy-max over distinct integer scores: each score with any
/// sequences gets `ceiling + MaxExpo(epsilon/2, total sequences)`, and the
/// argmax's run is returned with one of its cells chosen in proportion to its
/// sequence count.
pub fn select_utility_pnf<R: Rng + ?Sized>(
    table: &CellTable,
    epsilon: f64,
    rng: &mut R,
) -> Result<UtilityCell> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    // Equal ceilings are contiguous: cells are sorted by perturbed score and
    // the perturbations never cross an integer boundary.
    let mut best: Option<(f64, usize, usize)> = None;
    let mut start = 0;
    while start < table.len() {
        let ceiling = table.ceiling_at(start);
        let mut end = start + 1;
        while end < table.len() && table.ceiling_at(end) == ceiling {
            end += 1;
        }
        let log_total = run_log_total(table, start, end);
        if log_total > f64::NEG_INFINITY {
            let noise = MaxExpoParams::with_log_count(epsilon / 2.0, log_total)?;
            let v = ceiling as f64 + sample_max_expo(&noise, rng);
            if best.is_none_or(|(b, _, _)| v > b) {
                best = Some((v, start, end));
            }
        }
        start = end;
    }
    let (_, start, end) = best.expect("the true top-k cell always has a positive count");
    let within = sample_log_categorical_iter((start..end).map(|a| table.log_count_at(a)), rng)?;
    Ok(table.utility_cell_at(start + within))
}

/// Full permute-and-flip run: as the joint mechanism, with the score
/// selection swapped out.
pub fn run_pnf_joint<R: Rng + ?Sized>(
    sc: &SortedCounts,
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<TopKSample> {
    let table = CellTable::build(sc, k)?;
    let cell = select_utility_pnf(&table, epsilon, rng)?;
    let ranks = table.sample_sequence(&cell, rng);
    Ok(TopKSample::new(sc, ranks, Some(cell)))
}
