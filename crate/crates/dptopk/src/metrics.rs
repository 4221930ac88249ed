//! Error metrics of an output sequence against the true sorted counts.
//!
//! All metrics compare count values, not item identities; with tied counts an
//! identity comparison would be ill-posed.

use crate::counts::SortedCounts;
use crate::joint::TopKSample;

/// Errors of one output sequence.
///
/// `linf` and `l1` are norms of the rank-wise count differences; `k_rel` is
/// how far the worst selected count falls below the true k-th count, floored
/// at zero; `signed_max` is the worst rank-wise shortfall without absolute
/// values (never negative: rank 1 can never be exceeded).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorReport {
    pub linf: u64,
    pub l1: u64,
    pub k_rel: u64,
    pub signed_max: i64,
}

pub fn evaluate(sc: &SortedCounts, sample: &TopKSample) -> ErrorReport {
    let counts = sc.counts();
    let k = sample.k();
    let mut linf = 0u64;
    let mut l1 = 0u64;
    let mut signed_max = i64::MIN;
    let mut min_selected = u64::MAX;
    for (i, &rank) in sample.ranks.iter().enumerate() {
        let true_c = counts[i];
        let got_c = counts[rank];
        let abs = true_c.abs_diff(got_c);
        linf = linf.max(abs);
        l1 = l1.saturating_add(abs);
        let signed = if got_c <= true_c { abs as i64 } else { -(abs.min(i64::MAX as u64) as i64) };
        signed_max = signed_max.max(signed);
        min_selected = min_selected.min(got_c);
    }
    ErrorReport {
        linf,
        l1,
        k_rel: counts[k - 1].saturating_sub(min_selected),
        signed_max,
    }
}

/// High-probability bound on `signed_max` for the joint mechanism:
/// `2 (k ln(d) + 5) / epsilon`.
pub fn utility_bound(d: usize, k: usize, epsilon: f64) -> f64 {
    2.0 * (k as f64 * (d as f64).ln() + 5.0) / epsilon
}
