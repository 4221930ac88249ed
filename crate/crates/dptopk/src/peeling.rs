//! Peeling baselines: k sequential noisy-max selections.
//!
//! `run_pnf_peel` is the pure-DP baseline: k permute-and-flip rounds, each
//! adding fresh exponential noise to every remaining count and removing the
//! winner. `run_cdp_peel` is the approximate-DP baseline: one Gumbel draw per
//! count and the k highest noisy counts in order, which matches k repeated
//! exponential-mechanism selections and composes tightly under concentrated
//! DP.

use rand::Rng;

use crate::counts::SortedCounts;
use crate::error::{Error, Result};
use crate::joint::TopKSample;
use crate::noise::{sample_expo, sample_gumbel, ExpoParams, GumbelParams};

/// An (epsilon, delta) privacy target. `delta = 0` is pure DP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::domain(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    /// Per-round epsilon for k composed exponential-mechanism rounds hitting
    /// this (epsilon, delta) target. Requires `delta > 0`.
    pub fn per_round_epsilon(&self, k: usize) -> Result<f64> {
        per_round_epsilon(self.epsilon, k, self.delta)
    }
}

/// Overall epsilon of k exponential-mechanism rounds at `eps_round` each,
/// composed through concentrated DP and converted back at the given delta:
/// `k*e'^2/8 + 2e'*sqrt(k*ln(1/delta)/8)`.
pub fn composed_epsilon(eps_round: f64, k: usize, delta: f64) -> Result<f64> {
    if !eps_round.is_finite() || eps_round <= 0.0 {
        return Err(Error::domain(format!("per-round epsilon must be positive, got {eps_round}")));
    }
    check_delta(delta)?;
    let kf = k as f64;
    Ok(kf * eps_round * eps_round / 8.0 + 2.0 * eps_round * (kf * (1.0 / delta).ln() / 8.0).sqrt())
}

/// Inverse of [`composed_epsilon`] in `eps_round`: the positive root of
/// `(k/8) e'^2 + 2 sqrt(k ln(1/delta)/8) e' - epsilon = 0`, in the
/// subtraction-free form `2 epsilon / (b + sqrt(b^2 + 4 a epsilon))`.
pub fn per_round_epsilon(epsilon: f64, k: usize, delta: f64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    check_delta(delta)?;
    let a = k as f64 / 8.0;
    let b = 2.0 * (k as f64 * (1.0 / delta).ln() / 8.0).sqrt();
    Ok(2.0 * epsilon / (b + (b * b + 4.0 * a * epsilon).sqrt()))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta <= 0.0 || delta >= 1.0 || delta.is_nan() {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_args(sc: &SortedCounts, k: usize, epsilon: f64) -> Result<()> {
    if k == 0 || k > sc.d() {
        return Err(Error::domain(format!(
            "k must satisfy 1 <= k <= d = {}, got {k}",
            sc.d()
        )));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Pure-DP peeling: k permute-and-flip rounds at `epsilon / k` each. The
/// count utility is monotonic, so the noise rate carries no factor of 2.
pub fn run_pnf_peel<R: Rng + ?Sized>(
    sc: &SortedCounts,
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<TopKSample> {
    check_args(sc, k, epsilon)?;
    let noise = ExpoParams::new(epsilon / k as f64)?;
    let counts = sc.counts();
    let mut alive: Vec<usize> = (0..sc.d()).collect();
    let mut ranks = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (pos, &rank) in alive.iter().enumerate() {
            let noisy = counts[rank] as f64 + sample_expo(&noise, rng);
            // Strict comparison keeps the earliest (lowest-rank) maximum.
            if noisy > best.1 {
                best = (pos, noisy);
            }
        }
        ranks.push(alive.remove(best.0));
    }
    Ok(TopKSample::new(sc, ranks, None))
}

/// Approximate-DP peeling: one `Gumbel(k / eps_round)` draw per count, then
/// the k highest noisy counts in descending order.
pub fn run_cdp_peel<R: Rng + ?Sized>(
    sc: &SortedCounts,
    k: usize,
    eps_round: f64,
    rng: &mut R,
) -> Result<TopKSample> {
    check_args(sc, k, eps_round)?;
    let noise = GumbelParams::new(k as f64 / eps_round)?;
    let noisy: Vec<f64> = sc
        .counts()
        .iter()
        .map(|&c| c as f64 + sample_gumbel(&noise, rng))
        .collect();
    let mut order: Vec<usize> = (0..sc.d()).collect();
    let by_noisy_desc =
        |&a: &usize, &b: &usize| noisy[b].total_cmp(&noisy[a]).then_with(|| a.cmp(&b));
    if k < order.len() {
        order.select_nth_unstable_by(k, by_noisy_desc);
        order.truncate(k);
    }
    order.sort_unstable_by(by_noisy_desc);
    Ok(TopKSample::new(sc, order, None))
}
