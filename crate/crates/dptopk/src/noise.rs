//! Sampling primitives: exponential and Gumbel noise, the maximum of m
//! exponentials, and numerically stable categorical sampling over log-weights.
//!
//! All samplers are inverse-CDF transforms of a single uniform draw, so a
//! fixed RNG stream pins the output exactly. Everything is 64-bit floating
//! point; side channels of floating-point noise are out of scope here.

use rand::Rng;

use crate::error::{Error, Result};

/// Exponential distribution with the given rate: density `rate * exp(-rate*x)`
/// on `x >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct ExpoParams {
    pub rate: f64,
}

impl ExpoParams {
    pub fn new(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::domain(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(ExpoParams { rate })
    }
}

/// Gumbel distribution with the given scale: density
/// `(1/scale) * exp(-x/scale - exp(-x/scale))`.
#[derive(Debug, Clone, Copy)]
pub struct GumbelParams {
    pub scale: f64,
}

impl GumbelParams {
    pub fn new(scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::domain(format!("Gumbel scale must be positive, got {scale}")));
        }
        Ok(GumbelParams { scale })
    }
}

/// Distribution of the maximum of `m` independent exponentials with a common
/// rate. The multiplicity is carried as `ln(m)` so that values of `m` far
/// beyond both u64 and f64 range stay usable.
#[derive(Debug, Clone, Copy)]
pub struct MaxExpoParams {
    pub rate: f64,
    pub log_count: f64,
}

impl MaxExpoParams {
    pub fn new(rate: f64, count: u128) -> Result<Self> {
        if count == 0 {
            return Err(Error::domain("maximum of zero exponentials is undefined"));
        }
        Self::with_log_count(rate, (count as f64).ln())
    }

    /// `log_count = ln(m)`; must be finite and nonnegative (`m >= 1`).
    pub fn with_log_count(rate: f64, log_count: f64) -> Result<Self> {
        ExpoParams::new(rate)?;
        if !log_count.is_finite() || log_count < 0.0 {
            return Err(Error::domain(format!(
                "log multiplicity must be finite and >= 0, got {log_count}"
            )));
        }
        Ok(MaxExpoParams { rate, log_count })
    }
}

/// Uniform draw from the open interval (0, 1).
fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn sample_expo<R: Rng + ?Sized>(p: &ExpoParams, rng: &mut R) -> f64 {
    -unit_open(rng).ln() / p.rate
}

pub fn sample_gumbel<R: Rng + ?Sized>(p: &GumbelParams, rng: &mut R) -> f64 {
    p.scale * standard_gumbel(rng)
}

fn standard_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(-unit_open(rng).ln()).ln()
}

/// Inverse-CDF sample of the maximum of `m` exponentials:
/// `-ln(1 - p^(1/m)) / rate`.
///
/// `p^(1/m)` approaches 1 for large `m`, so `ln(1 - p^(1/m))` is evaluated as
/// `log1mexp(x)` with `x = ln(p)/m`, and `ln(-x)` is formed in log space so the
/// computation survives `m` too large for `1/m` to be representable.
pub fn sample_max_expo<R: Rng + ?Sized>(p: &MaxExpoParams, rng: &mut R) -> f64 {
    let u = unit_open(rng);
    let ln_u = u.ln(); // in [-745, 0)
    // ln(-x) for x = ln(u)/m, without forming x itself.
    let log_neg_x = (-ln_u).ln() - p.log_count;
    let log1m = if log_neg_x < -36.0 {
        // 1 - e^x == -x to f64 precision here.
        log_neg_x
    } else {
        let x = -log_neg_x.exp();
        if x < -std::f64::consts::LN_2 {
            (-x.exp()).ln_1p()
        } else {
            (-x.exp_m1()).ln()
        }
    };
    -log1m / p.rate
}

/// Samples index `i` with probability proportional to `exp(log_weights[i])`.
///
/// Uses the Gumbel-max trick: one pass, no normalization, immune to uniform
/// shifts of the weights. Entries of `-inf` carry zero mass; at least one
/// entry must be finite.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    sample_log_categorical_iter(log_weights.iter().copied(), rng)
}

/// Streaming form of [`sample_log_categorical`] for weight sequences that are
/// cheaper to generate than to store.
pub fn sample_log_categorical_iter<R, I>(log_weights: I, rng: &mut R) -> Result<usize>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, lw) in log_weights.into_iter().enumerate() {
        if lw == f64::NEG_INFINITY {
            continue;
        }
        debug_assert!(!lw.is_nan(), "log-weight {i} is NaN");
        let score = lw + standard_gumbel(rng);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::domain("all log-weights are -inf; nothing to sample"))
}
