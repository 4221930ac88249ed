//! Experiment runner: repeated trials across mechanisms and k values, with
//! percentile summaries, gap reports, and timing comparisons.
//!
//! Trial t of mechanism m at a given k always runs on the RNG stream derived
//! from `(seed, m, k, t)`, so a run is reproducible under any execution order
//! and parallelism. Percentiles use the nearest-rank rule on the sorted trial
//! errors.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::counts::SortedCounts;
use crate::error::{Error, Result};
use crate::exec::map_trials;
use crate::joint::{run_joint, TopKSample};
use crate::metrics::{evaluate, ErrorReport};
use crate::peeling::{per_round_epsilon, run_cdp_peel, run_pnf_peel};
use crate::pnf_joint::run_pnf_joint;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Joint,
    PnfJoint,
    PnfPeel,
    CdpPeel,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] =
        [Mechanism::Joint, Mechanism::PnfJoint, Mechanism::PnfPeel, Mechanism::CdpPeel];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Joint => "joint",
            Mechanism::PnfJoint => "pnf-joint",
            Mechanism::PnfPeel => "pnf-peel",
            Mechanism::CdpPeel => "cdp-peel",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Mechanism::Joint => 1,
            Mechanism::PnfJoint => 2,
            Mechanism::PnfPeel => 3,
            Mechanism::CdpPeel => 4,
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown mechanism {s:?}")))
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Linf,
    L1,
    KRel,
    SignedMax,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Linf, Metric::L1, Metric::KRel, Metric::SignedMax];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Linf => "linf",
            Metric::L1 => "l1",
            Metric::KRel => "krel",
            Metric::SignedMax => "signed-max",
        }
    }

    fn value(self, r: &ErrorReport) -> i64 {
        match self {
            Metric::Linf => r.linf.min(i64::MAX as u64) as i64,
            Metric::L1 => r.l1.min(i64::MAX as u64) as i64,
            Metric::KRel => r.k_rel.min(i64::MAX as u64) as i64,
            Metric::SignedMax => r.signed_max,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown metric {s:?}")))
    }
}

/// Everything a run needs besides the dataset itself.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mechanisms: Vec<Mechanism>,
    pub ks: Vec<usize>,
    pub epsilon: f64,
    /// Required when `cdp-peel` is among the mechanisms.
    pub delta: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() {
            return Err(Error::domain("at least one mechanism required"));
        }
        if self.ks.is_empty() {
            return Err(Error::domain("at least one k required"));
        }
        if self.metrics.is_empty() {
            return Err(Error::domain("at least one metric required"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be >= 1"));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.mechanisms.contains(&Mechanism::CdpPeel) {
            match self.delta {
                Some(d) if d > 0.0 && d < 1.0 => {}
                Some(d) => return Err(Error::domain(format!("delta must lie in (0, 1), got {d}"))),
                None => return Err(Error::domain("cdp-peel requires --delta")),
            }
        }
        Ok(())
    }
}

/// One summary line: percentile errors of one metric for one mechanism at one
/// k, plus the median per-trial wall time.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub mechanism: String,
    pub k: usize,
    pub metric: String,
    pub p25: i64,
    pub median: i64,
    pub p75: i64,
    pub trials: usize,
    pub wall_time_ms: f64,
}

/// Nearest-rank percentile of sorted values: the smallest element with at
/// least `p` percent of the sample at or below it.
fn nearest_rank(sorted: &[i64], p: f64) -> i64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn median_f64(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

fn run_mechanism(
    mech: Mechanism,
    sc: &SortedCounts,
    k: usize,
    epsilon: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<TopKSample> {
    match mech {
        Mechanism::Joint => run_joint(sc, k, epsilon, rng),
        Mechanism::PnfJoint => run_pnf_joint(sc, k, epsilon, rng),
        Mechanism::PnfPeel => run_pnf_peel(sc, k, epsilon, rng),
        // For cdp-peel the caller passes the per-round epsilon.
        Mechanism::CdpPeel => run_cdp_peel(sc, k, epsilon, rng),
    }
}

/// Runs every (mechanism, k) cell of the experiment; k values exceeding the
/// domain size are skipped. Rows come back grouped by mechanism, then k, then
/// metric, in configuration order.
pub fn run_experiment(sc: &SortedCounts, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &mech in &cfg.mechanisms {
        for &k in cfg.ks.iter().filter(|&&k| k <= sc.d()) {
            let eps = match mech {
                Mechanism::CdpPeel => {
                    per_round_epsilon(cfg.epsilon, k, cfg.delta.expect("validated"))?
                }
                _ => cfg.epsilon,
            };
            let outcomes: Vec<Result<(ErrorReport, f64)>> = map_trials(cfg.trials, |t| {
                let mut rng = stream(cfg.seed, &[mech.tag(), k as u64, t as u64]);
                let start = Instant::now();
                let sample = run_mechanism(mech, sc, k, eps, &mut rng)?;
                let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
                Ok((evaluate(sc, &sample), elapsed_ms))
            });
            let outcomes: Vec<(ErrorReport, f64)> =
                outcomes.into_iter().collect::<Result<_>>()?;
            let mut times: Vec<f64> = outcomes.iter().map(|(_, t)| *t).collect();
            let wall_time_ms = median_f64(&mut times);
            for &metric in &cfg.metrics {
                let mut values: Vec<i64> =
                    outcomes.iter().map(|(r, _)| metric.value(r)).collect();
                values.sort_unstable();
                rows.push(ResultRow {
                    mechanism: mech.name().to_string(),
                    k,
                    metric: metric.name().to_string(),
                    p25: nearest_rank(&values, 25.0),
                    median: nearest_rank(&values, 50.0),
                    p75: nearest_rank(&values, 75.0),
                    trials: cfg.trials,
                    wall_time_ms,
                });
            }
        }
    }
    Ok(rows)
}

/// Consecutive count gaps `c_k - c_(k+1)` for k = 1..=k_max (1-based ranks).
pub fn gap_report(sc: &SortedCounts, k_max: usize) -> Result<Vec<(usize, u64)>> {
    if k_max >= sc.d() {
        return Err(Error::domain(format!(
            "k_max must be below d = {}, got {k_max}",
            sc.d()
        )));
    }
    let counts = sc.counts();
    Ok((1..=k_max).map(|k| (k, counts[k - 1] - counts[k])).collect())
}

/// Median wall time of one mechanism invocation per (mechanism, k).
#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub mechanism: String,
    pub k: usize,
    pub trials: usize,
    pub median_ms: f64,
}

pub fn bench_timings(
    sc: &SortedCounts,
    mechanisms: &[Mechanism],
    ks: &[usize],
    trials: usize,
    seed: u64,
    epsilon: f64,
    delta: Option<f64>,
) -> Result<Vec<TimingRow>> {
    let cfg = ExperimentConfig {
        mechanisms: mechanisms.to_vec(),
        ks: ks.to_vec(),
        epsilon,
        delta,
        trials,
        seed,
        metrics: vec![Metric::Linf],
    };
    cfg.validate()?;
    let mut rows = Vec::new();
    for &mech in mechanisms {
        for &k in ks.iter().filter(|&&k| k <= sc.d()) {
            let eps = match mech {
                Mechanism::CdpPeel => per_round_epsilon(epsilon, k, delta.expect("validated"))?,
                _ => epsilon,
            };
            let times: Vec<Result<f64>> = map_trials(trials, |t| {
                let mut rng = stream(seed, &[mech.tag(), k as u64, t as u64]);
                let start = Instant::now();
                run_mechanism(mech, sc, k, eps, &mut rng)?;
                Ok(start.elapsed().as_secs_f64() * 1e3)
            });
            let mut times: Vec<f64> = times.into_iter().collect::<Result<_>>()?;
            rows.push(TimingRow {
                mechanism: mech.name().to_string(),
                k,
                trials,
                median_ms: median_f64(&mut times),
            });
        }
    }
    Ok(rows)
}

/// Plot-ready CSV. `pad` adds 1 to every percentile for log-scale plotting;
/// stored results should stay unpadded.
pub fn write_rows_csv<W: Write>(rows: &[ResultRow], pad: bool, mut w: W) -> Result<()> {
    let off = i64::from(pad);
    writeln!(w, "mechanism,k,metric,p25,median,p75,trials,wall_time_ms")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.3}",
            r.mechanism,
            r.k,
            r.metric,
            r.p25 + off,
            r.median + off,
            r.p75 + off,
            r.trials,
            r.wall_time_ms
        )?;
    }
    Ok(())
}

/// One JSON object per line, same content as the CSV.
pub fn write_rows_jsonl<W: Write>(rows: &[ResultRow], pad: bool, mut w: W) -> Result<()> {
    let off = i64::from(pad);
    for r in rows {
        let padded = ResultRow {
            p25: r.p25 + off,
            median: r.median + off,
            p75: r.p75 + off,
            ..r.clone()
        };
        writeln!(w, "{}", serde_json::to_string(&padded).expect("plain struct"))?;
    }
    Ok(())
}

pub fn write_gaps_csv<W: Write>(gaps: &[(usize, u64)], mut w: W) -> Result<()> {
    writeln!(w, "k,gap")?;
    for (k, gap) in gaps {
        writeln!(w, "{k},{gap}")?;
    }
    Ok(())
}

pub fn write_timings_csv<W: Write>(rows: &[TimingRow], mut w: W) -> Result<()> {
    writeln!(w, "mechanism,k,trials,median_ms")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.3}", r.mechanism, r.k, r.trials, r.median_ms)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(counts: &[u64]) -> SortedCounts {
        SortedCounts::from_counts(counts.to_vec()).unwrap()
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            mechanisms: vec![Mechanism::Joint, Mechanism::CdpPeel],
            ks: vec![1, 2],
            epsilon: 1.0,
            delta: Some(1e-6),
            trials: 9,
            seed: 7,
            metrics: vec![Metric::Linf, Metric::SignedMax],
        }
    }

    #[test]
    fn mechanism_and_metric_names_round_trip() {
        for m in Mechanism::ALL {
            assert_eq!(m.name().parse::<Mechanism>().unwrap(), m);
        }
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("laplace".parse::<Mechanism>().is_err());
    }

    #[test]
    fn nearest_rank_on_known_values() {
        let v = [1i64, 2, 3, 4, 5, 6, 7, 8, 9, 10];
        assert_eq!(nearest_rank(&v, 25.0), 3);
        assert_eq!(nearest_rank(&v, 50.0), 5);
        assert_eq!(nearest_rank(&v, 75.0), 8);
        assert_eq!(nearest_rank(&[42], 50.0), 42);
    }

    #[test]
    fn rows_cover_every_cell_and_percentiles_are_ordered() {
        let s = sc(&[30, 20, 10, 5, 1]);
        let rows = run_experiment(&s, &small_cfg()).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        for r in &rows {
            assert!(r.p25 <= r.median && r.median <= r.p75, "{r:?}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_results() {
        let s = sc(&[30, 20, 10, 5, 1]);
        let a = run_experiment(&s, &small_cfg()).unwrap();
        let b = run_experiment(&s, &small_cfg()).unwrap();
        // Identical modulo wall time, which is measured, not derived.
        let strip = |rows: &[ResultRow]| -> Vec<(String, usize, String, i64, i64, i64, usize)> {
            rows.iter()
                .map(|r| {
                    (r.mechanism.clone(), r.k, r.metric.clone(), r.p25, r.median, r.p75, r.trials)
                })
                .collect()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn huge_epsilon_drives_all_errors_to_zero() {
        let s = sc(&[30, 20, 10, 5, 1]);
        let cfg = ExperimentConfig {
            mechanisms: Mechanism::ALL.to_vec(),
            ks: vec![2, 3],
            epsilon: 1e6,
            delta: Some(1e-6),
            trials: 5,
            seed: 1,
            metrics: vec![Metric::Linf, Metric::L1, Metric::KRel, Metric::SignedMax],
        };
        for r in run_experiment(&s, &cfg).unwrap() {
            assert_eq!((r.p25, r.median, r.p75), (0, 0, 0), "{r:?}");
        }
    }

    #[test]
    fn oversized_k_is_skipped() {
        let s = sc(&[3, 2, 1]);
        let mut cfg = small_cfg();
        cfg.ks = vec![2, 9];
        let rows = run_experiment(&s, &cfg).unwrap();
        assert!(rows.iter().all(|r| r.k == 2));
    }

    #[test]
    fn joint_error_shrinks_with_epsilon() {
        let s = sc(&[40, 36, 32, 28, 24, 20, 16, 12, 8, 4]);
        let run_at = |eps: f64| {
            let cfg = ExperimentConfig {
                mechanisms: vec![Mechanism::Joint],
                ks: vec![3],
                epsilon: eps,
                delta: None,
                trials: 50,
                seed: 11,
                metrics: vec![Metric::SignedMax],
            };
            run_experiment(&s, &cfg).unwrap()[0].median
        };
        assert!(run_at(4.0) <= run_at(0.5));
    }

    #[test]
    fn config_validation_errors() {
        let s = sc(&[3, 2, 1]);
        let mut cfg = small_cfg();
        cfg.delta = None;
        assert!(run_experiment(&s, &cfg).is_err());
        let mut cfg = small_cfg();
        cfg.trials = 0;
        assert!(run_experiment(&s, &cfg).is_err());
        let mut cfg = small_cfg();
        cfg.mechanisms.clear();
        assert!(run_experiment(&s, &cfg).is_err());
    }

    #[test]
    fn gap_report_examples() {
        assert_eq!(gap_report(&sc(&[5, 3, 1]), 2).unwrap(), vec![(1, 2), (2, 2)]);
        assert_eq!(gap_report(&sc(&[4, 4, 4]), 2).unwrap(), vec![(1, 0), (2, 0)]);
        let s = sc(&[100, 90, 80, 70, 60, 50, 40, 30, 20, 10]);
        assert!(gap_report(&s, 9).unwrap().iter().all(|&(_, g)| g == 10));
        assert!(gap_report(&s, 10).is_err());
    }

    #[test]
    fn csv_writer_shape_and_padding() {
        let rows = vec![ResultRow {
            mechanism: "joint".into(),
            k: 5,
            metric: "linf".into(),
            p25: 0,
            median: 2,
            p75: 4,
            trials: 50,
            wall_time_ms: 1.2345,
        }];
        let mut out = Vec::new();
        write_rows_csv(&rows, false, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "mechanism,k,metric,p25,median,p75,trials,wall_time_ms"
        );
        assert!(text.lines().nth(1).unwrap().starts_with("joint,5,linf,0,2,4,50,1.23"));

        let mut padded = Vec::new();
        write_rows_csv(&rows, true, &mut padded).unwrap();
        let text = String::from_utf8(padded).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("joint,5,linf,1,3,5,50,"));
    }

    #[test]
    fn jsonl_writer_is_parseable() {
        let rows = vec![ResultRow {
            mechanism: "joint".into(),
            k: 5,
            metric: "linf".into(),
            p25: 0,
            median: 2,
            p75: 4,
            trials: 50,
            wall_time_ms: 1.0,
        }];
        let mut out = Vec::new();
        write_rows_jsonl(&rows, false, &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(out.trim_ascii_end()).unwrap();
        assert_eq!(v["mechanism"], "joint");
        assert_eq!(v["median"], 2);
    }

    #[test]
    fn bench_rows_have_positive_times() {
        let s = sc(&[30, 20, 10, 5, 1]);
        let rows = bench_timings(
            &s,
            &[Mechanism::Joint, Mechanism::CdpPeel],
            &[2],
            3,
            5,
            1.0,
            Some(1e-6),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.median_ms >= 0.0));
    }
}
