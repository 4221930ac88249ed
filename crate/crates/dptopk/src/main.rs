//! `dptopk`: benchmark CLI for differentially private top-k selection.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on data errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dptopk::counts::{load_counts_path, sort_counts, InputFormat, SortedCounts};
use dptopk::harness::{
    bench_timings, gap_report, run_experiment, write_gaps_csv, write_rows_csv, write_rows_jsonl,
    write_timings_csv, ExperimentConfig, Mechanism, Metric,
};
use dptopk::oracle::naive_em_distribution;

#[derive(Parser)]
#[command(name = "dptopk", version, about = "Differentially private top-k selection benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run repeated trials and emit percentile error summaries.
    Run(RunArgs),
    /// Report consecutive count gaps of a dataset.
    Gaps(GapsArgs),
    /// Time mechanism invocations.
    Bench(BenchArgs),
    /// Exact exponential-mechanism distribution on tiny instances (debugging).
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Count dataset file.
    #[arg(long)]
    counts: PathBuf,
    /// Input format: `csv` (item_id,count) or `plain` (one count per line).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated subset of joint,pnf-joint,pnf-peel,cdp-peel.
    #[arg(long)]
    mechanisms: String,
    /// k values: a comma list `5,15,25` or a range `start:step:end`.
    #[arg(long)]
    k: String,
    #[arg(long)]
    epsilon: f64,
    /// Approximate-DP delta; required for cdp-peel.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of linf,l1,krel,signed-max.
    #[arg(long, default_value = "linf,l1,krel,signed-max")]
    metrics: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON lines instead of CSV.
    #[arg(long)]
    json: bool,
    /// Add 1 to every reported error, for log-scale plotting.
    #[arg(long)]
    pad_for_log: bool,
}

#[derive(Args)]
struct GapsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    mechanisms: String,
    #[arg(long)]
    k: String,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    epsilon: f64,
}

enum AppError {
    Config(String),
    Data(String),
}

impl AppError {
    fn code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(1),
            AppError::Data(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Data(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> AppError {
    AppError::Config(e.to_string())
}

fn data_err(e: impl std::fmt::Display) -> AppError {
    AppError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not failures.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.cmd {
        Cmd::Run(args) => run(args),
        Cmd::Gaps(args) => gaps(args),
        Cmd::Bench(args) => bench(args),
        Cmd::Oracle(args) => oracle(args),
    }
}

fn load_sorted(data: &DataArgs) -> Result<SortedCounts, AppError> {
    let format: InputFormat = data.format.parse().map_err(config_err)?;
    let ic = load_counts_path(&data.counts, format).map_err(data_err)?;
    Ok(sort_counts(&ic))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, AppError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(config_err))
        .collect::<Result<Vec<T>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(AppError::Config(format!("empty {what} list")))
            } else {
                Ok(v)
            }
        })
}

/// `5,15,25` or `start:step:end` (inclusive).
fn parse_k_spec(s: &str) -> Result<Vec<usize>, AppError> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(AppError::Config(format!("bad k range {s:?}, expected start:step:end")));
        }
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.trim().parse::<usize>().map_err(config_err))
            .collect::<Result<_, _>>()?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if step == 0 || start == 0 || start > end {
            return Err(AppError::Config(format!("bad k range {s:?}")));
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        let ks = parse_list::<usize>(s, "k")?;
        if ks.contains(&0) {
            return Err(AppError::Config("k must be >= 1".into()));
        }
        Ok(ks)
    }
}

fn with_output<F>(out: Option<&PathBuf>, f: F) -> Result<(), AppError>
where
    F: FnOnce(&mut dyn Write) -> dptopk::Result<()>,
{
    match out {
        Some(path) => {
            let file = File::create(path).map_err(data_err)?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(data_err)?;
            w.flush().map_err(data_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w).map_err(data_err)
        }
    }
}

fn run(args: RunArgs) -> Result<(), AppError> {
    let sc = load_sorted(&args.data)?;
    let cfg = ExperimentConfig {
        mechanisms: parse_list::<Mechanism>(&args.mechanisms, "mechanism")?,
        ks: parse_k_spec(&args.k)?,
        epsilon: args.epsilon,
        delta: args.delta,
        trials: args.trials,
        seed: args.seed,
        metrics: parse_list::<Metric>(&args.metrics, "metric")?,
    };
    for &k in cfg.ks.iter().filter(|&&k| k > sc.d()) {
        eprintln!("warning: skipping k = {k} above domain size d = {}", sc.d());
    }
    let rows = run_experiment(&sc, &cfg).map_err(config_err)?;
    with_output(args.out.as_ref(), |w| {
        if args.json {
            write_rows_jsonl(&rows, args.pad_for_log, w)
        } else {
            write_rows_csv(&rows, args.pad_for_log, w)
        }
    })
}

fn gaps(args: GapsArgs) -> Result<(), AppError> {
    let sc = load_sorted(&args.data)?;
    let gaps = gap_report(&sc, args.k_max).map_err(config_err)?;
    with_output(args.out.as_ref(), |w| write_gaps_csv(&gaps, w))
}

fn bench(args: BenchArgs) -> Result<(), AppError> {
    let sc = load_sorted(&args.data)?;
    let mechanisms = parse_list::<Mechanism>(&args.mechanisms, "mechanism")?;
    let ks = parse_k_spec(&args.k)?;
    let rows = bench_timings(&sc, &mechanisms, &ks, args.trials, args.seed, args.epsilon, args.delta)
        .map_err(config_err)?;
    with_output(args.out.as_ref(), |w| write_timings_csv(&rows, w))
}

fn oracle(args: OracleArgs) -> Result<(), AppError> {
    let sc = load_sorted(&args.data)?;
    let dist = naive_em_distribution(&sc, args.k, args.epsilon).map_err(config_err)?;
    let mut rows: Vec<(Vec<usize>, f64)> = dist.into_iter().collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    with_output(None, |w| {
        writeln!(w, "sequence,probability")?;
        for (seq, p) in &rows {
            let ids: Vec<&str> = seq.iter().map(|&r| sc.id_at(r)).collect();
            writeln!(w, "{},{p:.6}", ids.join(";"))?;
        }
        Ok(())
    })
}
