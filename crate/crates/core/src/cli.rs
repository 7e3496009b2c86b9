//! The `fcit` command line: `gen`, `test`, `sweep` and `summarize`.
//!
//! Exit codes are 0 on success, 1 on usage errors and 2 on data errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    aggregate_metrics, read_config_hash, read_records, run_sweep, summarize_errors, workers_from_env, write_metrics,
    write_records, write_summary, SweepConfig,
};
use crate::dataset::{read_table, Setting};
use crate::datasets::{ChaosSpec, DatasetSpec, HybridSpec, LingaussSpec, PnlSpec};
use crate::error::Error;
use crate::fit::{auto_test, FitConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fcit", version, about = "Fast conditional independence test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV plus a .meta.json sidecar.
    Gen(GenArgs),
    /// Test X ⫫ Y | Z on columns of a CSV file and print the outcome as JSON.
    Test(TestArgs),
    /// Run a benchmark sweep from a JSON config and write the records CSV.
    Sweep(SweepArgs),
    /// Turn a records CSV into error-summary and metrics CSVs.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    setting: Setting,
    /// Dimension (lingauss, hybrid, pnl).
    #[arg(long)]
    dim: Option<usize>,
    /// Coupling strength (chaos).
    #[arg(long)]
    alpha: Option<f64>,
    /// Multinomial count (hybrid).
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dependent: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column indices such as `0-3` or `0,2,5-7`.
    #[arg(long, value_parser = parse_column_arg)]
    x_cols: Columns,
    #[arg(long, value_parser = parse_column_arg)]
    y_cols: Columns,
    /// Omit for the unconditional test.
    #[arg(long, value_parser = parse_column_arg)]
    z_cols: Option<Columns>,
    #[arg(long, default_value_t = 8)]
    n_perm: usize,
    #[arg(long, default_value_t = 0.1)]
    frac_test: f64,
    #[arg(long)]
    bootstrap: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Records CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 60.0)]
    time_cap: f64,
    #[arg(long)]
    summary: PathBuf,
    #[arg(long)]
    metrics: PathBuf,
}

#[derive(Debug, Clone)]
struct Columns(Vec<usize>);

fn parse_column_arg(s: &str) -> Result<Columns, String> {
    parse_columns(s).map(Columns)
}

/// Parses `0-3`, `5` or `0,2,5-7` into column indices, ranges inclusive.
pub fn parse_columns(s: &str) -> Result<Vec<usize>, String> {
    let mut cols = Vec::new();
    for part in s.split(',').map(str::trim) {
        let bad = || format!("invalid column list `{s}`");
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                cols.extend(a..=b);
            }
            None => cols.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(cols)
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Test(a) => test(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Summarize(a) => summarize(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn require<T>(v: Option<T>, flag: &str, setting: Setting) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for {setting}")))
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (n, dependent, seed) = (a.n, a.dependent, a.seed);
    let spec = match a.setting {
        Setting::Lingauss => {
            DatasetSpec::Lingauss(LingaussSpec { dim: require(a.dim, "dim", a.setting)?, dependent, n, seed })
        }
        Setting::Chaos => {
            DatasetSpec::Chaos(ChaosSpec { alpha: require(a.alpha, "alpha", a.setting)?, dependent, n, seed })
        }
        Setting::Hybrid => DatasetSpec::Hybrid(HybridSpec {
            gamma: require(a.gamma, "gamma", a.setting)?,
            dim: require(a.dim, "dim", a.setting)?,
            dependent,
            n,
            seed,
        }),
        Setting::Pnl => DatasetSpec::Pnl(PnlSpec { dim: require(a.dim, "dim", a.setting)?, dependent, n, seed }),
        Setting::External => return Err(Failure::Usage("cannot generate external data".into())),
    };
    let data = spec.generate()?;
    let meta = data.save(&a.out)?;
    writeln!(out, "wrote {} and {}", a.out.display(), meta.display())?;
    Ok(())
}

fn test(a: TestArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let table = read_table(File::open(&a.data)?)?;
    let x = table.select_columns(&a.x_cols.0)?;
    let y = table.select_columns(&a.y_cols.0)?;
    let z = a.z_cols.map(|c| table.select_columns(&c.0)).transpose()?;
    let cfg = FitConfig {
        n_perm: a.n_perm,
        frac_test: a.frac_test,
        use_bootstrap: a.bootstrap,
        seed: a.seed,
        workers: a.workers.or_else(workers_from_env),
        ..FitConfig::default()
    };
    let outcome = auto_test(&x, &y, z.as_ref(), &cfg)?;
    serde_json::to_writer_pretty(&mut *out, &outcome).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = SweepConfig::from_json(&fs::read_to_string(&a.config)?)?;
    if let Some(w) = a.workers.or_else(workers_from_env) {
        cfg.workers = Some(w);
    }
    let records = run_sweep(&cfg)?;
    match a.out {
        Some(path) => write_records(&records, &cfg.hash(), BufWriter::new(File::create(path)?))?,
        None => write_records(&records, &cfg.hash(), out)?,
    }
    Ok(())
}

fn summarize(a: SummarizeArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.records)?;
    let hash = read_config_hash(&text).unwrap_or_default();
    let records = read_records(text.as_bytes())?;
    let summary = summarize_errors(&records, a.alpha, a.time_cap);
    write_summary(&summary, &hash, BufWriter::new(File::create(&a.summary)?))?;
    let metrics = aggregate_metrics(&records);
    write_metrics(&metrics, &hash, BufWriter::new(File::create(&a.metrics)?))?;
    Ok(())
}
