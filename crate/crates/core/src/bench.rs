//! Sample-size sweeps over the synthetic settings, error-rate summaries and
//! p-value metrics, plus the CSV formats they are exchanged in.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Setting;
use crate::datasets::{official_sweep, Difficulty};
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::fit::{auto_test_until, FitConfig, MIN_SAMPLES};
use crate::seed::SeedStream;
use crate::stats::{aupc, ks_uniform_p};

pub const WORKERS_ENV: &str = "FCIT_WORKERS";
pub const RECORDS_HEADER: &str = "setting,params,n_samples,dependent,seed,p_value,wall_time_s,status";
pub const SUMMARY_HEADER: &str = "setting,params,n_used,type1,type2,avg_error,aupc,ks_p";
pub const METRICS_HEADER: &str = "setting,params,n_samples,n_dependent,n_independent,aupc,ks_p";
const NOT_RUN: &str = "NOT-RUN";
const MIN_KS: usize = 5;

/// Ten log-spaced sample sizes from 10² to 10⁵.
pub fn default_sample_sizes() -> Vec<usize> {
    (0..10).map(|k| 10f64.powf(2.0 + k as f64 / 3.0).round() as usize).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub settings: Vec<Setting>,
    pub sample_sizes: Vec<usize>,
    /// Seconds after which a single test is abandoned.
    pub time_budget: f64,
    /// Seconds a test may take to count towards the error summary.
    pub time_cap: f64,
    pub alpha: f64,
    /// Seeds per (difficulty, n, version) cell.
    pub seeds: usize,
    pub workers: Option<usize>,
    /// Root seed every dataset and test seed is derived from.
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            settings: Setting::SYNTHETIC.to_vec(),
            sample_sizes: default_sample_sizes(),
            time_budget: 100.0,
            time_cap: 60.0,
            alpha: 0.05,
            seeds: 3,
            workers: None,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() || self.settings.contains(&Setting::External) {
            return Err(Error::Config("settings must be a non-empty subset of the synthetic settings".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sample_sizes must be non-empty and strictly increasing".into()));
        }
        if self.sample_sizes[0] < MIN_SAMPLES {
            return Err(Error::Config(format!("sample sizes must be at least {MIN_SAMPLES}")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.time_budget >= 0.0 && self.time_cap >= 0.0) {
            return Err(Error::Config("time_budget and time_cap must be non-negative".into()));
        }
        if self.seeds == 0 || self.workers == Some(0) {
            return Err(Error::Config("seeds and workers must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the worker count.
    pub fn hash(&self) -> String {
        let canonical = SweepConfig { workers: None, ..self.clone() };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Worker count from `FCIT_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&w| w > 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "TIMEOUT")]
    Timeout,
    /// Dataset generation or the test itself failed.
    #[serde(rename = "ERROR")]
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "OK",
            Status::Timeout => "TIMEOUT",
            Status::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub setting: Setting,
    /// Difficulty label such as `dim=4` or `gamma=2;dim=8`.
    pub params: String,
    pub n_samples: usize,
    pub dependent: bool,
    /// Seed of the generated dataset.
    pub seed: u64,
    /// Present exactly when `status` is OK.
    pub p_value: Option<f64>,
    pub wall_time: f64,
    pub status: Status,
}

fn data_seed(root: u64, d: &Difficulty, n: usize, rep: usize) -> u64 {
    SeedStream::new(root)
        .child(d.setting().as_str())
        .child(&d.label())
        .child(&n.to_string())
        .child(&rep.to_string())
        .seed()
}

fn run_cell(d: &Difficulty, n: usize, dependent: bool, seed: u64, budget: f64) -> BenchRecord {
    let mut record = BenchRecord {
        setting: d.setting(),
        params: d.label(),
        n_samples: n,
        dependent,
        seed,
        p_value: None,
        wall_time: 0.0,
        status: Status::Error,
    };
    let data = match d.spec(n, dependent, seed).generate() {
        Ok(data) => data,
        Err(e) => {
            log::error!("{} {} n={n}: {e}", record.setting, record.params);
            return record;
        }
    };
    let cfg = FitConfig::with_seed(SeedStream::new(seed).child("test").seed());
    let start = Instant::now();
    let deadline = Deadline::at(start + Duration::from_secs_f64(budget));
    let result = auto_test_until(&data.x, &data.y, Some(&data.z), &cfg, deadline);
    record.wall_time = start.elapsed().as_secs_f64();
    match result {
        Ok(out) if record.wall_time <= budget => {
            record.p_value = Some(out.p_value);
            record.status = Status::Ok;
        }
        Ok(_) | Err(Error::Timeout) => record.status = Status::Timeout,
        Err(e) => log::error!("{} {} n={n}: {e}", record.setting, record.params),
    }
    record
}

/// Records for one difficulty, smallest `n` first; stops growing `n` after a timeout.
fn run_difficulty(cfg: &SweepConfig, d: &Difficulty) -> Vec<BenchRecord> {
    let mut out = Vec::new();
    for &n in &cfg.sample_sizes {
        let cells: Vec<(bool, usize)> =
            [false, true].iter().flat_map(|&dep| (0..cfg.seeds).map(move |s| (dep, s))).collect();
        let records: Vec<BenchRecord> = cells
            .par_iter()
            .map(|&(dep, s)| run_cell(d, n, dep, data_seed(cfg.seed, d, n, s), cfg.time_budget))
            .collect();
        let timed_out = records.iter().any(|r| r.status == Status::Timeout);
        out.extend(records);
        if timed_out {
            log::info!("{} {}: timeout at n = {n}, skipping larger n", d.setting(), d.label());
            break;
        }
    }
    check_runtime_monotone(&out);
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Logs cells whose median runtime drops as `n` grows.
fn check_runtime_monotone(records: &[BenchRecord]) {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == Status::Ok) {
        by_n.entry(r.n_samples).or_default().push(r.wall_time);
    }
    let medians: Vec<(usize, f64)> = by_n.into_iter().map(|(n, t)| (n, median(t))).collect();
    for w in medians.windows(2) {
        if w[1].1 < w[0].1 {
            if let Some(r) = records.first() {
                log::warn!(
                    "{} {}: median runtime fell from {:.3}s at n = {} to {:.3}s at n = {}",
                    r.setting,
                    r.params,
                    w[0].1,
                    w[0].0,
                    w[1].1,
                    w[1].0
                );
            }
        }
    }
}

/// Runs every (setting, difficulty, n, version, seed) cell of the sweep.
///
/// Records come back ordered by setting (config order), difficulty (official
/// order), `n`, version (independent first) and seed, regardless of the
/// order in which cells finish.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let mut difficulties = Vec::new();
    for &s in &cfg.settings {
        difficulties.extend(official_sweep(s)?);
    }
    let work = || -> Vec<BenchRecord> { difficulties.par_iter().map(|d| run_difficulty(cfg, d)).flatten().collect() };
    match cfg.workers {
        None => Ok(work()),
        Some(w) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(work)),
    }
}

pub fn write_records<W: Write>(records: &[BenchRecord], config_hash: &str, mut out: W) -> Result<()> {
    out.write_all(format!("# config_hash={config_hash}\n").as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER.split(','))?;
    for r in records {
        w.write_record([
            r.setting.as_str().to_string(),
            r.params.clone(),
            r.n_samples.to_string(),
            r.dependent.to_string(),
            r.seed.to_string(),
            r.p_value.map(|p| format!("{p:e}")).unwrap_or_default(),
            format!("{:.3}", r.wall_time),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Config hash from a leading `# config_hash=` line, if present.
pub fn read_config_hash(text: &str) -> Option<String> {
    text.lines().next()?.strip_prefix("# config_hash=").map(|h| h.trim().to_string())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut body = String::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        if !line.starts_with('#') {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RECORDS_HEADER {
        return Err(Error::Parse(format!("unexpected records header: {}", header.join(","))));
    }
    let mut records = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Parse(format!("record {}: bad {what}", i + 1));
        let status = match &row[7] {
            "OK" => Status::Ok,
            "TIMEOUT" => Status::Timeout,
            "ERROR" => Status::Error,
            _ => return Err(bad("status")),
        };
        let p_value = match (&row[5], status) {
            ("", Status::Ok) => return Err(bad("p_value")),
            ("", _) => None,
            (p, _) => Some(p.parse::<f64>().map_err(|_| bad("p_value"))?),
        };
        records.push(BenchRecord {
            setting: row[0].parse().map_err(|_| bad("setting"))?,
            params: row[1].to_string(),
            n_samples: row[2].parse().map_err(|_| bad("n_samples"))?,
            dependent: row[3].parse().map_err(|_| bad("dependent"))?,
            seed: row[4].parse().map_err(|_| bad("seed"))?,
            p_value,
            wall_time: row[6].parse().map_err(|_| bad("wall_time_s"))?,
            status,
        });
    }
    Ok(records)
}

/// Error rates of one difficulty at the largest sample size finished within the cap.
/// Every `None` is reported as NOT-RUN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub setting: Setting,
    pub params: String,
    pub n_used: Option<usize>,
    pub type1: Option<f64>,
    pub type2: Option<f64>,
    pub avg_error: Option<f64>,
    /// AUPC of the dependent-version p-values at `n_used`.
    pub aupc: Option<f64>,
    /// KS uniformity p-value of the independent-version p-values at `n_used`.
    pub ks_p: Option<f64>,
}

fn group_by_cell(records: &[BenchRecord]) -> Vec<((Setting, String), Vec<&BenchRecord>)> {
    let mut groups: Vec<((Setting, String), Vec<&BenchRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(k, _)| k.0 == r.setting && k.1 == r.params) {
            Some((_, v)) => v.push(r),
            None => groups.push(((r.setting, r.params.clone()), vec![r])),
        }
    }
    groups
}

fn fraction(ps: &[f64], hit: impl Fn(f64) -> bool) -> Option<f64> {
    (!ps.is_empty()).then(|| ps.iter().filter(|&&p| hit(p)).count() as f64 / ps.len() as f64)
}

fn p_values(records: &[&BenchRecord], dependent: bool) -> Vec<f64> {
    records.iter().filter(|r| r.dependent == dependent).filter_map(|r| r.p_value).collect()
}

pub fn summarize_errors(records: &[BenchRecord], alpha: f64, time_cap: f64) -> Vec<ErrorSummary> {
    group_by_cell(records)
        .into_iter()
        .map(|((setting, params), rs)| {
            let mut sizes: Vec<usize> = rs.iter().map(|r| r.n_samples).collect();
            sizes.sort_unstable();
            sizes.dedup();
            let n_used = sizes.into_iter().rev().find(|&n| {
                rs.iter().filter(|r| r.n_samples == n).all(|r| r.status == Status::Ok && r.wall_time <= time_cap)
            });
            let at_n: Vec<&BenchRecord> = rs.iter().copied().filter(|r| Some(r.n_samples) == n_used).collect();
            let indep = p_values(&at_n, false);
            let dep = p_values(&at_n, true);
            let type1 = fraction(&indep, |p| p < alpha);
            let type2 = fraction(&dep, |p| p >= alpha);
            ErrorSummary {
                setting,
                params,
                n_used,
                type1,
                type2,
                avg_error: type1.zip(type2).map(|(a, b)| 0.5 * (a + b)),
                aupc: aupc(&dep).ok(),
                ks_p: (indep.len() >= MIN_KS).then(|| ks_uniform_p(&indep).ok()).flatten(),
            }
        })
        .collect()
}

/// AUPC and KS uniformity p-value of one (setting, difficulty, n) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMetrics {
    pub setting: Setting,
    pub params: String,
    pub n_samples: usize,
    pub n_dependent: usize,
    pub n_independent: usize,
    pub aupc: Option<f64>,
    pub ks_p: Option<f64>,
}

pub fn aggregate_metrics(records: &[BenchRecord]) -> Vec<CellMetrics> {
    let mut out = Vec::new();
    for ((setting, params), rs) in group_by_cell(records) {
        let mut sizes: Vec<usize> = rs.iter().map(|r| r.n_samples).collect();
        sizes.sort_unstable();
        sizes.dedup();
        for n in sizes {
            let at_n: Vec<&BenchRecord> = rs.iter().copied().filter(|r| r.n_samples == n).collect();
            let dep = p_values(&at_n, true);
            let indep = p_values(&at_n, false);
            out.push(CellMetrics {
                setting,
                params: params.clone(),
                n_samples: n,
                n_dependent: dep.len(),
                n_independent: indep.len(),
                aupc: aupc(&dep).ok(),
                ks_p: (indep.len() >= MIN_KS).then(|| ks_uniform_p(&indep).ok()).flatten(),
            });
        }
    }
    out
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| NOT_RUN.to_string(), |v| v.to_string())
}

pub fn write_summary<W: Write>(rows: &[ErrorSummary], config_hash: &str, mut out: W) -> Result<()> {
    out.write_all(format!("# config_hash={config_hash}\n").as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.setting.as_str().to_string(),
            r.params.clone(),
            cell(r.n_used),
            cell(r.type1),
            cell(r.type2),
            cell(r.avg_error),
            cell(r.aupc),
            cell(r.ks_p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics<W: Write>(rows: &[CellMetrics], config_hash: &str, mut out: W) -> Result<()> {
    out.write_all(format!("# config_hash={config_hash}\n").as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.setting.as_str().to_string(),
            r.params.clone(),
            r.n_samples.to_string(),
            r.n_dependent.to_string(),
            r.n_independent.to_string(),
            cell(r.aupc),
            cell(r.ks_p),
        ])?;
    }
    w.flush()?;
    Ok(())
}
