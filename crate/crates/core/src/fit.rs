//! The Fast (conditional) Independence Test.
//!
//! To test `X ⫫ Y | Z`, two decision-tree regressors are compared: one
//! predicting `Y` from `(X, Z)` and one predicting `Y` from `Z` alone. Tree
//! hyperparameters are cross-validated once on the full data, then both trees
//! are refit on `n_perm` random train/test splits. The per-split test MSE
//! differences `mse_nox - mse_x` feed a one-tailed one-sample t-test; a small
//! p-value means `X` helps predict `Y` beyond `Z`, so independence is rejected.
//!
//! Without `Z` the test becomes unconditional: the second regressor sees a
//! randomly row-permuted copy of `X` instead, drawn afresh for every split.
//!
//! Cross-validations and splits run concurrently on a rayon pool. Every task
//! draws from its own labelled [`SeedStream`] child, so outcomes do not depend
//! on the number of workers.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deadline::Deadline;
use crate::dtree::{self, cv_jobs, fit_predict_levels, mse_rows, ColumnOrder, CvResult, FeatureView, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::{invert_permutation, split_indices, test_size, SampleMatrix};
use crate::seed::SeedStream;
use crate::stats::{bootstrap_one_tailed_p, clip_p, one_sample_t, one_tailed_p};

pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub n_perm: usize,
    pub frac_test: f64,
    /// Hyperparameter grid; `None` uses [`dtree::default_grid`] for the sample size.
    pub grid: Option<Vec<TreeParams>>,
    pub use_bootstrap: bool,
    pub n_boot: usize,
    pub seed: u64,
    /// Worker threads; `None` runs on the current rayon pool.
    pub workers: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { n_perm: 8, frac_test: 0.1, grid: None, use_bootstrap: false, n_boot: 1000, seed: 0, workers: None }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Checks the configuration against a sample size and returns the test-set size.
    pub fn validate(&self, n_samples: usize) -> Result<usize> {
        if self.n_perm < 2 {
            return Err(Error::Config(format!("n_perm must be at least 2, got {}", self.n_perm)));
        }
        if !(self.frac_test > 0.0 && self.frac_test < 1.0) {
            return Err(Error::Config(format!("frac_test must lie in (0, 1), got {}", self.frac_test)));
        }
        if matches!(&self.grid, Some(g) if g.is_empty()) {
            return Err(Error::Config("empty hyperparameter grid".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        if n_samples < MIN_SAMPLES {
            return Err(Error::SampleSize(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
        }
        let n_test = test_size(self.frac_test, n_samples);
        if n_test < 1 || n_test >= n_samples {
            return Err(Error::SampleSize(format!(
                "frac_test = {} leaves {n_test} test rows out of {n_samples}",
                self.frac_test
            )));
        }
        Ok(n_test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMode {
    Conditional,
    Unconditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub p_value: f64,
    /// `±inf` (written as `null` in JSON) when the MSE differences have zero
    /// spread and a nonzero mean.
    pub t_statistic: f64,
    pub mses_x: Vec<f64>,
    pub mses_nox: Vec<f64>,
    pub best_params_x: TreeParams,
    pub best_params_nox: TreeParams,
    pub cv_x: CvResult,
    pub cv_nox: CvResult,
    pub mode: TestMode,
    pub n_samples: usize,
    /// Seconds spent in the whole test.
    pub wall_time: f64,
    pub config: FitConfig,
}

/// Tests `X ⫫ Y | Z`. `z` must have at least one column.
pub fn fit_test(x: &SampleMatrix, y: &SampleMatrix, z: &SampleMatrix, cfg: &FitConfig) -> Result<TestOutcome> {
    fit_test_until(x, y, z, cfg, Deadline::none())
}

/// Tests `X ⫫ Y` by comparing against row-permuted copies of `X`.
pub fn fit_test_unconditional(x: &SampleMatrix, y: &SampleMatrix, cfg: &FitConfig) -> Result<TestOutcome> {
    fit_test_unconditional_until(x, y, cfg, Deadline::none())
}

/// Conditional test when `z` has columns, unconditional otherwise.
pub fn auto_test(x: &SampleMatrix, y: &SampleMatrix, z: Option<&SampleMatrix>, cfg: &FitConfig) -> Result<TestOutcome> {
    auto_test_until(x, y, z, cfg, Deadline::none())
}

/// [`auto_test`] that stops with [`Error::Timeout`] once `deadline` passes.
/// The deadline is polled between tree fits, never inside one.
pub fn auto_test_until(
    x: &SampleMatrix,
    y: &SampleMatrix,
    z: Option<&SampleMatrix>,
    cfg: &FitConfig,
    deadline: Deadline,
) -> Result<TestOutcome> {
    match z {
        Some(z) if z.n_cols() > 0 => fit_test_until(x, y, z, cfg, deadline),
        _ => fit_test_unconditional_until(x, y, cfg, deadline),
    }
}

pub fn fit_test_until(
    x: &SampleMatrix,
    y: &SampleMatrix,
    z: &SampleMatrix,
    cfg: &FitConfig,
    deadline: Deadline,
) -> Result<TestOutcome> {
    if z.n_cols() == 0 {
        return Err(Error::Dimension("conditioning set has no columns; use the unconditional test".into()));
    }
    check_inputs(&[x, y, z])?;
    let n_test = cfg.validate(x.n_rows())?;
    in_pool(cfg.workers, || {
        let start = Instant::now();
        deadline.check()?;
        let view_x = FeatureView::new(vec![x])?;
        let view_z = FeatureView::new(vec![z])?;
        let (order_x, order_z) = rayon::join(|| ColumnOrder::new(&view_x), || ColumnOrder::new(&view_z));
        let problem = Problem {
            y,
            with_x: FeatureView::new(vec![x, z])?,
            with_x_order: ColumnOrder::concat(&order_x, &order_z),
            without_x: WithoutX::Given { view: view_z, order: order_z },
        };
        problem.run(cfg, n_test, deadline, start, TestMode::Conditional)
    })
}

pub fn fit_test_unconditional_until(
    x: &SampleMatrix,
    y: &SampleMatrix,
    cfg: &FitConfig,
    deadline: Deadline,
) -> Result<TestOutcome> {
    check_inputs(&[x, y])?;
    let n_test = cfg.validate(x.n_rows())?;
    in_pool(cfg.workers, || {
        let start = Instant::now();
        deadline.check()?;
        let view_x = FeatureView::new(vec![x])?;
        let order_x = ColumnOrder::new(&view_x);
        let problem = Problem {
            y,
            with_x: view_x,
            with_x_order: order_x.clone(),
            without_x: WithoutX::PermutedX { x, order: order_x },
        };
        problem.run(cfg, n_test, deadline, start, TestMode::Unconditional)
    })
}

fn check_inputs(ms: &[&SampleMatrix]) -> Result<()> {
    let n = ms[0].n_rows();
    if ms.iter().any(|m| m.n_rows() != n) {
        let rows: Vec<usize> = ms.iter().map(|m| m.n_rows()).collect();
        return Err(Error::Dimension(format!("row counts differ: {rows:?}")));
    }
    if ms[0].n_cols() == 0 || ms[1].n_cols() == 0 {
        return Err(Error::Dimension("x and y need at least one column".into()));
    }
    Ok(())
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(f),
    }
}

fn shuffled(n: usize, seed: SeedStream) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng());
    perm
}

/// The regressor that lacks `X`.
enum WithoutX<'a> {
    /// `Z` alone.
    Given { view: FeatureView<'a>, order: ColumnOrder },
    /// A row-permuted copy of `X`, drawn from the seed of each use.
    PermutedX { x: &'a SampleMatrix, order: ColumnOrder },
}

impl WithoutX<'_> {
    fn with_features<R>(&self, seed: SeedStream, f: impl FnOnce(&FeatureView<'_>, &ColumnOrder) -> R) -> Result<R> {
        match self {
            WithoutX::Given { view, order } => Ok(f(view, order)),
            WithoutX::PermutedX { x, order } => {
                let perm = shuffled(x.n_rows(), seed);
                let inverse = invert_permutation(&perm)?;
                let permuted = x.select_rows(&perm);
                let view = FeatureView::new(vec![&permuted])?;
                Ok(f(&view, &order.permuted(&inverse)))
            }
        }
    }
}

struct Problem<'a> {
    y: &'a SampleMatrix,
    with_x: FeatureView<'a>,
    with_x_order: ColumnOrder,
    without_x: WithoutX<'a>,
}

fn run_cv(
    view: &FeatureView<'_>,
    order: &ColumnOrder,
    y: &SampleMatrix,
    grid: &[TreeParams],
    seed: SeedStream,
    deadline: Deadline,
) -> Result<CvResult> {
    let jobs = cv_jobs(view, y, grid, seed)?;
    let scores = jobs
        .folds
        .par_iter()
        .map(|fold| fold.score(view, order, y, jobs.levels(), deadline))
        .collect::<Result<Vec<_>>>()?;
    Ok(jobs.finish(grid, &scores))
}

impl Problem<'_> {
    fn run(
        &self,
        cfg: &FitConfig,
        n_test: usize,
        deadline: Deadline,
        start: Instant,
        mode: TestMode,
    ) -> Result<TestOutcome> {
        let n = self.y.n_rows();
        let seed = SeedStream::new(cfg.seed);
        let grid = cfg.grid.clone().unwrap_or_else(|| dtree::default_grid(n));

        let (cv_x, cv_nox) = rayon::join(
            || run_cv(&self.with_x, &self.with_x_order, self.y, &grid, seed.child("cv/x"), deadline),
            || {
                self.without_x.with_features(seed.child("cv/nox/features"), |view, order| {
                    run_cv(view, order, self.y, &grid, seed.child("cv/nox"), deadline)
                })?
            },
        );
        let (cv_x, cv_nox) = (cv_x?, cv_nox?);
        log::debug!("cross-validation done after {:.3}s", start.elapsed().as_secs_f64());
        let best_x = cv_x.best_params.min_samples_split;
        let best_nox = cv_nox.best_params.min_samples_split;

        let mses: Vec<(f64, f64)> = (0..cfg.n_perm)
            .into_par_iter()
            .map(|rep| {
                deadline.check()?;
                let perm = shuffled(n, seed.child(&format!("rep/{rep}")));
                let (test, train) = split_indices(&perm, n, n_test)?;
                let (mse_x, mse_nox) = rayon::join(
                    || -> Result<f64> {
                        deadline.check()?;
                        let pred = fit_predict_levels(&self.with_x, &self.with_x_order, self.y, train, test, &[best_x]);
                        Ok(mse_rows(&pred[0], self.y, test))
                    },
                    || -> Result<f64> {
                        deadline.check()?;
                        self.without_x.with_features(seed.child(&format!("rep/{rep}/nox")), |view, order| {
                            let pred = fit_predict_levels(view, order, self.y, train, test, &[best_nox]);
                            mse_rows(&pred[0], self.y, test)
                        })
                    },
                );
                Ok((mse_x?, mse_nox?))
            })
            .collect::<Result<_>>()?;

        log::debug!("{} splits done after {:.3}s", cfg.n_perm, start.elapsed().as_secs_f64());
        let (mses_x, mses_nox): (Vec<f64>, Vec<f64>) = mses.into_iter().unzip();
        let diffs: Vec<f64> = mses_nox.iter().zip(&mses_x).map(|(a, b)| a - b).collect();
        let t = one_sample_t(&diffs)?;
        let p = if cfg.use_bootstrap {
            bootstrap_one_tailed_p(&diffs, cfg.n_boot, seed.child("bootstrap"))?
        } else {
            one_tailed_p(t.t_statistic, t.p_two_sided)
        };

        Ok(TestOutcome {
            p_value: clip_p(p),
            t_statistic: t.t_statistic,
            mses_x,
            mses_nox,
            best_params_x: cv_x.best_params,
            best_params_nox: cv_nox.best_params,
            cv_x,
            cv_nox,
            mode,
            n_samples: n,
            wall_time: start.elapsed().as_secs_f64(),
            config: cfg.clone(),
        })
    }
}
