//! Python bindings for the `fcit` crate.
//!
//! Matrices cross the boundary as lists of rows (any nested sequence works,
//! including 2-D numpy arrays); a flat sequence is read as a single column.

use ::fcit as core;
use core::bench::{self, SweepConfig};
use core::dataset::Setting;
use core::datasets::{self, ChaosSpec, DatasetSpec, HybridSpec, LingaussSpec, PnlSpec};
use core::{stats, Error, FitConfig, SampleMatrix, TestMode, TreeParams};
use pyo3::exceptions::{PyTimeoutError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Timeout => PyTimeoutError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_matrix(obj: &Bound<'_, PyAny>) -> PyResult<SampleMatrix> {
    if let Ok(rows) = obj.extract::<Vec<Vec<f64>>>() {
        if rows.is_empty() {
            return Err(PyValueError::new_err("matrix has no rows"));
        }
        return SampleMatrix::from_rows(&rows).map_err(py_err);
    }
    let col: Vec<f64> = obj.extract()?;
    SampleMatrix::column_vector(col).map_err(py_err)
}

fn to_rows(m: &SampleMatrix) -> Vec<Vec<f64>> {
    m.rows().map(<[f64]>::to_vec).collect()
}

fn parse_setting(name: &str) -> PyResult<Setting> {
    name.parse().map_err(py_err)
}

/// Result of one independence test.
#[pyclass(module = "fcit_py", frozen, get_all)]
struct TestOutcome {
    p_value: f64,
    t_statistic: f64,
    mses_x: Vec<f64>,
    mses_nox: Vec<f64>,
    /// `"conditional"` or `"unconditional"`.
    mode: String,
    n_samples: usize,
    min_samples_split_x: usize,
    min_samples_split_nox: usize,
    wall_time: f64,
    json: String,
}

#[pymethods]
impl TestOutcome {
    fn __repr__(&self) -> String {
        format!("TestOutcome(p_value={:e}, mode='{}', n_samples={})", self.p_value, self.mode, self.n_samples)
    }
}

impl From<core::TestOutcome> for TestOutcome {
    fn from(o: core::TestOutcome) -> Self {
        Self {
            json: serde_json::to_string(&o).unwrap_or_default(),
            p_value: o.p_value,
            t_statistic: o.t_statistic,
            mode: match o.mode {
                TestMode::Conditional => "conditional".into(),
                TestMode::Unconditional => "unconditional".into(),
            },
            n_samples: o.n_samples,
            min_samples_split_x: o.best_params_x.min_samples_split,
            min_samples_split_nox: o.best_params_nox.min_samples_split,
            wall_time: o.wall_time,
            mses_x: o.mses_x,
            mses_nox: o.mses_nox,
        }
    }
}

/// Tests whether `x` is independent of `y` given `z`.
///
/// With `z` omitted (or without columns) the unconditional test runs.
#[pyfunction]
#[pyo3(signature = (x, y, z=None, *, n_perm=8, frac_test=0.1, use_bootstrap=false, n_boot=1000, seed=0, workers=None))]
#[allow(clippy::too_many_arguments)]
fn fit_test(
    py: Python<'_>,
    x: &Bound<'_, PyAny>,
    y: &Bound<'_, PyAny>,
    z: Option<&Bound<'_, PyAny>>,
    n_perm: usize,
    frac_test: f64,
    use_bootstrap: bool,
    n_boot: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<TestOutcome> {
    let (x, y) = (to_matrix(x)?, to_matrix(y)?);
    let z = z.map(to_matrix).transpose()?;
    let cfg = FitConfig { n_perm, frac_test, grid: None, use_bootstrap, n_boot, seed, workers };
    let out = py.detach(|| core::auto_test(&x, &y, z.as_ref(), &cfg)).map_err(py_err)?;
    Ok(out.into())
}

/// Multi-output CART regression tree.
#[pyclass(module = "fcit_py", frozen)]
struct RegressionTree(core::RegressionTree);

#[pymethods]
impl RegressionTree {
    #[new]
    #[pyo3(signature = (x, y, min_samples_split=2))]
    fn new(x: &Bound<'_, PyAny>, y: &Bound<'_, PyAny>, min_samples_split: usize) -> PyResult<Self> {
        let params = TreeParams::new(min_samples_split).map_err(py_err)?;
        core::fit_tree(&to_matrix(x)?, &to_matrix(y)?, params).map(Self).map_err(py_err)
    }

    fn predict(&self, x: &Bound<'_, PyAny>) -> PyResult<Vec<Vec<f64>>> {
        self.0.predict(&to_matrix(x)?).map(|m| to_rows(&m)).map_err(py_err)
    }

    /// `(feature, threshold)` of every split in preorder.
    fn splits(&self) -> Vec<(usize, f64)> {
        self.0.splits()
    }

    #[getter]
    fn n_leaves(&self) -> usize {
        self.0.n_leaves()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }
}

/// A generated sample: `x`, `y` and `z` as lists of rows.
#[pyclass(module = "fcit_py", frozen, get_all)]
struct Dataset {
    setting: String,
    dependent: bool,
    seed: u64,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
}

/// Generates a synthetic dataset. `dim` applies to lingauss, hybrid and pnl,
/// `alpha` to chaos and `gamma` to hybrid.
#[pyfunction]
#[pyo3(signature = (setting, n, *, dependent=false, seed=0, dim=1, alpha=0.5, gamma=2))]
#[allow(clippy::too_many_arguments)]
fn generate(
    py: Python<'_>,
    setting: &str,
    n: usize,
    dependent: bool,
    seed: u64,
    dim: usize,
    alpha: f64,
    gamma: usize,
) -> PyResult<Dataset> {
    let spec = match parse_setting(setting)? {
        Setting::Lingauss => DatasetSpec::Lingauss(LingaussSpec { dim, dependent, n, seed }),
        Setting::Chaos => DatasetSpec::Chaos(ChaosSpec { alpha, dependent, n, seed }),
        Setting::Hybrid => DatasetSpec::Hybrid(HybridSpec { gamma, dim, dependent, n, seed }),
        Setting::Pnl => DatasetSpec::Pnl(PnlSpec { dim, dependent, n, seed }),
        Setting::External => return Err(PyValueError::new_err("external data cannot be generated")),
    };
    let d = py.detach(|| spec.generate()).map_err(py_err)?;
    Ok(Dataset {
        setting: d.setting.to_string(),
        dependent: d.dependent,
        seed: d.seed,
        x: to_rows(&d.x),
        y: to_rows(&d.y),
        z: to_rows(&d.z),
    })
}

/// Difficulty labels of the benchmark grid for one setting.
#[pyfunction]
fn official_sweep(setting: &str) -> PyResult<Vec<String>> {
    let grid = datasets::official_sweep(parse_setting(setting)?).map_err(py_err)?;
    Ok(grid.iter().map(|d| d.label()).collect())
}

/// Runs a benchmark sweep from a JSON config and returns the records as CSV text.
#[pyfunction]
fn run_sweep(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = SweepConfig::from_json(config_json).map_err(py_err)?;
    let records = py.detach(|| bench::run_sweep(&cfg)).map_err(py_err)?;
    let mut out = Vec::new();
    bench::write_records(&records, &cfg.hash(), &mut out).map_err(py_err)?;
    Ok(String::from_utf8(out).expect("CSV output is UTF-8"))
}

/// Student-t CDF.
#[pyfunction]
fn t_cdf(t: f64, df: usize) -> PyResult<f64> {
    stats::t_cdf(t, df).map_err(py_err)
}

/// One-tailed p-value from a t statistic and its two-sided p-value.
#[pyfunction]
fn one_tailed_p(t: f64, p_two_sided: f64) -> f64 {
    stats::one_tailed_p(t, p_two_sided)
}

/// Area over the empirical CDF of p-values.
#[pyfunction]
fn aupc(pvals: Vec<f64>) -> PyResult<f64> {
    stats::aupc(&pvals).map_err(py_err)
}

/// Kolmogorov-Smirnov p-value of p-values against Uniform(0, 1).
#[pyfunction]
fn ks_uniform_p(pvals: Vec<f64>) -> PyResult<f64> {
    stats::ks_uniform_p(&pvals).map_err(py_err)
}

#[pymodule]
fn fcit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TestOutcome>()?;
    m.add_class::<RegressionTree>()?;
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(fit_test, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(official_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(t_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(one_tailed_p, m)?)?;
    m.add_function(wrap_pyfunction!(aupc, m)?)?;
    m.add_function(wrap_pyfunction!(ks_uniform_p, m)?)?;
    Ok(())
}
