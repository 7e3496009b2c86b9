//! Synthetic benchmark generators: LINGAUSS, CHAOS, HYBRID and PNL.
//!
//! Each setting has an independent version (`X ⫫ Y | Z` by construction) and
//! a dependent one, and a difficulty knob swept over nine official values.
//! Every generator is a pure function of its spec, seed included.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Exp1, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Setting};
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::seed::{SeedStream, StreamRng};

/// Length of the CHAOS trajectory rows are drawn from.
pub const CHAOS_TRAJECTORY: usize = 1_000_000;
pub const CHAOS_BURN_IN: usize = 1_000;
const CHAOS_DIVERGENCE: f64 = 10.0;
const CHAOS_NOISE_SD: f64 = 0.5;
const PNL_SHARED_NOISE_SD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LingaussSpec {
    pub dim: usize,
    pub dependent: bool,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosSpec {
    pub alpha: f64,
    pub dependent: bool,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridSpec {
    pub gamma: usize,
    pub dim: usize,
    pub dependent: bool,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnlSpec {
    pub dim: usize,
    pub dependent: bool,
    pub n: usize,
    pub seed: u64,
}

fn rng_for(setting: Setting, seed: u64, label: &str) -> StreamRng {
    SeedStream::new(seed).child(setting.as_str()).child_rng(label)
}

fn normal_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()
}

/// `out = m · v` for a row-major `dim × dim` matrix.
fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let dim = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(dim)) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    Ok(())
}

/// Linear-Gaussian data. Independent: `X ← Z → Y`; dependent: `Z → X → Y`.
/// `X`, `Y`, `Z` each have `dim` columns and unit-variance noise.
pub fn gen_lingauss(spec: &LingaussSpec) -> Result<Dataset> {
    check_n(spec.n)?;
    if spec.dim == 0 {
        return Err(Error::Config("lingauss dim must be at least 1".into()));
    }
    let (n, dim) = (spec.n, spec.dim);
    let mut rng = rng_for(Setting::Lingauss, spec.seed, "coefficients");
    let a = normal_matrix(&mut rng, dim, dim);
    let b = normal_matrix(&mut rng, dim, dim);

    let mut rng = rng_for(Setting::Lingauss, spec.seed, "samples");
    let mut x = vec![0.0; n * dim];
    let mut y = vec![0.0; n * dim];
    let mut z = vec![0.0; n * dim];
    for i in 0..n {
        let zi = &mut z[i * dim..(i + 1) * dim];
        zi.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let xi = &mut x[i * dim..(i + 1) * dim];
        mat_vec(&a, zi, xi);
        xi.iter_mut().for_each(|v| *v += rng.sample::<f64, _>(StandardNormal));
        let yi = &mut y[i * dim..(i + 1) * dim];
        mat_vec(&b, if spec.dependent { &x[i * dim..(i + 1) * dim] } else { &z[i * dim..(i + 1) * dim] }, yi);
        yi.iter_mut().for_each(|v| *v += rng.sample::<f64, _>(StandardNormal));
    }
    Dataset::new(
        SampleMatrix::new(n, dim, x)?,
        SampleMatrix::new(n, dim, y)?,
        SampleMatrix::new(n, dim, z)?,
        Setting::Lingauss,
        params(&[("dim", dim as f64)]),
        spec.dependent,
        spec.seed,
    )
}

/// One step of the coupled Hénon maps, `(A(t-1), B(t-1)) → (A(t), B(t))`.
pub fn chaos_step(a: [f64; 2], b: [f64; 2], alpha: f64) -> ([f64; 2], [f64; 2]) {
    let a_next = [1.4 - a[0] * a[0] + 0.3 * a[1], a[0]];
    let b_next = [1.4 - (alpha * a[0] * b[0] + (1.0 - alpha) * b[0] * b[0]) + 0.1 * b[1], b[0]];
    (a_next, b_next)
}

/// Runs the burn-in from a random start in `[-0.1, 0.1]^4`; `None` on divergence.
fn chaos_start(rng: &mut StreamRng, alpha: f64) -> Option<([f64; 2], [f64; 2])> {
    let mut draw = || rng.random_range(-0.1..=0.1);
    let mut a = [draw(), draw()];
    let mut b = [draw(), draw()];
    for _ in 0..CHAOS_BURN_IN {
        (a, b) = chaos_step(a, b, alpha);
        if a.iter().chain(&b).any(|v| !v.is_finite() || v.abs() > CHAOS_DIVERGENCE) {
            return None;
        }
    }
    Some((a, b))
}

/// Coupled Hénon maps. `X` and `Y` have 4 columns (2 map coordinates plus 2
/// Gaussian noise columns with standard deviation 0.5), `Z` has 2. Rows are
/// a uniform random subset of a 10⁶-step trajectory.
pub fn gen_chaos(spec: &ChaosSpec) -> Result<Dataset> {
    check_n(spec.n)?;
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::Config(format!("chaos alpha must lie in (0, 1), got {}", spec.alpha)));
    }
    if spec.n > CHAOS_TRAJECTORY {
        return Err(Error::Config(format!("chaos n must be at most {CHAOS_TRAJECTORY}, got {}", spec.n)));
    }
    let n = spec.n;
    let alpha = spec.alpha;
    let root = SeedStream::new(spec.seed).child(Setting::Chaos.as_str());

    'attempt: for attempt in 0..100 {
        let mut rng = root.child_rng(&format!("start/{attempt}"));
        let Some((mut a, mut b)) = chaos_start(&mut rng, alpha) else {
            continue;
        };
        let mut picks = index::sample(&mut root.child_rng("subset"), CHAOS_TRAJECTORY, n).into_vec();
        picks.sort_unstable();

        let mut x = Vec::with_capacity(n * 4);
        let mut y = Vec::with_capacity(n * 4);
        let mut z = Vec::with_capacity(n * 2);
        let mut next = picks.iter().peekable();
        for t in 0..CHAOS_TRAJECTORY {
            let (a1, b1) = chaos_step(a, b, alpha);
            if a1.iter().chain(&b1).any(|v| !v.is_finite() || v.abs() > CHAOS_DIVERGENCE) {
                continue 'attempt;
            }
            if next.peek() == Some(&&t) {
                next.next();
                // (a, b) is time t and (a1, b1) is time t + 1.
                let (xs, ys, zs) = if spec.dependent { (b1, a, b) } else { (a1, b, a) };
                x.extend_from_slice(&xs);
                x.extend_from_slice(&[0.0, 0.0]);
                y.extend_from_slice(&ys);
                y.extend_from_slice(&[0.0, 0.0]);
                z.extend_from_slice(&zs);
            }
            (a, b) = (a1, b1);
        }

        let noise = Normal::new(0.0, CHAOS_NOISE_SD).expect("valid sd");
        let mut rng = root.child_rng("noise");
        for i in 0..n {
            for k in 2..4 {
                x[i * 4 + k] = rng.sample(noise);
                y[i * 4 + k] = rng.sample(noise);
            }
        }
        return Dataset::new(
            SampleMatrix::new(n, 4, x)?,
            SampleMatrix::new(n, 4, y)?,
            SampleMatrix::new(n, 2, z)?,
            Setting::Chaos,
            params(&[("alpha", alpha)]),
            spec.dependent,
            spec.seed,
        );
    }
    Err(Error::Config(format!("chaos trajectory diverged for alpha = {alpha}")))
}

/// Draws `gamma` categorical samples with probabilities `p` and returns the counts.
fn multinomial(rng: &mut StreamRng, gamma: usize, p: &[f64], counts: &mut [usize]) {
    counts.iter_mut().for_each(|c| *c = 0);
    for _ in 0..gamma {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = p.len() - 1;
        for (j, pj) in p.iter().enumerate() {
            acc += pj;
            if u < acc {
                k = j;
                break;
            }
        }
        counts[k] += 1;
    }
}

/// Writes the one-hot encoding of per-dimension counts, `gamma + 1` slots each.
fn one_hot(counts: &[usize], gamma: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (d, &c) in counts.iter().enumerate() {
        out[d * (gamma + 1) + c] = 1.0;
    }
}

/// Hybrid categorical/continuous data. `Z ~ Dirichlet(1, …, 1)` with `dim`
/// components; `X`, `Y` are one-hot encodings of two independent
/// `Multinomial(gamma, Z)` draws (`dim · (gamma + 1)` columns each). The
/// dependent version copies `X` into `Y` on a fair coin flip per sample.
pub fn gen_hybrid(spec: &HybridSpec) -> Result<Dataset> {
    check_n(spec.n)?;
    if spec.gamma == 0 || spec.dim < 2 {
        return Err(Error::Config(format!(
            "hybrid needs gamma >= 1 and dim >= 2, got gamma = {}, dim = {}",
            spec.gamma, spec.dim
        )));
    }
    let (n, dim, gamma) = (spec.n, spec.dim, spec.gamma);
    let width = dim * (gamma + 1);
    let mut rng = rng_for(Setting::Hybrid, spec.seed, "samples");
    let mut x = vec![0.0; n * width];
    let mut y = vec![0.0; n * width];
    let mut z = vec![0.0; n * dim];
    let mut sx = vec![0; dim];
    let mut sy = vec![0; dim];
    for i in 0..n {
        let zi = &mut z[i * dim..(i + 1) * dim];
        for v in zi.iter_mut() {
            *v = rng.sample(Exp1);
        }
        let total: f64 = zi.iter().sum();
        zi.iter_mut().for_each(|v| *v /= total);
        multinomial(&mut rng, gamma, zi, &mut sx);
        multinomial(&mut rng, gamma, zi, &mut sy);
        let copy = rng.random_bool(0.5);
        one_hot(&sx, gamma, &mut x[i * width..(i + 1) * width]);
        let ys = if spec.dependent && copy { &sx } else { &sy };
        one_hot(ys, gamma, &mut y[i * width..(i + 1) * width]);
    }
    Dataset::new(
        SampleMatrix::new(n, width, x)?,
        SampleMatrix::new(n, width, y)?,
        SampleMatrix::new(n, dim, z)?,
        Setting::Hybrid,
        params(&[("gamma", gamma as f64), ("dim", dim as f64)]),
        spec.dependent,
        spec.seed,
    )
}

/// The five nonlinearities PNL draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PnlFunction {
    Identity,
    Square,
    Cube,
    Tanh,
    ExpNegAbs,
}

impl PnlFunction {
    pub const ALL: [PnlFunction; 5] =
        [PnlFunction::Identity, PnlFunction::Square, PnlFunction::Cube, PnlFunction::Tanh, PnlFunction::ExpNegAbs];

    pub fn apply(self, v: f64) -> f64 {
        match self {
            PnlFunction::Identity => v,
            PnlFunction::Square => v * v,
            PnlFunction::Cube => v * v * v,
            PnlFunction::Tanh => v.tanh(),
            PnlFunction::ExpNegAbs => (-v.abs()).exp(),
        }
    }
}

/// The pair of functions a PNL spec draws for `X` and `Y`.
pub fn pnl_functions(spec: &PnlSpec) -> (PnlFunction, PnlFunction) {
    let mut rng = rng_for(Setting::Pnl, spec.seed, "functions");
    let f = PnlFunction::ALL[rng.random_range(0..5)];
    let g = PnlFunction::ALL[rng.random_range(0..5)];
    (f, g)
}

/// The `dim × dim` matrix `A` with `Z ~ N(0, A·Aᵀ)`.
pub fn pnl_mixing_matrix(spec: &PnlSpec) -> SampleMatrix {
    let dim = spec.dim;
    let a = normal_matrix(&mut rng_for(Setting::Pnl, spec.seed, "covariance"), dim, dim);
    SampleMatrix::new(dim, dim, a).expect("finite normal draws")
}

/// Post-nonlinear data with the functions drawn from the spec's seed.
pub fn gen_pnl(spec: &PnlSpec) -> Result<Dataset> {
    let (f, g) = pnl_functions(spec);
    gen_pnl_with(spec, f, g)
}

/// Post-nonlinear data with explicit functions.
///
/// `Z ~ N(0, A·Aᵀ)` with `A` a `dim × dim` standard normal matrix;
/// `X = f(Z₁ + ε_x)`, `Y = g(Z₁ + ε_y)` with standard normal `ε`. The
/// dependent version adds one shared `N(0, 0.5²)` draw per row to both.
pub fn gen_pnl_with(spec: &PnlSpec, f: PnlFunction, g: PnlFunction) -> Result<Dataset> {
    check_n(spec.n)?;
    if spec.dim == 0 {
        return Err(Error::Config("pnl dim must be at least 1".into()));
    }
    let (n, dim) = (spec.n, spec.dim);
    let a = pnl_mixing_matrix(spec).into_vec();
    let mut rng = rng_for(Setting::Pnl, spec.seed, "samples");
    let shared = Normal::new(0.0, PNL_SHARED_NOISE_SD).expect("valid sd");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = vec![0.0; n * dim];
    let mut w = vec![0.0; dim];
    for i in 0..n {
        w.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let zi = &mut z[i * dim..(i + 1) * dim];
        mat_vec(&a, &w, zi);
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(shared);
        let (mut xi, mut yi) = (f.apply(zi[0] + ex), g.apply(zi[0] + ey));
        if spec.dependent {
            xi += e;
            yi += e;
        }
        x.push(xi);
        y.push(yi);
    }
    let fname = |h: PnlFunction| PnlFunction::ALL.iter().position(|&k| k == h).unwrap() as f64;
    Dataset::new(
        SampleMatrix::new(n, 1, x)?,
        SampleMatrix::new(n, 1, y)?,
        SampleMatrix::new(n, dim, z)?,
        Setting::Pnl,
        params(&[("dim", dim as f64), ("f", fname(f)), ("g", fname(g))]),
        spec.dependent,
        spec.seed,
    )
}

/// One official difficulty level of a setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "lowercase")]
pub enum Difficulty {
    Lingauss { dim: usize },
    Chaos { alpha: f64 },
    Hybrid { gamma: usize, dim: usize },
    Pnl { dim: usize },
}

/// A fully specified dataset request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DatasetSpec {
    Lingauss(LingaussSpec),
    Chaos(ChaosSpec),
    Hybrid(HybridSpec),
    Pnl(PnlSpec),
}

impl DatasetSpec {
    pub fn generate(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Lingauss(s) => gen_lingauss(s),
            DatasetSpec::Chaos(s) => gen_chaos(s),
            DatasetSpec::Hybrid(s) => gen_hybrid(s),
            DatasetSpec::Pnl(s) => gen_pnl(s),
        }
    }
}

impl Difficulty {
    pub fn setting(&self) -> Setting {
        match self {
            Difficulty::Lingauss { .. } => Setting::Lingauss,
            Difficulty::Chaos { .. } => Setting::Chaos,
            Difficulty::Hybrid { .. } => Setting::Hybrid,
            Difficulty::Pnl { .. } => Setting::Pnl,
        }
    }

    pub fn spec(&self, n: usize, dependent: bool, seed: u64) -> DatasetSpec {
        match *self {
            Difficulty::Lingauss { dim } => DatasetSpec::Lingauss(LingaussSpec { dim, dependent, n, seed }),
            Difficulty::Chaos { alpha } => DatasetSpec::Chaos(ChaosSpec { alpha, dependent, n, seed }),
            Difficulty::Hybrid { gamma, dim } => DatasetSpec::Hybrid(HybridSpec { gamma, dim, dependent, n, seed }),
            Difficulty::Pnl { dim } => DatasetSpec::Pnl(PnlSpec { dim, dependent, n, seed }),
        }
    }

    /// Compact `key=value` label without commas, e.g. `gamma=2;dim=8`.
    pub fn label(&self) -> String {
        match self {
            Difficulty::Lingauss { dim } | Difficulty::Pnl { dim } => format!("dim={dim}"),
            Difficulty::Chaos { alpha } => format!("alpha={alpha}"),
            Difficulty::Hybrid { gamma, dim } => format!("gamma={gamma};dim={dim}"),
        }
    }

    /// Summed column count of `X`, `Y` and `Z`.
    pub fn total_dim(&self) -> usize {
        match *self {
            Difficulty::Lingauss { dim } => 3 * dim,
            Difficulty::Chaos { .. } => 10,
            Difficulty::Hybrid { gamma, dim } => 2 * dim * (gamma + 1) + dim,
            Difficulty::Pnl { dim } => dim + 2,
        }
    }
}

const POW2_DIMS: [usize; 9] = [1, 2, 4, 8, 16, 32, 64, 128, 256];
pub const CHAOS_ALPHAS: [f64; 9] = [0.01, 0.04, 0.16, 0.32, 0.5, 0.68, 0.84, 0.96, 0.99];
const HYBRID_LEVELS: [usize; 3] = [2, 8, 32];

/// The nine official difficulty levels of a setting, easiest first.
pub fn official_sweep(setting: Setting) -> Result<Vec<Difficulty>> {
    Ok(match setting {
        Setting::Lingauss => POW2_DIMS.iter().map(|&dim| Difficulty::Lingauss { dim }).collect(),
        Setting::Chaos => CHAOS_ALPHAS.iter().map(|&alpha| Difficulty::Chaos { alpha }).collect(),
        Setting::Hybrid => HYBRID_LEVELS
            .iter()
            .flat_map(|&gamma| HYBRID_LEVELS.iter().map(move |&dim| Difficulty::Hybrid { gamma, dim }))
            .collect(),
        Setting::Pnl => POW2_DIMS.iter().map(|&dim| Difficulty::Pnl { dim }).collect(),
        Setting::External => return Err(Error::Config("external data has no official sweep".into())),
    })
}
