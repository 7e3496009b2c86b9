//! Hypothesis-testing primitives: Student-t distribution, the one-sample
//! t-test on MSE differences, a bootstrap alternative, and the p-value
//! summaries AUPC and KS-uniformity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedStream;

/// Smallest p-value reported; the largest is `1 - P_FLOOR`.
pub const P_FLOOR: f64 = 1e-16;

pub fn clip_p(p: f64) -> f64 {
    p.clamp(P_FLOOR, 1.0 - P_FLOOR)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("beta parameters must be positive, got a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    Ok(if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    })
}

/// Two-sided tail `P(|T| ≥ |t|)` of Student's t with `df` degrees of freedom.
pub fn t_two_sided_tail(t: f64, df: f64) -> Result<f64> {
    if df.is_nan() || df <= 0.0 {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {df}")));
    }
    if t.is_nan() {
        return Err(Error::Domain("t is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
}

/// Student-t distribution function.
pub fn t_cdf(t: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("t distribution needs df >= 1".into()));
    }
    let tail = 0.5 * t_two_sided_tail(t, df as f64)?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub p_two_sided: f64,
    pub df: usize,
    pub mean: f64,
}

fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_sample(diffs: &[f64]) -> Result<()> {
    if diffs.len() < 2 {
        return Err(Error::SampleSize(format!("a t-test needs at least 2 values, got {}", diffs.len())));
    }
    if diffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite difference".into()));
    }
    Ok(())
}

/// One-sample t-test of `mean(diffs) = 0`.
///
/// With zero spread the statistic is `±inf` (two-sided p = 0) when the mean is
/// nonzero, and `0` (p = 1) when it is zero.
pub fn one_sample_t(diffs: &[f64]) -> Result<TTestResult> {
    check_sample(diffs)?;
    let n = diffs.len();
    let (mean, sd) = mean_and_sd(diffs);
    let df = n - 1;
    if sd == 0.0 {
        let (t, p) = if mean == 0.0 { (0.0, 1.0) } else { (f64::INFINITY.copysign(mean), 0.0) };
        return Ok(TTestResult { t_statistic: t, p_two_sided: p, df, mean });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTestResult { t_statistic: t, p_two_sided: t_two_sided_tail(t, df as f64)?, df, mean })
}

/// Converts a two-sided p into the one-tailed p for "the mean is positive".
pub fn one_tailed_p(t: f64, p_two_sided: f64) -> f64 {
    if t < 0.0 {
        1.0 - p_two_sided / 2.0
    } else {
        p_two_sided / 2.0
    }
}

/// Bootstrap p-value for "the mean of `diffs` is positive".
///
/// `diffs` is centered to zero mean and resampled with replacement
/// `n_boot` times; the p-value is `(1 + #{boot mean ≥ observed mean}) / (n_boot + 1)`.
/// Zero-spread samples follow the same rule as the t-test path.
pub fn bootstrap_one_tailed_p(diffs: &[f64], n_boot: usize, seed: SeedStream) -> Result<f64> {
    check_sample(diffs)?;
    if n_boot < 100 {
        return Err(Error::Config(format!("n_boot must be at least 100, got {n_boot}")));
    }
    let (mean, sd) = mean_and_sd(diffs);
    if sd == 0.0 {
        return Ok(degenerate_p(mean));
    }
    let centered: Vec<f64> = diffs.iter().map(|d| d - mean).collect();
    let n = centered.len();
    let mut rng = seed.rng();
    let mut hits = 0usize;
    for _ in 0..n_boot {
        let s: f64 = (0..n).map(|_| centered[rng.random_range(0..n)]).sum();
        if s / n as f64 >= mean {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (n_boot + 1) as f64)
}

/// One-tailed p for a sample whose spread is zero.
pub fn degenerate_p(mean: f64) -> f64 {
    if mean > 0.0 {
        P_FLOOR
    } else if mean < 0.0 {
        1.0 - P_FLOOR
    } else {
        0.5
    }
}

fn check_pvals(pvals: &[f64], min_len: usize) -> Result<()> {
    if pvals.len() < min_len {
        return Err(Error::SampleSize(format!("need at least {min_len} p-values, got {}", pvals.len())));
    }
    if let Some(bad) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("p-value {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Area under the empirical CDF of `pvals` on `[0, 1]`.
///
/// Integrated exactly from the sorted sample: between consecutive order
/// statistics the CDF is flat at `i / n`.
pub fn aupc(pvals: &[f64]) -> Result<f64> {
    check_pvals(pvals, 1)?;
    let mut sorted = pvals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut area = 0.0;
    for (i, w) in sorted.windows(2).enumerate() {
        area += (i + 1) as f64 / n * (w[1] - w[0]);
    }
    area += 1.0 - sorted[sorted.len() - 1];
    Ok(area)
}

/// One-sample Kolmogorov–Smirnov statistic against Uniform(0, 1).
pub fn ks_statistic_uniform(pvals: &[f64]) -> Result<f64> {
    check_pvals(pvals, 1)?;
    let mut sorted = pvals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().map(|(i, &p)| ((i + 1) as f64 / n - p).max(p - i as f64 / n)).fold(0.0, f64::max))
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi-theta form, fast for small lambda.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let s: f64 = (1..=20)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (-k * k * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        return (1.0 - c * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        s += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic KS p-value for uniformity of `pvals`, with Stephens' small-sample
/// correction `λ = (√n + 0.12 + 0.11/√n)·D`.
pub fn ks_uniform_p(pvals: &[f64]) -> Result<f64> {
    check_pvals(pvals, 5)?;
    let d = ks_statistic_uniform(pvals)?;
    let sn = (pvals.len() as f64).sqrt();
    Ok(kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::StandardNormal;

    #[test]
    fn t_cdf_closed_forms() {
        assert_eq!(t_cdf(0.0, 1).unwrap(), 0.5);
        assert_eq!(t_cdf(0.0, 37).unwrap(), 0.5);
        assert_abs_diff_eq!(t_cdf(1.0, 1).unwrap(), 0.75, epsilon = 1e-10);
        for &t in &[-7.5, -1.0, -0.3, 0.2, 2.0, 40.0] {
            let cauchy = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert_abs_diff_eq!(t_cdf(t, 1).unwrap(), cauchy, epsilon = 1e-12);
            // df = 2 has F(t) = 1/2 + t / (2 sqrt(2 + t^2)).
            let two = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert_abs_diff_eq!(t_cdf(t, 2).unwrap(), two, epsilon = 1e-12);
        }
        assert!(matches!(t_cdf(1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn t_cdf_symmetry() {
        for df in [1, 2, 3, 7, 30, 1000] {
            for &t in &[0.01, 0.5, 1.7, 3.3, 12.0] {
                let s = t_cdf(t, df).unwrap() + t_cdf(-t, df).unwrap();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn one_sample_t_hand_values() {
        let r = one_sample_t(&[-1.0, 1.0]).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
        let r = one_sample_t(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.t_statistic, 2.0 * 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(r.df, 2);
        assert!(matches!(one_sample_t(&[1.0]), Err(Error::SampleSize(_))));
    }

    #[test]
    fn zero_variance_rules() {
        let r = one_sample_t(&[0.0; 4]).unwrap();
        assert_eq!(one_tailed_p(r.t_statistic, r.p_two_sided), 0.5);
        let r = one_sample_t(&[2.0; 4]).unwrap();
        assert_eq!(clip_p(one_tailed_p(r.t_statistic, r.p_two_sided)), P_FLOOR);
        let r = one_sample_t(&[-2.0; 4]).unwrap();
        assert_eq!(clip_p(one_tailed_p(r.t_statistic, r.p_two_sided)), 1.0 - P_FLOOR);
        assert_eq!(bootstrap_one_tailed_p(&[2.0; 8], 1000, SeedStream::new(0)).unwrap(), P_FLOOR);
    }

    #[test]
    fn one_tailed_branches() {
        assert_eq!(one_tailed_p(0.0, 1.0), 0.5);
        assert_abs_diff_eq!(one_tailed_p(-5.0, 0.001), 0.9995, epsilon = 1e-15);
        assert_abs_diff_eq!(one_tailed_p(3.46, 0.0743), 0.03715, epsilon = 1e-15);
    }

    #[test]
    fn sign_flip_maps_p_to_complement() {
        let mut rng = SeedStream::new(4).rng();
        for _ in 0..200 {
            let d: Vec<f64> = (0..8).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            let a = one_sample_t(&d).unwrap();
            let b = one_sample_t(&neg).unwrap();
            let pa = one_tailed_p(a.t_statistic, a.p_two_sided);
            let pb = one_tailed_p(b.t_statistic, b.p_two_sided);
            assert_abs_diff_eq!(pb, 1.0 - pa, epsilon = 1e-15);
        }
    }

    #[test]
    fn bootstrap_requirements() {
        assert!(bootstrap_one_tailed_p(&[1.0, 2.0], 99, SeedStream::new(0)).is_err());
        assert!(bootstrap_one_tailed_p(&[1.0], 1000, SeedStream::new(0)).is_err());
        let d = [0.3, -0.2, 1.1, 0.4, -0.9, 0.05, 0.7, 0.2];
        let a = bootstrap_one_tailed_p(&d, 500, SeedStream::new(8)).unwrap();
        let b = bootstrap_one_tailed_p(&d, 500, SeedStream::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aupc_extremes() {
        assert_eq!(aupc(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(aupc(&[1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(aupc(&[0.2, 0.6]).unwrap(), 0.6, epsilon = 1e-15);
        assert!(matches!(aupc(&[1.2]), Err(Error::Domain(_))));
        assert!(aupc(&[]).is_err());
    }

    #[test]
    fn ks_extremes() {
        let n = 100;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert_abs_diff_eq!(ks_statistic_uniform(&grid).unwrap(), 0.5 / n as f64, epsilon = 1e-15);
        assert!(ks_uniform_p(&grid).unwrap() > 0.999);
        let half = vec![0.5; n];
        assert_abs_diff_eq!(ks_statistic_uniform(&half).unwrap(), 0.5, epsilon = 1e-15);
        assert!(ks_uniform_p(&half).unwrap() < 1e-10);
        assert!(ks_uniform_p(&[0.1, 0.2]).is_err());
        assert!(ks_uniform_p(&[0.1, 0.2, 0.3, 0.4, -0.1]).is_err());
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // Both series are valid everywhere; check they meet at the switch point.
        let lambda: f64 = 1.0;
        let theta = {
            let pi2 = std::f64::consts::PI.powi(2);
            let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
            1.0 - c
                * (1..=20)
                    .map(|j| {
                        let k = (2 * j - 1) as f64;
                        (-k * k * pi2 / (8.0 * lambda * lambda)).exp()
                    })
                    .sum::<f64>()
        };
        assert_abs_diff_eq!(kolmogorov_sf(lambda), theta, epsilon = 1e-14);
        // Known value: P(K > 1.36) ≈ 0.0494.
        assert_abs_diff_eq!(kolmogorov_sf(1.36), 0.049_44, epsilon = 1e-4);
    }
}
