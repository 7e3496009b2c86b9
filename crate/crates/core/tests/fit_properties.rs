use std::time::Duration;

use fcit::datasets::{gen_lingauss, LingaussSpec};
use fcit::deadline::Deadline;
use fcit::fit::{auto_test, auto_test_until, fit_test, fit_test_unconditional, FitConfig, TestMode};
use fcit::matrix::SampleMatrix;
use fcit::seed::SeedStream;
use fcit::stats::{one_sample_t, one_tailed_p};
use fcit::{Error, TreeParams};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn noise(n: usize, d: usize, seed: u64) -> SampleMatrix {
    let mut rng = SeedStream::new(seed).rng();
    SampleMatrix::new(n, d, (0..n * d).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn lingauss(dim: usize, dependent: bool, n: usize, seed: u64) -> fcit::Dataset {
    gen_lingauss(&LingaussSpec { dim, dependent, n, seed }).unwrap()
}

#[test]
fn p_value_follows_from_the_mse_differences() {
    for seed in 0..5 {
        let d = lingauss(2, seed % 2 == 0, 400, seed);
        let out = fit_test(&d.x, &d.y, &d.z, &FitConfig::with_seed(seed)).unwrap();
        assert_eq!(out.mses_x.len(), 8);
        assert_eq!(out.mses_nox.len(), 8);
        assert!(out.mses_x.iter().chain(&out.mses_nox).all(|m| *m >= 0.0));
        let diffs: Vec<f64> = out.mses_nox.iter().zip(&out.mses_x).map(|(a, b)| a - b).collect();
        let t = one_sample_t(&diffs).unwrap();
        assert_eq!(out.t_statistic, t.t_statistic);
        assert_eq!(out.p_value, one_tailed_p(t.t_statistic, t.p_two_sided).clamp(1e-16, 1.0 - 1e-16));
        assert_eq!(out.mode, TestMode::Conditional);
        assert_eq!(out.n_samples, 400);
    }
}

#[test]
fn outcome_does_not_depend_on_worker_count() {
    let d = lingauss(3, true, 600, 4);
    let run = |workers| {
        let cfg = FitConfig { workers: Some(workers), ..FitConfig::with_seed(9) };
        let mut out = fit_test(&d.x, &d.y, &d.z, &cfg).unwrap();
        out.wall_time = 0.0;
        out.config.workers = None;
        out
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(5));
    let unc = |workers| {
        let cfg = FitConfig { workers: Some(workers), ..FitConfig::with_seed(9) };
        let out = fit_test_unconditional(&d.x, &d.y, &cfg).unwrap();
        (out.mses_x, out.mses_nox, out.p_value)
    };
    assert_eq!(unc(1), unc(3));
}

#[test]
fn seeds_change_the_splits() {
    let d = lingauss(1, false, 300, 5);
    let a = fit_test(&d.x, &d.y, &d.z, &FitConfig::with_seed(1)).unwrap();
    let b = fit_test(&d.x, &d.y, &d.z, &FitConfig::with_seed(2)).unwrap();
    assert_ne!(a.mses_x, b.mses_x);
}

#[test]
fn dispatch_on_conditioning_set() {
    let d = lingauss(2, false, 200, 6);
    let cfg = FitConfig::with_seed(0);
    assert_eq!(auto_test(&d.x, &d.y, None, &cfg).unwrap().mode, TestMode::Unconditional);
    let empty = SampleMatrix::empty(200);
    assert_eq!(auto_test(&d.x, &d.y, Some(&empty), &cfg).unwrap().mode, TestMode::Unconditional);
    assert_eq!(auto_test(&d.x, &d.y, Some(&d.z), &cfg).unwrap().mode, TestMode::Conditional);
}

#[test]
fn constant_target_gives_one_half() {
    let x = noise(100, 2, 1);
    let z = noise(100, 1, 2);
    let y = SampleMatrix::column_vector(vec![3.0; 100]).unwrap();
    let out = fit_test(&x, &y, &z, &FitConfig::default()).unwrap();
    assert_eq!(out.mses_x, vec![0.0; 8]);
    assert_eq!(out.mses_nox, vec![0.0; 8]);
    assert_eq!(out.p_value, 0.5);
}

#[test]
fn bootstrap_path() {
    let d = lingauss(1, true, 2000, 7);
    let cfg = FitConfig { use_bootstrap: true, ..FitConfig::with_seed(3) };
    let out = fit_test(&d.x, &d.y, &d.z, &cfg).unwrap();
    assert!(out.p_value >= 1.0 / 1001.0 && out.p_value <= 1.0);
    assert!(out.p_value < 0.05);
    let null = lingauss(1, false, 2000, 7);
    let out = fit_test(&null.x, &null.y, &null.z, &cfg).unwrap();
    assert!(out.p_value >= 1.0 / 1001.0);
}

#[test]
fn custom_grid_is_used() {
    let d = lingauss(1, true, 500, 8);
    let grid = vec![TreeParams::new(40).unwrap()];
    let cfg = FitConfig { grid: Some(grid), ..FitConfig::with_seed(1) };
    let out = fit_test(&d.x, &d.y, &d.z, &cfg).unwrap();
    assert_eq!(out.best_params_x.min_samples_split, 40);
    assert_eq!(out.best_params_nox.min_samples_split, 40);
    let cfg = FitConfig { grid: Some(Vec::new()), ..FitConfig::default() };
    assert!(matches!(fit_test(&d.x, &d.y, &d.z, &cfg), Err(Error::Config(_))));
}

#[test]
fn expired_deadline_times_out() {
    let d = lingauss(1, true, 500, 9);
    let r = auto_test_until(&d.x, &d.y, Some(&d.z), &FitConfig::default(), Deadline::after(Duration::ZERO));
    assert!(matches!(r, Err(Error::Timeout)));
}

#[test]
fn unconditional_test_separates_dependence() {
    let x = noise(2000, 1, 10);
    let y_dep = SampleMatrix::column_vector(x.column(0).iter().map(|v| v * v).collect()).unwrap();
    let out = fit_test_unconditional(&x, &y_dep, &FitConfig::with_seed(1)).unwrap();
    assert!(out.p_value < 0.01, "{}", out.p_value);
    let y_ind = noise(2000, 1, 11);
    let rejections = (0..10)
        .filter(|&s| fit_test_unconditional(&x, &y_ind, &FitConfig::with_seed(s)).unwrap().p_value < 0.05)
        .count();
    assert!(rejections <= 3, "{rejections} of 10");
}

#[test]
fn lingauss_null_keeps_type_one_error_low() {
    let rejections = (0..20)
        .filter(|&seed| {
            let d = lingauss(1, false, 10_000, 100 + seed);
            fit_test(&d.x, &d.y, &d.z, &FitConfig::with_seed(seed)).unwrap().p_value < 0.05
        })
        .count();
    assert!(rejections <= 2, "{rejections} of 20");
}

#[test]
fn trees_with_x_predict_better_under_dependence() {
    let wins = (0..20)
        .filter(|&seed| {
            let d = lingauss(1, true, 10_000, 200 + seed);
            let out = fit_test(&d.x, &d.y, &d.z, &FitConfig::with_seed(seed)).unwrap();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            mean(&out.mses_x) < mean(&out.mses_nox)
        })
        .count();
    assert!(wins >= 19, "{wins} of 20");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn p_values_are_clipped_probabilities(n in 20usize..120, dx in 1usize..3, seed in 0u64..1000) {
        let x = noise(n, dx, seed);
        let y = noise(n, 1, seed + 1);
        let z = noise(n, 1, seed + 2);
        let out = fit_test(&x, &y, &z, &FitConfig::with_seed(seed)).unwrap();
        prop_assert!(out.p_value >= 1e-16 && out.p_value <= 1.0 - 1e-16);
        let again = fit_test(&x, &y, &z, &FitConfig::with_seed(seed)).unwrap();
        prop_assert_eq!(out.mses_x, again.mses_x);
        prop_assert_eq!(out.p_value, again.p_value);
    }
}
