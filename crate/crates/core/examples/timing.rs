//! Times one LINGAUSS test: `cargo run --release --example timing -- <dim> <n> [workers]`.

use std::time::Instant;

use fcit::datasets::{gen_lingauss, LingaussSpec};
use fcit::fit::{fit_test, FitConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (dim, n) = (args.first().copied().unwrap_or(4), args.get(1).copied().unwrap_or(100_000));
    let start = Instant::now();
    let data = gen_lingauss(&LingaussSpec { dim, dependent: true, n, seed: 7 }).expect("generate");
    println!("generated in {:.1}s", start.elapsed().as_secs_f64());
    let cfg = FitConfig { workers: args.get(2).copied(), ..FitConfig::with_seed(1) };
    let out = fit_test(&data.x, &data.y, &data.z, &cfg).expect("test");
    println!(
        "dim={dim} n={n} p={:.3e} wall={:.1}s m_x={} m_nox={}",
        out.p_value, out.wall_time, out.best_params_x.min_samples_split, out.best_params_nox.min_samples_split
    );
}
