use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fcit::bench::{read_records, run_sweep, summarize_errors, Status, SweepConfig};
use fcit::dataset::{Dataset, Setting};

fn fcit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcit"))
        .args(args)
        .current_dir(dir)
        .env_remove("FCIT_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = fcit(
        &["gen", "--setting", "lingauss", "--dim", "4", "--n", "1000", "--dependent", "--seed", "7", "--out", "d.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 12);
    assert_eq!(lines.count(), 1000);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["dependent"], true);
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["dim_x"], 4);
    let d = Dataset::load(&dir.path().join("d.csv")).unwrap();
    assert_eq!(d.x.n_cols(), 4);
    assert_eq!(d.setting, Setting::Lingauss);
}

#[test]
fn test_prints_outcome_json() {
    let dir = tempfile::tempdir().unwrap();
    let gen =
        ["gen", "--setting", "lingauss", "--dim", "4", "--n", "1000", "--dependent", "--seed", "7", "--out", "d.csv"];
    assert!(fcit(&gen, dir.path()).status.success());
    let o = fcit(
        &["test", "--data", "d.csv", "--x-cols", "0-3", "--y-cols", "4-7", "--z-cols", "8-11", "--seed", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for field in ["p_value", "t_statistic", "mses_x", "mses_nox", "wall_time"] {
        assert!(v.get(field).is_some(), "missing {field}");
    }
    assert_eq!(v["mode"], "conditional");
    assert_eq!(v["mses_x"].as_array().unwrap().len(), 8);

    let o = fcit(&["test", "--data", "d.csv", "--x-cols", "0-3", "--y-cols", "4,5,6-7"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "unconditional");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fcit(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(fcit(&["test", "--data", "d.csv"], dir.path()).status.code(), Some(1));
    assert_eq!(
        fcit(&["test", "--data", "d.csv", "--x-cols", "zero", "--y-cols", "1"], dir.path()).status.code(),
        Some(1)
    );
    let missing = fcit(&["test", "--data", "missing.csv", "--x-cols", "0", "--y-cols", "1"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    fs::write(dir.path().join("bad.csv"), "a,b\n1,2\n3,oops\n").unwrap();
    let o = fcit(&["test", "--data", "bad.csv", "--x-cols", "0", "--y-cols", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(dir.path().join("ok.csv"), "a,b\n1,2\n3,4\n").unwrap();
    let o = fcit(&["test", "--data", "ok.csv", "--x-cols", "0", "--y-cols", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(dir.path().join("cfg.json"), r#"{"alpha": 7}"#).unwrap();
    assert_eq!(fcit(&["sweep", "--config", "cfg.json"], dir.path()).status.code(), Some(2));
}

fn small_config(budget: f64) -> SweepConfig {
    SweepConfig {
        settings: vec![Setting::Pnl],
        sample_sizes: vec![100],
        seeds: 1,
        time_budget: budget,
        ..SweepConfig::default()
    }
}

#[test]
fn sweep_grid_arithmetic() {
    let records = run_sweep(&small_config(100.0)).unwrap();
    assert_eq!(records.len(), 18);
    assert_eq!(records.iter().filter(|r| r.dependent).count(), 9);
    for r in &records {
        assert_eq!(r.status, Status::Ok);
        let p = r.p_value.unwrap();
        assert!((1e-16..=1.0 - 1e-16).contains(&p));
    }
    let summary = summarize_errors(&records, 0.05, 60.0);
    assert_eq!(summary.len(), 9);
    assert!(summary.iter().all(|s| s.n_used == Some(100)));
}

#[test]
fn zero_budget_times_everything_out() {
    let cfg = SweepConfig { sample_sizes: vec![100, 200], ..small_config(0.0) };
    let records = run_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 18, "larger n are skipped after a timeout");
    assert!(records.iter().all(|r| r.status == Status::Timeout && r.p_value.is_none()));
    let summary = summarize_errors(&records, 0.05, 60.0);
    assert!(summary.iter().all(|s| s.n_used.is_none() && s.type1.is_none()));
}

#[test]
fn sweep_and_summarize_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"settings": ["hybrid"], "sample_sizes": [60, 120], "seeds": 2, "seed": 3}"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let o = fcit(&["sweep", "--config", "cfg.json", "--out", "records.csv", "--workers", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(text.starts_with("# config_hash="));
    let records = read_records(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 9 * 2 * 2 * 2);

    let o = fcit(
        &["summarize", "--records", "records.csv", "--summary", "summary.csv", "--metrics", "metrics.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], text.lines().next().unwrap());
    assert_eq!(lines[1], "setting,params,n_used,type1,type2,avg_error,aupc,ks_p");
    assert_eq!(lines.len(), 2 + 9);
    assert!(lines[2].starts_with("hybrid,gamma=2;dim=2,120,"));
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2 + 9 * 2);

    // Standard output when --out is omitted, and FCIT_WORKERS is honoured.
    let o = Command::new(env!("CARGO_BIN_EXE_fcit"))
        .args(["sweep", "--config", "cfg.json"])
        .current_dir(dir.path())
        .env("FCIT_WORKERS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    let again = read_records(stdout(&o).as_bytes()).unwrap();
    let key = |r: &fcit::bench::BenchRecord| (r.params.clone(), r.n_samples, r.dependent, r.seed, r.p_value);
    assert_eq!(again.iter().map(key).collect::<Vec<_>>(), records.iter().map(key).collect::<Vec<_>>());
}
