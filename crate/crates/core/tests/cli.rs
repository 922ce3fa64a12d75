use std::path::{Path, PathBuf};
use std::process::Command;

use insdvl::cli::{read_rmse_csv, state_columns, ExperimentConfig, ModeSelect, Table, TrajectoryConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_insdvl"))
}

fn config(dir: &Path, mode: ModeSelect, runs: usize) -> PathBuf {
    let mut cfg = ExperimentConfig::default();
    if let TrajectoryConfig::FigureEight(p) = &mut cfg.trajectory {
        p.duration = 120.0;
        p.max_turn_rate_dps = 15.0;
        p.mean_turn_rate_dps = 4.0;
    }
    cfg.runs = runs;
    cfg.mode = mode;
    cfg.sweep.n_max = 8;
    let p = dir.join("cfg.toml");
    std::fs::write(&p, cfg.to_toml().unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unreadable_config_fails_with_message() {
    let o = run(&["fuse", "--config", "/definitely/missing.toml"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn unknown_key_fails() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.toml");
    std::fs::write(&p, "seed = 1\nbogus = 2\n").unwrap();
    let o = run(&["simulate", "--config", s(&p), "--out", s(d.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn compare_both_modes_has_nine_rows_and_average() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), ModeSelect::Both, 2);
    let out = d.path().join("cmp");
    assert!(run(&["compare", "--config", s(&c), "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].contains("improvement_pct"));
    assert!(lines[10].starts_with("average,"));
    assert!(std::fs::read_to_string(out.join("report.txt"))
        .unwrap()
        .contains("Averages exclude"));

    // improvements recompute from the emitted sigma CSVs
    let base = Table::read(&out.join("sigma_baseline.csv")).unwrap();
    let accel = Table::read(&out.join("sigma_accel.csv")).unwrap();
    let cols = state_columns("sigma");
    for line in &lines[1..10] {
        let f: Vec<&str> = line.split(',').collect();
        let col = format!("sigma_{}", f[0]);
        let i = cols.iter().position(|c| *c == col).unwrap();
        let b = base.rows.last().unwrap()[i];
        let a = accel.rows.last().unwrap()[i];
        assert_eq!(f[1].parse::<f64>().unwrap(), b);
        assert_eq!(f[2].parse::<f64>().unwrap(), a);
        assert_eq!(f[3].parse::<f64>().unwrap(), 100.0 * (b - a) / b);
    }
}

#[test]
fn baseline_only_report_omits_improvement() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), ModeSelect::Both, 2);
    let out = d.path().join("b");
    assert!(
        run(&["compare", "--config", s(&c), "--mode", "baseline", "--out", s(&out)])
            .status
            .success()
    );
    let text = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("state,sigma_baseline"));
    assert_eq!(text.lines().count(), 10);
    assert!(!out.join("sigma_accel.csv").exists());
}

#[test]
fn montecarlo_writes_runs_and_ensembles() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), ModeSelect::Accel, 3);
    let out = d.path().join("mc");
    assert!(run(&["montecarlo", "--config", s(&c), "--out", s(&out)])
        .status
        .success());
    for i in 0..3 {
        let t = Table::read(&out.join(format!("runs/accel/run_{i:04}.csv"))).unwrap();
        assert_eq!(t.columns, state_columns(""));
    }
    let e = Table::read(&out.join("ensemble_accel.csv")).unwrap();
    assert_eq!(e.columns.len(), 36);
    let truth = Table::read(&out.join("truth.csv")).unwrap();
    assert_eq!(truth.times[0], 0.0);
    let summary = std::fs::read_to_string(out.join("montecarlo_summary.txt")).unwrap();
    assert!(summary.contains("3 of 3 runs used"));
}

#[test]
fn csv_outputs_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), ModeSelect::Both, 2);
    let out = d.path().join("sim");
    assert!(run(&["simulate", "--config", s(&c), "--out", s(&out)]).status.success());
    for name in ["truth.csv", "imu.csv", "dvl.csv"] {
        let p = out.join(name);
        let t = Table::read(&p).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(buf, std::fs::read(&p).unwrap(), "{name}");
        let line = String::from_utf8(buf).unwrap().lines().nth(1).unwrap().to_string();
        let time = line.split(',').next().unwrap();
        assert_eq!(time.split('.').nth(1).map(str::len), Some(6));
    }
}

#[test]
fn rmse_sweep_rows_match_range() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), ModeSelect::Both, 2);
    let out = d.path().join("rmse");
    assert!(run(&["rmse-sweep", "--config", s(&c), "--out", s(&out)])
        .status
        .success());
    let curve = read_rmse_csv(std::fs::File::open(out.join("rmse.csv")).unwrap()).unwrap();
    assert_eq!(
        curve.iter().map(|p| p.n).collect::<Vec<_>>(),
        (2..=8).collect::<Vec<_>>()
    );
    assert!(std::fs::read_to_string(out.join("rmse_summary.txt"))
        .unwrap()
        .starts_with("argmin n = "));
}

#[test]
fn observability_emits_bases_and_angles() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("obs");
    assert!(run(&["observability", "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(out.join("observability_angles.csv")).unwrap();
    assert!(text.contains("static,velocity_acceleration,4,4,"));
    let basis = std::fs::read_to_string(out.join("nullspace_static_velocity.csv")).unwrap();
    assert_eq!(basis.lines().count(), 13);
    assert_eq!(basis.lines().next(), Some("state,u1,u2,u3,u4"));
}

#[test]
fn fuse_seed_changes_output() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), ModeSelect::Baseline, 2);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(run(&["fuse", "--config", s(&c), "--seed", "1", "--out", s(&a)])
        .status
        .success());
    assert!(run(&["fuse", "--config", s(&c), "--seed", "2", "--out", s(&b)])
        .status
        .success());
    let ea = std::fs::read(a.join("errors_baseline.csv")).unwrap();
    let eb = std::fs::read(b.join("errors_baseline.csv")).unwrap();
    assert_ne!(ea, eb);
}
