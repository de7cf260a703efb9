use std::path::Path;
use std::process::{Command, Output};

use multiwell::io::{read_bif_table, read_branch, read_events_json, read_solutions, read_spectrum, read_trajectory};
use multiwell::Classification;

fn multiwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiwell")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    multiwell(&all)
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn open(dir: &Path, name: &str) -> std::fs::File {
    std::fs::File::open(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn census_reports_fifteen_positive_states() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["census"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sols = read_solutions::<_, f64>(open(tmp.path(), "census.csv")).unwrap();
    assert_eq!(sols.len(), 15);
    for s in &sols {
        assert!(s.a.iter().all(|x| *x > 0.0));
        assert!(s.residual_norm <= 1e-10);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(a.path(), "1"), (b.path(), "4")] {
        let o = run_in(dir, &["census", "--threads", threads, "--seed", "7"]);
        assert!(o.status.success());
    }
    let x = std::fs::read(a.path().join("census.csv")).unwrap();
    let y = std::fs::read(b.path().join("census.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn config_digest_changes_with_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), &["spectrum", "--seed", "1"]).status.success());
    assert!(run_in(b.path(), &["spectrum", "--seed", "2"]).status.success());
    let head = |d: &Path| std::fs::read_to_string(d.join("spectrum.csv")).unwrap().lines().nth(1).unwrap().to_string();
    assert!(head(a.path()).starts_with("# config-sha256: "));
    assert_ne!(head(a.path()), head(b.path()));
}

#[test]
fn spectrum_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"model": {"n": 5, "lambda_d": 0.5, "beta": 2.0}}"#);
    assert!(run_in(tmp.path(), &["spectrum", "--config", &cfg]).status.success());
    let t = read_spectrum::<_, f64>(open(tmp.path(), "spectrum.csv")).unwrap();
    assert_eq!(t.mu_closed_form.len(), 5);
    for (c, n) in t.mu_closed_form.iter().zip(&t.mu_numeric) {
        assert!((c - n).abs() <= 1e-10);
    }
    let expected = 0.5 - 4.0 * (std::f64::consts::PI / 6.0).cos();
    assert!((t.mu_closed_form[0] - expected).abs() <= 1e-10);
}

#[test]
fn graph_spectrum_defaults_to_square() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"spectrum": {"coupling": "graph"}}"#);
    assert!(run_in(tmp.path(), &["spectrum", "--config", &cfg]).status.success());
    let text = std::fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    let mu: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(mu.len(), 4);
    for (m, e) in mu.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((m - e).abs() <= 1e-10, "{mu:?}");
    }
}

#[test]
fn bif_table_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"bif_table": {"n_list": [2, 4]}}"#);
    assert!(run_in(tmp.path(), &["bif-table", "--config", &cfg]).status.success());
    let rows = read_bif_table::<_, f64>(open(tmp.path(), "bif_table.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[0].eta_bif + 2.0).abs() <= 0.02);
    assert!((rows[1].eta_bif + 2.29).abs() <= 0.05);
    assert!(rows.iter().all(|r| r.classification == Classification::Supercritical));
}

#[test]
fn evolve_conserves_norm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"evolve": {"initial": {"amplitudes": [[1, 0], [0, 1], [0.5, 0], [0, 0]]}, "t_end": 20, "dt": 0.01, "stride": 50}}"#,
    );
    assert!(run_in(tmp.path(), &["evolve", "--config", &cfg]).status.success());
    let rows = read_trajectory::<_, f64>(open(tmp.path(), "trajectory.csv")).unwrap();
    assert_eq!(rows.first().unwrap().state.t, 0.0);
    assert_eq!(rows.last().unwrap().state.t, 20.0);
    for r in &rows {
        assert!((r.norm - 1.0).abs() <= 1e-10);
        assert!((r.energy - rows[0].energy).abs() <= 1e-8);
    }
}

#[test]
fn branches_export_consistent_events() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"branches": {"eta_min": -5, "eta_max": 5, "modes": [1, 4]}}"#);
    let o = run_in(tmp.path(), &["branches", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let events = read_events_json(open(tmp.path(), "events.json")).unwrap();
    let forks: Vec<_> = events.iter().filter(|e| e.kind == multiwell::EventKind::Pitchfork).collect();
    assert_eq!(forks.len(), 2);
    // mode 4 is the staggered image of mode 1
    assert!((forks[0].eta_c + forks[1].eta_c).abs() <= 1e-6);
    assert_eq!(forks[0].classification, forks[1].classification);
    let pts = read_branch::<_, f64>(open(tmp.path(), "branch_mode1.csv")).unwrap();
    assert!(pts.first().unwrap().eta <= -5.0 + 1e-9);
    assert!(pts.last().unwrap().eta >= 5.0 - 1e-9);
}

#[test]
fn sweep_writes_every_family() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"sweep": {"sigmas": [1], "points": 50}}"#);
    assert!(run_in(tmp.path(), &["stationary-sweep", "--config", &cfg]).status.success());
    for fam in ["11", "12", "21", "22"] {
        for side in ["lower", "upper"] {
            let pts = read_branch::<_, f64>(open(tmp.path(), &format!("sweep_s1_f{fam}_{side}.csv"))).unwrap();
            assert_eq!(pts.len(), 50);
        }
    }
    let folds = std::fs::read_to_string(tmp.path().join("folds.csv")).unwrap();
    assert!(folds.contains("-8.32"));
}

#[test]
fn linear1d_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"linear1d": {"wells": [2], "n_points": 1500}}"#);
    let o = run_in(tmp.path(), &["linear1d", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ef = multiwell::io::read_eigenfunctions::<_, f64>(open(tmp.path(), "eigenfunctions_N2.csv")).unwrap();
    assert_eq!(ef.psi.len(), 2);
    assert_eq!(ef.x.len(), 1500);
    assert!(tmp.path().join("linear1d_summary.csv").exists());
}

#[test]
fn bad_parameters_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"model": {"n": 1}}"#);
    assert_eq!(run_in(tmp.path(), &["spectrum", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), r#"{"model": {"unknown_key": 1}}"#);
    assert_eq!(run_in(tmp.path(), &["spectrum", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), &["spectrum", "--config", "/nonexistent/c.json"]).status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), &["census", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(multiwell(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"model": {"eta": 1e308, "hbar": 1e-300}, "evolve": {"t_end": 1, "dt": 0.1}}"#);
    assert_eq!(run_in(tmp.path(), &["evolve", "--config", &cfg]).status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let o = multiwell(&["spectrum", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}
