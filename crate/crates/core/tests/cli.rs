use std::path::Path;
use std::process::{Command, Output};

use covcp::cli::{Aggregates, DetectJson, ExperimentSummary, QuantileJson};
use covcp::datagen::{generate, Innovation, SyntheticModel};
use serde_json::Value;

fn covcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covcp"))
        .args(args)
        .output()
        .expect("spawn covcp")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_csv(path: &Path, n: usize, p: usize, delta: f64, header: bool) {
    let data = generate(&SyntheticModel {
        n,
        p,
        t_star: 0.5,
        delta,
        rotation: false,
        innovation: Innovation::Gaussian,
        seed: 11,
    })
    .unwrap();
    let mut text = String::new();
    if header {
        let names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        text.push_str(&names.join(","));
        text.push('\n');
    }
    for row in data.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn detect_writes_complete_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    write_csv(&input, 200, 4, 4.0, false);
    let o = covcp(&["detect", "--input", input.to_str().unwrap(), "--mc-reps", "2000"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in [
        "n", "p", "t0", "alpha", "kappa_hat", "statistic", "quantile", "reject", "tau_hat", "mc", "profile",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["reps", "seed", "std_error", "grid_size"] {
        assert!(v["mc"].get(key).is_some(), "missing mc.{key}");
    }
    let report: DetectJson = serde_json::from_value(v).unwrap();
    assert_eq!((report.n, report.p), (200, 4));
    assert_eq!(report.profile.len(), 121);
    assert_eq!(report.mc.grid_size, 121);
    assert!(report.reject, "a fourfold variance jump should be detected");
    assert!((report.tau_hat - 0.5).abs() < 0.05);
    let min = report.profile.iter().map(|r| r.standardized).fold(f64::INFINITY, f64::min);
    assert_eq!(min, report.statistic);
}

#[test]
fn header_row_is_skipped_and_output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.csv");
    let headed = dir.path().join("headed.csv");
    let out = dir.path().join("out.json");
    write_csv(&plain, 120, 3, 1.0, false);
    write_csv(&headed, 120, 3, 1.0, true);
    let a = covcp(&["detect", "--input", plain.to_str().unwrap(), "--mc-reps", "1000"]);
    let b = covcp(&[
        "detect",
        "--input",
        headed.to_str().unwrap(),
        "--mc-reps",
        "1000",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(a.status.success() && b.status.success());
    assert!(b.stdout.is_empty());
    let from_file = std::fs::read(&out).unwrap();
    assert_eq!(a.stdout, from_file);
}

#[test]
fn malformed_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("ragged.csv", "1,2\n3,4\n5\n", "row 3"),
        ("text.csv", "a,b\n1,2\n3,oops\n", "row 3, column 2"),
        ("nan.csv", "1,2\n3,NaN\n", "row 2, column 2"),
        ("short.csv", "1,2\n3,4\n5,6\n7,8\n", "too few"),
    ];
    for (name, body, needle) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let o = covcp(&["detect", "--input", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let o = covcp(&["detect", "--input", dir.path().join("absent.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(covcp(&[]).status.code(), Some(2));
    assert_eq!(covcp(&["detect"]).status.code(), Some(2));
    let o = covcp(&[
        "simulate", "--model", "3", "--n", "100", "--p", "5", "--delta", "2", "--t-star", "0.5", "--runs", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(covcp(&["quantile", "--n", "ten", "--p", "3"]).status.code(), Some(2));
    assert_eq!(covcp(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_trimming_is_a_runtime_error() {
    let o = covcp(&["quantile", "--n", "100", "--p", "30", "--mc-reps", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("p/n"), "{}", stderr(&o));
}

#[test]
fn quantile_is_reproducible_and_seed_sensitive() {
    let args = ["quantile", "--n", "300", "--p", "20", "--mc-reps", "5000", "--seed", "3"];
    let a = covcp(&args);
    let b = covcp(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let q: QuantileJson = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(q.grid_size, 181);
    assert_eq!(q.y, 20.0 / 300.0);
    assert!(q.q_alpha < -1.6449 && q.q_alpha > -4.0);
    let other = covcp(&["quantile", "--n", "300", "--p", "20", "--mc-reps", "5000", "--seed", "4"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn simulate_is_thread_count_independent_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("runs.csv");
    let base = [
        "simulate", "--model", "2", "--n", "150", "--p", "6", "--delta", "2", "--t-star", "0.4", "--runs", "12",
        "--innovation", "uniform", "--mc-reps", "2000", "--seed", "5",
    ];
    let mut one = base.to_vec();
    one.extend(["--threads", "1", "--per-run-csv", csv_path.to_str().unwrap()]);
    let mut many = base.to_vec();
    many.extend(["--threads", "8"]);
    let a = covcp(&one);
    let b = covcp(&many);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);

    let summary: ExperimentSummary = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(summary.per_run.len(), 12);
    assert_eq!(summary.settings.innovation, "uniform");
    assert!(summary.per_run.iter().all(|r| r.quantile == summary.quantile));
    let again = Aggregates::from_runs(&summary.per_run, summary.settings.t_star);
    assert_eq!(again, summary.aggregates());

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["seed", "M", "q", "reject", "tau_hat"]
    );
    let rows: Vec<covcp::cli::RunRecord> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows, summary.per_run);
}
