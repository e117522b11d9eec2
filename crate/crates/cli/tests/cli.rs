//! End-to-end runs of the `ttkrp` binary.

use std::path::Path;
use std::process::{Command, Output};

use ttkrp::io::{load_tt, save_tt};
use ttkrp::{formal_sum, random_gaussian_tt};

fn ttkrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttkrp"))
        .args(args)
        .output()
        .expect("failed to launch ttkrp")
}

fn ok(args: &[&str]) -> String {
    let out = ttkrp(args);
    assert!(
        out.status.success(),
        "ttkrp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

/// A rank-(2,3,2) tensor written with formal ranks (4,6,4).
fn padded_input(dir: &Path) -> std::path::PathBuf {
    let x = random_gaussian_tt(&[6, 5, 7, 4], &[1, 2, 3, 2, 1], 21).unwrap();
    let padded = formal_sum(&[x.clone(), x.scaled(0.25)]).unwrap();
    let p = dir.join("padded.tt");
    save_tt(&padded, &p).unwrap();
    p
}

#[test]
fn round_with_a_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = padded_input(dir.path());
    let (a, b) = (dir.path().join("a.tt"), dir.path().join("b.tt"));
    for out in [&a, &b] {
        ok(&[
            "round",
            path(&input),
            path(out),
            "--algo",
            "krp-adapt",
            "--tol",
            "1e-4",
            "--seed",
            "7",
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn deterministic_rounding_recovers_true_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let input = padded_input(dir.path());
    let out = dir.path().join("y.tt");
    let stdout = ok(&[
        "round",
        path(&input),
        path(&out),
        "--algo",
        "det",
        "--tol",
        "1e-10",
    ]);
    assert_eq!(load_tt(&out).unwrap().ranks(), vec![1, 2, 3, 2, 1]);
    let record: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(record["ranks"], serde_json::json!([1, 2, 3, 2, 1]));
    assert!(record["relative_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn invalid_targets_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = padded_input(dir.path());
    let out = dir.path().join("y.tt");
    // d - 1 = 3 ranks are required
    assert!(
        !ttkrp(&["round", path(&input), path(&out), "--ranks", "2,2,2,2"])
            .status
            .success()
    );
    // fixed-rank sketching needs ranks, not a tolerance
    assert!(!ttkrp(&[
        "round",
        path(&input),
        path(&out),
        "--algo",
        "krp-fix",
        "--tol",
        "1e-3"
    ])
    .status
    .success());
    assert!(!ttkrp(&["round", path(&input), path(&out)]).status.success());
}

#[test]
fn bench_synthetic_is_reproducible_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for csv in [&a, &b] {
        ok(&[
            "bench-synthetic",
            "--d",
            "4",
            "--n",
            "8",
            "--rank",
            "3",
            "--targets",
            "2,3",
            "--seeds",
            "2",
            "--csv",
            path(csv),
        ]);
    }
    let (ra, rb) = (csv_rows(&a), csv_rows(&b));
    // 2 targets x 4 algorithms x 2 seeds
    assert_eq!(ra.len(), 16);
    for (x, y) in ra.iter().zip(&rb) {
        let strip = |r: &Vec<String>| [&r[..5], &r[6..]].concat();
        assert_eq!(strip(x), strip(y));
    }
}

#[test]
fn bench_synthetic_without_perturbation_is_exact_at_the_true_rank() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("exact.csv");
    ok(&[
        "bench-synthetic",
        "--d",
        "4",
        "--n",
        "8",
        "--rank",
        "3",
        "--eps-pert",
        "0",
        "--targets",
        "3",
        "--seeds",
        "2",
        "--csv",
        path(&csv),
    ]);
    for row in csv_rows(&csv) {
        let err: f64 = row[3].parse().unwrap();
        assert!(err <= 1e-10, "{}: {err:e}", row[0]);
    }
}

#[test]
fn bench_synthetic_tolerance_sweep_meets_tolerance_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tol.csv");
    ok(&[
        "bench-synthetic",
        "--d",
        "4",
        "--n",
        "8",
        "--rank",
        "3",
        "--tols",
        "1e-2,1e-6",
        "--seeds",
        "1",
        "--csv",
        path(&csv),
    ]);
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 8);
    for row in rows.iter().filter(|r| r[0] == "det" || r[0] == "orth-rand") {
        let (tol, err): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!(err <= tol, "{}: {err:e} > {tol:e}", row[0]);
    }
}

#[test]
fn norm_study_reports_shrinking_spread() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("norm.csv");
    ok(&[
        "norm-study",
        "--d",
        "3",
        "--widths",
        "4,64",
        "--trials",
        "400",
        "--csv",
        path(&csv),
    ]);
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 2);
    let std = |r: &Vec<String>| r[7].parse::<f64>().unwrap();
    let mean_square = |r: &Vec<String>| r[8].parse::<f64>().unwrap();
    assert!(std(&rows[1]) < std(&rows[0]));
    let truth: f64 = rows[1][3].parse().unwrap();
    assert!((mean_square(&rows[1]) / (truth * truth) - 1.0).abs() < 0.1);
}

#[test]
fn norm_study_of_zero_tensor_is_identically_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("zero.csv");
    ok(&[
        "norm-study",
        "--zero",
        "--d",
        "3",
        "--widths",
        "8",
        "--trials",
        "100",
        "--csv",
        path(&csv),
    ]);
    for row in csv_rows(&csv) {
        for field in &row[3..] {
            assert_eq!(field.parse::<f64>().unwrap(), 0.0);
        }
    }
    assert!(
        !ttkrp(&["norm-study", "--trials", "10", "--csv", path(&csv)])
            .status
            .success()
    );
}

#[test]
fn cookie_converges_for_each_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gmres.csv");
    let stdout = ok(&[
        "cookie",
        "--d-params",
        "3",
        "--grid",
        "8",
        "--samples",
        "3",
        "--tol",
        "1e-6",
        "--strategy",
        "det,krp-sum",
        "--csv",
        path(&csv),
    ]);
    let lines: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    for s in &lines {
        assert_eq!(s["converged"], true, "{s}");
        assert!(s["final_residual"].as_f64().unwrap() <= 1e-5);
    }
    let rows = csv_rows(&csv);
    let iterations: u64 = lines
        .iter()
        .map(|s| s["iterations"].as_u64().unwrap())
        .sum();
    assert_eq!(rows.len() as u64, iterations);
}
