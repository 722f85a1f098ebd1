use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::tempdir;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coreset-lab"))
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn without_runtime(lines: &[String]) -> Vec<String> {
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "runtime_ms").unwrap();
    lines
        .iter()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(col);
            f.join(",")
        })
        .collect()
}

#[test]
fn one_trial_one_size_gives_one_row_per_schedule() {
    let dir = tempdir().unwrap();
    let status = lab()
        .args(["fig2", "--model", "cauchy", "--n-grid", "100", "--trials", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let lines = data_lines(&dir.path().join("fig2_cauchy.csv"));
    assert_eq!(lines[0], "model,algorithm,N,M,trial,kl_forward,kl_reverse,kl_min,kl_max,alpha_star,nnls_objective,runtime_ms,status");
    assert_eq!(lines.len(), 1 + 3);
    let raw = fs::read(dir.path().join("fig2_cauchy.csv")).unwrap();
    assert!(!raw.contains(&b'\r'));
    for f in ["fig2_cauchy_summary.csv", "fig2_cauchy_fits.csv", "fig2_cauchy.svg", "fig2_cauchy_metadata.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig2_cauchy_metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["logarithm"], "natural");
}

#[test]
fn identical_seed_gives_identical_rows() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    for d in [&a, &b] {
        let s = lab()
            .args(["fig2_scaled", "--model", "logreg", "--n-grid", "100,316", "--trials", "2", "--seed", "7", "--out"])
            .arg(d.path())
            .status()
            .unwrap();
        assert_eq!(s.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| without_runtime(&data_lines(&d.path().join("fig2_scaled_logreg.csv")));
    assert_eq!(read(&a), read(&b));
    for f in ["fig2_scaled_logreg_summary.csv", "fig2_scaled_logreg_fits.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn subsample_optimize_rows_use_five_plus_two_log_n() {
    let dir = tempdir().unwrap();
    let s = lab()
        .args(["fig3", "--model", "cauchy", "--n-grid", "100", "--trials", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    let lines = data_lines(&dir.path().join("fig3_cauchy.csv"));
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[1], "subsample_optimize");
        assert_eq!(f[3], "14");
        assert!(f[10].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "fig2", "model": "logreg", "n_grid": [100, 316], "trials": 3, "out": "{}"}}"#,
            dir.path().display()
        ),
    )
    .unwrap();
    let s = lab().args(["--trials", "1", "--n-grid", "100", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(s.code(), Some(0));
    assert_eq!(data_lines(&dir.path().join("fig2_logreg.csv")).len(), 1 + 3);
}

#[test]
fn configuration_errors_exit_with_three() {
    let dir = tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["fig2", "--n-grid", "316,100"],
        &["fig2", "--trials", "0"],
        &["fig9"],
        &["fig2", "--model", "probit"],
        &["fig2", "--m-schedule", "cube_n"],
        &["fig2", "--bogus-flag"],
        &[],
        &["bounds_suite", "--n-grid", "100"],
    ];
    for args in cases {
        let s = lab().args(*args).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(s.status.code(), Some(3), "{args:?}");
    }
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"experiment": "fig2", "colour": "red"}"#).unwrap();
    assert_eq!(lab().arg("--config").arg(&bad).output().unwrap().status.code(), Some(3));
    assert_eq!(lab().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn self_test_makes_the_bounds_suite_fail() {
    let dir = tempdir().unwrap();
    let clean = lab().args(["bounds_suite", "--trials", "4", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(clean.code(), Some(0));
    assert_eq!(data_lines(&dir.path().join("bounds_suite.csv")).len(), 1 + 4);
    let corrupted = lab()
        .args(["bounds_suite", "--trials", "4", "--self-test", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(corrupted.code(), Some(2));
}

#[test]
fn dump_writes_data_weights_and_posterior() {
    let dir = tempdir().unwrap();
    let s = lab()
        .args(["fig2", "--model", "logreg", "--n-grid", "100", "--trials", "1", "--m-schedule", "sqrt_n", "--dump", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    let dumps = dir.path().join("dumps");
    let data = data_lines(&dumps.join("logreg_N100_data.csv"));
    assert_eq!(data[0], "x1,x2,y");
    assert_eq!(data.len(), 101);
    let w = data_lines(&dumps.join("fig2_logreg_N100_sqrt_n_weights.csv"));
    assert_eq!(w[0], "index,weight");
    assert!(w.len() > 1 && w.len() <= 11, "{w:?}");
    for line in &w[1..] {
        let (i, v) = line.split_once(',').unwrap();
        assert!(i.parse::<usize>().unwrap() < 100);
        assert!(v.parse::<f64>().unwrap() > 0.0);
    }
    assert!(dumps.join("logreg_N100_posterior.csv").exists());
}
