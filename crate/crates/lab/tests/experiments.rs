use coreset_lab::config::{Experiment, ExperimentConfig, ModelKind, Schedule};
use coreset_lab::experiments::{run_diagnostics, run_importance, run_subsample_optimize};
use coreset_lab::record::{Algorithm, ExperimentRecord, Metric, Status};
use coreset_lab::summary::{bounded_growth, fit, summarize, CellSummary, FitKind};
use coreset_lab::{run, ExitStatus};
use proptest::prelude::*;
use tempfile::tempdir;

fn config(e: Experiment, m: ModelKind, n_grid: &[usize], trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e, m, "unused").unwrap();
    c.n_grid = n_grid.to_vec();
    c.trials = trials;
    c
}

fn cell(schedule: Schedule, n: usize, m: usize, mean: f64, se: f64) -> CellSummary {
    CellSummary {
        model: ModelKind::Cauchy,
        schedule,
        n,
        m,
        metric: "kl_min".into(),
        trials: 10,
        usable: 10,
        failures: 0,
        mean,
        se,
        sd: se * 10f64.sqrt(),
    }
}

/// Slope and intercept from the 2×2 normal equations by Cramer's rule.
fn normal_equations(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

#[test]
fn fitted_slopes_match_normal_equations() {
    let ns = [100usize, 316, 1000, 3162, 10_000, 31_623];
    let datasets: [&dyn Fn(f64) -> f64; 3] = [
        &|n: f64| 3.0 * n.powf(0.5),
        &|n: f64| 0.02 * n.powf(1.1) * (1.0 + 0.3 * (n.ln() * 7.0).sin()),
        &|n: f64| 5.0 + 1e-3 * (n * 0.37).cos(),
    ];
    for f in datasets {
        let cells: Vec<CellSummary> = ns.iter().map(|&n| cell(Schedule::SqrtN, n, 1, f(n as f64), 0.1)).collect();
        let row = fit(&cells, Schedule::SqrtN, FitKind::LogLog).unwrap();
        let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = ns.iter().map(|&n| f(n as f64).ln()).collect();
        let (slope, intercept) = normal_equations(&x, &y);
        assert!((row.slope - slope).abs() < 1e-10, "{} vs {slope}", row.slope);
        assert!((row.intercept - intercept).abs() < 1e-9);
        assert_eq!(row.points, ns.len());

        let lin = fit(&cells, Schedule::SqrtN, FitKind::LinearLogN).unwrap();
        let y: Vec<f64> = ns.iter().map(|&n| f(n as f64)).collect();
        let (slope, _) = normal_equations(&x, &y);
        assert!((lin.slope - slope).abs() <= 1e-10 * slope.abs().max(1.0));
    }
}

#[test]
fn exact_power_law_recovers_exponent_and_constant() {
    let cells: Vec<CellSummary> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            let m = Schedule::LogN.size(n);
            cell(Schedule::LogN, n, m, 0.7 * n as f64 / m as f64, 0.0)
        })
        .collect();
    let row = fit(&cells, Schedule::LogN, FitKind::LogLog).unwrap();
    assert!((row.theory_constant - 0.7).abs() < 1e-12);
    assert!(row.r_squared > 0.999);
    let lin = fit(&cells, Schedule::LogN, FitKind::LinearLogRatio).unwrap();
    assert!(lin.theory_constant > 0.0);
}

#[test]
fn bounded_growth_uses_pooled_standard_errors() {
    let grow = |last: f64, se: f64| {
        let cells = [cell(Schedule::FivePlusTwoLogN, 100, 14, 1.0, se), cell(Schedule::FivePlusTwoLogN, 1000, 19, last, se)];
        bounded_growth(&cells, Schedule::FivePlusTwoLogN).unwrap()
    };
    assert!(grow(1.9, 0.0));
    assert!(!grow(2.1, 0.0));
    assert!(grow(2.5, 1.0));
    assert!(!grow(5.0, 1.0));
}

#[test]
fn kl_max_is_never_below_kl_min() {
    let c = config(Experiment::Fig2, ModelKind::Logreg, &[100, 316], 2);
    let mut rows = run_importance(&c, false).unwrap();
    rows.extend(run_subsample_optimize(&config(Experiment::Fig3, ModelKind::Logreg, &[100, 316], 2)).unwrap());
    rows.extend(run_importance(&config(Experiment::Fig2Scaled, ModelKind::Cauchy, &[100], 2), true).unwrap());
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r.kl_max >= r.kl_min || r.kl_max.is_nan(), "{r:?}");
        assert_eq!(r.kl_min, r.kl_forward.min(r.kl_reverse));
        if r.status == Status::Ok {
            assert!(r.kl_min >= 0.0);
        }
    }
}

#[test]
fn scaled_rows_carry_their_scale() {
    let rows = run_importance(&config(Experiment::Fig2Scaled, ModelKind::Cauchy, &[316], 2), true).unwrap();
    for r in rows.iter().filter(|r| r.status == Status::Ok) {
        assert_eq!(r.algorithm, Algorithm::ScaledImportanceWeighted);
        assert!(r.alpha_star.unwrap() >= 0.0);
    }
    let plain = run_importance(&config(Experiment::Fig2, ModelKind::Cauchy, &[316], 2), false).unwrap();
    assert!(plain.iter().all(|r| r.alpha_star.is_none() && r.nnls_objective.is_none()));
}

#[test]
fn failed_rows_are_counted_and_left_out() {
    let rows = vec![
        ExperimentRecord::failed(ModelKind::Cauchy, Algorithm::ImportanceWeighted, 100, 5, 0, Status::InfiniteKl),
        ExperimentRecord::failed(ModelKind::Cauchy, Algorithm::ImportanceWeighted, 100, 5, 1, Status::Error),
    ];
    let cells = summarize(ModelKind::Cauchy, &rows, &[Schedule::LogN], &[100], Metric::KlMin);
    assert_eq!(cells.len(), 1);
    assert_eq!((cells[0].usable, cells[0].failures), (0, 2));
    assert!(fit(&cells, Schedule::LogN, FitKind::LogLog).is_none());
}

#[test]
fn diagnostics_are_deterministic_and_full_data_shrinks() {
    let mut c = config(Experiment::Diagnostics, ModelKind::Cauchy, &[1000, 10_000], 30);
    c.seed = 11;
    let a = run_diagnostics(&c).unwrap();
    let b = run_diagnostics(&c).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 2 * 2 * 30);
    assert!(a.median_ratio < 3.0);
    assert!(a.full_decreases >= 20);
}

#[test]
fn run_writes_report_and_status() {
    let dir = tempdir().unwrap();
    let mut c = config(Experiment::Fig3, ModelKind::Cauchy, &[100, 316], 2);
    c.output_dir = dir.path().to_path_buf();
    let report = run(&c).unwrap();
    assert_eq!(report.exit_status(), ExitStatus::Success);
    assert_eq!(report.records.len(), 4);
    assert_eq!(report.cells.len(), 2);
    assert!(report.files.iter().all(|f| f.exists()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedules_are_at_least_one_and_monotone(n in 1usize..200_000) {
        for s in Schedule::ALL {
            let m = s.size(n);
            prop_assert!(m >= 1);
            prop_assert!(s.size(n + 1) >= m);
        }
    }

    #[test]
    fn slope_is_invariant_to_scaling_the_means(c in 1e-6f64..1e6, a in -2.0f64..2.0) {
        let ns = [100usize, 1000, 10_000];
        let cells: Vec<CellSummary> = ns.iter().map(|&n| cell(Schedule::SqrtN, n, 1, c * (n as f64).powf(a), 0.0)).collect();
        let row = fit(&cells, Schedule::SqrtN, FitKind::LogLog).unwrap();
        prop_assert!((row.slope - a).abs() < 1e-9);
    }
}
