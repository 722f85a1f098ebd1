//! Experiment harness for `coreset-core`: scaling sweeps, the bound sandwich
//! suite and the gradient diagnostic, with CSV, JSON and SVG output.

pub mod config;
pub mod experiments;
pub mod io;
pub mod plot;
pub mod record;
pub mod summary;

use std::fs;
use std::path::{Path, PathBuf};

use coreset_core::models::Reduced;
use coreset_core::quadrature::{AdaptiveOptions, Workspace};
use coreset_core::CoresetError;
use serde::Serialize;

use config::{Experiment, ExperimentConfig, Schedule};
use experiments::{BoundsOutcome, DiagnosticsOutcome};
use plot::{Chart, Series, PALETTE};
use record::{write_csv, write_records, Algorithm, ExperimentRecord, Metric};
use summary::{bounded_growth, fit, summarize, theory_value, CellSummary, FitKind, FitRow};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoresetError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exit status of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InvariantViolation = 2,
    ConfigError = 3,
}

/// Everything one run produced, with the paths it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
    pub cells: Vec<CellSummary>,
    pub fits: Vec<FitRow>,
    pub bounds: Option<BoundsOutcome>,
    pub diagnostics: Option<DiagnosticsOutcome>,
    /// Invariant violations: sandwich failures, or negative or NaN KL values.
    pub violations: usize,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn exit_status(&self) -> ExitStatus {
        if self.violations > 0 {
            ExitStatus::InvariantViolation
        } else {
            ExitStatus::Success
        }
    }
}

fn stem(config: &ExperimentConfig) -> String {
    match config.experiment {
        Experiment::BoundsSuite => config.experiment.name().to_string(),
        e => format!("{}_{}", e.name(), config.model.name()),
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    logarithm: &'static str,
    schedules: Vec<(&'static str, &'static str)>,
    grid: GridMetadata,
    files: Vec<String>,
}

#[derive(Serialize)]
struct GridMetadata {
    cutoff_nats: f64,
    pad: f64,
    cells_per_sd: f64,
    core_sds: f64,
    growth: f64,
}

/// Runs one experiment and writes its outputs into `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, LabError> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let mut report = RunReport {
        config: config.clone(),
        records: Vec::new(),
        cells: Vec::new(),
        fits: Vec::new(),
        bounds: None,
        diagnostics: None,
        violations: 0,
        files: Vec::new(),
    };
    let dir = config.output_dir.clone();
    let stem = stem(config);
    let path = |suffix: &str| dir.join(format!("{stem}{suffix}"));
    match config.experiment {
        Experiment::Fig2 | Experiment::Fig2Scaled | Experiment::Fig3 => {
            let (records, metric, kinds): (_, _, &[FitKind]) = match config.experiment {
                Experiment::Fig2 => (experiments::run_importance(config, false)?, Metric::KlMin, &[FitKind::LogLog]),
                Experiment::Fig2Scaled => (
                    experiments::run_importance(config, true)?,
                    Metric::KlMin,
                    &[FitKind::LinearLogRatio, FitKind::LogLog],
                ),
                _ => (experiments::run_subsample_optimize(config)?, Metric::KlMax, &[FitKind::LinearLogN]),
            };
            report.violations = records
                .iter()
                .filter(|r| [r.kl_forward, r.kl_reverse].iter().any(|v| v.is_nan() || *v < 0.0))
                .count();
            let cells = summarize(config.model, &records, &config.m_schedules, &config.n_grid, metric);
            let fits: Vec<FitRow> = config
                .m_schedules
                .iter()
                .flat_map(|&s| kinds.iter().map(move |&k| (s, k)))
                .filter_map(|(s, k)| fit(&cells, s, k))
                .collect();
            let records_path = path(".csv");
            write_records(&records_path, &records)?;
            write_csv(&path("_summary.csv"), &cells)?;
            write_csv(&path("_fits.csv"), &fits)?;
            fs::write(path(".svg"), chart(config, &cells, &fits, metric).to_svg())?;
            report.files.extend([records_path, path("_summary.csv"), path("_fits.csv"), path(".svg")]);
            if config.dump {
                report.files.extend(dump(config)?);
            }
            report.records = records;
            report.cells = cells;
            report.fits = fits;
        }
        Experiment::BoundsSuite => {
            let outcome = experiments::run_bounds_suite(config)?;
            write_csv(&path(".csv"), &outcome.rows)?;
            write_csv(&path("_subexp.csv"), &outcome.subexp)?;
            report.files.extend([path(".csv"), path("_subexp.csv")]);
            report.violations = outcome.violations();
            report.bounds = Some(outcome);
        }
        Experiment::Diagnostics => {
            let outcome = experiments::run_diagnostics(config)?;
            write_csv(&path(".csv"), &outcome.rows)?;
            write_csv(&path("_summary.csv"), &outcome.summary)?;
            report.files.extend([path(".csv"), path("_summary.csv")]);
            report.diagnostics = Some(outcome);
        }
    }
    let grid = AdaptiveOptions::default();
    let meta_path = path("_metadata.json");
    report.files.push(meta_path.clone());
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        logarithm: "natural",
        schedules: Schedule::ALL.iter().map(|s| (s.name(), s.formula())).collect(),
        grid: GridMetadata {
            cutoff_nats: grid.cutoff,
            pad: grid.pad,
            cells_per_sd: grid.cells_per_sd,
            core_sds: grid.core_sds,
            growth: grid.growth,
        },
        files: report.files.iter().map(|p| display_name(p)).collect(),
    };
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(report)
}

fn display_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Datasets, trial-0 weights and the trial-0 posterior grid for every N.
fn dump(config: &ExperimentConfig) -> Result<Vec<PathBuf>, LabError> {
    let dir = config.output_dir.join("dumps");
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let model_name = config.model.name();
    for &n in &config.n_grid {
        let model = experiments::trial_model(config.seed, config.model, n, 0)?;
        let p = dir.join(format!("{model_name}_N{n}_data.csv"));
        io::write_dataset(&p, &model)?;
        files.push(p);
        let ws = Workspace::covering(&Reduced(&model), &[], &AdaptiveOptions::default())?;
        let p = dir.join(format!("{model_name}_N{n}_posterior.csv"));
        io::write_distribution(&p, ws.posterior())?;
        files.push(p);
        for &s in &config.m_schedules {
            let w = match config.experiment {
                Experiment::Fig3 => experiments::trial_subsample_weights(config, &model, &ws, 0, s)?.weights,
                _ => experiments::trial_importance_weights(config.seed, config.model, &model, 0, s)?,
            };
            let p = dir.join(format!("{}_{model_name}_N{n}_{}_weights.csv", config.experiment.name(), s.name()));
            io::write_weights(&p, &w)?;
            files.push(p);
        }
    }
    Ok(files)
}

fn chart(config: &ExperimentConfig, cells: &[CellSummary], fits: &[FitRow], metric: Metric) -> Chart {
    let log_y = config.experiment == Experiment::Fig2;
    let mut series = Vec::new();
    for (k, &s) in config.m_schedules.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let cs: Vec<&CellSummary> = cells.iter().filter(|c| c.schedule == s && c.mean.is_finite()).collect();
        series.push(Series {
            label: format!("M = {}", s.formula()),
            color,
            points: cs.iter().map(|c| (c.n as f64, c.mean)).collect(),
            errors: Some(cs.iter().map(|c| if c.se.is_finite() { c.se } else { 0.0 }).collect()),
            dashed: false,
        });
        if let Some(f) = fits.iter().find(|f| f.schedule == s) {
            series.push(Series {
                label: "theory".into(),
                color,
                points: cs.iter().map(|c| (c.n as f64, theory_value(f.kind, f.theory_constant, c.n, c.m))).collect(),
                errors: None,
                dashed: true,
            });
        }
    }
    let algorithm = match config.experiment {
        Experiment::Fig2 => Algorithm::ImportanceWeighted,
        Experiment::Fig2Scaled => Algorithm::ScaledImportanceWeighted,
        _ => Algorithm::SubsampleOptimize,
    };
    Chart {
        title: format!("{} coreset quality, {} model", algorithm.name(), config.model.name()),
        x_label: "N".into(),
        y_label: format!("mean {}", metric.name()),
        log_x: true,
        log_y,
        series,
    }
}

/// Whether the largest-N mean is bounded relative to the smallest-N mean.
pub fn growth_is_bounded(report: &RunReport, schedule: Schedule) -> Option<bool> {
    bounded_growth(&report.cells, schedule)
}
