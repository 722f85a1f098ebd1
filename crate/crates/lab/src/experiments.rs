//! Runners for the scaling sweeps, the bound sandwich suite and the
//! gradient diagnostic. Each trial draws from its own seeded stream, and
//! results are collected in task order regardless of scheduling.

use std::time::Instant;

use coreset_core::bounds::{
    check_sandwich, evaluate_bounds, fit_beta, fit_beta_on, full_covariance, grad_diagnostic,
    perturbation_quadratic_form, subexp_kl_bound, BoundReport, ViolationKind,
};
use coreset_core::coresets::{
    importance_probabilities, importance_weighted, scale_footprints, scale_search, subsample_optimize_with, ScaleObjective,
    ProbabilityMode, SamplingProbabilities,
};
use coreset_core::models::{CauchyLocationModel, LogRegModel, Model, PotentialModel, Reduced, CAUCHY_THETA0, LOGREG_THETA0};
use coreset_core::quadrature::{footprint, AdaptiveOptions, KlPair, Workspace};
use coreset_core::rng::{stream, StreamRng};
use coreset_core::stats::median;
use coreset_core::weights::CoresetWeights;
use coreset_core::CoresetError;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelKind, Schedule, BOUNDS_CONFIGURATIONS, BOUNDS_N, DIAGNOSTICS_M, THEOREM3_N};
use crate::record::{Algorithm, ExperimentRecord, Status};
use crate::LabError;

const TAG_DATA: u64 = 1;
const TAG_WEIGHTS: u64 = 2;
const TAG_SUBSAMPLE: u64 = 3;
const TAG_BOUNDS: u64 = 4;
const TAG_THEOREM3: u64 = 5;
const TAG_DIAGNOSTICS: u64 = 6;
const TAG_REFINEMENT: u64 = 7;

/// Dyadic ball radii, in posterior standard deviations, scanned for the lower bound.
pub const BALL_RADII: [f64; 3] = [0.5, 1.0, 2.0];
/// Coreset sizes used by the bound sandwich suite.
pub const BOUNDS_SIZES: [usize; 3] = [10, 50, 500];
/// Relative tolerance of the sandwich comparisons.
pub const SANDWICH_TOLERANCE: f64 = 1e-6;
/// Directions sampled when fitting β.
pub const BETA_DIRECTIONS: usize = 100;

fn model_tag(kind: ModelKind) -> u64 {
    match kind {
        ModelKind::Cauchy => 0,
        ModelKind::Logreg => 1,
    }
}

fn schedule_tag(s: Schedule) -> u64 {
    Schedule::ALL.iter().position(|&t| t == s).unwrap_or(0) as u64
}

pub fn generate_model<R: Rng + ?Sized>(kind: ModelKind, n: usize, rng: &mut R) -> Result<Model, CoresetError> {
    Ok(match kind {
        ModelKind::Cauchy => Model::Cauchy(CauchyLocationModel::generate(n, CAUCHY_THETA0, rng)?),
        ModelKind::Logreg => Model::LogReg(LogRegModel::generate(n, LOGREG_THETA0, rng)?),
    })
}

/// The dataset of one `(model, N, trial)`; shared by every experiment.
pub fn trial_model(seed: u64, kind: ModelKind, n: usize, trial: usize) -> Result<Model, CoresetError> {
    generate_model(kind, n, &mut stream(seed, &[TAG_DATA, model_tag(kind), n as u64, trial as u64]))
}

/// Importance-weighted coreset of one `(model, N, trial, schedule)`; the
/// scaled variant rescales exactly these weights.
pub fn trial_importance_weights(
    seed: u64,
    kind: ModelKind,
    model: &Model,
    trial: usize,
    schedule: Schedule,
) -> Result<CoresetWeights, CoresetError> {
    let n = model.len();
    let probs = importance_probabilities(model, ProbabilityMode::XSquaredThresholded)?;
    let mut rng = stream(seed, &[TAG_WEIGHTS, model_tag(kind), n as u64, trial as u64, schedule_tag(schedule)]);
    importance_weighted(&probs, schedule.size(n), &mut rng)
}

fn tasks(config: &ExperimentConfig) -> Vec<(usize, usize)> {
    config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect()
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Importance-weighted coresets (scaled or not), one row per
/// `(N, trial, schedule)`.
pub fn run_importance(config: &ExperimentConfig, scaled: bool) -> Result<Vec<ExperimentRecord>, LabError> {
    let rows: Vec<Vec<ExperimentRecord>> = tasks(config)
        .par_iter()
        .map(|&(n, trial)| importance_task(config, scaled, n, trial))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn importance_task(
    config: &ExperimentConfig,
    scaled: bool,
    n: usize,
    trial: usize,
) -> Result<Vec<ExperimentRecord>, LabError> {
    let kind = config.model;
    let model = trial_model(config.seed, kind, n, trial)?;
    let target = Reduced(&model);
    let start = Instant::now();
    let weights: Vec<CoresetWeights> = config
        .m_schedules
        .iter()
        .map(|&s| trial_importance_weights(config.seed, kind, &model, trial, s))
        .collect::<Result<_, _>>()?;
    let opts = AdaptiveOptions::default();
    let ws = if scaled {
        let mut fps = vec![footprint(&target, &CoresetWeights::ones(n), opts.cutoff)?];
        for w in &weights {
            fps.extend(scale_footprints(&target, w)?);
        }
        Workspace::from_footprints(&target, &fps, &opts)?
    } else {
        let refs: Vec<&CoresetWeights> = weights.iter().collect();
        Workspace::covering(&target, &refs, &opts)?
    };
    let shared = millis(start) / weights.len() as f64;
    let mut out = Vec::with_capacity(weights.len());
    for (&schedule, w) in config.m_schedules.iter().zip(&weights) {
        let t = Instant::now();
        let m = schedule.size(n);
        let field = ws.field(&target, w)?;
        let rec = if scaled {
            match scale_search(&ws, &field, ScaleObjective::Smaller) {
                Ok(r) => {
                    let mut rec = ExperimentRecord::new(kind, Algorithm::ScaledImportanceWeighted, n, m, trial, r.pair);
                    rec.alpha_star = Some(r.alpha);
                    rec
                }
                Err(CoresetError::ScaleSearchFailed) => {
                    ExperimentRecord::failed(kind, Algorithm::ScaledImportanceWeighted, n, m, trial, Status::ScaleSearchFailed)
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            ExperimentRecord::new(kind, Algorithm::ImportanceWeighted, n, m, trial, ws.kl_pair(&field, 1.0)?)
        };
        out.push(ExperimentRecord {
            runtime_ms: shared + millis(t),
            ..rec
        });
    }
    Ok(out)
}

/// Subsample-optimize coresets with uniform probabilities, one row per
/// `(N, trial, schedule)`.
pub fn run_subsample_optimize(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, LabError> {
    let rows: Vec<Vec<ExperimentRecord>> = tasks(config)
        .par_iter()
        .map(|&(n, trial)| subsample_task(config, n, trial))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Subsample-optimize weights of one `(model, N, trial, schedule)`.
pub fn trial_subsample_weights(
    config: &ExperimentConfig,
    model: &Model,
    posterior_ws: &Workspace,
    trial: usize,
    schedule: Schedule,
) -> Result<coreset_core::coresets::SubsampleOptimized, CoresetError> {
    let n = model.len();
    let probs = SamplingProbabilities::uniform(n)?;
    let mut rng = stream(
        config.seed,
        &[TAG_SUBSAMPLE, model_tag(config.model), n as u64, trial as u64, schedule_tag(schedule)],
    );
    subsample_optimize_with(model, posterior_ws.posterior(), &probs, schedule.size(n), config.sample_count, &mut rng)
}

fn subsample_task(config: &ExperimentConfig, n: usize, trial: usize) -> Result<Vec<ExperimentRecord>, LabError> {
    let kind = config.model;
    let model = trial_model(config.seed, kind, n, trial)?;
    let target = Reduced(&model);
    let opts = AdaptiveOptions::default();
    let mut out = Vec::new();
    let start = Instant::now();
    let base = Workspace::covering(&target, &[], &opts)?;
    let shared = millis(start) / config.m_schedules.len() as f64;
    for &schedule in &config.m_schedules {
        let t = Instant::now();
        let m = schedule.size(n);
        let rec = match trial_subsample_weights(config, &model, &base, trial, schedule) {
            Ok(so) => {
                let ws = Workspace::covering(&target, &[&so.weights], &opts)?;
                let kl = ws.kl_pair(&ws.field(&target, &so.weights)?, 1.0)?;
                let mut rec = ExperimentRecord::new(kind, Algorithm::SubsampleOptimize, n, m, trial, kl);
                rec.nnls_objective = Some(so.solution.objective);
                rec
            }
            Err(CoresetError::SolverNonConvergence { .. }) => {
                ExperimentRecord::failed(kind, Algorithm::SubsampleOptimize, n, m, trial, Status::Error)
            }
            Err(e) => return Err(e.into()),
        };
        out.push(ExperimentRecord {
            runtime_ms: shared + millis(t),
            ..rec
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Bound sandwich suite.

/// One row of the sandwich suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub config: usize,
    pub model: ModelKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub best_radius: Option<f64>,
    pub kl_forward: f64,
    pub kl_reverse: f64,
    pub lower: f64,
    pub upper_lambda: f64,
    pub argmin_lambda: f64,
    pub beta_hat: Option<f64>,
    pub upper_subexp: Option<f64>,
    /// Semicolon-separated violation kinds, empty when none.
    pub violations: String,
}

/// One full-covariance subexponential check at small N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubexpRow {
    pub model: ModelKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub pattern: usize,
    pub epsilon: f64,
    pub beta_hat: f64,
    pub quadratic_form: f64,
    pub upper_subexp: Option<f64>,
    pub kl_forward: f64,
    pub kl_reverse: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsOutcome {
    pub rows: Vec<BoundsRow>,
    pub subexp: Vec<SubexpRow>,
}

impl BoundsOutcome {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.violations.is_empty()).count()
            + self.subexp.iter().filter(|r| r.violation).count()
    }
}

fn kind_name(k: ViolationKind) -> &'static str {
    match k {
        ViolationKind::Lower => "lower",
        ViolationKind::Upper => "upper",
        ViolationKind::Subexp => "subexp",
    }
}

/// Replaces the lower bound by a value guaranteed to exceed the smaller KL.
pub fn corrupt_lower(report: &mut BoundReport) {
    report.lower = report.kl().min() * (1.0 + 1e-3) + report.lower + 1e-3;
}

/// Sandwich check of one configuration of the suite.
pub fn bounds_configuration(seed: u64, config: usize, self_test: bool) -> Result<BoundsRow, LabError> {
    let kind = if config.is_multiple_of(2) { ModelKind::Cauchy } else { ModelKind::Logreg };
    let m = BOUNDS_SIZES[(config / 2) % BOUNDS_SIZES.len()];
    let mut rng = stream(seed, &[TAG_BOUNDS, config as u64]);
    let model = generate_model(kind, BOUNDS_N, &mut rng)?;
    let probs = importance_probabilities(&model, ProbabilityMode::XSquaredThresholded)?;
    let w = importance_weighted(&probs, m, &mut rng)?;
    let target = Reduced(&model);
    let ws = Workspace::covering(&target, &[&w], &AdaptiveOptions::default())?;
    let field = ws.field(&target, &w)?;
    let mut report = evaluate_bounds(&model, &ws, &field, &BALL_RADII)?;
    let beta = fit_beta(&model, BETA_DIRECTIONS, &mut rng)?.beta;
    let q = 4.0 * beta * perturbation_quadratic_form(&ws, &field);
    report.beta_hat = Some(beta);
    report.upper_subexp = (q <= 1.0).then_some(q);
    if self_test {
        corrupt_lower(&mut report);
    }
    let violations: Vec<&str> = check_sandwich(&report, SANDWICH_TOLERANCE)
        .iter()
        .map(|v| kind_name(v.kind))
        .collect();
    Ok(BoundsRow {
        config,
        model: kind,
        n: BOUNDS_N,
        m,
        seed,
        best_radius: report.best_radius,
        kl_forward: report.kl_forward,
        kl_reverse: report.kl_reverse,
        lower: report.lower,
        upper_lambda: report.upper_lambda,
        argmin_lambda: report.argmin_lambda,
        beta_hat: report.beta_hat,
        upper_subexp: report.upper_subexp,
        violations: violations.join(";"),
    })
}

/// Radius exponents `j` of the perturbations checked against the
/// subexponential bound; each gives `‖2ε δ‖_A = 2^{j/2}`.
pub const SUBEXP_RADIUS_EXPONENTS: [i32; 4] = [-14, -10, -6, -3];

/// Full-covariance subexponential checks for perturbations `w = 1 + ε δ`.
pub fn subexp_checks(seed: u64, kind: ModelKind) -> Result<Vec<SubexpRow>, LabError> {
    let n = THEOREM3_N;
    let mut rng = stream(seed, &[TAG_THEOREM3, model_tag(kind)]);
    let model = generate_model(kind, n, &mut rng)?;
    let target = Reduced(&model);
    let ws = Workspace::covering(&target, &[], &AdaptiveOptions::default())?;
    let a = full_covariance(&target, &ws)?;
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for pattern in 0..2 {
        let delta: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let neg: Vec<f64> = delta.iter().map(|d| -d).collect();
        let fit = fit_beta_on(&target, &ws, &all, BETA_DIRECTIONS, &[delta.clone(), neg], &mut rng)?;
        let norm = a.quadratic_form(&delta).sqrt();
        for j in SUBEXP_RADIUS_EXPONENTS {
            let epsilon = f64::powf(2.0, j as f64 / 2.0) / (2.0 * norm);
            let dense: Vec<f64> = delta.iter().map(|d| 1.0 + epsilon * d).collect();
            let w = CoresetWeights::from_dense(&dense)?;
            let bound = subexp_kl_bound(&w, &a, &all, fit.beta)?;
            let kl = ws.kl_pair(&ws.field(&target, &w)?, 1.0)?;
            let violation = bound.is_some_and(|b| {
                let report = BoundReport {
                    kl_forward: kl.forward,
                    kl_reverse: kl.reverse,
                    lower: 0.0,
                    best_radius: None,
                    upper_lambda: f64::INFINITY,
                    argmin_lambda: f64::NAN,
                    upper_subexp: Some(b),
                    beta_hat: Some(fit.beta),
                };
                !check_sandwich(&report, SANDWICH_TOLERANCE).is_empty()
            });
            out.push(SubexpRow {
                model: kind,
                n,
                pattern,
                epsilon,
                beta_hat: fit.beta,
                quadratic_form: 4.0 * fit.beta * a.quadratic_form(&delta) * epsilon * epsilon,
                upper_subexp: bound,
                kl_forward: kl.forward,
                kl_reverse: kl.reverse,
                violation,
            });
        }
    }
    Ok(out)
}

pub fn run_bounds_suite(config: &ExperimentConfig) -> Result<BoundsOutcome, LabError> {
    let rows = (0..BOUNDS_CONFIGURATIONS.min(config.trials))
        .into_par_iter()
        .map(|i| bounds_configuration(config.seed, i, config.self_test))
        .collect::<Result<Vec<_>, _>>()?;
    let subexp = [ModelKind::Cauchy, ModelKind::Logreg]
        .par_iter()
        .map(|&k| subexp_checks(config.seed, k))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(BoundsOutcome { rows, subexp })
}

// ---------------------------------------------------------------------------
// Gradient diagnostic.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticWeights {
    Importance,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub model: ModelKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub trial: usize,
    pub weights: DiagnosticWeights,
    pub grad_norm: f64,
    /// `√M · ‖g_w/s̄_w‖` for coresets, `√N · ‖g/N‖` for full data.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub model: ModelKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub median_scaled: f64,
    pub median_full: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOutcome {
    pub rows: Vec<DiagnosticRow>,
    pub summary: Vec<DiagnosticSummary>,
    /// Largest over smallest median of the scaled coreset statistic.
    pub median_ratio: f64,
    /// Trials whose full-data statistic at the largest N is below that at
    /// the smallest N.
    pub full_decreases: usize,
}

pub fn run_diagnostics(config: &ExperimentConfig) -> Result<DiagnosticsOutcome, LabError> {
    let kind = config.model;
    let m = DIAGNOSTICS_M;
    let rows: Vec<[DiagnosticRow; 2]> = tasks(config)
        .par_iter()
        .map(|&(n, trial)| -> Result<[DiagnosticRow; 2], LabError> {
            let mut rng = stream(config.seed, &[TAG_DIAGNOSTICS, model_tag(kind), n as u64, trial as u64]);
            let model = generate_model(kind, n, &mut rng)?;
            let probs = importance_probabilities(&model, ProbabilityMode::XSquaredThresholded)?;
            let w = importance_weighted(&probs, m, &mut rng)?;
            let g = grad_diagnostic(&model, &w)?;
            let full = grad_diagnostic(&model, &CoresetWeights::ones(n))?;
            let row = |weights, grad_norm: f64, scale: usize| DiagnosticRow {
                model: kind,
                n,
                m,
                trial,
                weights,
                grad_norm,
                scaled: (scale as f64).sqrt() * grad_norm,
            };
            Ok([row(DiagnosticWeights::Importance, g, m), row(DiagnosticWeights::Full, full, n)])
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<DiagnosticRow> = rows.into_iter().flatten().collect();
    let mut summary = Vec::new();
    for &n in &config.n_grid {
        let pick = |k: DiagnosticWeights, f: fn(&DiagnosticRow) -> f64| -> Vec<f64> {
            rows.iter().filter(|r| r.n == n && r.weights == k).map(f).collect()
        };
        summary.push(DiagnosticSummary {
            model: kind,
            n,
            m,
            median_scaled: median(&pick(DiagnosticWeights::Importance, |r| r.scaled))?,
            median_full: median(&pick(DiagnosticWeights::Full, |r| r.grad_norm))?,
        });
    }
    let meds: Vec<f64> = summary.iter().map(|s| s.median_scaled).collect();
    let median_ratio = meds.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / meds.iter().cloned().fold(f64::INFINITY, f64::min);
    let (lo, hi) = (config.n_grid[0], *config.n_grid.last().unwrap_or(&config.n_grid[0]));
    let full_at = |n: usize| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.n == n && r.weights == DiagnosticWeights::Full)
            .map(|r| r.grad_norm)
            .collect()
    };
    let full_decreases = full_at(lo).iter().zip(full_at(hi)).filter(|(a, b)| b < *a).count();
    Ok(DiagnosticsOutcome {
        rows,
        summary,
        median_ratio,
        full_decreases,
    })
}

// ---------------------------------------------------------------------------
// Quadrature refinement gate.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub model: ModelKind,
    pub algorithm: Algorithm,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub trial: usize,
    pub nodes: usize,
    pub kl_forward: f64,
    pub kl_forward_refined: f64,
    pub relative_change: f64,
}

/// Relative change of KL(π‖π_w) when every grid cell is halved.
pub fn refinement_check<M: PotentialModel + ?Sized>(model: &M, w: &CoresetWeights) -> Result<(usize, KlPair, KlPair), LabError> {
    let target = Reduced(model);
    let ws = Workspace::covering(&target, &[w], &AdaptiveOptions::default())?;
    let fine = ws.refined(&target)?;
    let a = ws.kl_pair(&ws.field(&target, w)?, 1.0)?;
    let b = fine.kl_pair(&fine.field(&target, w)?, 1.0)?;
    Ok((ws.grid().len(), a, b))
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Spot checks drawn from the configurations of an experiment: `count`
/// random `(N, trial, schedule)` cells, weights rebuilt exactly as the runner
/// builds them.
pub fn refinement_spot_checks(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    count: usize,
) -> Result<Vec<RefinementCheck>, LabError> {
    let mut rng: StreamRng = stream(config.seed, &[TAG_REFINEMENT, model_tag(config.model), schedule_tag(config.m_schedules[0])]);
    let picks: Vec<(usize, usize, Schedule)> = (0..count)
        .map(|_| {
            let n = config.n_grid[rng.random_range(0..config.n_grid.len())];
            let t = rng.random_range(0..config.trials);
            let s = config.m_schedules[rng.random_range(0..config.m_schedules.len())];
            (n, t, s)
        })
        .collect();
    picks
        .par_iter()
        .map(|&(n, trial, schedule)| {
            let model = trial_model(config.seed, config.model, n, trial)?;
            let w = match algorithm {
                Algorithm::ImportanceWeighted => trial_importance_weights(config.seed, config.model, &model, trial, schedule)?,
                Algorithm::ScaledImportanceWeighted => {
                    let w = trial_importance_weights(config.seed, config.model, &model, trial, schedule)?;
                    let target = Reduced(&model);
                    let ws = coreset_core::coresets::scale_workspace(&target, &w)?;
                    let r = scale_search(&ws, &ws.field(&target, &w)?, ScaleObjective::Smaller)?;
                    w.scaled(r.alpha)?
                }
                Algorithm::SubsampleOptimize => {
                    let ws = Workspace::covering(&Reduced(&model), &[], &AdaptiveOptions::default())?;
                    trial_subsample_weights(config, &model, &ws, trial, schedule)?.weights
                }
            };
            let (nodes, a, b) = refinement_check(&model, &w)?;
            Ok(RefinementCheck {
                model: config.model,
                algorithm,
                n,
                m: schedule.size(n),
                trial,
                nodes,
                kl_forward: a.forward,
                kl_forward_refined: b.forward,
                relative_change: relative_change(a.forward, b.forward),
            })
        })
        .collect()
}
