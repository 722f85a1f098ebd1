//! Per-N aggregation of experiment rows and the fitted scaling laws.

use coreset_core::stats::{fit_scale, linear_fit, mean_se, pooled_se, LinearFit};
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, Schedule};
use crate::record::{ExperimentRecord, Metric};

/// Mean and standard error of one `(schedule, N)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: ModelKind,
    pub schedule: Schedule,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub metric: String,
    pub trials: usize,
    pub usable: usize,
    pub failures: usize,
    pub mean: f64,
    pub se: f64,
    pub sd: f64,
}

/// How the abscissa of a fit is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// log mean against log N; the theory curve is `c·N/M`.
    LogLog,
    /// mean against ln(N/M); the theory curve is `c·ln(N/M)`.
    LinearLogRatio,
    /// mean against ln N; the theory curve is a constant.
    LinearLogN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: ModelKind,
    pub schedule: Schedule,
    pub kind: FitKind,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Least-squares constant of the theory curve.
    pub theory_constant: f64,
}

/// One cell per `(schedule, N)` in first-seen order.
pub fn summarize(
    model: ModelKind,
    records: &[ExperimentRecord],
    schedules: &[Schedule],
    n_grid: &[usize],
    metric: Metric,
) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for &schedule in schedules {
        for &n in n_grid {
            let m = schedule.size(n);
            let rows: Vec<&ExperimentRecord> = records.iter().filter(|r| r.n == n && r.m == m).collect();
            if rows.is_empty() {
                continue;
            }
            let values: Vec<f64> = rows.iter().filter(|r| r.usable(metric)).map(|r| metric.of(r)).collect();
            let (mean, se, sd) = match mean_se(&values) {
                Ok(s) => (s.mean, s.se, s.sd),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            out.push(CellSummary {
                model,
                schedule,
                n,
                m,
                metric: metric.name().to_string(),
                trials: rows.len(),
                usable: values.len(),
                failures: rows.len() - values.len(),
                mean,
                se,
                sd,
            });
        }
    }
    out
}

/// Cells of one schedule with a finite positive mean.
fn usable_cells(cells: &[CellSummary], schedule: Schedule) -> Vec<&CellSummary> {
    cells
        .iter()
        .filter(|c| c.schedule == schedule && c.mean.is_finite() && c.mean > 0.0)
        .collect()
}

pub fn fit(cells: &[CellSummary], schedule: Schedule, kind: FitKind) -> Option<FitRow> {
    let cs = usable_cells(cells, schedule);
    let model = cs.first()?.model;
    let ratio = |c: &CellSummary| c.n as f64 / c.m as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = match kind {
        FitKind::LogLog => cs.iter().map(|c| ((c.n as f64).ln(), c.mean.ln())).unzip(),
        FitKind::LinearLogRatio => cs.iter().map(|c| (ratio(c).ln(), c.mean)).unzip(),
        FitKind::LinearLogN => cs.iter().map(|c| ((c.n as f64).ln(), c.mean)).unzip(),
    };
    let LinearFit { slope, intercept, r_squared } = linear_fit(&x, &y).ok()?;
    let theory_constant = match kind {
        FitKind::LogLog => {
            let logs: Vec<f64> = cs.iter().map(|c| c.mean.ln() - ratio(c).ln()).collect();
            (logs.iter().sum::<f64>() / logs.len() as f64).exp()
        }
        FitKind::LinearLogRatio => {
            let g: Vec<f64> = cs.iter().map(|c| ratio(c).ln()).collect();
            fit_scale(&g, &y).unwrap_or(f64::NAN)
        }
        FitKind::LinearLogN => y.iter().sum::<f64>() / y.len() as f64,
    };
    Some(FitRow {
        model,
        schedule,
        kind,
        points: cs.len(),
        slope,
        intercept,
        r_squared,
        theory_constant,
    })
}

/// Theory curve value at a cell for a fitted constant.
pub fn theory_value(kind: FitKind, constant: f64, n: usize, m: usize) -> f64 {
    let ratio = n as f64 / m as f64;
    match kind {
        FitKind::LogLog => constant * ratio,
        FitKind::LinearLogRatio => constant * ratio.ln(),
        FitKind::LinearLogN => constant,
    }
}

/// Whether the mean at the largest N stays within twice the smallest-N mean
/// or within two pooled standard errors of it.
pub fn bounded_growth(cells: &[CellSummary], schedule: Schedule) -> Option<bool> {
    let cs = usable_cells(cells, schedule);
    let (first, last) = (cs.first()?, cs.last()?);
    let summary = |c: &CellSummary| coreset_core::stats::MeanSe {
        mean: c.mean,
        se: c.se,
        count: c.usable,
        sd: c.sd,
    };
    let pse = pooled_se(&summary(first), &summary(last));
    Some(last.mean <= (2.0 * first.mean).max(first.mean + 2.0 * pse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Algorithm;
    use coreset_core::quadrature::KlPair;

    fn rows(schedule: Schedule, f: impl Fn(usize) -> f64) -> Vec<ExperimentRecord> {
        [100usize, 1000, 10_000]
            .iter()
            .flat_map(|&n| {
                let v = f(n);
                (0..3).map(move |t| {
                    let kl = KlPair { forward: v * (1.0 + 0.01 * t as f64), reverse: 2.0 * v };
                    ExperimentRecord::new(ModelKind::Cauchy, Algorithm::ImportanceWeighted, n, schedule.size(n), t, kl)
                })
            })
            .collect()
    }

    #[test]
    fn recovers_power_law_slope() {
        let r = rows(Schedule::SqrtN, |n| 0.3 * (n as f64).sqrt());
        let cells = summarize(ModelKind::Cauchy, &r, &[Schedule::SqrtN], &[100, 1000, 10_000], Metric::KlMin);
        assert_eq!(cells.len(), 3);
        let f = fit(&cells, Schedule::SqrtN, FitKind::LogLog).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-9, "{f:?}");
        let c = 1.01 * (0.3f64 * 0.3 * (0.3 * 1000f64.sqrt() * 32.0 / 1000.0)).cbrt();
        assert!((f.theory_constant - c).abs() < 1e-9, "{f:?}");
    }

    #[test]
    fn failures_are_excluded() {
        let mut r = rows(Schedule::LogN, |_| 1.0);
        r[0].kl_forward = f64::INFINITY;
        r[0].kl_reverse = f64::INFINITY;
        r[0].kl_min = f64::INFINITY;
        let cells = summarize(ModelKind::Cauchy, &r, &[Schedule::LogN], &[100, 1000, 10_000], Metric::KlMin);
        assert_eq!((cells[0].usable, cells[0].failures), (2, 1));
        assert_eq!(bounded_growth(&cells, Schedule::LogN), Some(true));
    }
}
