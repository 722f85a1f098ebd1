//! Experiment rows and their CSV form.

use std::io::Write;
use std::path::Path;

use coreset_core::quadrature::KlPair;
use serde::{Deserialize, Serialize};

use crate::config::ModelKind;
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ImportanceWeighted,
    ScaledImportanceWeighted,
    SubsampleOptimize,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ImportanceWeighted => "importance_weighted",
            Algorithm::ScaledImportanceWeighted => "scaled_importance_weighted",
            Algorithm::SubsampleOptimize => "subsample_optimize",
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// One KL direction is infinite; the other is finite.
    OneSided,
    /// Both directions infinite.
    InfiniteKl,
    /// The scale search found no α with finite KL.
    ScaleSearchFailed,
    /// Any other construction error.
    Error,
}

/// One `(model, algorithm, N, M, trial)` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub model: ModelKind,
    pub algorithm: Algorithm,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub trial: usize,
    pub kl_forward: f64,
    pub kl_reverse: f64,
    pub kl_min: f64,
    pub kl_max: f64,
    pub alpha_star: Option<f64>,
    pub nnls_objective: Option<f64>,
    pub runtime_ms: f64,
    pub status: Status,
}

pub const CSV_HEADER: &str =
    "model,algorithm,N,M,trial,kl_forward,kl_reverse,kl_min,kl_max,alpha_star,nnls_objective,runtime_ms,status";

impl ExperimentRecord {
    pub fn new(model: ModelKind, algorithm: Algorithm, n: usize, m: usize, trial: usize, kl: KlPair) -> Self {
        let status = match (kl.forward.is_finite(), kl.reverse.is_finite()) {
            (true, true) => Status::Ok,
            (false, false) => Status::InfiniteKl,
            _ => Status::OneSided,
        };
        Self {
            model,
            algorithm,
            n,
            m,
            trial,
            kl_forward: kl.forward,
            kl_reverse: kl.reverse,
            kl_min: kl.min(),
            kl_max: kl.max(),
            alpha_star: None,
            nnls_objective: None,
            runtime_ms: 0.0,
            status,
        }
    }

    /// A row for a trial whose construction failed.
    pub fn failed(model: ModelKind, algorithm: Algorithm, n: usize, m: usize, trial: usize, status: Status) -> Self {
        let mut r = Self::new(
            model,
            algorithm,
            n,
            m,
            trial,
            KlPair {
                forward: f64::INFINITY,
                reverse: f64::INFINITY,
            },
        );
        r.status = status;
        r
    }

    /// Whether the KL divergences are usable for the plotted statistic.
    pub fn usable(&self, metric: Metric) -> bool {
        !matches!(self.status, Status::ScaleSearchFailed | Status::Error) && metric.of(self).is_finite()
    }
}

/// Which KL summary an experiment plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    KlMin,
    KlMax,
}

impl Metric {
    pub fn of(self, r: &ExperimentRecord) -> f64 {
        match self {
            Metric::KlMin => r.kl_min,
            Metric::KlMax => r.kl_max,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::KlMin => "kl_min",
            Metric::KlMax => "kl_max",
        }
    }
}

/// Writes rows of any serializable type with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), LabError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(path: &Path, rows: &[ExperimentRecord]) -> Result<(), LabError> {
    if rows.is_empty() {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{CSV_HEADER}")?;
        return Ok(());
    }
    write_csv(path, rows)
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, LabError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(LabError::from)).collect()
}
