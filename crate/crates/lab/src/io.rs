//! CSV forms of datasets, coreset weights and grid distributions.

use std::path::Path;

use coreset_core::models::{CauchyLocationModel, LogRegModel, Model};
use coreset_core::quadrature::GridDistribution;
use coreset_core::weights::CoresetWeights;
use serde::{Deserialize, Serialize};

use crate::record::write_csv;
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CauchyRow {
    x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct LogRegRow {
    x1: f64,
    x2: f64,
    y: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct WeightRow {
    index: usize,
    weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct NodeRow {
    x1: f64,
    x2: Option<f64>,
    log_mass: f64,
}

/// `x` column for the Cauchy model, `x1,x2,y` for logistic regression.
pub fn write_dataset(path: &Path, model: &Model) -> Result<(), LabError> {
    match model {
        Model::Cauchy(m) => write_csv(path, &m.data().iter().map(|&x| CauchyRow { x }).collect::<Vec<_>>()),
        Model::LogReg(m) => write_csv(
            path,
            &m.covariates()
                .iter()
                .zip(m.labels())
                .map(|(x, &y)| LogRegRow { x1: x[0], x2: x[1], y: y as u8 })
                .collect::<Vec<_>>(),
        ),
    }
}

pub fn read_cauchy_dataset(path: &Path, theta0: f64) -> Result<CauchyLocationModel, LabError> {
    let rows: Vec<CauchyRow> = csv::Reader::from_path(path)?.deserialize().collect::<Result<_, _>>()?;
    Ok(CauchyLocationModel::new(theta0, rows.into_iter().map(|r| r.x).collect())?)
}

pub fn read_logreg_dataset(path: &Path, theta0: [f64; 2]) -> Result<LogRegModel, LabError> {
    let rows: Vec<LogRegRow> = csv::Reader::from_path(path)?.deserialize().collect::<Result<_, _>>()?;
    if rows.iter().any(|r| r.y > 1) {
        return Err(LabError::Config(format!("{}: labels must be 0 or 1", path.display())));
    }
    Ok(LogRegModel::new(
        theta0,
        rows.iter().map(|r| [r.x1, r.x2]).collect(),
        rows.iter().map(|r| r.y == 1).collect(),
    )?)
}

/// `index,weight` for the nonzero entries.
pub fn write_weights(path: &Path, w: &CoresetWeights) -> Result<(), LabError> {
    write_csv(
        path,
        &w.entries()
            .iter()
            .map(|&(index, weight)| WeightRow { index, weight })
            .collect::<Vec<_>>(),
    )
}

pub fn read_weights(path: &Path, n_total: usize) -> Result<CoresetWeights, LabError> {
    let rows: Vec<WeightRow> = csv::Reader::from_path(path)?.deserialize().collect::<Result<_, _>>()?;
    Ok(CoresetWeights::from_entries(n_total, rows.into_iter().map(|r| (r.index, r.weight)))?)
}

/// Node coordinates and log masses.
pub fn write_distribution(path: &Path, dist: &GridDistribution) -> Result<(), LabError> {
    let grid = dist.grid();
    let mut p = [0.0; 2];
    let rows: Vec<NodeRow> = dist
        .log_masses()
        .iter()
        .enumerate()
        .map(|(k, &log_mass)| {
            grid.node(k, &mut p);
            NodeRow {
                x1: p[0],
                x2: (grid.dims() == 2).then_some(p[1]),
                log_mass,
            }
        })
        .collect();
    write_csv(path, &rows)
}
