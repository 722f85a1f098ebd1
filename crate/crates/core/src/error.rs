use thiserror::Error;

/// Errors produced by the coreset toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoresetError {
    #[error("dataset size must be at least 1")]
    EmptyDataset,
    #[error("observation {index} is not finite")]
    NonFiniteData { index: usize },
    #[error("covariate {index} lies outside the unit disk")]
    CovariateOutsideDisk { index: usize },
    #[error("covariates ({covariates}) and labels ({labels}) differ in length")]
    LengthMismatch { covariates: usize, labels: usize },
    #[error("index {index} out of range for {len} potentials")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),
    #[error("invalid sampling probabilities: {0}")]
    InvalidProbabilities(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("distributions are defined on different grids")]
    GridMismatch,
    #[error("every grid node has zero mass")]
    DegenerateDistribution,
    #[error("no finite log-density found while scanning")]
    NoFiniteDensity,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("nonnegative least squares did not converge after {iterations} iterations")]
    SolverNonConvergence { iterations: usize },
    #[error("weight sum is zero")]
    ZeroWeightSum,
    #[error("no subexponentiality constant up to {max_beta} certifies the sampled directions")]
    BetaNotCertified { max_beta: f64 },
    #[error("full covariance bound declined for N = {n} (limit {limit})")]
    CovarianceTooLarge { n: usize, limit: usize },
    #[error("KL objective is infinite for every scale in the search bracket")]
    ScaleSearchFailed,
}

pub type Result<T> = core::result::Result<T, CoresetError>;
