//! Summary statistics for experiment tables.

use crate::error::{CoresetError, Result};
use crate::math;

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(CoresetError::InvalidArgument("fit needs equally long x and y"));
    }
    if x.len() < 2 {
        return Err(CoresetError::InvalidArgument("fit needs at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CoresetError::InvalidArgument("fit needs finite values"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(CoresetError::InvalidArgument("fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// Least-squares `c` in `y ≈ c·g`.
pub fn fit_scale(g: &[f64], y: &[f64]) -> Result<f64> {
    if g.len() != y.len() || g.is_empty() {
        return Err(CoresetError::InvalidArgument("scale fit needs equally long nonempty inputs"));
    }
    let gg: f64 = g.iter().map(|a| a * a).sum();
    if gg == 0.0 || !gg.is_finite() {
        return Err(CoresetError::InvalidArgument("scale fit needs a nonzero finite basis"));
    }
    Ok(g.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / gg)
}

/// Mean and standard error of the mean (zero error for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
    /// Sample standard deviation.
    pub sd: f64,
}

pub fn mean_se(xs: &[f64]) -> Result<MeanSe> {
    if xs.is_empty() {
        return Err(CoresetError::InvalidArgument("mean of an empty sample"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        math::sqrt(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    Ok(MeanSe { mean, se: sd / math::sqrt(n), count: xs.len(), sd })
}

/// Standard error of `mean(a) − mean(b)` from the pooled variance.
pub fn pooled_se(a: &MeanSe, b: &MeanSe) -> f64 {
    let (na, nb) = (a.count as f64, b.count as f64);
    if a.count + b.count <= 2 {
        return 0.0;
    }
    let pooled = ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / (na + nb - 2.0);
    math::sqrt(pooled * (1.0 / na + 1.0 / nb))
}

/// Median of a sample (mean of the middle pair for even counts).
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.iter().any(|x| x.is_nan()) {
        return Err(CoresetError::InvalidArgument("median needs a nonempty sample without NaN"));
    }
    let mut v = alloc::vec::Vec::from(xs);
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}
