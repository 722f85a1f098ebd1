//! The two validation models: a Cauchy location model whose likelihood only
//! sees θ², and a rank-one logistic regression whose likelihood only sees
//! θ₁ + θ₂. Both are exposed in the original θ coordinate and in a reduced
//! one-dimensional coordinate `z` that carries the same posterior
//! information (|θ| for the Cauchy model, θ₁ + θ₂ for the logistic model).
//! Density ratios between coreset posteriors depend on θ only through `z`,
//! so KL divergences computed in `z` equal those computed in θ.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{CoresetError, Result};
use crate::linalg::Matrix;
use crate::math::{self, PI};
use crate::target::{Side, Tail, Target};
use crate::weights::CoresetWeights;

/// Data-generating location θ₀ for the Cauchy model.
pub const CAUCHY_THETA0: f64 = 5.0;
/// Data-generating parameter θ₀ for the logistic model.
pub const LOGREG_THETA0: [f64; 2] = [1.0, 6.0];
/// Design matrix of the logistic model; every entry is one.
pub const LOGREG_DESIGN: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, 1.0]];

/// Hints above this support size are summarized by weighted quantiles.
const MAX_POINT_HINTS: usize = 64;

/// Interface shared by the two models.
pub trait PotentialModel {
    /// Dimension of θ.
    fn dim(&self) -> usize;
    /// Number of observations N.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Normalized log prior density at θ.
    fn log_prior(&self, theta: &[f64]) -> f64;
    /// ℓ_n(θ) with `n < len()` assumed.
    fn theta_potential(&self, n: usize, theta: &[f64]) -> f64;
    /// Pushforward coordinate η(θ) through which every ℓ_n acts.
    fn eta(&self, theta: &[f64]) -> f64;
    /// η at the data-generating parameter.
    fn eta0(&self) -> f64;
    /// dℓ_n/dη with `n < len()` assumed.
    fn grad_eta(&self, n: usize, eta: f64) -> f64;
    /// Unnormalized importance score (squared covariate norm).
    fn importance_score(&self, n: usize) -> f64;

    fn reduced_domain(&self) -> (f64, f64);
    fn reduced_log_prior(&self, z: f64) -> f64;
    fn reduced_potential(&self, n: usize, z: f64) -> f64;
    fn reduced_prior_tail(&self, side: Side) -> Option<Tail>;
    fn reduced_potential_tail(&self, n: usize, side: Side) -> Option<Tail>;
    fn reduced_mode_hints(&self, weights: &CoresetWeights) -> Vec<f64>;
    /// Maps a reduced coordinate to one representative θ (flattened).
    fn theta_hint_from_reduced(&self, z: f64, out: &mut Vec<f64>);
    /// Reduced coordinate of θ.
    fn reduced_from_theta(&self, theta: &[f64]) -> f64;
    /// The θ of largest prior density among those with reduced coordinate `z`.
    fn theta_from_reduced(&self, z: f64) -> Vec<f64>;
    /// Log densities (per unit of the reduced coordinate) of the prior mass at
    /// `z` lying inside and outside the ellipsoid `(θ−c)ᵀH(θ−c) ≤ r²`.
    fn reduced_prior_split(&self, z: f64, center: &[f64], h: &Matrix, radius: f64) -> [f64; 2];
}

fn check_index<M: PotentialModel + ?Sized>(model: &M, n: usize) -> Result<()> {
    if n >= model.len() {
        Err(CoresetError::IndexOutOfRange {
            index: n,
            len: model.len(),
        })
    } else {
        Ok(())
    }
}

/// Normalized log prior density.
pub fn log_prior<M: PotentialModel + ?Sized>(model: &M, theta: &[f64]) -> f64 {
    model.log_prior(theta)
}

/// ℓ_n(θ) = log p(X_n | θ), with a zero-based index.
pub fn potential<M: PotentialModel + ?Sized>(model: &M, n: usize, theta: &[f64]) -> Result<f64> {
    check_index(model, n)?;
    Ok(model.theta_potential(n, theta))
}

/// dℓ_n/dη in the pushforward coordinate.
pub fn potential_grad_eta<M: PotentialModel + ?Sized>(model: &M, n: usize, eta: f64) -> Result<f64> {
    check_index(model, n)?;
    Ok(model.grad_eta(n, eta))
}

/// Inverse-CDF draw of a standard Cauchy variate.
#[inline]
pub fn standard_cauchy_from_uniform(u: f64) -> f64 {
    math::tan(PI * (u - 0.5))
}

/// Weighted quantiles of `(value, weight)` pairs.
fn weighted_quantiles(mut pairs: Vec<(f64, f64)>, probs: &[f64]) -> Vec<f64> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut out = Vec::with_capacity(probs.len());
    for &q in probs {
        let target = q * total;
        let mut acc = 0.0;
        let mut v = pairs.last().map(|p| p.0).unwrap_or(0.0);
        for &(x, w) in &pairs {
            acc += w;
            if acc >= target {
                v = x;
                break;
            }
        }
        out.push(v);
    }
    out
}

const HINT_QUANTILES: [f64; 7] = [0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98];

/// θ ~ Cauchy(0, 1), X_n | θ ~ Cauchy(θ², 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyLocationModel {
    theta0: f64,
    data: Vec<f64>,
}

impl CauchyLocationModel {
    pub fn new(theta0: f64, data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(CoresetError::EmptyDataset);
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(CoresetError::NonFiniteData { index });
        }
        Ok(Self { theta0, data })
    }

    /// Draws `n` observations X_n = θ₀² + standard Cauchy noise.
    pub fn generate<R: Rng + ?Sized>(n: usize, theta0: f64, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(CoresetError::EmptyDataset);
        }
        let loc = theta0 * theta0;
        let data = (0..n)
            .map(|_| loc + standard_cauchy_from_uniform(rng.random::<f64>()))
            .collect();
        Self::new(theta0, data)
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn potential_at_eta(&self, n: usize, eta: f64) -> f64 {
        let r = self.data[n] - eta;
        -math::ln(PI) - math::ln(r * r + 1.0)
    }
}

impl PotentialModel for CauchyLocationModel {
    fn dim(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let t = theta[0];
        -math::ln(PI) - math::ln_1p(t * t)
    }

    fn theta_potential(&self, n: usize, theta: &[f64]) -> f64 {
        self.potential_at_eta(n, theta[0] * theta[0])
    }

    fn eta(&self, theta: &[f64]) -> f64 {
        theta[0] * theta[0]
    }

    fn eta0(&self) -> f64 {
        self.theta0 * self.theta0
    }

    fn grad_eta(&self, n: usize, eta: f64) -> f64 {
        let r = self.data[n] - eta;
        2.0 * r / (r * r + 1.0)
    }

    fn importance_score(&self, n: usize) -> f64 {
        self.data[n] * self.data[n]
    }

    fn reduced_domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    /// Density of |θ|: twice the Cauchy density on the half line.
    fn reduced_log_prior(&self, z: f64) -> f64 {
        math::ln(2.0 / PI) - math::ln_1p(z * z)
    }

    #[inline]
    fn reduced_potential(&self, n: usize, z: f64) -> f64 {
        self.potential_at_eta(n, z * z)
    }

    fn reduced_prior_tail(&self, side: Side) -> Option<Tail> {
        match side {
            Side::Lower => None,
            Side::Upper => Some(Tail::logarithmic(-2.0)),
        }
    }

    fn reduced_potential_tail(&self, _n: usize, side: Side) -> Option<Tail> {
        match side {
            Side::Lower => None,
            Side::Upper => Some(Tail::logarithmic(-4.0)),
        }
    }

    fn reduced_mode_hints(&self, weights: &CoresetWeights) -> Vec<f64> {
        let mut hints = alloc::vec![0.0];
        let locs: Vec<f64> = if weights.support_len() <= MAX_POINT_HINTS {
            weights.indices().map(|n| self.data[n]).collect()
        } else {
            let pairs = weights
                .entries()
                .iter()
                .map(|&(n, w)| (self.data[n], w))
                .collect();
            weighted_quantiles(pairs, &HINT_QUANTILES)
        };
        hints.extend(locs.into_iter().filter(|&x| x > 0.0).map(math::sqrt));
        hints
    }

    fn theta_hint_from_reduced(&self, z: f64, out: &mut Vec<f64>) {
        out.push(z);
        if z != 0.0 {
            out.push(-z);
        }
    }

    fn reduced_from_theta(&self, theta: &[f64]) -> f64 {
        theta[0].abs()
    }

    fn theta_from_reduced(&self, z: f64) -> Vec<f64> {
        alloc::vec![z]
    }

    /// The interval `|θ − c| ≤ r/√h` contains zero, one or both of ±z.
    fn reduced_prior_split(&self, z: f64, center: &[f64], h: &Matrix, radius: f64) -> [f64; 2] {
        let half_width = radius / math::sqrt(h[(0, 0)]);
        let c = center[0];
        let inside = ((z - c).abs() <= half_width) as u8 + ((-z - c).abs() <= half_width) as u8;
        let density = -math::ln(PI) - math::ln_1p(z * z);
        let log_count = |k: u8| if k == 0 { f64::NEG_INFINITY } else { math::ln(k as f64) };
        [density + log_count(inside), density + log_count(2 - inside)]
    }
}

/// θ ~ Cauchy(0, I) (isotropic bivariate), Y_n ~ Bern(σ(X_nᵀAθ)), A all-ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    theta0: [f64; 2],
    covariates: Vec<[f64; 2]>,
    labels: Vec<bool>,
    /// c_n = X_n·(1, 1), so X_nᵀAθ = c_n (θ₁ + θ₂).
    projections: Vec<f64>,
}

impl LogRegModel {
    pub fn new(theta0: [f64; 2], covariates: Vec<[f64; 2]>, labels: Vec<bool>) -> Result<Self> {
        if covariates.len() != labels.len() {
            return Err(CoresetError::LengthMismatch {
                covariates: covariates.len(),
                labels: labels.len(),
            });
        }
        if covariates.is_empty() {
            return Err(CoresetError::EmptyDataset);
        }
        for (index, x) in covariates.iter().enumerate() {
            if !x[0].is_finite() || !x[1].is_finite() {
                return Err(CoresetError::NonFiniteData { index });
            }
            // One ulp of slack for points generated exactly on the circle.
            if x[0] * x[0] + x[1] * x[1] > 1.0 + 4.0 * f64::EPSILON {
                return Err(CoresetError::CovariateOutsideDisk { index });
            }
        }
        let projections = covariates.iter().map(|x| x[0] + x[1]).collect();
        Ok(Self {
            theta0,
            covariates,
            labels,
            projections,
        })
    }

    /// Covariates uniform on the unit disk (radius √U, uniform angle), labels
    /// Bernoulli with success probability σ(X_nᵀAθ₀).
    pub fn generate<R: Rng + ?Sized>(n: usize, theta0: [f64; 2], rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(CoresetError::EmptyDataset);
        }
        let eta0 = theta0[0] + theta0[1];
        let mut covariates = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let r = math::sqrt(rng.random::<f64>());
            let phi = 2.0 * PI * rng.random::<f64>();
            let x = [r * math::cos(phi), r * math::sin(phi)];
            let p = math::sigmoid((x[0] + x[1]) * eta0);
            labels.push(rng.random::<f64>() < p);
            covariates.push(x);
        }
        Self::new(theta0, covariates, labels)
    }

    pub fn theta0(&self) -> [f64; 2] {
        self.theta0
    }

    pub fn covariates(&self) -> &[[f64; 2]] {
        &self.covariates
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Success probability σ(X_nᵀAθ).
    pub fn label_probability(&self, n: usize, theta: &[f64]) -> f64 {
        math::sigmoid(self.projections[n] * (theta[0] + theta[1]))
    }

    #[inline]
    fn potential_at_eta(&self, n: usize, eta: f64) -> f64 {
        let s = self.projections[n] * eta;
        if self.labels[n] {
            -math::softplus(-s)
        } else {
            -math::softplus(s)
        }
    }

    /// Weighted maximum-likelihood η via damped Newton; may run off to large
    /// |η| for separable subsets, which still makes a useful hint.
    fn weighted_mle(&self, weights: &CoresetWeights) -> f64 {
        let mut eta = 0.0;
        for _ in 0..200 {
            let mut g = 0.0;
            let mut h = 0.0;
            for &(n, w) in weights.entries() {
                let c = self.projections[n];
                let p = math::sigmoid(c * eta);
                let y = if self.labels[n] { 1.0 } else { 0.0 };
                g += w * (y - p) * c;
                h += w * c * c * p * (1.0 - p);
            }
            if h <= 0.0 || !g.is_finite() {
                break;
            }
            let step = (g / h).clamp(-10.0, 10.0);
            eta += step;
            if step.abs() < 1e-12 * (1.0 + eta.abs()) || eta.abs() > 1e6 {
                break;
            }
        }
        eta
    }
}

impl PotentialModel for LogRegModel {
    fn dim(&self) -> usize {
        2
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let r2 = theta[0] * theta[0] + theta[1] * theta[1];
        -math::ln(2.0 * PI) - 1.5 * math::ln_1p(r2)
    }

    fn theta_potential(&self, n: usize, theta: &[f64]) -> f64 {
        self.potential_at_eta(n, theta[0] + theta[1])
    }

    fn eta(&self, theta: &[f64]) -> f64 {
        theta[0] + theta[1]
    }

    fn eta0(&self) -> f64 {
        self.theta0[0] + self.theta0[1]
    }

    fn grad_eta(&self, n: usize, eta: f64) -> f64 {
        let c = self.projections[n];
        let y = if self.labels[n] { 1.0 } else { 0.0 };
        (y - math::sigmoid(c * eta)) * c
    }

    fn importance_score(&self, n: usize) -> f64 {
        let x = self.covariates[n];
        x[0] * x[0] + x[1] * x[1]
    }

    fn reduced_domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// θ₁ + θ₂ under the isotropic bivariate Cauchy prior is Cauchy(0, √2).
    fn reduced_log_prior(&self, z: f64) -> f64 {
        -math::ln(PI * core::f64::consts::SQRT_2) - math::ln_1p(0.5 * z * z)
    }

    #[inline]
    fn reduced_potential(&self, n: usize, z: f64) -> f64 {
        self.potential_at_eta(n, z)
    }

    fn reduced_prior_tail(&self, _side: Side) -> Option<Tail> {
        Some(Tail::logarithmic(-2.0))
    }

    /// ℓ_n decays linearly on the side where the label is misclassified and
    /// tends to a constant on the other.
    fn reduced_potential_tail(&self, n: usize, side: Side) -> Option<Tail> {
        let c = self.projections[n];
        let y = self.labels[n];
        let misclassified = match side {
            Side::Upper => (c > 0.0 && !y) || (c < 0.0 && y),
            Side::Lower => (c < 0.0 && !y) || (c > 0.0 && y),
        };
        Some(if misclassified {
            Tail::linear(-c.abs())
        } else {
            Tail::ZERO
        })
    }

    fn reduced_mode_hints(&self, weights: &CoresetWeights) -> Vec<f64> {
        let mut hints = alloc::vec![0.0];
        if !weights.is_empty() {
            hints.push(self.weighted_mle(weights));
        }
        hints
    }

    fn theta_hint_from_reduced(&self, z: f64, out: &mut Vec<f64>) {
        out.push(0.5 * z);
        out.push(0.5 * z);
    }

    fn reduced_from_theta(&self, theta: &[f64]) -> f64 {
        theta[0] + theta[1]
    }

    fn theta_from_reduced(&self, z: f64) -> Vec<f64> {
        alloc::vec![0.5 * z, 0.5 * z]
    }

    /// Along the line θ₁ + θ₂ = z, write θ = (z + t, z − t)/2. The ellipsoid
    /// cuts a chord `t ∈ [t₁, t₂]`, and the prior mass on any range of `t`
    /// integrates in closed form.
    fn reduced_prior_split(&self, z: f64, center: &[f64], h: &Matrix, radius: f64) -> [f64; 2] {
        let a2 = 1.0 + 0.5 * z * z;
        let scale = core::f64::consts::SQRT_2 / (4.0 * PI * a2);
        // 1 − s/√(a² + s²) without cancellation.
        let upper = |s: f64| {
            let root = math::sqrt(a2 + s * s);
            if s <= 0.0 {
                1.0 - s / root
            } else {
                a2 / (root * (root + s))
            }
        };
        let p = [0.5 * z - center[0], 0.5 * z - center[1]];
        let q = [0.5, -0.5];
        let quad = |u: &[f64; 2], v: &[f64; 2]| {
            u[0] * (h[(0, 0)] * v[0] + h[(0, 1)] * v[1]) + u[1] * (h[(1, 0)] * v[0] + h[(1, 1)] * v[1])
        };
        let qa = quad(&q, &q);
        let qb = 2.0 * quad(&p, &q);
        let qc = quad(&p, &p) - radius * radius;
        let disc = qb * qb - 4.0 * qa * qc;
        let full = math::ln(2.0 * scale);
        if !(disc > 0.0) {
            return [f64::NEG_INFINITY, full];
        }
        let root = math::sqrt(disc);
        let s1 = (-qb - root) / (2.0 * qa) / core::f64::consts::SQRT_2;
        let s2 = (-qb + root) / (2.0 * qa) / core::f64::consts::SQRT_2;
        let inside = if s1 >= 0.0 {
            upper(s1) - upper(s2)
        } else if s2 <= 0.0 {
            upper(-s2) - upper(-s1)
        } else {
            2.0 - upper(s2) - upper(-s1)
        };
        let outside = upper(s2) + upper(-s1);
        [math::ln(scale * inside), math::ln(scale * outside)]
    }
}

/// Either validation model, for callers choosing at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Cauchy(CauchyLocationModel),
    LogReg(LogRegModel),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Cauchy($m) => $e,
            Model::LogReg($m) => $e,
        }
    };
}

impl PotentialModel for Model {
    fn dim(&self) -> usize {
        delegate!(self, m => m.dim())
    }
    fn len(&self) -> usize {
        delegate!(self, m => m.len())
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        delegate!(self, m => m.log_prior(theta))
    }
    #[inline]
    fn theta_potential(&self, n: usize, theta: &[f64]) -> f64 {
        delegate!(self, m => m.theta_potential(n, theta))
    }
    fn eta(&self, theta: &[f64]) -> f64 {
        delegate!(self, m => m.eta(theta))
    }
    fn eta0(&self) -> f64 {
        delegate!(self, m => m.eta0())
    }
    fn grad_eta(&self, n: usize, eta: f64) -> f64 {
        delegate!(self, m => m.grad_eta(n, eta))
    }
    fn importance_score(&self, n: usize) -> f64 {
        delegate!(self, m => m.importance_score(n))
    }
    fn reduced_domain(&self) -> (f64, f64) {
        delegate!(self, m => m.reduced_domain())
    }
    fn reduced_log_prior(&self, z: f64) -> f64 {
        delegate!(self, m => m.reduced_log_prior(z))
    }
    #[inline]
    fn reduced_potential(&self, n: usize, z: f64) -> f64 {
        delegate!(self, m => m.reduced_potential(n, z))
    }
    fn reduced_prior_tail(&self, side: Side) -> Option<Tail> {
        delegate!(self, m => m.reduced_prior_tail(side))
    }
    fn reduced_potential_tail(&self, n: usize, side: Side) -> Option<Tail> {
        delegate!(self, m => m.reduced_potential_tail(n, side))
    }
    fn reduced_mode_hints(&self, weights: &CoresetWeights) -> Vec<f64> {
        delegate!(self, m => m.reduced_mode_hints(weights))
    }
    fn theta_hint_from_reduced(&self, z: f64, out: &mut Vec<f64>) {
        delegate!(self, m => m.theta_hint_from_reduced(z, out))
    }
    fn reduced_from_theta(&self, theta: &[f64]) -> f64 {
        delegate!(self, m => m.reduced_from_theta(theta))
    }
    fn theta_from_reduced(&self, z: f64) -> Vec<f64> {
        delegate!(self, m => m.theta_from_reduced(z))
    }
    fn reduced_prior_split(&self, z: f64, center: &[f64], h: &Matrix, radius: f64) -> [f64; 2] {
        delegate!(self, m => m.reduced_prior_split(z, center, h, radius))
    }
}

/// A model viewed in its original θ coordinate.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSpace<'a, M: ?Sized>(pub &'a M);

/// A model viewed in its reduced one-dimensional coordinate.
#[derive(Debug, Clone, Copy)]
pub struct Reduced<'a, M: ?Sized>(pub &'a M);

impl<M: PotentialModel + ?Sized> Target for ThetaSpace<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn len(&self) -> usize {
        self.0.len()
    }
    fn log_prior(&self, x: &[f64]) -> f64 {
        self.0.log_prior(x)
    }
    #[inline]
    fn potential(&self, n: usize, x: &[f64]) -> f64 {
        self.0.theta_potential(n, x)
    }
    fn mode_hints(&self, weights: &CoresetWeights) -> Vec<f64> {
        let mut out = Vec::new();
        for z in self.0.reduced_mode_hints(weights) {
            self.0.theta_hint_from_reduced(z, &mut out);
        }
        out
    }
}

impl<M: PotentialModel + ?Sized> Target for Reduced<'_, M> {
    fn dim(&self) -> usize {
        1
    }
    fn len(&self) -> usize {
        self.0.len()
    }
    fn log_prior(&self, x: &[f64]) -> f64 {
        self.0.reduced_log_prior(x[0])
    }
    #[inline]
    fn potential(&self, n: usize, x: &[f64]) -> f64 {
        self.0.reduced_potential(n, x[0])
    }
    fn weighted_potential(&self, weights: &CoresetWeights, x: &[f64]) -> f64 {
        let z = x[0];
        weights
            .entries()
            .iter()
            .map(|&(n, w)| w * self.0.reduced_potential(n, z))
            .sum()
    }
    fn domain(&self, _axis: usize) -> (f64, f64) {
        self.0.reduced_domain()
    }
    fn mode_hints(&self, weights: &CoresetWeights) -> Vec<f64> {
        self.0.reduced_mode_hints(weights)
    }
    fn prior_tail(&self, side: Side) -> Option<Tail> {
        self.0.reduced_prior_tail(side)
    }
    fn potential_tail(&self, n: usize, side: Side) -> Option<Tail> {
        self.0.reduced_potential_tail(n, side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Returns a constant 64-bit word, so `random::<f64>()` yields 0.5.
    struct HalfRng;

    impl rand::RngCore for HalfRng {
        fn next_u32(&mut self) -> u32 {
            1 << 31
        }
        fn next_u64(&mut self) -> u64 {
            1 << 63
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0);
        }
    }

    #[test]
    fn cauchy_zero_quantile_gives_location() {
        let m = CauchyLocationModel::generate(1, 0.0, &mut HalfRng).unwrap();
        assert_eq!(m.data(), &[0.0]);
        assert_eq!(standard_cauchy_from_uniform(0.5), 0.0);
    }

    #[test]
    fn generation_rejects_empty_and_keeps_length() {
        let mut rng = stream(1, &[0]);
        assert_eq!(
            CauchyLocationModel::generate(0, 5.0, &mut rng),
            Err(CoresetError::EmptyDataset)
        );
        assert_eq!(
            LogRegModel::generate(0, LOGREG_THETA0, &mut rng),
            Err(CoresetError::EmptyDataset)
        );
        assert_eq!(CauchyLocationModel::generate(3, 5.0, &mut rng).unwrap().len(), 3);
    }

    #[test]
    fn logreg_covariates_in_disk() {
        let m = LogRegModel::generate(50, LOGREG_THETA0, &mut stream(3, &[])).unwrap();
        assert!(m.covariates().iter().all(|x| x[0] * x[0] + x[1] * x[1] <= 1.0));
    }

    #[test]
    fn logreg_rejects_bad_inputs() {
        assert!(matches!(
            LogRegModel::new(LOGREG_THETA0, alloc::vec![[0.9, 0.9]], alloc::vec![true]),
            Err(CoresetError::CovariateOutsideDisk { index: 0 })
        ));
        assert!(matches!(
            LogRegModel::new(LOGREG_THETA0, alloc::vec![[0.1, 0.1]], alloc::vec![]),
            Err(CoresetError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn origin_covariate_has_even_odds() {
        let m = LogRegModel::new(LOGREG_THETA0, alloc::vec![[0.0, 0.0]], alloc::vec![true]).unwrap();
        assert_eq!(m.label_probability(0, &[3.0, -40.0]), 0.5);
        let l = potential(&m, 0, &[3.0, 7.0]).unwrap();
        assert!((l - (0.5f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn cauchy_log_prior_at_mode() {
        let m = CauchyLocationModel::new(5.0, alloc::vec![25.0]).unwrap();
        assert!((log_prior(&m, &[0.0]) - (-1.1447298858494002)).abs() < 1e-12);
        assert_eq!(log_prior(&m, &[2.7]), log_prior(&m, &[-2.7]));
        // Zero residual.
        assert!((potential(&m, 0, &[5.0]).unwrap() + PI.ln()).abs() < 1e-15);
    }

    #[test]
    fn potential_index_checked() {
        let m = CauchyLocationModel::new(5.0, alloc::vec![25.0, 24.0]).unwrap();
        assert_eq!(
            potential(&m, 2, &[0.0]),
            Err(CoresetError::IndexOutOfRange { index: 2, len: 2 })
        );
        assert!(potential_grad_eta(&m, 5, 0.0).is_err());
    }

    #[test]
    fn cauchy_gradient_examples() {
        let m = CauchyLocationModel::new(5.0, alloc::vec![25.0]).unwrap();
        assert_eq!(potential_grad_eta(&m, 0, 25.0).unwrap(), 0.0);
        assert_eq!(potential_grad_eta(&m, 0, 24.0).unwrap(), 1.0);
    }

    #[test]
    fn logreg_prior_peaks_at_origin() {
        let m = LogRegModel::generate(5, LOGREG_THETA0, &mut stream(9, &[])).unwrap();
        let at0 = log_prior(&m, &[0.0, 0.0]);
        assert!(at0.is_finite());
        for i in -5..=5 {
            for j in -5..=5 {
                if i != 0 || j != 0 {
                    assert!(log_prior(&m, &[i as f64 * 0.3, j as f64 * 0.3]) < at0);
                }
            }
        }
    }

    #[test]
    fn reduced_potentials_agree_with_theta() {
        let c = CauchyLocationModel::generate(20, 5.0, &mut stream(4, &[])).unwrap();
        let l = LogRegModel::generate(20, LOGREG_THETA0, &mut stream(5, &[])).unwrap();
        for n in 0..20 {
            for &t in &[-3.0, -0.5, 0.0, 1.2, 5.1] {
                let z = c.reduced_from_theta(&[t]);
                assert_eq!(c.reduced_potential(n, z), c.theta_potential(n, &[t]));
                let th = [t, 0.7 * t + 1.0];
                let z = l.reduced_from_theta(&th);
                assert!((l.reduced_potential(n, z) - l.theta_potential(n, &th)).abs() < 1e-12);
            }
        }
    }
}
