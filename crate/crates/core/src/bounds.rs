//! KL lower and upper bounds evaluated by quadrature, and the checker that
//! compares them with the quadrature KL pair.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{CoresetError, Result};
use crate::linalg::Matrix;
use crate::math::{self, LogSumExp};
use crate::models::{PotentialModel, Reduced};
use crate::quadrature::{covariance_of_potentials, potential_column, weighted_covariance, CoresetField, KlPair, Workspace};
use crate::target::Target;
use crate::weights::CoresetWeights;

/// `−ln x + x − 1` on `[0, 1]` and zero above; `f(0) = +∞`.
pub fn f_lower(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(CoresetError::InvalidArgument("f is defined for x ≥ 0"));
    }
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    if x >= 1.0 {
        return Ok(0.0);
    }
    Ok((-math::ln(x) + x - 1.0).max(0.0))
}

/// `{θ : (θ − center)ᵀ H (θ − center) ≤ r²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    h: Matrix,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, h: Matrix, radius: f64) -> Result<Self> {
        let d = center.len();
        if h.rows() != d || h.cols() != d || !(1..=2).contains(&d) {
            return Err(CoresetError::InvalidArgument("ball shape must match its center"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CoresetError::InvalidArgument("ball radius must be positive"));
        }
        let symmetric = d == 1 || h[(0, 1)] == h[(1, 0)];
        let det = if d == 1 { h[(0, 0)] } else { h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)] };
        if !(symmetric && h[(0, 0)] > 0.0 && det > 0.0) {
            return Err(CoresetError::InvalidArgument("ball matrix must be symmetric positive definite"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(CoresetError::InvalidArgument("ball center must be finite"));
        }
        Ok(Self { center, h, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        let d: Vec<f64> = theta.iter().zip(&self.center).map(|(t, c)| t - c).collect();
        self.h.quadratic_form(&d) <= self.radius * self.radius
    }
}

/// Per-node log prior masses (cell volume included) inside and outside a set.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMasks {
    pub log_inside: Vec<f64>,
    pub log_outside: Vec<f64>,
}

impl BallMasks {
    /// Masks of a θ-space ball for a model evaluated in its reduced coordinate.
    pub fn for_model<M: PotentialModel + ?Sized>(model: &M, ws: &Workspace, ball: &Ball) -> Result<Self> {
        if ball.center.len() != model.dim() {
            return Err(CoresetError::InvalidArgument("ball dimension must match the model"));
        }
        let grid = ws.grid();
        let mut p = [0.0; 2];
        let mut log_inside = Vec::with_capacity(grid.len());
        let mut log_outside = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            grid.node(k, &mut p);
            let [i, o] = model.reduced_prior_split(p[0], &ball.center, &ball.h, ball.radius);
            let v = grid.log_volume(k);
            log_inside.push(i + v);
            log_outside.push(o + v);
        }
        Ok(Self { log_inside, log_outside })
    }

    /// Masks of a ball in the target's own coordinate, by node membership.
    pub fn by_node(ws: &Workspace, ball: &Ball) -> Self {
        let grid = ws.grid();
        let d = grid.dims();
        let mut p = [0.0; 2];
        let mut log_inside = Vec::with_capacity(grid.len());
        let mut log_outside = Vec::with_capacity(grid.len());
        for (k, &b) in ws.base().iter().enumerate() {
            grid.node(k, &mut p);
            if ball.contains(&p[..d]) {
                log_inside.push(b);
                log_outside.push(f64::NEG_INFINITY);
            } else {
                log_inside.push(f64::NEG_INFINITY);
                log_outside.push(b);
            }
        }
        Self { log_inside, log_outside }
    }
}

fn lse<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = LogSumExp::new();
    for x in xs {
        acc.push(x);
    }
    acc.value()
}

/// Index of the node maximizing `values`.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// J_B(w) from per-node values on the workspace grid.
pub fn j_b_from(ws: &Workspace, field: &CoresetField, masks: &BallMasks) -> f64 {
    let full = &ws.full().values;
    let w = &field.values;
    let base = ws.base();
    // Shift both potentials by their values at the node of highest π mass.
    let map = argmax(ws.posterior().log_masses());
    let (c, cw) = (full[map], w[map]);
    let l = |k: usize| full[k] - c;
    let lw = |k: usize| w[k] - cw;
    let n = full.len();
    let num = lse((0..n).map(|k| masks.log_inside[k] + 0.5 * (l(k) + lw(k))));
    let z = lse((0..n).map(|k| base[k] + l(k)));
    let zw = lse((0..n).map(|k| base[k] + lw(k)));
    let outside = lse((0..n).map(|k| masks.log_outside[k] + l(k))) - z;
    math::exp(num - 0.5 * (z + zw)) + math::sqrt(math::exp(outside).min(1.0))
}

/// J_B(w) for a model and a θ-space ball, on a grid covering π and π_w.
pub fn j_b<M: PotentialModel + ?Sized>(model: &M, weights: &CoresetWeights, ball: &Ball) -> Result<f64> {
    let target = Reduced(model);
    let ws = Workspace::covering(&target, &[weights], &Default::default())?;
    let field = ws.field(&target, weights)?;
    let masks = BallMasks::for_model(model, &ws, ball)?;
    Ok(j_b_from(&ws, &field, &masks))
}

/// Default ball matrix: identity times the posterior precision of the
/// reduced coordinate.
pub fn default_h<M: PotentialModel + ?Sized>(model: &M, ws: &Workspace) -> Matrix {
    let post = ws.posterior();
    let mean = post.expectation(|x| x[0]);
    let var = post.expectation(|x| (x[0] - mean) * (x[0] - mean));
    let mut h = Matrix::identity(model.dim());
    for i in 0..model.dim() {
        h[(i, i)] = 1.0 / var;
    }
    h
}

/// θ maximizing the full posterior density, read off the reduced grid.
pub fn theta_map<M: PotentialModel + ?Sized>(model: &M, ws: &Workspace) -> Vec<f64> {
    let grid = ws.grid();
    let full = &ws.full().values;
    let mut p = [0.0; 2];
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (k, &l) in full.iter().enumerate() {
        grid.node(k, &mut p);
        let v = l + model.log_prior(&model.theta_from_reduced(p[0]));
        if v > best.0 {
            best = (v, p[0]);
        }
    }
    model.theta_from_reduced(best.1)
}

/// 40 log-spaced values on `[1e-3, 1e3]`.
pub fn default_lambdas() -> Vec<f64> {
    (0..40)
        .map(|i| math::exp(math::ln(1e-3) + (math::ln(1e3) - math::ln(1e-3)) * i as f64 / 39.0))
        .collect()
}

/// `log Σ_k p_k exp(s v_k)` with care for small arguments.
fn log_mgf(log_masses: &[f64], values: &[f64], s: f64) -> f64 {
    let vmax = values
        .iter()
        .zip(log_masses)
        .filter(|(_, &lp)| lp > f64::NEG_INFINITY)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    if s * vmax <= 0.5 {
        let mut acc = 0.0;
        for (&lp, &v) in log_masses.iter().zip(values) {
            if lp > f64::NEG_INFINITY {
                acc += math::exp(lp) * math::exp_m1(s * v);
            }
        }
        math::ln_1p(acc)
    } else {
        lse(log_masses.iter().zip(values).map(|(&lp, &v)| lp + s * v))
    }
}

/// Per-node `v − E_π v`.
fn centered(ws: &Workspace, v: &[f64]) -> Vec<f64> {
    let lp = ws.posterior().log_masses();
    let mean: f64 = lp.iter().zip(v).filter(|(l, _)| **l > f64::NEG_INFINITY).map(|(l, x)| math::exp(*l) * x).sum();
    v.iter().map(|x| x - mean).collect()
}

/// `min_λ (1/λ) log ∫ π exp((1+λ)(ℓ̄_w − ℓ̄))` over `lambdas`, with the
/// minimizing λ; `+∞` when every candidate diverges.
pub fn kl_upper_bound_from(ws: &Workspace, field: &CoresetField, lambdas: &[f64]) -> Result<(f64, f64)> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(CoresetError::InvalidArgument("λ values must be positive and finite"));
    }
    let diff: Vec<f64> = field.values.iter().zip(&ws.full().values).map(|(w, l)| w - l).collect();
    let g = centered(ws, &diff);
    let lp = ws.posterior().log_masses();
    let mut best = (f64::INFINITY, lambdas[0]);
    for &lambda in lambdas {
        // π exp((1+λ)(ℓ_w − ℓ)) = π_0 exp((1+λ) ℓ_w − λ ℓ).
        if !ws.tilted_integrable(&[(field, 1.0 + lambda), (ws.full(), -lambda)]) {
            continue;
        }
        let v = log_mgf(lp, &g, 1.0 + lambda) / lambda;
        if v < best.0 {
            best = (v, lambda);
        }
    }
    Ok((best.0.max(0.0), best.1))
}

pub fn kl_upper_bound<M: PotentialModel + ?Sized>(
    model: &M,
    weights: &CoresetWeights,
    lambdas: &[f64],
) -> Result<(f64, f64)> {
    let target = Reduced(model);
    let ws = Workspace::covering(&target, &[weights], &Default::default())?;
    let field = ws.field(&target, weights)?;
    kl_upper_bound_from(&ws, &field, lambdas)
}

/// Smallest doubling-search β certifying the sampled directions.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFit {
    pub beta: f64,
    /// Potentials the covariance refers to.
    pub indices: Vec<usize>,
    /// Cov_π of those potentials.
    pub covariance: Matrix,
    /// `(s, log ∫ π exp(s·d·ℓ̄))` per direction `d` with `dᵀ A d = 1`.
    pub profiles: Vec<Vec<(f64, f64)>>,
}

impl BetaFit {
    pub fn directions(&self) -> usize {
        self.profiles.len()
    }

    /// Whether `beta` satisfies the inequality at every sampled radius with
    /// `beta·s² ≤ 1`.
    pub fn certifies(&self, beta: f64) -> bool {
        certifies(&self.profiles, beta)
    }
}

pub const BETA_START: f64 = 1.0 / 1024.0;
pub const BETA_MAX: f64 = (1u64 << 20) as f64;
/// Radii `2^{j/2}` probed for every direction.
const RADIUS_EXPONENTS: core::ops::RangeInclusive<i32> = -40..=10;
pub const SUBSET_LIMIT: usize = 64;
pub const FULL_COVARIANCE_LIMIT: usize = 512;

fn radius(j: i32) -> f64 {
    math::exp(0.5 * j as f64 * core::f64::consts::LN_2)
}

/// Standard normal draw by Box–Muller.
fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * math::PI * u2)
}

/// Log-MGF values `log ∫ π exp(s_j d·ℓ̄)` for one direction `d` normalized
/// to `dᵀ A d = 1`; `+∞` where the integrand has a divergent tail.
fn direction_profile(ws: &Workspace, fields: &[CoresetField], centered_cols: &[Vec<f64>], d: &[f64]) -> Vec<(f64, f64)> {
    let nodes = ws.grid().len();
    let mut h = alloc::vec![0.0; nodes];
    for (c, &di) in centered_cols.iter().zip(d) {
        for (hk, ck) in h.iter_mut().zip(c) {
            *hk += di * ck;
        }
    }
    let lp = ws.posterior().log_masses();
    RADIUS_EXPONENTS
        .map(|j| {
            let s = radius(j);
            let mut terms: Vec<(&CoresetField, f64)> = alloc::vec![(ws.full(), 1.0)];
            terms.extend(fields.iter().zip(d).map(|(f, &di)| (f, s * di)));
            let phi = if ws.tilted_integrable(&terms) { log_mgf(lp, &h, s) } else { f64::INFINITY };
            (s, phi)
        })
        .collect()
}

fn certifies(profiles: &[Vec<(f64, f64)>], beta: f64) -> bool {
    profiles
        .iter()
        .flatten()
        .filter(|(s, _)| beta * s * s <= 1.0)
        .all(|&(s, phi)| phi <= beta * s * s)
}

/// Fits β so that the potentials in `indices` are β·Cov_π-subexponential on
/// `trials` random directions plus `extra` (coordinates over `indices`).
pub fn fit_beta_on<T: Target + ?Sized, R: Rng + ?Sized>(
    target: &T,
    ws: &Workspace,
    indices: &[usize],
    trials: usize,
    extra: &[Vec<f64>],
    rng: &mut R,
) -> Result<BetaFit> {
    if indices.is_empty() {
        return Err(CoresetError::InvalidArgument("β fit needs at least one potential"));
    }
    if let Some(&bad) = indices.iter().find(|&&n| n >= target.len()) {
        return Err(CoresetError::IndexOutOfRange { index: bad, len: target.len() });
    }
    let grid = ws.grid();
    let cols: Vec<Vec<f64>> = indices.iter().map(|&n| potential_column(target, grid, n)).collect();
    let (_, cov) = weighted_covariance(&ws.posterior().masses(), &cols);
    let centered_cols: Vec<Vec<f64>> = cols.iter().map(|c| centered(ws, c)).collect();
    let fields = indices
        .iter()
        .map(|&n| ws.field(target, &CoresetWeights::from_entries(target.len(), [(n, 1.0)])?))
        .collect::<Result<Vec<_>>>()?;

    let k = indices.len();
    let mut dirs: Vec<Vec<f64>> = extra.to_vec();
    for _ in 0..trials {
        dirs.push((0..k).map(|_| normal(rng)).collect());
    }
    let mut profiles = Vec::with_capacity(dirs.len());
    for d in dirs.iter_mut() {
        if d.len() != k {
            return Err(CoresetError::InvalidArgument("direction length must match the potential subset"));
        }
        let q = cov.quadratic_form(d);
        if !(q > 0.0 && q.is_finite()) {
            continue;
        }
        let scale = 1.0 / math::sqrt(q);
        d.iter_mut().for_each(|x| *x *= scale);
        profiles.push(direction_profile(ws, &fields, &centered_cols, d));
    }
    let mut beta = BETA_START;
    while !certifies(&profiles, beta) {
        beta *= 2.0;
        if beta > BETA_MAX {
            return Err(CoresetError::BetaNotCertified { max_beta: BETA_MAX });
        }
    }
    Ok(BetaFit {
        beta,
        indices: indices.to_vec(),
        covariance: cov,
        profiles,
    })
}

/// β for a random subset of at most 64 potentials of a model.
pub fn fit_beta<M: PotentialModel + ?Sized, R: Rng + ?Sized>(model: &M, trials: usize, rng: &mut R) -> Result<BetaFit> {
    if trials < 100 {
        return Err(CoresetError::InvalidArgument("β fit needs at least 100 directions"));
    }
    let target = Reduced(model);
    let ws = Workspace::covering(&target, &[], &Default::default())?;
    let indices = random_subset(model.len(), SUBSET_LIMIT, rng);
    fit_beta_on(&target, &ws, &indices, trials, &[], rng)
}

/// Sorted uniform subset of `0..n` of size `min(n, k)`.
pub fn random_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    let k = k.min(n);
    for i in 0..k {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    let mut out = all[..k].to_vec();
    out.sort_unstable();
    out
}

/// Cov_π of all N potentials; declined above 512.
pub fn full_covariance<T: Target + ?Sized>(target: &T, ws: &Workspace) -> Result<Matrix> {
    let n = target.len();
    if n > FULL_COVARIANCE_LIMIT {
        return Err(CoresetError::CovarianceTooLarge { n, limit: FULL_COVARIANCE_LIMIT });
    }
    let all: Vec<usize> = (0..n).collect();
    covariance_of_potentials(ws.posterior(), target, &all)
}

/// `4 (w−1)ᵀ (βA) (w−1)` when at most one, else `None`. `a` is the covariance
/// of the potentials in `indices`; `w` must equal one everywhere else.
pub fn subexp_kl_bound(weights: &CoresetWeights, a: &Matrix, indices: &[usize], beta: f64) -> Result<Option<f64>> {
    if a.rows() != indices.len() || a.cols() != indices.len() {
        return Err(CoresetError::InvalidArgument("covariance must match the index list"));
    }
    let n = weights.n_total();
    let mut covered = alloc::vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(CoresetError::IndexOutOfRange { index: i, len: n });
        }
        covered[i] = true;
    }
    let uncovered = (0..n).any(|i| !covered[i] && weights.get(i) != 1.0);
    if uncovered {
        return Err(if n > FULL_COVARIANCE_LIMIT {
            CoresetError::CovarianceTooLarge { n, limit: FULL_COVARIANCE_LIMIT }
        } else {
            CoresetError::InvalidArgument("weights differ from one outside the covariance")
        });
    }
    let v: Vec<f64> = indices.iter().map(|&i| weights.get(i) - 1.0).collect();
    let q = 4.0 * beta * a.quadratic_form(&v);
    Ok(if q <= 1.0 { Some(q.max(0.0)) } else { None })
}

/// `(w−1)ᵀ Cov_π((ℓ_n)) (w−1)`, evaluated as the π-variance of `ℓ_w − ℓ`.
pub fn perturbation_quadratic_form(ws: &Workspace, field: &CoresetField) -> f64 {
    let diff: Vec<f64> = field.values.iter().zip(&ws.full().values).map(|(w, l)| w - l).collect();
    let g = centered(ws, &diff);
    let lp = ws.posterior().log_masses();
    lp.iter()
        .zip(&g)
        .filter(|(l, _)| **l > f64::NEG_INFINITY)
        .map(|(l, v)| math::exp(*l) * v * v)
        .sum()
}

/// `|Σ w_n ∇ℓ_n(η₀)| / Σ w_n`.
pub fn grad_diagnostic<M: PotentialModel + ?Sized>(model: &M, weights: &CoresetWeights) -> Result<f64> {
    if weights.sum() == 0.0 {
        return Err(CoresetError::ZeroWeightSum);
    }
    if let Some(bad) = weights.indices().find(|&n| n >= model.len()) {
        return Err(CoresetError::IndexOutOfRange { index: bad, len: model.len() });
    }
    let eta0 = model.eta0();
    let g: f64 = weights.entries().iter().map(|&(n, w)| w * model.grad_eta(n, eta0)).sum();
    Ok(g.abs() / weights.sum())
}

/// Bounds evaluated for one weight vector, next to its quadrature KL pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kl_forward: f64,
    pub kl_reverse: f64,
    /// Largest f(J_B) over the balls supplied.
    pub lower: f64,
    pub best_radius: Option<f64>,
    pub upper_lambda: f64,
    pub argmin_lambda: f64,
    pub upper_subexp: Option<f64>,
    pub beta_hat: Option<f64>,
}

impl BoundReport {
    pub fn kl(&self) -> KlPair {
        KlPair { forward: self.kl_forward, reverse: self.kl_reverse }
    }
}

/// Lower and λ-upper bounds with the KL pair, for balls of the given radii
/// centred at the MAP with the default matrix.
pub fn evaluate_bounds<M: PotentialModel + ?Sized>(
    model: &M,
    ws: &Workspace,
    field: &CoresetField,
    radii: &[f64],
) -> Result<BoundReport> {
    let pair = ws.kl_pair(field, 1.0)?;
    let center = theta_map(model, ws);
    let h = default_h(model, ws);
    let mut lower = 0.0;
    let mut best_radius = None;
    for &r in radii {
        let ball = Ball::new(center.clone(), h.clone(), r)?;
        let masks = BallMasks::for_model(model, ws, &ball)?;
        let v = f_lower(j_b_from(ws, field, &masks))?;
        if best_radius.is_none() || v > lower {
            lower = v;
            best_radius = Some(r);
        }
    }
    let (upper_lambda, argmin_lambda) = kl_upper_bound_from(ws, field, &default_lambdas())?;
    Ok(BoundReport {
        kl_forward: pair.forward,
        kl_reverse: pair.reverse,
        lower,
        best_radius,
        upper_lambda,
        argmin_lambda,
        upper_subexp: None,
        beta_hat: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// f(J_B) above the smaller KL.
    Lower,
    /// Larger KL above the λ bound.
    Upper,
    /// Larger KL above the subexponential bound.
    Subexp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub bound: f64,
    pub kl: f64,
}

/// Roundoff allowance added to every relative comparison.
pub const ABSOLUTE_SLACK: f64 = 1e-12;

fn exceeds(a: f64, b: f64, rel_tol: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return true;
    }
    if b == f64::INFINITY || a == f64::NEG_INFINITY {
        return false;
    }
    if a == f64::INFINITY {
        return true;
    }
    a - b > rel_tol * a.abs().max(b.abs()) + ABSOLUTE_SLACK
}

/// Every way the report breaks `lower ≤ min KL` and `max KL ≤ upper`.
pub fn check_sandwich(report: &BoundReport, rel_tol: f64) -> Vec<Violation> {
    let pair = report.kl();
    let mut out = Vec::new();
    if exceeds(report.lower, pair.min(), rel_tol) {
        out.push(Violation { kind: ViolationKind::Lower, bound: report.lower, kl: pair.min() });
    }
    if exceeds(pair.max(), report.upper_lambda, rel_tol) {
        out.push(Violation { kind: ViolationKind::Upper, bound: report.upper_lambda, kl: pair.max() });
    }
    if let Some(u) = report.upper_subexp {
        if exceeds(pair.max(), u, rel_tol) {
            out.push(Violation { kind: ViolationKind::Subexp, bound: u, kl: pair.max() });
        }
    }
    out
}
