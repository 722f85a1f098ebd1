//! Coreset constructions: importance-weighted subsampling, optimal post-hoc
//! scaling of a weight vector, and subsample-then-optimize via NNLS.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{CoresetError, Result};
use crate::math;
use crate::models::{PotentialModel, Reduced};
use crate::quadrature::{
    cumulative, draw_index, footprint, AdaptiveOptions, CoresetField, Footprint, GridDistribution, KlPair, Workspace,
};
use crate::solver::{NnlsProblem, NnlsSolution};
use crate::target::Target;
use crate::weights::CoresetWeights;

/// Strictly positive categorical distribution over data indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingProbabilities {
    p: Vec<f64>,
    cdf: Vec<f64>,
}

impl SamplingProbabilities {
    /// Normalizes strictly positive finite scores to sum to one.
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(CoresetError::EmptyDataset);
        }
        if scores.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(CoresetError::InvalidProbabilities("entries must be finite and positive"));
        }
        let total: f64 = scores.iter().sum();
        let p: Vec<f64> = scores.iter().map(|s| s / total).collect();
        let cdf = cumulative(&p);
        Ok(Self { p, cdf })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// One index drawn by inverse CDF.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        draw_index(&self.cdf, rng.random::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityMode {
    Uniform,
    /// ∝ squared covariate norm, clamped to `[0.1/N, 10/N]`, renormalized.
    XSquaredThresholded,
}

pub fn importance_probabilities<M: PotentialModel + ?Sized>(
    model: &M,
    mode: ProbabilityMode,
) -> Result<SamplingProbabilities> {
    let n = model.len();
    if n == 0 {
        return Err(CoresetError::EmptyDataset);
    }
    match mode {
        ProbabilityMode::Uniform => SamplingProbabilities::uniform(n),
        ProbabilityMode::XSquaredThresholded => {
            let scores: Vec<f64> = (0..n).map(|i| model.importance_score(i)).collect();
            thresholded(&scores)
        }
    }
}

/// `q ∝ scores`, each clamped into `[0.1/N, 10/N]`, then renormalized.
/// All-zero scores give the uniform distribution.
pub fn thresholded(scores: &[f64]) -> Result<SamplingProbabilities> {
    let n = scores.len();
    if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(CoresetError::InvalidProbabilities("scores must be finite and nonnegative"));
    }
    let total: f64 = scores.iter().sum();
    if total == 0.0 {
        return SamplingProbabilities::uniform(n);
    }
    let nf = n as f64;
    let clamped = scores
        .iter()
        .map(|s| (s / total).clamp(0.1 / nf, 10.0 / nf))
        .collect();
    SamplingProbabilities::new(clamped)
}

/// Draws M indices from `probs`; index n receives weight `count_n / (M p_n)`.
pub fn importance_weighted<R: Rng + ?Sized>(
    probs: &SamplingProbabilities,
    m: usize,
    rng: &mut R,
) -> Result<CoresetWeights> {
    if m == 0 {
        return Err(CoresetError::InvalidArgument("coreset size M must be at least 1"));
    }
    let mf = m as f64;
    let p = probs.as_slice();
    let draws = (0..m).map(|_| {
        let i = probs.draw(rng);
        (i, 1.0 / (mf * p[i]))
    });
    let entries: Vec<(usize, f64)> = draws.collect();
    CoresetWeights::from_entries(p.len(), entries)
}

/// Result of the post-hoc scale search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleResult {
    pub alpha: f64,
    /// Value of the minimized divergence at `alpha`.
    pub kl: f64,
    /// Both directions at `alpha`.
    pub pair: KlPair,
    /// The minimizer sits on an end of the search bracket.
    pub at_bracket_edge: bool,
}

pub const SCALE_BRACKET: (f64, f64) = (1e-6, 1e3);
const SCALE_SCAN_PER_DECADE: usize = 4;
const SCALE_REL_WIDTH: f64 = 1e-4;

/// Scales whose footprints define the grid used for the scale search.
pub fn scale_probes() -> Vec<f64> {
    let (lo, hi) = SCALE_BRACKET;
    let steps = math::round(2.0 * math::ln(hi / lo) / core::f64::consts::LN_10) as usize;
    (0..=steps)
        .map(|i| lo * math::exp(i as f64 * 0.5 * core::f64::consts::LN_10))
        .collect()
}

/// Footprints of π_{αw} for every scale probe, plus that of `w` itself.
pub fn scale_footprints<T: Target + ?Sized>(target: &T, weights: &CoresetWeights) -> Result<Vec<Footprint>> {
    let cutoff = AdaptiveOptions::default().cutoff;
    let mut out = alloc::vec![footprint(target, weights, cutoff)?];
    for a in scale_probes() {
        out.push(footprint(target, &weights.scaled(a)?, cutoff)?);
    }
    Ok(out)
}

/// Workspace whose grid covers π and π_{αw} across the scale bracket.
pub fn scale_workspace<T: Target + ?Sized>(target: &T, weights: &CoresetWeights) -> Result<Workspace> {
    let opts = AdaptiveOptions::default();
    let mut fps = alloc::vec![footprint(target, &CoresetWeights::ones(target.len()), opts.cutoff)?];
    fps.extend(scale_footprints(target, weights)?);
    Workspace::from_footprints(target, &fps, &opts)
}

/// Divergence minimized by a scale search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleObjective {
    /// KL(π_{αw} || π).
    Reverse,
    /// KL(π || π_{αw}).
    Forward,
    /// The smaller of the two directions.
    Smaller,
}

/// argmin over α ≥ 0 of KL(π_{αw} || π) on the fixed grid of `ws`.
pub fn optimal_scale_in(ws: &Workspace, field: &CoresetField) -> Result<ScaleResult> {
    scale_search(ws, field, ScaleObjective::Reverse)
}

/// argmin over α ≥ 0 of `objective` on the fixed grid of `ws`.
pub fn scale_search(ws: &Workspace, field: &CoresetField, objective: ScaleObjective) -> Result<ScaleResult> {
    match objective {
        ScaleObjective::Smaller => {
            let f = scale_search(ws, field, ScaleObjective::Forward);
            let r = scale_search(ws, field, ScaleObjective::Reverse);
            match (f, r) {
                (Ok(mut f), Ok(mut r)) => {
                    f.kl = f.pair.min();
                    r.kl = r.pair.min();
                    Ok(if f.kl < r.kl { f } else { r })
                }
                (Ok(mut x), Err(_)) | (Err(_), Ok(mut x)) => {
                    x.kl = x.pair.min();
                    Ok(x)
                }
                (Err(e), Err(_)) => Err(e),
            }
        }
        _ => directional_search(ws, field, objective == ScaleObjective::Forward),
    }
}

fn directional_search(ws: &Workspace, field: &CoresetField, forward: bool) -> Result<ScaleResult> {
    let eval = |alpha: f64| -> Result<f64> {
        if forward {
            ws.kl_pair_forward(field, alpha)
        } else {
            ws.kl_pair_reverse(field, alpha)
        }
    };
    let objective = |log_alpha: f64| -> Result<f64> {
        let v = eval(math::exp(log_alpha))?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };
    let (lo, hi) = (math::ln(SCALE_BRACKET.0), math::ln(SCALE_BRACKET.1));
    let steps = math::round((hi - lo) / core::f64::consts::LN_10 * SCALE_SCAN_PER_DECADE as f64) as usize;
    let mut xs: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    xs.push(0.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vs: Vec<f64> = xs.iter().map(|&x| objective(x)).collect::<Result<_>>()?;
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for (i, &v) in vs.iter().enumerate() {
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let zero = eval(0.0)?;
    if best_v == f64::INFINITY && zero == f64::INFINITY {
        return Err(CoresetError::ScaleSearchFailed);
    }

    let mut best_x = xs[best_i];
    if best_v.is_finite() {
        let a = xs[best_i.saturating_sub(1)];
        let b = xs[(best_i + 1).min(xs.len() - 1)];
        let (x, v) = golden_min(&objective, a, b, best_x, best_v)?;
        best_x = x;
        best_v = v;
    }
    let at_bracket_edge = (best_x - lo).abs() <= SCALE_REL_WIDTH || (hi - best_x).abs() <= SCALE_REL_WIDTH;
    let (alpha, kl) = if zero < best_v { (0.0, zero) } else { (math::exp(best_x), best_v) };
    let pair = ws.kl_pair(field, alpha)?;
    Ok(ScaleResult {
        alpha,
        kl,
        pair,
        at_bracket_edge: at_bracket_edge && alpha != 0.0,
    })
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, x0: f64, v0: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (x0, v0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > SCALE_REL_WIDTH {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Optimal scale of `weights` for a model, in its reduced coordinate.
pub fn optimal_scale<M: PotentialModel + ?Sized>(model: &M, weights: &CoresetWeights) -> Result<ScaleResult> {
    if weights.is_empty() {
        return Err(CoresetError::InvalidWeights("scale search needs a nonempty support"));
    }
    let target = Reduced(model);
    let ws = scale_workspace(&target, weights)?;
    let field = ws.field(&target, weights)?;
    optimal_scale_in(&ws, &field)
}

/// Output of the subsample-optimize construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleOptimized {
    pub weights: CoresetWeights,
    /// Distinct sampled indices, ascending.
    pub support: Vec<usize>,
    pub solution: NnlsSolution,
    /// ‖u‖², the objective at w = 0.
    pub baseline: f64,
}

/// Subsample M indices, then fit nonnegative weights on that support so the
/// weighted centered potentials match the full sum at S posterior samples.
pub fn subsample_optimize<M: PotentialModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    probs: &SamplingProbabilities,
    m: usize,
    s: usize,
    rng: &mut R,
) -> Result<SubsampleOptimized> {
    let target = Reduced(model);
    let ws = Workspace::covering(&target, &[], &AdaptiveOptions::default())?;
    subsample_optimize_with(model, ws.posterior(), probs, m, s, rng)
}

/// As [`subsample_optimize`], drawing posterior samples from a supplied
/// reduced-coordinate posterior.
pub fn subsample_optimize_with<M: PotentialModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    posterior: &GridDistribution,
    probs: &SamplingProbabilities,
    m: usize,
    s: usize,
    rng: &mut R,
) -> Result<SubsampleOptimized> {
    let n = model.len();
    if m == 0 {
        return Err(CoresetError::InvalidArgument("coreset size M must be at least 1"));
    }
    if s < m {
        return Err(CoresetError::InvalidArgument("sample count S must be at least M"));
    }
    if probs.len() != n {
        return Err(CoresetError::InvalidProbabilities("one probability per datum required"));
    }
    let mut support: Vec<usize> = (0..m).map(|_| probs.draw(rng)).collect();
    support.sort_unstable();
    support.dedup();

    let samples = posterior.sample(s, rng);
    let scale = 1.0 / math::sqrt(s as f64);
    let feature = |i: usize| -> Vec<f64> {
        let mut v: Vec<f64> = samples.iter().map(|&z| model.reduced_potential(i, z)).collect();
        let mean = v.iter().sum::<f64>() / s as f64;
        for x in v.iter_mut() {
            *x = (*x - mean) * scale;
        }
        v
    };
    let mut total = alloc::vec![0.0; s];
    for i in 0..n {
        for (t, f) in total.iter_mut().zip(feature(i)) {
            *t += f;
        }
    }
    let columns: Vec<Vec<f64>> = support.iter().map(|&i| feature(i)).collect();
    let baseline = total.iter().map(|t| t * t).sum();
    let problem = NnlsProblem::from_columns(columns, total)?;
    let solution = problem.solve();
    if !solution.converged {
        return Err(CoresetError::SolverNonConvergence {
            iterations: solution.iterations,
        });
    }
    let weights = CoresetWeights::from_entries(n, support.iter().copied().zip(solution.w.iter().copied()))?;
    Ok(SubsampleOptimized {
        weights,
        support,
        solution,
        baseline,
    })
}
