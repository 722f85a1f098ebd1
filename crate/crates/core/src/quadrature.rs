//! Posterior representation on deterministic grids.
//!
//! Two grid builders are provided. [`auto_grid`] produces a uniform tensor
//! grid from a coarse scan of the unnormalized log-density (any target of
//! dimension one or two). [`adaptive_grid`] is used for one-dimensional
//! targets whose posteriors are far narrower than their support: it locates
//! every mode within the cutoff, anchors fine uniform cells around each, and
//! grows cell widths geometrically into the tails.
//!
//! All densities are held in log space; normalizers come from log-sum-exp.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{CoresetError, Result};
use crate::grid::{Anchor, Axis, Grid, MAX_NODES_2D};
use crate::linalg::Matrix;
use crate::math::{self, LogSumExp};
use crate::target::{kl_tail_finite, Side, Tail, Target};
use crate::weights::CoresetWeights;

/// Options for [`auto_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Nats below the maximum that the grid must still cover.
    pub cutoff: f64,
    /// Fractional padding added to each side.
    pub pad: f64,
    pub cells_1d: usize,
    pub cells_2d: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            cutoff: 40.0,
            pad: 0.1,
            cells_1d: 4096,
            cells_2d: 512,
        }
    }
}

/// Options for [`adaptive_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub cutoff: f64,
    pub pad: f64,
    /// Uniform cells per local standard deviation around each mode.
    pub cells_per_sd: f64,
    /// Half-width, in local standard deviations, of the uniform core.
    pub core_sds: f64,
    /// Cell width growth per unit distance outside the cores.
    pub growth: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            cutoff: 40.0,
            pad: 0.1,
            cells_per_sd: 16.0,
            core_sds: 12.0,
            growth: 0.01,
        }
    }
}

/// Normalized probability table over the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDistribution {
    grid: Arc<Grid>,
    log_masses: Vec<f64>,
    log_normalizer: f64,
}

impl GridDistribution {
    /// Normalizes per-node unnormalized log masses (cell volume included).
    pub fn from_log_masses(grid: Arc<Grid>, mut log_masses: Vec<f64>) -> Result<Self> {
        if log_masses.len() != grid.len() {
            return Err(CoresetError::InvalidArgument("one log mass per node required"));
        }
        if log_masses.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(CoresetError::InvalidArgument("log masses must be finite or -inf"));
        }
        let log_normalizer = math::log_sum_exp(&log_masses);
        if log_normalizer == f64::NEG_INFINITY {
            return Err(CoresetError::DegenerateDistribution);
        }
        for x in log_masses.iter_mut() {
            *x -= log_normalizer;
        }
        Ok(Self {
            grid,
            log_masses,
            log_normalizer,
        })
    }

    /// Normalizes per-node log densities; the cell volume is added here.
    pub fn from_log_density(grid: Arc<Grid>, log_density: Vec<f64>) -> Result<Self> {
        let masses = log_density
            .into_iter()
            .enumerate()
            .map(|(k, v)| v + grid.log_volume(k))
            .collect();
        Self::from_log_masses(grid, masses)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_masses
    }

    /// log Z relative to the unnormalized density that was supplied.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn masses(&self) -> Vec<f64> {
        self.log_masses.iter().map(|&l| math::exp(l)).collect()
    }

    /// `Σ_k p_k f(node_k)`.
    pub fn expectation<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let d = self.grid.dims();
        let mut p = [0.0; 2];
        let mut acc = 0.0;
        for (k, &l) in self.log_masses.iter().enumerate() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            self.grid.node(k, &mut p);
            acc += math::exp(l) * f(&p[..d]);
        }
        acc
    }

    /// Draws `count` points (flattened with stride `dims`): a cell by its
    /// mass, then a uniform point inside the cell.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        let cdf = cumulative(&self.masses());
        let d = self.grid.dims();
        let mut out = Vec::with_capacity(count * d);
        for _ in 0..count {
            let k = draw_index(&cdf, rng.random::<f64>());
            let cell = self.grid.cell(k);
            for c in cell.iter().take(d) {
                out.push(c.0 + (c.1 - c.0) * rng.random::<f64>());
            }
        }
        out
    }
}

/// Running sums normalized so the last entry is exactly 1.
pub fn cumulative(masses: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = masses
        .iter()
        .map(|&m| {
            acc += m;
            acc
        })
        .collect();
    if let Some(total) = cdf.last().copied() {
        for c in cdf.iter_mut() {
            *c /= total;
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
    }
    cdf
}

/// First index whose cumulative value exceeds `u`; zero-mass entries are never chosen.
pub fn draw_index(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// `Σ p_i (log p_i − log q_i)` over normalized log masses, with
/// `0 · log(0/q) = 0` and `+∞` when `p` has mass where `q` has none.
pub fn kl_log_masses(log_p: &[f64], log_q: &[f64]) -> f64 {
    // ln Σ p e^{-s}, s = log ratio centered under p.
    let mut p_total = 0.0;
    let mut mean = 0.0;
    let mut off = math::LogSumExp::new();
    for (&lp, &lq) in log_p.iter().zip(log_q) {
        if lp == f64::NEG_INFINITY {
            off.push(lq);
            continue;
        }
        if lq == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        let p = math::exp(lp);
        p_total += p;
        mean += p * (lp - lq);
    }
    if p_total == 0.0 {
        return 0.0;
    }
    mean /= p_total;
    let log_total = math::ln(p_total);
    let log_off = mean + off.value() - log_total;
    let mut spread: f64 = 0.0;
    let mut excess = 0.0;
    let mut drift = 0.0;
    for (&lp, &lq) in log_p.iter().zip(log_q) {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let p = math::exp(lp);
        let s = lp - lq - mean;
        spread = spread.max(s.abs());
        excess += p * (math::exp_m1(-s) + s);
        drift += p * s;
    }
    let kl = if spread <= 1.0 {
        math::ln_1p((excess - drift) / p_total + math::exp(log_off))
    } else {
        let mut acc = math::LogSumExp::new();
        for (&lp, &lq) in log_p.iter().zip(log_q) {
            if lp != f64::NEG_INFINITY {
                acc.push(lq - log_total + mean);
            }
        }
        acc.push(log_off);
        acc.value()
    };
    kl.max(0.0)
}

/// KL(p || q) for distributions on the same grid.
pub fn kl(p: &GridDistribution, q: &GridDistribution) -> Result<f64> {
    if !Arc::ptr_eq(&p.grid, &q.grid) && p.grid != q.grid {
        return Err(CoresetError::GridMismatch);
    }
    Ok(kl_log_masses(&p.log_masses, &q.log_masses))
}

/// Mean vector and covariance matrix of `columns` (each a per-node value
/// vector) under node masses.
pub fn weighted_covariance(masses: &[f64], columns: &[Vec<f64>]) -> (Vec<f64>, Matrix) {
    let k = columns.len();
    let means: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().zip(masses).map(|(v, p)| v * p).sum())
        .collect();
    let mut cov = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut s = 0.0;
            for (i, &p) in masses.iter().enumerate() {
                if p > 0.0 {
                    s += p * ((columns[a][i] - means[a]) * (columns[b][i] - means[b]));
                }
            }
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    (means, cov)
}

/// Per-node values of ℓ_n for one potential.
pub fn potential_column<T: Target + ?Sized>(target: &T, grid: &Grid, n: usize) -> Vec<f64> {
    let d = grid.dims();
    let mut p = [0.0; 2];
    (0..grid.len())
        .map(|k| {
            grid.node(k, &mut p);
            target.potential(n, &p[..d])
        })
        .collect()
}

/// Covariance under `dist` of the potentials listed in `indices`.
pub fn covariance_of_potentials<T: Target + ?Sized>(
    dist: &GridDistribution,
    target: &T,
    indices: &[usize],
) -> Result<Matrix> {
    if let Some(&bad) = indices.iter().find(|&&n| n >= target.len()) {
        return Err(CoresetError::IndexOutOfRange {
            index: bad,
            len: target.len(),
        });
    }
    let columns: Vec<Vec<f64>> = indices
        .iter()
        .map(|&n| potential_column(target, dist.grid(), n))
        .collect();
    Ok(weighted_covariance(&dist.masses(), &columns).1)
}

/// Per-node `Σ w_n ℓ_n`.
pub fn weighted_field<T: Target + ?Sized>(target: &T, weights: &CoresetWeights, grid: &Grid) -> Vec<f64> {
    let d = grid.dims();
    let mut out = alloc::vec![0.0; grid.len()];
    let mut p = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        grid.node(k, &mut p);
        *o = target.weighted_potential(weights, &p[..d]);
    }
    out
}

fn prior_field<T: Target + ?Sized>(target: &T, grid: &Grid) -> Vec<f64> {
    let d = grid.dims();
    let mut p = [0.0; 2];
    (0..grid.len())
        .map(|k| {
            grid.node(k, &mut p);
            target.log_prior(&p[..d]) + grid.log_volume(k)
        })
        .collect()
}

/// π_w on `grid`: log π_0 + Σ w_n ℓ_n + log(cell volume), normalized.
pub fn build_posterior<T: Target + ?Sized>(
    target: &T,
    weights: &CoresetWeights,
    grid: Arc<Grid>,
) -> Result<GridDistribution> {
    check_weights(target, weights)?;
    let base = prior_field(target, &grid);
    let field = weighted_field(target, weights, &grid);
    let masses = base.iter().zip(&field).map(|(b, f)| b + f).collect();
    GridDistribution::from_log_masses(grid, masses)
}

fn check_weights<T: Target + ?Sized>(target: &T, weights: &CoresetWeights) -> Result<()> {
    if weights.n_total() > target.len() {
        // Zero padding on indices beyond the data is harmless.
        if weights.indices().any(|n| n >= target.len()) {
            return Err(CoresetError::IndexOutOfRange {
                index: weights.indices().last().unwrap_or(0),
                len: target.len(),
            });
        }
    }
    Ok(())
}

/// Unnormalized log density of π_w at a point.
fn log_density<T: Target + ?Sized>(target: &T, weights: &CoresetWeights, x: &[f64]) -> f64 {
    target.log_prior(x) + target.weighted_potential(weights, x)
}

// ---------------------------------------------------------------------------
// Uniform grids from a coarse scan.

const SCAN_CELLS: usize = 129;

/// Uniform grid containing every point where each configuration's
/// unnormalized log-density is within `cutoff` nats of its maximum, padded by
/// `pad` per side. Two-dimensional grids above 2^20 nodes fall back to
/// 1024 cells per axis with a 30-nat cutoff.
pub fn auto_grid<T: Target + ?Sized>(
    target: &T,
    configs: &[&CoresetWeights],
    opts: &GridOptions,
) -> Result<Grid> {
    let d = target.dim();
    if d != 1 && d != 2 {
        return Err(CoresetError::InvalidArgument("targets have dimension one or two"));
    }
    let mut opts = *opts;
    if d == 2 && opts.cells_2d * opts.cells_2d > MAX_NODES_2D {
        opts.cells_2d = 1024;
        opts.cutoff = opts.cutoff.min(30.0);
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for w in configs {
        check_weights(target, w)?;
        let (l, h) = scan_box(target, w, opts.cutoff)?;
        for a in 0..d {
            lo[a] = lo[a].min(l[a]);
            hi[a] = hi[a].max(h[a]);
        }
    }
    let mut axes = Vec::with_capacity(d);
    for a in 0..d {
        let pad = opts.pad * (hi[a] - lo[a]);
        let (dlo, dhi) = target.domain(a);
        let l = (lo[a] - pad).max(dlo);
        let h = (hi[a] + pad).min(dhi);
        let cells = if d == 1 { opts.cells_1d } else { opts.cells_2d };
        axes.push(Axis::uniform(l, h, cells)?);
    }
    Grid::new(axes)
}

/// Bounding box of the cutoff region of one configuration.
fn scan_box<T: Target + ?Sized>(target: &T, w: &CoresetWeights, cutoff: f64) -> Result<([f64; 2], [f64; 2])> {
    let d = target.dim();
    let f = |x: &[f64]| log_density(target, w, x);
    let mut hints = target.mode_hints(w);
    hints.extend(core::iter::repeat_n(0.0, d));
    let hint_points: Vec<&[f64]> = hints.chunks(d).collect();

    let mut fmax = f64::NEG_INFINITY;
    let mut extent: f64 = 1.0;
    for h in &hint_points {
        let v = f(h);
        if v.is_finite() {
            fmax = fmax.max(v);
        }
        for &c in h.iter() {
            extent = extent.max(1.5 * c.abs() + 1.0);
        }
    }

    let center = [0.0f64; 2];
    let mut values = Vec::new();
    let mut coords = Vec::new();
    for _ in 0..80 {
        values.clear();
        coords.clear();
        let step = 2.0 * extent / (SCAN_CELLS - 1) as f64;
        let count = if d == 1 { SCAN_CELLS } else { SCAN_CELLS * SCAN_CELLS };
        let mut boundary_max = f64::NEG_INFINITY;
        for k in 0..count {
            let (i, j) = if d == 1 { (k, 0) } else { (k / SCAN_CELLS, k % SCAN_CELLS) };
            let mut p = [center[0] - extent + step * i as f64, center[1] - extent + step * j as f64];
            for (a, pa) in p.iter_mut().enumerate().take(d) {
                let (dl, dh) = target.domain(a);
                *pa = pa.clamp(dl, dh);
            }
            let v = f(&p[..d]);
            let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
            if v > fmax {
                fmax = v;
            }
            let on_boundary = i == 0 || i == SCAN_CELLS - 1 || (d == 2 && (j == 0 || j == SCAN_CELLS - 1));
            if on_boundary {
                boundary_max = boundary_max.max(v);
            }
            values.push(v);
            coords.push(p);
        }
        if fmax == f64::NEG_INFINITY {
            return Err(CoresetError::NoFiniteDensity);
        }
        if boundary_max < fmax - cutoff || extent > 1e15 {
            break;
        }
        extent *= 2.0;
    }
    if fmax == f64::NEG_INFINITY {
        return Err(CoresetError::NoFiniteDensity);
    }
    let step = 2.0 * extent / (SCAN_CELLS - 1) as f64;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut include = |p: &[f64]| {
        for a in 0..d {
            lo[a] = lo[a].min(p[a] - step);
            hi[a] = hi[a].max(p[a] + step);
        }
    };
    for (v, p) in values.iter().zip(&coords) {
        if *v >= fmax - cutoff {
            include(&p[..d]);
        }
    }
    for h in &hint_points {
        if f(h) >= fmax - cutoff {
            include(h);
        }
    }
    Ok((lo, hi))
}

// ---------------------------------------------------------------------------
// Adaptive one-dimensional grids.

/// A local maximum of a one-dimensional log-density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub at: f64,
    pub value: f64,
    /// Local standard deviation from the curvature at the mode.
    pub scale: f64,
}

/// Finds every local maximum of `f` within `cutoff` nats of the global one,
/// by scanning a graded grid around `hints` and refining each bracket.
pub fn find_modes<F: Fn(f64) -> f64>(f: &F, hints: &[f64], domain: (f64, f64), cutoff: f64) -> Result<Vec<Mode>> {
    let mut hints: Vec<f64> = hints
        .iter()
        .copied()
        .filter(|h| h.is_finite())
        .map(|h| h.clamp(domain.0, domain.1))
        .collect();
    if hints.is_empty() {
        hints.push(0.0f64.clamp(domain.0, domain.1));
    }
    let hmin = hints.iter().copied().fold(f64::INFINITY, f64::min);
    let hmax = hints.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let reach = 1e4 * (1.0 + (hmax - hmin) + hmax.abs().max(hmin.abs()));
    let lo = (hmin - reach).max(domain.0);
    let hi = (hmax + reach).min(domain.1);
    let anchors: Vec<Anchor> = hints
        .iter()
        .map(|&h| Anchor {
            at: h,
            spacing: 1e-4 * (1.0 + h.abs()),
            core: 0.0,
        })
        .collect();
    let axis = Axis::graded(lo, hi, &anchors, 0.05)?;
    // Scan points: every edge plus every hint.
    let mut xs: Vec<f64> = axis.edges().to_vec();
    xs.extend_from_slice(&hints);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vs: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let v = f(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect();
    let scan_max = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scan_max == f64::NEG_INFINITY {
        return Err(CoresetError::NoFiniteDensity);
    }

    let mut modes: Vec<Mode> = Vec::new();
    let last = xs.len() - 1;
    for i in 0..=last {
        let left = if i > 0 { vs[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < last { vs[i + 1] } else { f64::NEG_INFINITY };
        if !(vs[i] >= left && vs[i] >= right) || vs[i] < scan_max - cutoff - 20.0 {
            continue;
        }
        let a = if i > 0 { xs[i - 1] } else { xs[i] };
        let b = if i < last { xs[i + 1] } else { xs[i] };
        let (at, value) = golden_max(f, a, b, xs[i], vs[i]);
        let scale = local_scale(f, at, value, (b - a).max(1e-12 * (1.0 + at.abs())), domain);
        if modes.iter().any(|m| (m.at - at).abs() <= 0.5 * m.scale.min(scale)) {
            continue;
        }
        modes.push(Mode { at, value, scale });
    }
    let best = modes.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max);
    modes.retain(|m| m.value >= best - cutoff);
    modes.sort_by(|a, b| a.at.total_cmp(&b.at));
    Ok(modes)
}

/// Golden-section maximization on `[a, b]`, seeded with a known point.
fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, x0: f64, v0: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (x0, v0);
    if !(b > a) {
        return best;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a) <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// `1/sqrt(-f'')` at a maximum, by second differences on a shrinking step.
fn local_scale<F: Fn(f64) -> f64>(f: &F, at: f64, value: f64, bracket: f64, domain: (f64, f64)) -> f64 {
    let mut delta = (bracket / 8.0).max(1e-10 * (1.0 + at.abs()));
    let mut scale = bracket;
    for _ in 0..8 {
        let curv = if at - delta >= domain.0 && at + delta <= domain.1 {
            -(f(at + delta) - 2.0 * value + f(at - delta)) / (delta * delta)
        } else if at + 2.0 * delta <= domain.1 {
            -(f(at + 2.0 * delta) - 2.0 * f(at + delta) + value) / (delta * delta)
        } else {
            -(f(at - 2.0 * delta) - 2.0 * f(at - delta) + value) / (delta * delta)
        };
        if !(curv > 0.0) || !curv.is_finite() {
            break;
        }
        scale = 1.0 / math::sqrt(curv);
        if delta <= 0.25 * scale || delta <= 1e-10 * (1.0 + at.abs()) {
            break;
        }
        delta = (scale / 8.0).max(1e-10 * (1.0 + at.abs()));
    }
    scale.max(1e-12 * (1.0 + at.abs()))
}

/// Distance from `from` (towards `dir`) at which `f` first drops below
/// `floor`, by doubling steps; stops at the domain edge.
fn march<F: Fn(f64) -> f64>(f: &F, from: f64, dir: f64, step: f64, floor: f64, domain: (f64, f64)) -> f64 {
    let mut d = step;
    for _ in 0..400 {
        let x = from + dir * d;
        if x <= domain.0 {
            return domain.0;
        }
        if x >= domain.1 {
            return domain.1;
        }
        if !(f(x) >= floor) {
            return x;
        }
        if d > 1e15 {
            return x;
        }
        d *= 2.0;
    }
    from + dir * d
}

/// Modes and extent of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    pub modes: Vec<Mode>,
    pub lower: f64,
    pub upper: f64,
}

/// Locates the modes of π_w and the interval outside which its
/// unnormalized log-density is more than `cutoff` below the maximum.
pub fn footprint<T: Target + ?Sized>(target: &T, weights: &CoresetWeights, cutoff: f64) -> Result<Footprint> {
    if target.dim() != 1 {
        return Err(CoresetError::InvalidArgument("adaptive grids are one-dimensional"));
    }
    check_weights(target, weights)?;
    let domain = target.domain(0);
    let f = |x: f64| log_density(target, weights, &[x]);
    let modes = find_modes(&f, &target.mode_hints(weights), domain, cutoff)?;
    let best = modes.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max);
    let first = modes.first().ok_or(CoresetError::NoFiniteDensity)?;
    let last = modes.last().ok_or(CoresetError::NoFiniteDensity)?;
    let floor = best - cutoff;
    let lower = if first.at <= domain.0 {
        domain.0
    } else {
        march(&f, first.at, -1.0, first.scale, floor, domain)
    };
    let upper = if last.at >= domain.1 {
        domain.1
    } else {
        march(&f, last.at, 1.0, last.scale, floor, domain)
    };
    Ok(Footprint {
        modes: modes.clone(),
        lower,
        upper,
    })
}

/// Graded one-dimensional grid covering the footprints of all configurations.
pub fn adaptive_grid_from(footprints: &[Footprint], domain: (f64, f64), opts: &AdaptiveOptions) -> Result<Grid> {
    let lo = footprints.iter().map(|f| f.lower).fold(f64::INFINITY, f64::min);
    let hi = footprints.iter().map(|f| f.upper).fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(CoresetError::InvalidGrid("empty footprint"));
    }
    let pad = opts.pad * (hi - lo);
    let lo = (lo - pad).max(domain.0);
    let hi = (hi + pad).min(domain.1);
    let anchors: Vec<Anchor> = footprints
        .iter()
        .flat_map(|f| f.modes.iter())
        .map(|m| Anchor {
            at: m.at,
            spacing: m.scale / opts.cells_per_sd,
            core: opts.core_sds * m.scale,
        })
        .collect();
    Grid::new(alloc::vec![Axis::graded(lo, hi, &anchors, opts.growth)?])
}

/// Graded grid covering π_w for every configuration in `configs`.
pub fn adaptive_grid<T: Target + ?Sized>(
    target: &T,
    configs: &[&CoresetWeights],
    opts: &AdaptiveOptions,
) -> Result<Grid> {
    let footprints = configs
        .iter()
        .map(|w| footprint(target, w, opts.cutoff))
        .collect::<Result<Vec<_>>>()?;
    adaptive_grid_from(&footprints, target.domain(0), opts)
}

// ---------------------------------------------------------------------------
// Shared-grid evaluation.

/// Forward and reverse KL between π and π_w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlPair {
    /// KL(π || π_w).
    pub forward: f64,
    /// KL(π_w || π).
    pub reverse: f64,
}

impl KlPair {
    pub fn min(&self) -> f64 {
        self.forward.min(self.reverse)
    }

    pub fn max(&self) -> f64 {
        self.forward.max(self.reverse)
    }

    pub fn is_finite(&self) -> bool {
        self.forward.is_finite() && self.reverse.is_finite()
    }
}

/// Per-node `Σ w_n ℓ_n` for one weight vector, with the tails of the sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetField {
    pub values: Vec<f64>,
    /// Tail of `Σ w_n ℓ_n` (lower, upper); `None` when unknown or bounded.
    pub tails: [Option<Tail>; 2],
}

/// Grid with the prior and full-data potential already evaluated, so any
/// number of coreset posteriors can be compared against π cheaply.
#[derive(Debug, Clone)]
pub struct Workspace {
    grid: Arc<Grid>,
    /// log π_0 + log(cell volume).
    base: Vec<f64>,
    full: CoresetField,
    prior_tails: [Option<Tail>; 2],
    posterior: GridDistribution,
}

const SIDES: [Side; 2] = [Side::Lower, Side::Upper];

fn potential_tails<T: Target + ?Sized>(target: &T, weights: &CoresetWeights) -> [Option<Tail>; 2] {
    if target.dim() != 1 {
        return [None, None];
    }
    SIDES.map(|side| {
        let mut t = Tail::ZERO;
        for &(n, w) in weights.entries() {
            t = t.add_scaled(target.potential_tail(n, side)?, w);
        }
        Some(t)
    })
}

impl Workspace {
    pub fn new<T: Target + ?Sized>(target: &T, grid: Grid) -> Result<Self> {
        let grid = Arc::new(grid);
        let base = prior_field(target, &grid);
        let ones = CoresetWeights::ones(target.len());
        let full = CoresetField {
            values: weighted_field(target, &ones, &grid),
            tails: potential_tails(target, &ones),
        };
        let prior_tails = if target.dim() == 1 {
            SIDES.map(|s| target.prior_tail(s))
        } else {
            [None, None]
        };
        let masses = base.iter().zip(&full.values).map(|(b, f)| b + f).collect();
        let posterior = GridDistribution::from_log_masses(grid.clone(), masses)?;
        Ok(Self {
            grid,
            base,
            full,
            prior_tails,
            posterior,
        })
    }

    /// Adaptive grid covering π and π_w for every weight vector given.
    pub fn covering<T: Target + ?Sized>(
        target: &T,
        configs: &[&CoresetWeights],
        opts: &AdaptiveOptions,
    ) -> Result<Self> {
        let ones = CoresetWeights::ones(target.len());
        let mut all: Vec<&CoresetWeights> = alloc::vec![&ones];
        all.extend_from_slice(configs);
        let grid = if target.dim() == 1 {
            adaptive_grid(target, &all, opts)?
        } else {
            auto_grid(target, &all, &GridOptions::default())?
        };
        Self::new(target, grid)
    }

    /// Adaptive grid from footprints computed beforehand, so the footprint of
    /// π can be shared between workspaces on the same data.
    pub fn from_footprints<T: Target + ?Sized>(
        target: &T,
        footprints: &[Footprint],
        opts: &AdaptiveOptions,
    ) -> Result<Self> {
        Self::new(target, adaptive_grid_from(footprints, target.domain(0), opts)?)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// The full-data posterior π.
    pub fn posterior(&self) -> &GridDistribution {
        &self.posterior
    }

    /// Per-node log π_0 plus log cell volume.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn full(&self) -> &CoresetField {
        &self.full
    }

    pub fn field<T: Target + ?Sized>(&self, target: &T, weights: &CoresetWeights) -> Result<CoresetField> {
        check_weights(target, weights)?;
        Ok(CoresetField {
            values: weighted_field(target, weights, &self.grid),
            tails: potential_tails(target, weights),
        })
    }

    /// π_{αw} for the field of `w`.
    pub fn distribution(&self, field: &CoresetField, alpha: f64) -> Result<GridDistribution> {
        let masses = self
            .base
            .iter()
            .zip(&field.values)
            .map(|(b, f)| if alpha == 0.0 { *b } else { b + alpha * f })
            .collect();
        GridDistribution::from_log_masses(self.grid.clone(), masses)
    }

    fn density_tail(&self, side: usize, field: &CoresetField, alpha: f64) -> Option<Tail> {
        let prior = self.prior_tails[side]?;
        if alpha == 0.0 {
            return Some(prior);
        }
        Some(prior.add_scaled(field.tails[side]?, alpha))
    }

    /// Whether (forward, reverse) KL between π and π_{αw} have finite tails.
    pub fn tails_finite(&self, field: &CoresetField, alpha: f64) -> (bool, bool) {
        let mut fwd = true;
        let mut rev = true;
        for side in 0..2 {
            let (Some(p), Some(q)) = (self.density_tail(side, &self.full, 1.0), self.density_tail(side, field, alpha))
            else {
                continue;
            };
            fwd &= kl_tail_finite(p, q);
            rev &= kl_tail_finite(q, p);
        }
        (fwd, rev)
    }

    /// (KL(π || π_{αw}), KL(π_{αw} || π)); a direction whose tail integral
    /// diverges is reported as `+∞`.
    pub fn kl_pair(&self, field: &CoresetField, alpha: f64) -> Result<KlPair> {
        let q = self.distribution(field, alpha)?;
        let p = &self.posterior;
        let (fwd_ok, rev_ok) = self.tails_finite(field, alpha);
        let forward = if fwd_ok { kl(p, &q)? } else { f64::INFINITY };
        let reverse = if rev_ok { kl(&q, p)? } else { f64::INFINITY };
        Ok(KlPair { forward, reverse })
    }

    /// Whether `π_0 exp(Σ c_i f_i)` is integrable on every side where all
    /// tails are known, for fields `f_i` with coefficients `c_i`.
    pub fn tilted_integrable(&self, terms: &[(&CoresetField, f64)]) -> bool {
        'sides: for side in 0..2 {
            let Some(mut t) = self.prior_tails[side] else { continue };
            for (f, c) in terms {
                match f.tails[side] {
                    Some(ft) => t = t.add_scaled(ft, *c),
                    None => continue 'sides,
                }
            }
            if !t.integrable() {
                return false;
            }
        }
        true
    }

    /// KL(π || π_{αw}) alone.
    pub fn kl_pair_forward(&self, field: &CoresetField, alpha: f64) -> Result<f64> {
        if !self.tails_finite(field, alpha).0 {
            return Ok(f64::INFINITY);
        }
        let q = self.distribution(field, alpha)?;
        kl(&self.posterior, &q)
    }

    /// KL(π_{αw} || π) alone.
    pub fn kl_pair_reverse(&self, field: &CoresetField, alpha: f64) -> Result<f64> {
        if !self.tails_finite(field, alpha).1 {
            return Ok(f64::INFINITY);
        }
        let q = self.distribution(field, alpha)?;
        kl(&q, &self.posterior)
    }

    /// Same evaluation on the grid with every cell split in two.
    pub fn refined<T: Target + ?Sized>(&self, target: &T) -> Result<Self> {
        Self::new(target, self.grid.refined()?)
    }
}

/// KL(π || π_w) and KL(π_w || π) on one grid covering both.
pub fn kl_pair<T: Target + ?Sized>(target: &T, weights: &CoresetWeights) -> Result<KlPair> {
    let ws = Workspace::covering(target, &[weights], &AdaptiveOptions::default())?;
    let field = ws.field(target, weights)?;
    ws.kl_pair(&field, 1.0)
}

/// Log-sum-exp of per-node values weighted by normalized masses:
/// `log Σ_k p_k exp(g_k)`.
pub fn log_expectation_exp(log_masses: &[f64], g: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for (&lp, &gk) in log_masses.iter().zip(g) {
        acc.push(lp + gk);
    }
    acc.value()
}
