//! The log-density interface consumed by quadrature and the bound routines.

use alloc::vec::Vec;

use crate::weights::CoresetWeights;

/// Which end of an unbounded axis a tail refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Asymptotic form of a log-density term as `|z| → ∞` on one side:
/// `quad·z² + lin·|z| + log·ln|z| + O(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tail {
    pub quad: f64,
    pub lin: f64,
    pub log: f64,
}

impl Tail {
    pub const ZERO: Tail = Tail {
        quad: 0.0,
        lin: 0.0,
        log: 0.0,
    };

    pub fn logarithmic(log: f64) -> Self {
        Tail { log, ..Self::ZERO }
    }

    pub fn linear(lin: f64) -> Self {
        Tail { lin, ..Self::ZERO }
    }

    pub fn add_scaled(self, other: Tail, c: f64) -> Tail {
        Tail {
            quad: self.quad + c * other.quad,
            lin: self.lin + c * other.lin,
            log: self.log + c * other.log,
        }
    }

    /// Whether `exp(self)` is integrable on the tail.
    pub fn integrable(&self) -> bool {
        if self.quad != 0.0 {
            return self.quad < 0.0;
        }
        if self.lin != 0.0 {
            return self.lin < 0.0;
        }
        self.log < -1.0
    }

    fn decays_exponentially(&self) -> bool {
        self.quad < 0.0 || (self.quad == 0.0 && self.lin < 0.0)
    }
}

/// Whether the tail contribution to `KL(p||q)` is finite, given the tails of
/// the unnormalized log-densities of `p` and `q`.
pub fn kl_tail_finite(p: Tail, q: Tail) -> bool {
    if !p.integrable() {
        return false;
    }
    if p.decays_exponentially() {
        return true;
    }
    // p is polynomial; log p − log q grows like |z|^g (g = 0 means logarithmic).
    let g = if q.quad != p.quad {
        2.0
    } else if q.lin != p.lin {
        1.0
    } else {
        0.0
    };
    p.log + g < -1.0
}

/// A posterior family `π_w ∝ π_0 exp(Σ w_n ℓ_n)` on ℝ^d, d ∈ {1, 2}.
pub trait Target {
    /// Dimension of the coordinate (1 or 2).
    fn dim(&self) -> usize;

    /// Number of potentials N.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Normalized log base density at `x`.
    fn log_prior(&self, x: &[f64]) -> f64;

    /// ℓ_n(x). Callers guarantee `n < len()`.
    fn potential(&self, n: usize, x: &[f64]) -> f64;

    /// Σ w_n ℓ_n(x).
    fn weighted_potential(&self, weights: &CoresetWeights, x: &[f64]) -> f64 {
        weights
            .entries()
            .iter()
            .map(|&(n, w)| w * self.potential(n, x))
            .sum()
    }

    /// Support of the coordinate along `axis`.
    fn domain(&self, _axis: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Candidate mode locations for `π_w` (flattened points of `dim()` values).
    fn mode_hints(&self, _weights: &CoresetWeights) -> Vec<f64> {
        Vec::new()
    }

    /// Tail of the log base density; `None` when unknown or the side is bounded.
    fn prior_tail(&self, _side: Side) -> Option<Tail> {
        None
    }

    /// Tail of ℓ_n; `None` when unknown or the side is bounded.
    fn potential_tail(&self, _n: usize, _side: Side) -> Option<Tail> {
        None
    }

    /// Tail of `log π_0 + Σ w_n ℓ_n`, when every term has a known tail.
    fn weighted_tail(&self, weights: &CoresetWeights, side: Side) -> Option<Tail> {
        let mut t = self.prior_tail(side)?;
        for &(n, w) in weights.entries() {
            t = t.add_scaled(self.potential_tail(n, side)?, w);
        }
        Some(t)
    }
}
