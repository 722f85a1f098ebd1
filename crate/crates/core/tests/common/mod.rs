#![allow(dead_code)]

use coreset_core::target::{Side, Tail, Target};

/// Standard normal base density with ℓ_1 = x and ℓ_2 = −x, so that
/// π = N(0, 1) and weights (2, 1) give π_w = N(1, 1).
pub struct GaussianPair;

impl Target for GaussianPair {
    fn dim(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        2
    }

    fn log_prior(&self, x: &[f64]) -> f64 {
        -0.5 * x[0] * x[0] - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    fn potential(&self, n: usize, x: &[f64]) -> f64 {
        if n == 0 {
            x[0]
        } else {
            -x[0]
        }
    }

    fn mode_hints(&self, _w: &coreset_core::weights::CoresetWeights) -> Vec<f64> {
        vec![0.0]
    }

    fn prior_tail(&self, _side: Side) -> Option<Tail> {
        Some(Tail { quad: -0.5, ..Tail::ZERO })
    }

    fn potential_tail(&self, n: usize, side: Side) -> Option<Tail> {
        let up = matches!(side, Side::Upper);
        Some(Tail::linear(if (n == 0) == up { 1.0 } else { -1.0 }))
    }
}
