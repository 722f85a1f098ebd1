//! Tensor-product quadrature grids. Each axis is a strictly increasing list of
//! cell edges; nodes sit at cell midpoints and carry the cell volume as their
//! midpoint-rule weight.

use alloc::vec::Vec;

use crate::error::{CoresetError, Result};
use crate::math;

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 64;
/// Maximum total nodes of a two-dimensional grid.
pub const MAX_NODES_2D: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    edges: Vec<f64>,
}

impl Axis {
    /// `cells` equal cells on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(CoresetError::InvalidGrid("bounds must be finite"));
        }
        if !(lo < hi) {
            return Err(CoresetError::InvalidGrid("lower bound must be below upper bound"));
        }
        if cells < MIN_CELLS {
            return Err(CoresetError::InvalidGrid("fewer than 64 cells on an axis"));
        }
        let h = (hi - lo) / cells as f64;
        let mut edges: Vec<f64> = (0..cells).map(|i| lo + h * i as f64).collect();
        edges.push(hi);
        Self::from_edges(edges)
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < MIN_CELLS + 1 {
            return Err(CoresetError::InvalidGrid("fewer than 64 cells on an axis"));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(CoresetError::InvalidGrid("bounds must be finite"));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoresetError::InvalidGrid("edges must be strictly increasing"));
        }
        Ok(Self { edges })
    }

    /// Graded axis on `[lo, hi]`: cells of width `spacing` within `core` of an
    /// anchor, growing by `growth` per unit distance beyond it. The width at
    /// `z` is the minimum over anchors, capped at `(hi - lo) / 64`.
    pub fn graded(lo: f64, hi: f64, anchors: &[Anchor], growth: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || !(lo < hi) {
            return Err(CoresetError::InvalidGrid("invalid graded axis bounds"));
        }
        if !(growth > 0.0 && growth < 1.0) {
            return Err(CoresetError::InvalidArgument("growth must lie in (0, 1)"));
        }
        if anchors.iter().any(|a| !(a.spacing > 0.0) || !a.at.is_finite()) {
            return Err(CoresetError::InvalidArgument("anchor spacing must be positive"));
        }
        let cap = (hi - lo) / MIN_CELLS as f64;
        let width = |z: f64| {
            anchors
                .iter()
                .map(|a| a.spacing + growth * ((z - a.at).abs() - a.core).max(0.0))
                .fold(cap, f64::min)
        };
        let mut edges = alloc::vec![lo];
        let mut e = lo;
        loop {
            let step = width(e).min(width(e + width(e)));
            let next = e + step;
            if next >= hi || hi - next < 0.5 * step {
                break;
            }
            // Steps too small to move the edge in floating point.
            if next <= e {
                return Err(CoresetError::InvalidGrid("graded spacing below floating-point resolution"));
            }
            edges.push(next);
            e = next;
        }
        edges.push(hi);
        let mut axis = Self { edges };
        while axis.cells() < MIN_CELLS {
            axis = axis.refined();
        }
        Ok(axis)
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    #[inline]
    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Splits every cell in two.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len() - 1);
        for w in self.edges.windows(2) {
            edges.push(w[0]);
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(self.upper());
        Self { edges }
    }
}

/// Fine-resolution region of a graded axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub at: f64,
    pub spacing: f64,
    pub core: f64,
}

/// Tensor grid of one or two axes. Node `k` of a 2-D grid is
/// `(axis0[k / n1], axis1[k % n1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        match axes.len() {
            1 => {}
            2 => {
                if axes[0].cells().saturating_mul(axes[1].cells()) > MAX_NODES_2D {
                    return Err(CoresetError::InvalidGrid("two-dimensional grid exceeds 2^20 nodes"));
                }
            }
            _ => return Err(CoresetError::InvalidGrid("grids have one or two axes")),
        }
        Ok(Self { axes })
    }

    pub fn uniform_1d(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::new(alloc::vec![Axis::uniform(lo, hi, cells)?])
    }

    pub fn uniform_2d(bounds: [(f64, f64); 2], cells: [usize; 2]) -> Result<Self> {
        Self::new(alloc::vec![
            Axis::uniform(bounds[0].0, bounds[0].1, cells[0])?,
            Axis::uniform(bounds[1].0, bounds[1].1, cells[1])?,
        ])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::cells).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn split(&self, k: usize) -> (usize, usize) {
        if self.axes.len() == 1 {
            (k, 0)
        } else {
            let n1 = self.axes[1].cells();
            (k / n1, k % n1)
        }
    }

    /// Coordinates of node `k`, written to `out[..dims]`.
    #[inline]
    pub fn node(&self, k: usize, out: &mut [f64; 2]) {
        let (i, j) = self.split(k);
        out[0] = self.axes[0].center(i);
        if self.axes.len() == 2 {
            out[1] = self.axes[1].center(j);
        }
    }

    /// Cell of node `k` as per-axis `(lo, hi)`.
    pub fn cell(&self, k: usize) -> [(f64, f64); 2] {
        let (i, j) = self.split(k);
        let a = &self.axes[0];
        let first = (a.edges[i], a.edges[i + 1]);
        let second = if self.axes.len() == 2 {
            let b = &self.axes[1];
            (b.edges[j], b.edges[j + 1])
        } else {
            (0.0, 0.0)
        };
        [first, second]
    }

    /// Natural log of the cell volume of node `k`.
    #[inline]
    pub fn log_volume(&self, k: usize) -> f64 {
        let (i, j) = self.split(k);
        let mut v = self.axes[0].width(i);
        if self.axes.len() == 2 {
            v *= self.axes[1].width(j);
        }
        math::ln(v)
    }

    /// Every axis with each cell split in two (node count doubles per axis).
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.axes.iter().map(Axis::refined).collect())
    }

    /// All node coordinates, flattened with stride `dims()`.
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.dims();
        let mut out = Vec::with_capacity(self.len() * d);
        let mut p = [0.0; 2];
        for k in 0..self.len() {
            self.node(k, &mut p);
            out.extend_from_slice(&p[..d]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_axis_validation() {
        assert!(Axis::uniform(0.0, 1.0, 63).is_err());
        assert!(Axis::uniform(1.0, 1.0, 64).is_err());
        assert!(Axis::uniform(0.0, f64::INFINITY, 64).is_err());
        let a = Axis::uniform(-1.0, 1.0, 64).unwrap();
        assert_eq!(a.cells(), 64);
        assert!((a.center(0) + 1.0 - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_doubles_and_preserves_volume() {
        let g = Grid::uniform_2d([(-1.0, 1.0), (0.0, 3.0)], [64, 80]).unwrap();
        let r = g.refined().unwrap();
        assert_eq!(r.len(), 4 * g.len());
        let vol = |g: &Grid| (0..g.len()).map(|k| g.log_volume(k).exp()).sum::<f64>();
        assert!((vol(&g) - 6.0).abs() < 1e-10);
        assert!((vol(&r) - 6.0).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_cap() {
        assert!(Grid::uniform_2d([(0.0, 1.0), (0.0, 1.0)], [1025, 1024]).is_err());
        assert!(Grid::uniform_2d([(0.0, 1.0), (0.0, 1.0)], [1024, 1024]).is_ok());
    }

    #[test]
    fn graded_axis_is_fine_near_anchor_and_covers_range() {
        let anchors = [Anchor { at: 2.0, spacing: 1e-3, core: 1e-2 }];
        let a = Axis::graded(-1e6, 1e6, &anchors, 0.02).unwrap();
        assert_eq!(a.lower(), -1e6);
        assert_eq!(a.upper(), 1e6);
        let near = (0..a.cells()).find(|&i| a.edges()[i + 1] > 2.0).unwrap();
        assert!(a.width(near) <= 1.1e-3);
        assert!(a.cells() < 5000, "cells = {}", a.cells());
        // Neighbouring widths change slowly.
        for i in 1..a.cells() - 2 {
            let r = a.width(i) / a.width(i - 1);
            assert!(r < 1.1 && r > 1.0 / 1.1, "ratio {r} at {i}");
        }
    }
}
