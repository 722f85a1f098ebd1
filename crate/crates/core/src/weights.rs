use alloc::vec::Vec;

use crate::error::{CoresetError, Result};

/// Sparse nonnegative weight vector over `n_total` data indices.
///
/// Only strictly positive weights are stored; entries are sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetWeights {
    n_total: usize,
    entries: Vec<(usize, f64)>,
    sum: f64,
}

impl CoresetWeights {
    /// All-ones weights: the full-data posterior.
    pub fn ones(n_total: usize) -> Self {
        Self {
            n_total,
            entries: (0..n_total).map(|i| (i, 1.0)).collect(),
            sum: n_total as f64,
        }
    }

    /// All-zero weights: the prior.
    pub fn zeros(n_total: usize) -> Self {
        Self {
            n_total,
            entries: Vec::new(),
            sum: 0.0,
        }
    }

    pub fn from_dense(w: &[f64]) -> Result<Self> {
        Self::from_entries(w.len(), w.iter().copied().enumerate())
    }

    /// Builds weights from `(index, weight)` pairs. Repeated indices are merged
    /// by summing their weights.
    pub fn from_entries<I>(n_total: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut v: Vec<(usize, f64)> = Vec::new();
        for (i, w) in entries {
            if i >= n_total {
                return Err(CoresetError::IndexOutOfRange {
                    index: i,
                    len: n_total,
                });
            }
            if !w.is_finite() {
                return Err(CoresetError::InvalidWeights("weight is not finite"));
            }
            if w < 0.0 {
                return Err(CoresetError::InvalidWeights("weight is negative"));
            }
            if w > 0.0 {
                v.push((i, w));
            }
        }
        v.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (i, w) in v {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => merged.push((i, w)),
            }
        }
        let sum = merged.iter().map(|e| e.1).sum();
        Ok(Self {
            n_total,
            entries: merged,
            sum,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Σ w_n.
    pub fn sum(&self) -> f64 {
        self.sum
    }

    /// Number of strictly positive weights.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n_total];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }

    /// `alpha · w`; `alpha = 0` yields the empty (prior) weights.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(CoresetError::InvalidArgument("scale must be finite and nonnegative"));
        }
        if alpha == 0.0 {
            return Ok(Self::zeros(self.n_total));
        }
        let entries: Vec<(usize, f64)> = self.entries.iter().map(|&(i, w)| (i, alpha * w)).collect();
        let sum = entries.iter().map(|e| e.1).sum();
        Ok(Self {
            n_total: self.n_total,
            entries,
            sum,
        })
    }

    /// Same weights viewed over a larger index range (new indices are zero).
    pub fn padded(&self, n_total: usize) -> Result<Self> {
        if n_total < self.n_total {
            return Err(CoresetError::InvalidArgument("padding cannot shrink the index range"));
        }
        Ok(Self {
            n_total,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates_and_drops_zeros() {
        let w = CoresetWeights::from_entries(5, [(3, 1.0), (1, 0.0), (3, 2.0), (0, 0.5)]).unwrap();
        assert_eq!(w.entries(), &[(0, 0.5), (3, 3.0)]);
        assert_eq!(w.support_len(), 2);
        assert_eq!(w.sum(), 3.5);
        assert_eq!(w.get(3), 3.0);
        assert_eq!(w.get(2), 0.0);
    }

    #[test]
    fn rejects_negative_and_out_of_range() {
        assert!(CoresetWeights::from_dense(&[1.0, -1.0]).is_err());
        assert!(CoresetWeights::from_entries(2, [(2, 1.0)]).is_err());
        assert!(CoresetWeights::from_dense(&[f64::NAN]).is_err());
    }

    #[test]
    fn scaling_keeps_sum_consistent() {
        let w = CoresetWeights::from_dense(&[0.1, 0.2, 0.0, 0.7]).unwrap();
        let s = w.scaled(3.0).unwrap();
        let direct: f64 = s.entries().iter().map(|e| e.1).sum();
        assert!((s.sum() - direct).abs() <= 1e-12 * direct);
        assert!(w.scaled(0.0).unwrap().is_empty());
        assert!(w.scaled(-1.0).is_err());
    }
}
