//! Nonnegative least squares, `min_{w ≥ 0} ‖G w − b‖²`, by the Lawson–Hanson
//! active-set method.

use alloc::vec::Vec;

use crate::error::{CoresetError, Result};
use crate::linalg::{dot, lstsq_min_norm, norm, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsProblem {
    columns: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// Dual-feasibility tolerance, relative to `max(1, max_j ‖g_j‖ · ‖b‖)`.
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub w: Vec<f64>,
    /// ‖G w − b‖².
    pub objective: f64,
    /// Gᵀ(G w − b).
    pub dual: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Absolute tolerance the KKT conditions were checked against.
    pub kkt_tolerance: f64,
}

impl NnlsSolution {
    /// `dual_j ≥ −tol` everywhere and `|dual_j| ≤ tol` on the support.
    pub fn satisfies_kkt(&self) -> bool {
        kkt_holds(&self.w, &self.dual, self.kkt_tolerance)
    }
}

fn kkt_holds(w: &[f64], dual: &[f64], tol: f64) -> bool {
    w.iter()
        .zip(dual)
        .all(|(&wj, &dj)| wj >= 0.0 && dj >= -tol && (wj == 0.0 || dj.abs() <= tol))
}

impl NnlsProblem {
    /// `g` is S×m with one feature column per weight.
    pub fn new(g: &Matrix, b: Vec<f64>) -> Result<Self> {
        let columns = (0..g.cols()).map(|j| g.column(j)).collect();
        Self::from_columns(columns, b)
    }

    pub fn from_columns(columns: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if b.is_empty() || columns.is_empty() {
            return Err(CoresetError::InvalidArgument("NNLS needs S ≥ 1 rows and m ≥ 1 columns"));
        }
        if columns.iter().any(|c| c.len() != b.len()) {
            return Err(CoresetError::InvalidArgument("every column must have S entries"));
        }
        if b.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(CoresetError::InvalidArgument("NNLS entries must be finite"));
        }
        let m = columns.len();
        Ok(Self {
            columns,
            b,
            tol: 1e-10,
            max_iter: 10 * m,
        })
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn target(&self) -> &[f64] {
        &self.b
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.b.iter().map(|v| -v).collect();
        for (c, &wj) in self.columns.iter().zip(w) {
            if wj != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri += wj * ci;
                }
            }
        }
        r
    }

    fn dual(&self, r: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, r)).collect()
    }

    /// Objective at `w`.
    pub fn objective(&self, w: &[f64]) -> f64 {
        let r = self.residual(w);
        dot(&r, &r)
    }

    fn absolute_tol(&self) -> f64 {
        let gmax = self.columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
        self.tol * (gmax * norm(&self.b)).max(1.0)
    }

    /// Minimum-norm least squares restricted to `passive`, scattered to length m.
    fn restricted_solve(&self, passive: &[usize]) -> Vec<f64> {
        let cols: Vec<Vec<f64>> = passive.iter().map(|&j| self.columns[j].clone()).collect();
        let x = lstsq_min_norm(&cols, &self.b);
        let mut z = alloc::vec![0.0; self.columns.len()];
        for (&j, &v) in passive.iter().zip(&x) {
            z[j] = v;
        }
        z
    }

    pub fn solve(&self) -> NnlsSolution {
        let m = self.columns.len();
        let tol = self.absolute_tol();
        let mut w = alloc::vec![0.0; m];
        let mut passive: Vec<usize> = Vec::new();
        let mut in_passive = alloc::vec![false; m];
        // Indices whose entry failed to produce a positive coefficient since
        // the iterate last moved.
        let mut blocked = alloc::vec![false; m];
        let mut dual = self.dual(&self.residual(&w));
        let mut iterations = 0;
        let mut last_objective = self.objective(&w);

        loop {
            let candidate = (0..m)
                .filter(|&j| !in_passive[j] && !blocked[j] && dual[j] < -tol)
                .min_by(|&a, &b| dual[a].total_cmp(&dual[b]));
            let Some(t) = candidate else { break };
            if iterations >= self.max_iter {
                break;
            }
            iterations += 1;
            passive.push(t);
            in_passive[t] = true;

            let mut z = self.restricted_solve(&passive);
            if z[t] <= 0.0 {
                passive.pop();
                in_passive[t] = false;
                blocked[t] = true;
                continue;
            }
            let mut inner = 0;
            while passive.iter().any(|&j| z[j] <= 0.0) && inner <= m {
                inner += 1;
                let mut alpha = 1.0f64;
                for &j in &passive {
                    if z[j] <= 0.0 {
                        alpha = alpha.min(w[j] / (w[j] - z[j]));
                    }
                }
                for &j in &passive {
                    w[j] += alpha * (z[j] - w[j]);
                }
                for &j in &passive {
                    if w[j] <= 0.0 || (z[j] <= 0.0 && w[j] <= 1e-15 * (1.0 + w[j].abs())) {
                        w[j] = 0.0;
                        in_passive[j] = false;
                    }
                }
                passive.retain(|&j| in_passive[j]);
                z = self.restricted_solve(&passive);
            }
            for &j in &passive {
                w[j] = z[j].max(0.0);
            }
            blocked.iter_mut().for_each(|b| *b = false);
            let r = self.residual(&w);
            dual = self.dual(&r);
            let objective = dot(&r, &r);
            debug_assert!(
                objective <= last_objective * (1.0 + 1e-9) + 1e-12 * tol,
                "NNLS objective increased from {last_objective} to {objective}"
            );
            last_objective = objective;
        }

        let r = self.residual(&w);
        let dual = self.dual(&r);
        let converged = kkt_holds(&w, &dual, tol);
        NnlsSolution {
            objective: dot(&r, &r),
            w,
            dual,
            iterations,
            converged,
            kkt_tolerance: tol,
        }
    }
}

/// Solves the problem, reporting non-convergence as an error.
pub fn nnls(problem: &NnlsProblem) -> Result<NnlsSolution> {
    let sol = problem.solve();
    if sol.converged {
        Ok(sol)
    } else {
        Err(CoresetError::SolverNonConvergence {
            iterations: sol.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(rows: usize, data: &[f64], b: &[f64]) -> NnlsProblem {
        let g = Matrix::from_row_major(rows, data.len() / rows, data.to_vec());
        NnlsProblem::new(&g, b.to_vec()).unwrap()
    }

    #[test]
    fn identity_cases() {
        let s = problem(2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 2.0]).solve();
        assert!(s.converged);
        assert!((s.w[0] - 1.0).abs() < 1e-14 && (s.w[1] - 2.0).abs() < 1e-14);
        assert!(s.objective < 1e-28);
        let s = problem(2, &[1.0, 0.0, 0.0, 1.0], &[-1.0, 2.0]).solve();
        assert_eq!(s.w[0], 0.0);
        assert!((s.w[1] - 2.0).abs() < 1e-14);
        assert!((s.objective - 1.0).abs() < 1e-14);
        assert!(s.satisfies_kkt());
    }

    #[test]
    fn duplicate_columns_certified() {
        let s = problem(3, &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0], &[3.0, 6.0, 1.0]).solve();
        assert!(s.converged && s.satisfies_kkt());
        assert!((s.w[0] + s.w[1] - 3.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(NnlsProblem::from_columns(alloc::vec![], alloc::vec![1.0]).is_err());
        assert!(NnlsProblem::from_columns(alloc::vec![alloc::vec![1.0]], alloc::vec![1.0, 2.0]).is_err());
        assert!(NnlsProblem::from_columns(alloc::vec![alloc::vec![f64::NAN]], alloc::vec![1.0]).is_err());
    }
}
