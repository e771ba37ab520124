//! Thin wrapper over the Goldfarb–Idnani dual active-set solver for strictly convex QPs.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QpError {
    #[error("objective is not strictly concave (Hessian eigenvalue {0:.3e})")]
    NotConcave(f64),
    #[error("quadratic program is infeasible")]
    Infeasible,
    #[error("quadratic program is malformed: {0}")]
    Malformed(String),
}

/// `minimize ½ xᵀHx + cᵀx` subject to `rows[k]·x ≤ rhs[k]`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// One nonnegative multiplier per inequality row.
    pub multipliers: Vec<f64>,
    pub objective: f64,
}

impl QpProblem {
    pub fn new(hessian: DMatrix<f64>, linear: Vec<f64>) -> Self {
        QpProblem {
            hessian,
            linear,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn min_hessian_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return f64::INFINITY;
        }
        SymmetricEigen::new(self.hessian.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut val = 0.0;
        for i in 0..n {
            val += self.linear[i] * x[i];
            for j in 0..n {
                val += 0.5 * x[i] * self.hessian[(i, j)] * x[j];
            }
        }
        val
    }

    /// Max-norm KKT residual: stationarity, primal feasibility, dual sign and complementarity.
    pub fn kkt_residual(&self, sol: &QpSolution) -> f64 {
        let n = self.dim();
        let mut res: f64 = 0.0;
        for i in 0..n {
            let mut g = self.linear[i];
            for j in 0..n {
                g += self.hessian[(i, j)] * sol.x[j];
            }
            for (row, mu) in self.rows.iter().zip(&sol.multipliers) {
                g += row[i] * mu;
            }
            res = res.max(g.abs());
        }
        for ((row, rhs), mu) in self.rows.iter().zip(&self.rhs).zip(&sol.multipliers) {
            let slack = rhs - dot(row, &sol.x);
            res = res.max((-slack).max(0.0)).max((-mu).max(0.0));
            res = res.max(slack.min(*mu).abs());
        }
        res
    }

    pub fn solve(&self) -> Result<QpSolution, QpError> {
        let n = self.dim();
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return Err(QpError::Malformed("Hessian size".into()));
        }
        if n == 0 {
            if self.rhs.iter().any(|&r| r < 0.0) {
                return Err(QpError::Infeasible);
            }
            return Ok(QpSolution {
                x: Vec::new(),
                multipliers: vec![0.0; self.rhs.len()],
                objective: 0.0,
            });
        }
        let mut qmat: Vec<f64> = (0..n * n).map(|k| self.hessian[(k / n, k % n)]).collect();
        let amat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        if amat.len() != n * self.rows.len() {
            return Err(QpError::Malformed("constraint row width".into()));
        }
        match quadprog::solve_qp(&mut qmat, &self.linear, &amat, &self.rhs, 0, false) {
            Ok(s) => Ok(QpSolution {
                objective: self.objective(&s.sol),
                x: s.sol,
                multipliers: s.lagr,
            }),
            Err(quadprog::Error::NotPositiveDefinite) => {
                Err(QpError::NotConcave(-self.min_hessian_eigenvalue()))
            }
            Err(quadprog::Error::Infeasible) => Err(QpError::Infeasible),
            Err(e) => Err(QpError::Malformed(e.to_string())),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_constrained_quadratic() {
        // min ½(x−3)² s.t. x ≤ 1 → x = 1, multiplier 2
        let mut p = QpProblem::new(DMatrix::from_element(1, 1, 1.0), vec![-3.0]);
        p.add_le(vec![1.0], 1.0);
        let s = p.solve().unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.multipliers[0] - 2.0).abs() < 1e-12);
        assert!(p.kkt_residual(&s) < 1e-12);
    }

    #[test]
    fn indefinite_is_reported() {
        let p = QpProblem::new(DMatrix::from_element(1, 1, -1.0), vec![0.0]);
        assert!(matches!(p.solve(), Err(QpError::NotConcave(_))));
    }
}
