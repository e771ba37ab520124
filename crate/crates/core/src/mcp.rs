//! Mixed complementarity problems solved by semismooth Newton on the Fischer–Burmeister
//! reformulation.
//!
//! A variable with lower bound `l` pairs with its residual as `0 ≤ x − l ⊥ F(x) ≥ 0`; a free
//! variable requires `F(x) = 0`. Only lower bounds are supported.

use nalgebra::{DMatrix, DVector};

/// Complementarity problem with an affine or smooth residual map.
pub trait Mcp {
    fn dim(&self) -> usize;
    /// Lower bound per variable; `-inf` marks a free variable.
    fn lower(&self) -> &[f64];
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Max-norm of the min-function residual at `x`.
    pub residual: f64,
    pub converged: bool,
}

/// Natural (min-function) residual of one pair.
pub fn natural_residual(x: f64, lower: f64, f: f64) -> f64 {
    if lower.is_finite() {
        (x - lower).min(f).abs()
    } else {
        f.abs()
    }
}

pub fn max_natural_residual(x: &[f64], lower: &[f64], f: &[f64]) -> f64 {
    x.iter()
        .zip(lower)
        .zip(f)
        .map(|((&x, &l), &f)| natural_residual(x, l, f))
        .fold(0.0, f64::max)
}

fn fb(a: f64, b: f64) -> f64 {
    a.hypot(b) - a - b
}

fn merit_vector(x: &[f64], lower: &[f64], f: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower)
        .zip(f)
        .map(|((&x, &l), &f)| if l.is_finite() { fb(x - l, f) } else { f })
        .collect()
}

/// Semismooth Newton with Armijo backtracking; falls back to steepest descent on the merit
/// function `½‖Φ‖²` when the Newton direction is unusable.
pub fn solve_mcp<P: Mcp>(problem: &P, x0: &[f64], opts: &NewtonOptions) -> NewtonOutcome {
    let n = problem.dim();
    let lower = problem.lower();
    assert_eq!(x0.len(), n, "starting point dimension");
    let mut x = x0.to_vec();
    let mut f = problem.residual(&x);
    let mut phi = merit_vector(&x, lower, &f);
    let mut psi = 0.5 * phi.iter().map(|v| v * v).sum::<f64>();
    let mut residual = max_natural_residual(&x, lower, &f);

    for iter in 0..opts.max_iter {
        if residual <= opts.tol {
            return NewtonOutcome {
                x,
                iterations: iter,
                residual,
                converged: true,
            };
        }
        let jf = problem.jacobian(&x);
        // Element of the generalized Jacobian of Φ: diag(da) + diag(db)·JF.
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            if lower[i].is_finite() {
                let a = x[i] - lower[i];
                let b = f[i];
                let r = a.hypot(b);
                let (da, db) = if r > 1e-300 {
                    (a / r - 1.0, b / r - 1.0)
                } else {
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    (s - 1.0, s - 1.0)
                };
                for j in 0..n {
                    h[(i, j)] = db * jf[(i, j)];
                }
                h[(i, i)] += da;
            } else {
                for j in 0..n {
                    h[(i, j)] = jf[(i, j)];
                }
            }
        }
        let phi_v = DVector::from_column_slice(&phi);
        let grad = h.transpose() * &phi_v;
        let newton = h.clone().lu().solve(&(-&phi_v));
        let direction = match newton {
            Some(d) if d.iter().all(|v| v.is_finite()) && grad.dot(&d) < -1e-14 * d.norm_squared() => d,
            _ => -grad.clone(),
        };
        let slope = grad.dot(&direction);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(direction.iter()).map(|(xi, di)| xi + t * di).collect();
            let f_trial = problem.residual(&trial);
            let phi_trial = merit_vector(&trial, lower, &f_trial);
            let psi_trial = 0.5 * phi_trial.iter().map(|v| v * v).sum::<f64>();
            if psi_trial <= psi + 1e-4 * t * slope {
                x = trial;
                f = f_trial;
                phi = phi_trial;
                psi = psi_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        residual = max_natural_residual(&x, lower, &f);
        if !accepted {
            return NewtonOutcome {
                x,
                iterations: iter + 1,
                residual,
                converged: residual <= opts.tol,
            };
        }
    }
    NewtonOutcome {
        converged: residual <= opts.tol,
        x,
        iterations: opts.max_iter,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// F(x) = M x + q with constant Jacobian.
    struct Affine {
        m: DMatrix<f64>,
        q: Vec<f64>,
        lower: Vec<f64>,
    }

    impl Mcp for Affine {
        fn dim(&self) -> usize {
            self.q.len()
        }
        fn lower(&self) -> &[f64] {
            &self.lower
        }
        fn residual(&self, x: &[f64]) -> Vec<f64> {
            let v = &self.m * DVector::from_column_slice(x);
            v.iter().zip(&self.q).map(|(a, b)| a + b).collect()
        }
        fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
            self.m.clone()
        }
    }

    #[test]
    fn lcp_with_active_and_inactive_bounds() {
        // F = [2 1; 1 2] x + [-1, 3]: solution x = (0.5, 0), F = (0, 3.5)
        let p = Affine {
            m: DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
            q: vec![-1.0, 3.0],
            lower: vec![0.0, 0.0],
        };
        let out = solve_mcp(&p, &[0.0, 0.0], &NewtonOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 0.5).abs() < 1e-10 && out.x[1].abs() < 1e-10);
    }

    #[test]
    fn mixed_free_and_bounded() {
        // x0 free: x0 + x1 = 1; x1 ≥ 0 ⊥ x1 − x0 + 2 ≥ 0 → x1 = 0 or x1 = x0 − 2; x0 = 1, x1 = 0
        let p = Affine {
            m: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]),
            q: vec![-1.0, 2.0],
            lower: vec![f64::NEG_INFINITY, 0.0],
        };
        let out = solve_mcp(&p, &[5.0, 5.0], &NewtonOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-10 && out.x[1].abs() < 1e-10);
    }
}
