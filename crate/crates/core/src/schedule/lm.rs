//! Damped least squares (Levenberg–Marquardt) with a forward-difference Jacobian.
//!
//! Works for any residual count, including fewer residuals than unknowns.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    /// Stop once `‖r‖² ≤ cost_tol`.
    pub cost_tol: f64,
    /// Stop once the relative step falls below this.
    pub step_tol: f64,
    /// Longest step taken in one iteration; keeps saturating transforms
    /// from being driven into their flat tails.
    pub max_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            initial_damping: 1e-3,
            cost_tol: 1e-20,
            step_tol: 1e-12,
            max_step: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = f(&xp);
        for i in 0..m {
            jac[(i, j)] = (rp[i] - r0[i]) / h;
        }
        xp[j] = x[j];
    }
    jac
}

/// Nielsen's damping schedule: `(JᵀJ + μI) δ = −Jᵀr`, with `μ` adapted from
/// the ratio of actual to predicted cost reduction.
pub fn minimize<F: Fn(&[f64]) -> Vec<f64>>(f: F, x0: &[f64], opts: &LmOptions) -> LmOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let mut cost = cost_of(&r);
    let mut mu = f64::NAN;
    let mut nu = 2.0;
    let mut iterations = 0usize;
    let mut fresh = true;
    let mut jtj = DMatrix::zeros(n, n);
    let mut grad = DVector::zeros(n);
    while iterations < opts.max_iterations && cost > opts.cost_tol {
        iterations += 1;
        if fresh {
            let jac = jacobian(&f, &x, &r);
            jtj = jac.transpose() * &jac;
            grad = jac.transpose() * DVector::from_column_slice(&r);
            if mu.is_nan() {
                let top = (0..n).map(|d| jtj[(d, d)]).fold(0.0, f64::max);
                mu = opts.initial_damping * top.max(1e-12);
            }
            if grad.amax() < 1e-14 {
                break;
            }
        }
        let mut a = jtj.clone();
        for d in 0..n {
            a[(d, d)] += mu;
        }
        let Some(chol) = a.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            fresh = false;
            continue;
        };
        let mut step = chol.solve(&(-&grad));
        let len = step.norm();
        if len > opts.max_step {
            step *= opts.max_step / len;
        }
        if step.norm() <= opts.step_tol * (DVector::from_column_slice(&x).norm() + opts.step_tol) {
            break;
        }
        let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let rc = f(&cand);
        let cc = cost_of(&rc);
        // predicted reduction of the local quadratic model
        let predicted = -(step.dot(&grad) * 2.0 + step.dot(&(&jtj * &step)));
        let rho = (cost - cc) / predicted.max(f64::MIN_POSITIVE);
        if cc.is_finite() && cc < cost {
            x = cand;
            r = rc;
            cost = cc;
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
            fresh = true;
        } else {
            mu *= nu;
            nu *= 2.0;
            fresh = false;
            if !mu.is_finite() {
                break;
            }
        }
    }
    LmOutcome { x, cost }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum() {
        let f = |x: &[f64]| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]];
        let out = minimize(f, &[-1.2, 1.0], &LmOptions::default());
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8, "{:?}", out.x);
    }

    #[test]
    fn underdetermined_system() {
        // one equation, three unknowns
        let f = |x: &[f64]| vec![x[0] * x[1] + x[2] - 3.0];
        let out = minimize(f, &[0.5, 0.5, 0.5], &LmOptions::default());
        assert!(out.cost < 1e-20);
    }
}
