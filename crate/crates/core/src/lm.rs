//! Levenberg–Marquardt least squares with Marquardt's diagonal scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_iter: usize,
    /// Converged when ‖δ‖ ≤ step_tol·(‖p‖ + step_tol).
    pub step_tol: f64,
    /// Converged when an accepted step lowers the cost by ≤ cost_tol·cost.
    pub cost_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            max_iter: 2000,
            step_tol: 1e-12,
            cost_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// ½‖r‖² at `params`.
    pub cost: f64,
    pub iterations: usize,
}

/// Minimizes ½‖r(p)‖² given `model(p) = (r, J)`.
pub fn levenberg_marquardt<F>(mut model: F, p0: &[f64], opts: &LmOptions) -> Result<LmReport>
where
    F: FnMut(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut p = DVector::from_column_slice(p0);
    let (mut r, mut jac) = model(p.as_slice());
    let mut cost = 0.5 * r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::FitNonConvergence { iterations: 0, cost });
    }
    let mut lambda = opts.lambda0;
    for iter in 1..=opts.max_iter {
        if cost == 0.0 {
            return Ok(LmReport { params: p.as_slice().to_vec(), cost, iterations: iter - 1 });
        }
        let jt = jac.transpose();
        let hess = &jt * &jac;
        let grad = &jt * &r;
        let mut damped = hess.clone();
        for i in 0..p.len() {
            damped[(i, i)] += lambda * hess[(i, i)].max(1e-300);
        }
        let Some(chol) = damped.cholesky() else {
            lambda *= opts.lambda_up;
            continue;
        };
        let delta = -chol.solve(&grad);
        let small_step = delta.norm() <= opts.step_tol * (p.norm() + opts.step_tol);
        let trial = &p + &delta;
        let (r_new, jac_new) = model(trial.as_slice());
        let cost_new = 0.5 * r_new.norm_squared();
        if cost_new.is_finite() && cost_new < cost {
            let drop = cost - cost_new;
            p = trial;
            r = r_new;
            jac = jac_new;
            cost = cost_new;
            lambda /= opts.lambda_down;
            if small_step || drop <= opts.cost_tol * (cost + drop) {
                return Ok(LmReport { params: p.as_slice().to_vec(), cost, iterations: iter });
            }
        } else {
            if small_step {
                return Ok(LmReport { params: p.as_slice().to_vec(), cost, iterations: iter });
            }
            lambda *= opts.lambda_up;
        }
    }
    Err(Error::FitNonConvergence { iterations: opts.max_iter, cost })
}
