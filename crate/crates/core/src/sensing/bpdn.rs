//! Basis pursuit denoising, `min ‖x‖₁ s.t. ‖y − Ax‖₂ ≤ δ`, solved column by
//! column. Each column runs FISTA on `λ‖x‖₁ + ½‖y − Ax‖²` and bisects λ
//! in log-space until the residual sits on the δ boundary.

use serde::{Deserialize, Serialize};

use super::measurement::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpdnConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub bisection_steps: usize,
}

impl Default for BpdnConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tolerance: 1e-6,
            bisection_steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// `n × m` real-valued estimate.
    pub x_hat: Matrix,
    /// `‖y_j − A x̂_j‖₂` per column.
    pub residuals: Vec<f64>,
    /// False when no iterate met the δ constraint within budget.
    pub converged: Vec<bool>,
}

impl Recovery {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

pub fn recover(a: &MeasurementMatrix, y: &Matrix, delta: f64, config: &BpdnConfig) -> Result<Recovery> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Sensing(format!("noise bound must be >= 0, got {delta}")));
    }
    if y.rows() != a.rows() {
        return Err(Error::Shape(format!(
            "measurements have {} rows, matrix has {}",
            y.rows(),
            a.rows()
        )));
    }
    let (z, n, m) = (a.rows(), a.cols(), y.cols());
    let mut x_hat = Matrix::zeros(n, m);
    let mut residuals = Vec::with_capacity(m);
    let mut converged = Vec::with_capacity(m);
    let mut col = vec![0.0; z];
    let mut solver = ColumnSolver::new(a, config);
    for j in 0..m {
        for (r, c) in col.iter_mut().enumerate() {
            *c = y.get(r, j);
        }
        let (x, res, ok) = solver.solve(&col, delta);
        for (i, v) in x.iter().enumerate() {
            x_hat.set(i, j, *v);
        }
        residuals.push(res);
        converged.push(ok);
    }
    Ok(Recovery {
        x_hat,
        residuals,
        converged,
    })
}

struct ColumnSolver<'a> {
    a: &'a MeasurementMatrix,
    config: &'a BpdnConfig,
    aty: Vec<f64>,
    grad: Vec<f64>,
    momentum: Vec<f64>,
    prev: Vec<f64>,
}

impl<'a> ColumnSolver<'a> {
    fn new(a: &'a MeasurementMatrix, config: &'a BpdnConfig) -> Self {
        let n = a.cols();
        Self {
            a,
            config,
            aty: vec![0.0; n],
            grad: vec![0.0; n],
            momentum: vec![0.0; n],
            prev: vec![0.0; n],
        }
    }

    fn residual(&self, y: &[f64], x: &[f64]) -> f64 {
        let a = self.a.matrix();
        let mut s = 0.0;
        for (r, yr) in y.iter().enumerate() {
            let ax: f64 = a.row(r).iter().zip(x).map(|(u, v)| u * v).sum();
            s += (yr - ax).powi(2);
        }
        s.sqrt()
    }

    fn solve(&mut self, y: &[f64], delta: f64) -> (Vec<f64>, f64, bool) {
        let n = self.a.cols();
        let tol = self.config.tolerance;
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if y_norm <= delta {
            return (vec![0.0; n], y_norm, true);
        }
        let at = self.a.matrix();
        for i in 0..n {
            self.aty[i] = (0..y.len()).map(|r| at.get(r, i) * y[r]).sum();
        }

        // Exact constraint with a full-rank system: least squares is the
        // unique feasible point when y lies in the range of A.
        if delta == 0.0 {
            if let Some(x) = self.a.normal_solve(&self.aty) {
                let res = self.residual(y, &x);
                return (x, res, res <= tol);
            }
        }

        let lam_max = self.aty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut log_lo = (lam_max * 1e-9).ln();
        let mut log_hi = lam_max.ln();
        let mut x = vec![0.0; n];
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut fallback: Option<(Vec<f64>, f64)> = None;
        for _ in 0..self.config.bisection_steps.max(1) {
            let lam = (0.5 * (log_lo + log_hi)).exp();
            self.fista(lam, &mut x);
            let res = self.residual(y, &x);
            if res <= delta + tol {
                let tight = delta - res <= 1e-3 * delta.max(tol);
                best = Some((x.clone(), res));
                log_lo = 0.5 * (log_lo + log_hi);
                if tight {
                    break;
                }
            } else {
                if fallback.as_ref().map_or(true, |(_, r)| res < *r) {
                    fallback = Some((x.clone(), res));
                }
                log_hi = 0.5 * (log_lo + log_hi);
            }
        }
        if best.is_none() {
            // last resort: the smallest λ in the bracket
            self.fista(log_lo.exp(), &mut x);
            let res = self.residual(y, &x);
            if res <= delta + tol {
                best = Some((x.clone(), res));
            } else if fallback.as_ref().map_or(true, |(_, r)| res < *r) {
                fallback = Some((x.clone(), res));
            }
        }
        match (best, fallback) {
            (Some((x, r)), _) => (x, r, true),
            (None, Some((x, r))) => (x, r, false),
            (None, None) => (vec![0.0; n], y_norm, false),
        }
    }

    /// FISTA warm-started from `x`; result written back into `x`.
    fn fista(&mut self, lam: f64, x: &mut [f64]) {
        let n = x.len();
        let g = self.a.gram();
        let step = 1.0 / self.a.lipschitz();
        let thresh = lam * step;
        self.momentum.copy_from_slice(x);
        self.prev.copy_from_slice(x);
        let mut t = 1.0f64;
        for _ in 0..self.config.max_iterations {
            for i in 0..n {
                let gi: f64 = g.row(i).iter().zip(&self.momentum).map(|(u, v)| u * v).sum();
                self.grad[i] = gi - self.aty[i];
            }
            let mut delta_inf = 0.0f64;
            for i in 0..n {
                let v = self.momentum[i] - step * self.grad[i];
                let nv = v.signum() * (v.abs() - thresh).max(0.0);
                delta_inf = delta_inf.max((nv - self.prev[i]).abs());
                x[i] = nv;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..n {
                self.momentum[i] = x[i] + beta * (x[i] - self.prev[i]);
            }
            self.prev.copy_from_slice(x);
            t = t_next;
            if delta_inf < self.config.tolerance {
                break;
            }
        }
    }
}
