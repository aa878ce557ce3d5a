//! L1-penalized least squares by cyclic coordinate descent.
//!
//! The stacked VAR problem `(1/n)||Y - Z b||^2 + lambda ||b||_1` with `Z = I_p (x) X` splits
//! into `p` single-response lassos that share the Gram matrix `X'X / n`. Each one is solved
//! in covariance form: only `G = X'X / n` and `c = X'y / n` are touched inside the loop.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::regression::RegressionView;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Converged once a full sweep moves no coefficient by more than this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_sweeps: 100_000,
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent state for one response in covariance form.
///
/// Minimizes `b'Gb - 2c'b + lambda ||b||_1`, which differs from the per-response lasso
/// objective only by the constant `y'y / n`.
#[derive(Debug, Clone)]
pub struct CoordinateDescent<'a> {
    gram: &'a DMatrix<f64>,
    corr: &'a [f64],
    lambda: f64,
    beta: Vec<f64>,
    /// `G * beta`, maintained incrementally between full sweeps.
    fitted: Vec<f64>,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(gram: &'a DMatrix<f64>, corr: &'a [f64], lambda: f64, warm: Option<&[f64]>) -> Self {
        let m = corr.len();
        let beta = warm.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; m]);
        let mut cd = Self {
            gram,
            corr,
            lambda,
            beta,
            fitted: vec![0.0; m],
        };
        cd.refresh_fitted();
        cd
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn into_beta(self) -> Vec<f64> {
        self.beta
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    fn refresh_fitted(&mut self) {
        let m = self.beta.len();
        let g = self.gram.as_slice();
        self.fitted.iter_mut().for_each(|f| *f = 0.0);
        for (k, &b) in self.beta.iter().enumerate() {
            if b != 0.0 {
                for (f, gk) in self.fitted.iter_mut().zip(&g[k * m..(k + 1) * m]) {
                    *f += gk * b;
                }
            }
        }
    }

    fn update(&mut self, j: usize) -> f64 {
        let m = self.beta.len();
        let g = self.gram.as_slice();
        let gjj = g[j * m + j];
        let old = self.beta[j];
        let new = if gjj > 0.0 {
            let z = self.corr[j] - self.fitted[j] + gjj * old;
            soft_threshold(z, 0.5 * self.lambda) / gjj
        } else {
            0.0
        };
        let delta = new - old;
        if delta != 0.0 {
            self.beta[j] = new;
            for (f, gj) in self.fitted.iter_mut().zip(&g[j * m..(j + 1) * m]) {
                *f += gj * delta;
            }
        }
        delta.abs()
    }

    /// One cyclic pass over every coordinate. Returns the largest absolute change.
    pub fn full_sweep(&mut self) -> f64 {
        self.refresh_fitted();
        (0..self.beta.len()).fold(0.0, |acc, j| acc.max(self.update(j)))
    }

    fn active_sweep(&mut self, active: &[usize]) -> f64 {
        active.iter().fold(0.0, |acc, &j| acc.max(self.update(j)))
    }

    /// `b'Gb - 2c'b + lambda ||b||_1`.
    pub fn objective(&self) -> f64 {
        let quad: f64 = self.beta.iter().zip(&self.fitted).map(|(b, f)| b * f).sum();
        let lin: f64 = self.beta.iter().zip(self.corr).map(|(b, c)| b * c).sum();
        let l1: f64 = self.beta.iter().map(|b| b.abs()).sum();
        quad - 2.0 * lin + self.lambda * l1
    }

    /// Largest violation of the lasso optimality conditions, on the scale of `(2/n) X_j' r`.
    pub fn kkt_residual(&self) -> f64 {
        let mut exact = self.clone();
        exact.refresh_fitted();
        exact
            .beta
            .iter()
            .zip(exact.corr.iter().zip(&exact.fitted))
            .map(|(&b, (&c, &f))| {
                let g = 2.0 * (c - f);
                if b != 0.0 {
                    (g - self.lambda * b.signum()).abs()
                } else {
                    (g.abs() - self.lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Full sweeps interleaved with passes over the nonzero coordinates, until a full sweep
    /// changes nothing by more than `opts.tol`. Returns the number of sweeps used.
    pub fn solve(&mut self, opts: &LassoOptions) -> Result<usize> {
        let mut sweeps = 0;
        loop {
            let change = self.full_sweep();
            sweeps += 1;
            if change < opts.tol {
                return Ok(sweeps);
            }
            let active: Vec<usize> = (0..self.beta.len()).filter(|&j| self.beta[j] != 0.0).collect();
            loop {
                if sweeps >= opts.max_sweeps {
                    return Err(Error::NonConvergence {
                        sweeps,
                        kkt_residual: self.kkt_residual(),
                        last_iterate: self.beta.clone(),
                    });
                }
                sweeps += 1;
                if self.active_sweep(&active) < opts.tol {
                    break;
                }
            }
            if sweeps >= opts.max_sweeps {
                return Err(Error::NonConvergence {
                    sweeps,
                    kkt_residual: self.kkt_residual(),
                    last_iterate: self.beta.clone(),
                });
            }
        }
    }
}

/// Gram matrix `X'X / n` and cross products `X'Y / n` (one column per response).
#[derive(Debug, Clone)]
pub(crate) struct GramStats {
    pub gram: DMatrix<f64>,
    pub corr: DMatrix<f64>,
}

impl GramStats {
    pub fn from_view(reg: &RegressionView) -> Self {
        let n = reg.samples() as f64;
        Self {
            gram: reg.x.tr_mul(&reg.x) / n,
            corr: reg.x.tr_mul(&reg.y) / n,
        }
    }

    pub fn response(&self, j: usize) -> &[f64] {
        let m = self.corr.nrows();
        &self.corr.as_slice()[j * m..(j + 1) * m]
    }
}

/// Smallest penalty at which the all-zero vector is optimal:
/// the largest entry of `|(2/n) X' y_j|` over all responses.
pub fn lambda_max(reg: &RegressionView) -> f64 {
    2.0 * GramStats::from_view(reg).corr.amax()
}

fn check_inputs(reg: &RegressionView, lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("penalty must be finite and >= 0, got {lambda}")));
    }
    if reg.x.iter().chain(reg.y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    if reg.x.nrows() != reg.y.nrows() || reg.samples() == 0 {
        return Err(Error::DimensionMismatch {
            expected: reg.y.nrows(),
            got: reg.x.nrows(),
        });
    }
    Ok(())
}

/// Lasso fit with default solver settings. Returns `beta` in the normative layout
/// (response-major: `beta[j * hp + c]` is predictor column `c` of response `j`).
pub fn fit_lasso(reg: &RegressionView, lambda: f64) -> Result<Vec<f64>> {
    fit_lasso_with(reg, lambda, &LassoOptions::default(), None)
}

pub fn fit_lasso_with(
    reg: &RegressionView,
    lambda: f64,
    opts: &LassoOptions,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_inputs(reg, lambda)?;
    let hp = reg.predictors();
    if let Some(w) = warm {
        if w.len() != hp * reg.dim() {
            return Err(Error::DimensionMismatch {
                expected: hp * reg.dim(),
                got: w.len(),
            });
        }
    }
    let stats = GramStats::from_view(reg);
    let per_response: Vec<Vec<f64>> = (0..reg.dim())
        .into_par_iter()
        .map(|j| {
            let start = warm.map(|w| &w[j * hp..(j + 1) * hp]);
            let mut cd = CoordinateDescent::new(&stats.gram, stats.response(j), lambda, start);
            cd.solve(opts).map_err(|e| widen_iterate(e, j, hp, reg.dim()))?;
            Ok(cd.into_beta())
        })
        .collect::<Result<_>>()?;
    Ok(per_response.concat())
}

/// Place a single-response iterate into a full-length coefficient vector.
fn widen_iterate(err: Error, j: usize, hp: usize, p: usize) -> Error {
    match err {
        Error::NonConvergence {
            sweeps,
            kkt_residual,
            last_iterate,
        } => {
            let mut full = vec![0.0; hp * p];
            full[j * hp..(j + 1) * hp].copy_from_slice(&last_iterate);
            Error::NonConvergence {
                sweeps,
                kkt_residual,
                last_iterate: full,
            }
        }
        other => other,
    }
}
