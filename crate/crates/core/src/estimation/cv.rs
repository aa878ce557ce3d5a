//! Penalty selection by blocked, time-ordered cross-validation.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::lasso::{lambda_max, CoordinateDescent, LassoOptions};
use super::regression::RegressionView;
use crate::error::{Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 50;
/// The grid spans `lambda_max` down to `lambda_max * DEFAULT_GRID_RATIO`.
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;
pub const DEFAULT_FOLDS: usize = 5;

/// Log-spaced penalties from `lambda_max` downward.
pub fn default_lambda_grid(reg: &RegressionView) -> Vec<f64> {
    let top = lambda_max(reg);
    if top == 0.0 {
        return vec![0.0];
    }
    let steps = (DEFAULT_GRID_SIZE - 1) as f64;
    (0..DEFAULT_GRID_SIZE)
        .map(|i| top * DEFAULT_GRID_RATIO.powf(i as f64 / steps))
        .collect()
}

/// Unnormalized second moments of one block of rows.
struct BlockStats {
    gram: DMatrix<f64>,
    corr: DMatrix<f64>,
    yy: Vec<f64>,
    rows: usize,
}

impl BlockStats {
    fn new(reg: &RegressionView) -> Self {
        Self {
            gram: reg.x.tr_mul(&reg.x),
            corr: reg.x.tr_mul(&reg.y),
            yy: reg.y.column_iter().map(|c| c.norm_squared()).collect(),
            rows: reg.samples(),
        }
    }

    fn response(&self, j: usize) -> &[f64] {
        let m = self.corr.nrows();
        &self.corr.as_slice()[j * m..(j + 1) * m]
    }

    /// `||y_j - X b||^2` over this block.
    fn sse(&self, j: usize, beta: &[f64]) -> f64 {
        let m = beta.len();
        let g = self.gram.as_slice();
        let mut quad = 0.0;
        for (k, &bk) in beta.iter().enumerate() {
            if bk != 0.0 {
                let gk = &g[k * m..(k + 1) * m];
                quad += bk * gk.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let lin: f64 = self.response(j).iter().zip(beta).map(|(c, b)| c * b).sum();
        self.yy[j] - 2.0 * lin + quad
    }
}

/// Mean held-out squared prediction error for every grid value, in the order of `grid`.
fn cv_curve(reg: &RegressionView, grid: &[f64], folds: usize, opts: &LassoOptions) -> Result<Vec<f64>> {
    let n = reg.samples();
    let p = reg.dim();
    let bounds: Vec<(usize, usize)> = (0..folds).map(|k| (k * n / folds, (k + 1) * n / folds)).collect();

    let per_fold: Vec<Vec<f64>> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let train = reg.rows_subset(|i| i < lo || i >= hi);
            let valid = BlockStats::new(&reg.rows_subset(|i| i >= lo && i < hi));
            let n_train = train.samples() as f64;
            let gram = train.x.tr_mul(&train.x) / n_train;
            let corr = train.x.tr_mul(&train.y) / n_train;
            let m = corr.nrows();

            let per_response: Vec<Vec<f64>> = (0..p)
                .into_par_iter()
                .map(|j| {
                    let c = &corr.as_slice()[j * m..(j + 1) * m];
                    let mut cd = CoordinateDescent::new(&gram, c, grid[0], None);
                    grid.iter()
                        .map(|&lambda| {
                            cd.set_lambda(lambda);
                            cd.solve(opts)?;
                            Ok(valid.sse(j, cd.beta()))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;

            Ok((0..grid.len())
                .map(|g| per_response.iter().map(|r| r[g]).sum::<f64>() / (valid.rows * p) as f64)
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok((0..grid.len())
        .map(|g| per_fold.iter().map(|f| f[g]).sum::<f64>() / folds as f64)
        .collect())
}

/// Grid value with the lowest blocked-CV error. The path runs from the largest penalty down
/// with warm starts; ties go to the larger penalty.
pub fn select_lambda_cv(reg: &RegressionView, grid: &[f64], folds: usize) -> Result<f64> {
    select_lambda_cv_with(reg, grid, folds, &LassoOptions::default())
}

pub fn select_lambda_cv_with(
    reg: &RegressionView,
    grid: &[f64],
    folds: usize,
    opts: &LassoOptions,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("penalty grid is empty".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidConfig("penalty grid entries must be finite and >= 0".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    let needed = folds * (reg.lag + 1);
    if reg.samples() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: reg.samples(),
        });
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    if reg.x.iter().chain(reg.y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let errors = cv_curve(reg, &sorted, folds, opts)?;
    let mut best = 0;
    for (i, e) in errors.iter().enumerate() {
        if *e < errors[best] {
            best = i;
        }
    }
    Ok(sorted[best])
}
