//! Windowed prediction-error statistic.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{FittedBaseline, VarianceMode};
use crate::model::predict_into;

/// Squared one-step residuals of `x` given its lag vector; returns their sum.
pub(crate) fn residual_squares(beta: &[f64], lagged: &[f64], x: &[f64], pred: &mut [f64], sq: &mut [f64]) -> f64 {
    predict_into(beta, lagged, pred);
    let mut total = 0.0;
    for ((s, hat), obs) in sq.iter_mut().zip(pred.iter()).zip(x) {
        let r = hat - obs;
        *s = r * r;
        total += *s;
    }
    total
}

/// Per-observation squared residuals for rows `lag..` of `rows`.
pub(crate) fn window_squares(rows: &[&[f64]], baseline: &FittedBaseline) -> Vec<(f64, Vec<f64>)> {
    let (h, p) = (baseline.h, baseline.p);
    let mut lagged = vec![0.0; h * p];
    let mut pred = vec![0.0; p];
    (h..rows.len())
        .map(|i| {
            for l in 0..h {
                lagged[l * p..(l + 1) * p].copy_from_slice(rows[i - 1 - l]);
            }
            let mut sq = vec![0.0; p];
            let total = residual_squares(&baseline.beta, &lagged, rows[i], &mut pred, &mut sq);
            (total, sq)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResidual {
    /// Mean squared prediction-error norm over the window.
    pub r_hat: f64,
    /// Sum of squared residuals of each component over the window.
    pub component_sums: Vec<f64>,
}

/// Prediction-error summary of the last `window.rows() - h` observations of `window`.
pub fn window_residual_stat(window: &Dataset, baseline: &FittedBaseline, omega: usize) -> Result<WindowResidual> {
    if window.dim() != baseline.p {
        return Err(Error::DimensionMismatch {
            expected: baseline.p,
            got: window.dim(),
        });
    }
    if omega == 0 || window.rows() != baseline.h + omega {
        return Err(Error::DimensionMismatch {
            expected: baseline.h + omega,
            got: window.rows(),
        });
    }
    let rows: Vec<&[f64]> = window.iter_rows().collect();
    let squares = window_squares(&rows, baseline);
    let mut component_sums = vec![0.0; baseline.p];
    let mut total = 0.0;
    for (norm, sq) in &squares {
        total += norm;
        for (c, s) in component_sums.iter_mut().zip(sq) {
            *c += s;
        }
    }
    Ok(WindowResidual {
        r_hat: total / omega as f64,
        component_sums,
    })
}

/// Homogeneous: `sqrt(p w / V) (R / p - s2)`. Heterogeneous: `sqrt(w) (R - sum s2_j) / sqrt(sum V_j)`.
pub fn test_statistic(r_hat: f64, baseline: &FittedBaseline, omega: usize) -> Result<f64> {
    let w = omega as f64;
    let p = baseline.p as f64;
    let v = baseline.total_v();
    if v.is_nan() || v <= 0.0 {
        return Err(Error::DegenerateMoments(v));
    }
    Ok(match baseline.variance_mode {
        VarianceMode::Homogeneous => {
            let s2 = baseline.sigma2_hat.component(0);
            let v = baseline.v_hat.component(0);
            (p * w / v).sqrt() * (r_hat / p - s2)
        }
        VarianceMode::Heterogeneous => w.sqrt() * (r_hat - baseline.total_sigma2()) / v.sqrt(),
    })
}
