//! Lag order selection by BIC.

use nalgebra::DMatrix;

use super::cv::{default_lambda_grid, select_lambda_cv, DEFAULT_FOLDS};
use super::lasso::fit_lasso;
use super::moments::residuals;
use super::regression::build_regression;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Added to the residual covariance diagonal before taking its log-determinant.
pub const BIC_RIDGE: f64 = 1e-8;

/// `ln|Sigma_hat(h)| + (ln n / n) h p^2` for `h = 1..=max_lag`.
///
/// Every candidate is fitted on the same `n = rows - max_lag` responses so the scores are
/// comparable. A candidate whose fit fails scores `+inf`.
pub fn bic_scores(data: &Dataset, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(Error::InvalidConfig("maximum lag must be at least 1".into()));
    }
    let rows = data.rows();
    let needed = max_lag + DEFAULT_FOLDS * (max_lag + 1);
    if rows < needed {
        return Err(Error::InsufficientData { needed, got: rows });
    }
    let p = data.dim();
    let n = rows - max_lag;
    (1..=max_lag)
        .map(|h| {
            let reg = build_regression(&data.window(max_lag - h, rows), h)?;
            let score = (|| {
                let lambda = select_lambda_cv(&reg, &default_lambda_grid(&reg), DEFAULT_FOLDS)?;
                let beta = fit_lasso(&reg, lambda)?;
                let res = residuals(&reg, &beta)?;
                let mut cov = DMatrix::<f64>::zeros(p, p);
                for r in &res {
                    for a in 0..p {
                        for b in 0..p {
                            cov[(a, b)] += r[a] * r[b];
                        }
                    }
                }
                cov /= n as f64;
                for a in 0..p {
                    cov[(a, a)] += BIC_RIDGE;
                }
                let log_det = match cov.cholesky() {
                    Some(ch) => 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
                    None => f64::INFINITY,
                };
                let nf = n as f64;
                Ok::<f64, Error>(log_det + nf.ln() / nf * (h * p * p) as f64)
            })();
            Ok(score.ok().filter(|s| s.is_finite()).unwrap_or(f64::INFINITY))
        })
        .collect()
}

/// Lag with the lowest BIC; ties go to the smaller lag.
pub fn select_lag_bic(data: &Dataset, max_lag: usize) -> Result<usize> {
    let scores = bic_scores(data, max_lag)?;
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| *s < scores[b]) {
            best = Some(i);
        }
    }
    best.map(|i| i + 1).ok_or(Error::NoFiniteBic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VarModel;
    use crate::simulate::{simulate, ChangeSpec};

    #[test]
    fn single_candidate() {
        let d = simulate(&ChangeSpec::stationary(VarModel::diagonal(2, 0.5, 1.0).unwrap(), 200).unwrap(), 1)
            .unwrap();
        assert_eq!(select_lag_bic(&d, 1).unwrap(), 1);
    }

    #[test]
    fn too_short_for_candidates() {
        let d = simulate(&ChangeSpec::stationary(VarModel::diagonal(2, 0.5, 1.0).unwrap(), 20).unwrap(), 1)
            .unwrap();
        assert!(matches!(select_lag_bic(&d, 3), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn scores_have_one_entry_per_lag() {
        let d = simulate(&ChangeSpec::stationary(VarModel::diagonal(3, 0.5, 1.0).unwrap(), 400).unwrap(), 2)
            .unwrap();
        let s = bic_scores(&d, 3).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|v| v.is_finite()));
    }
}
