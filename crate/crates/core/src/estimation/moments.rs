//! Method-of-moments estimates of the innovation variance and of `Var(eps^2)`.

use serde::{Deserialize, Serialize};

use super::regression::RegressionView;
use crate::error::{Error, Result};
use crate::model::NoiseScale;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    /// One variance shared by every component.
    #[default]
    Homogeneous,
    /// Separate second and fourth moments per component.
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub sigma2: NoiseScale,
    pub fourth: NoiseScale,
}

/// In-sample residuals `X_hat_i - X_i`, row `i` matching row `i` of the regression.
pub fn residuals(reg: &RegressionView, beta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (p, hp) = (reg.dim(), reg.predictors());
    if beta.len() != hp * p {
        return Err(Error::DimensionMismatch {
            expected: hp * p,
            got: beta.len(),
        });
    }
    Ok((0..reg.samples())
        .map(|i| {
            (0..p)
                .map(|j| {
                    let pred: f64 = (0..hp).map(|c| beta[j * hp + c] * reg.x[(i, c)]).sum();
                    pred - reg.y[(i, j)]
                })
                .collect()
        })
        .collect())
}

/// Homogeneous: `s2 = sum ||r_i||_2^2 / (pn)` and `V = |sum ||r_i||_4^4 / (pn) - s2^2|`.
/// Heterogeneous: the same per component with `n` in place of `pn`.
pub fn estimate_moments(reg: &RegressionView, beta: &[f64], mode: VarianceMode) -> Result<MomentEstimates> {
    let res = residuals(reg, beta)?;
    let (n, p) = (reg.samples() as f64, reg.dim());
    let mut second = vec![0.0; p];
    let mut fourth = vec![0.0; p];
    for r in &res {
        for (j, v) in r.iter().enumerate() {
            let sq = v * v;
            second[j] += sq;
            fourth[j] += sq * sq;
        }
    }
    Ok(match mode {
        VarianceMode::Homogeneous => {
            let denom = n * p as f64;
            let s2 = second.iter().sum::<f64>() / denom;
            let m4 = fourth.iter().sum::<f64>() / denom;
            MomentEstimates {
                sigma2: NoiseScale::Scalar(s2),
                fourth: NoiseScale::Scalar((m4 - s2 * s2).abs()),
            }
        }
        VarianceMode::Heterogeneous => {
            let s2: Vec<f64> = second.iter().map(|s| s / n).collect();
            let v = fourth
                .iter()
                .zip(&s2)
                .map(|(m4, s)| (m4 / n - s * s).abs())
                .collect();
            MomentEstimates {
                sigma2: NoiseScale::PerComponent(s2),
                fourth: NoiseScale::PerComponent(v),
            }
        }
    })
}
