use serde::{Deserialize, Serialize};

use super::cv::{default_lambda_grid, select_lambda_cv, DEFAULT_FOLDS};
use super::lag::select_lag_bic;
use super::lasso::fit_lasso;
use super::moments::{estimate_moments, VarianceMode};
use super::regression::build_regression;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::NoiseScale;

/// Fourth-moment estimates at or below this make the test statistic unusable.
pub const MIN_FOURTH_MOMENT: f64 = 1e-12;

/// Minimum training rows for a lag-`h`, dimension-`p` baseline.
pub fn min_training_rows(lag: usize, dim: usize) -> usize {
    (2 * lag * dim).max(50)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagChoice {
    Fixed(usize),
    /// Pick from `1..=max` by BIC.
    Select { max: usize },
}

/// Everything the monitor needs from training: coefficients in the normative layout and
/// the moment estimates, plus the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedBaseline {
    pub beta: Vec<f64>,
    pub sigma2_hat: NoiseScale,
    pub v_hat: NoiseScale,
    pub lambda: f64,
    pub n: usize,
    pub h: usize,
    pub p: usize,
    pub variance_mode: VarianceMode,
}

impl FittedBaseline {
    /// `sum_j sigma2_j` (equals `p * sigma2` in homogeneous mode).
    pub fn total_sigma2(&self) -> f64 {
        self.sigma2_hat.total(self.p)
    }

    pub fn total_v(&self) -> f64 {
        self.v_hat.total(self.p)
    }

    /// Shape and finiteness checks, and the fourth-moment guard.
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.h == 0 {
            return Err(Error::InvalidModel("baseline dimension and lag must be positive".into()));
        }
        if self.beta.len() != self.h * self.p * self.p {
            return Err(Error::DimensionMismatch {
                expected: self.h * self.p * self.p,
                got: self.beta.len(),
            });
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("baseline coefficients"));
        }
        let shape_ok = |s: &NoiseScale| match (s, self.variance_mode) {
            (NoiseScale::Scalar(v), VarianceMode::Homogeneous) => v.is_finite() && *v >= 0.0,
            (NoiseScale::PerComponent(v), VarianceMode::Heterogeneous) => {
                v.len() == self.p && v.iter().all(|x| x.is_finite() && *x >= 0.0)
            }
            _ => false,
        };
        if !shape_ok(&self.sigma2_hat) || !shape_ok(&self.v_hat) {
            return Err(Error::InvalidModel(
                "moment estimates do not match the variance mode".into(),
            ));
        }
        let v = self.total_v();
        if v <= MIN_FOURTH_MOMENT {
            return Err(Error::DegenerateMoments(v));
        }
        Ok(())
    }
}

/// Train on `data`: optional BIC lag search, CV penalty (unless `lambda` is given),
/// lasso fit, then moment estimates.
pub fn fit_baseline(
    data: &Dataset,
    lag: LagChoice,
    mode: VarianceMode,
    lambda: Option<f64>,
) -> Result<FittedBaseline> {
    let p = data.dim();
    let h = match lag {
        LagChoice::Fixed(h) => h,
        LagChoice::Select { max } => {
            let needed = min_training_rows(max, p);
            if data.rows() < needed {
                return Err(Error::InsufficientData {
                    needed,
                    got: data.rows(),
                });
            }
            select_lag_bic(data, max)?
        }
    };
    let needed = min_training_rows(h, p).max(h + 1);
    if data.rows() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: data.rows(),
        });
    }
    let reg = build_regression(data, h)?;
    let lambda = match lambda {
        Some(l) => l,
        None => select_lambda_cv(&reg, &default_lambda_grid(&reg), DEFAULT_FOLDS)?,
    };
    let beta = fit_lasso(&reg, lambda)?;
    let moments = estimate_moments(&reg, &beta, mode)?;
    let baseline = FittedBaseline {
        beta,
        sigma2_hat: moments.sigma2,
        v_hat: moments.fourth,
        lambda,
        n: reg.samples(),
        h,
        p,
        variance_mode: mode,
    };
    baseline.validate()?;
    Ok(baseline)
}
