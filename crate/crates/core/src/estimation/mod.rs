//! Training-side estimation: stacked regression, lasso, penalty and lag selection, moments.

pub mod baseline;
pub mod cv;
pub mod lag;
pub mod lasso;
pub mod moments;
pub mod regression;

pub use baseline::{fit_baseline, min_training_rows, FittedBaseline, LagChoice, MIN_FOURTH_MOMENT};
pub use cv::{default_lambda_grid, select_lambda_cv, select_lambda_cv_with, DEFAULT_FOLDS};
pub use lag::{bic_scores, select_lag_bic};
pub use lasso::{fit_lasso, fit_lasso_with, lambda_max, CoordinateDescent, LassoOptions};
pub use moments::{estimate_moments, residuals, MomentEstimates, VarianceMode};
pub use regression::{build_regression, RegressionView};
