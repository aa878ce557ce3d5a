use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Stacked least-squares form of a VAR(h) fit.
///
/// Row `i` of `y` is the observation `X_{T-i}` (newest first) and row `i` of `x` holds its
/// lags `(X_{T-i-1}', ..., X_{T-i-h}')`. There is no intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionView {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub lag: usize,
}

impl RegressionView {
    pub fn samples(&self) -> usize {
        self.y.nrows()
    }

    pub fn dim(&self) -> usize {
        self.y.ncols()
    }

    /// Number of predictors per response, `h * p`.
    pub fn predictors(&self) -> usize {
        self.x.ncols()
    }

    /// Rows for which `keep` holds, in their original order.
    pub(crate) fn rows_subset(&self, keep: impl Fn(usize) -> bool) -> RegressionView {
        let idx: Vec<usize> = (0..self.samples()).filter(|&i| keep(i)).collect();
        RegressionView {
            y: self.y.select_rows(&idx),
            x: self.x.select_rows(&idx),
            lag: self.lag,
        }
    }
}

/// Pair every observation from row `h` onward with its `h` predecessors.
pub fn build_regression(data: &Dataset, lag: usize) -> Result<RegressionView> {
    if lag == 0 {
        return Err(Error::InvalidConfig("lag order must be at least 1".into()));
    }
    let rows = data.rows();
    if rows < lag + 1 {
        return Err(Error::InsufficientData {
            needed: lag + 1,
            got: rows,
        });
    }
    let p = data.dim();
    let n = rows - lag;
    let y = DMatrix::from_fn(n, p, |i, j| data.row(rows - 1 - i)[j]);
    let x = DMatrix::from_fn(n, lag * p, |i, c| {
        let (l, k) = (c / p, c % p);
        data.row(rows - 2 - i - l)[k]
    });
    Ok(RegressionView { y, x, lag })
}
