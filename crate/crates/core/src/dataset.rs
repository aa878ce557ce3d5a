//! Row-major storage for a `T x p` multivariate series.

use crate::error::{Error, Result};

/// A time-indexed `p`-dimensional series. Row `i` is the observation at step `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    rows: usize,
    dim: usize,
    labels: Option<Vec<String>>,
}

impl Dataset {
    /// Build from row-major values. Every entry must be finite.
    pub fn from_row_major(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("series dimension must be positive".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: values.len() % dim,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self {
            rows: values.len() / dim,
            values,
            dim,
            labels: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_row_major(values, dim)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Contiguous copy of rows `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Dataset {
        assert!(start <= end && end <= self.rows, "window out of range");
        Dataset {
            values: self.values[start * self.dim..end * self.dim].to_vec(),
            rows: end - start,
            dim: self.dim,
            labels: self.labels.clone(),
        }
    }

    /// Multiply every entry by `c`.
    pub fn scaled(&self, c: f64) -> Dataset {
        Dataset {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }
}
