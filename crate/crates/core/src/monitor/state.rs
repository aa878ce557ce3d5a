use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::MonitorConfig;
use super::quantile::threshold;
use super::statistic::{residual_squares, test_statistic};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::FittedBaseline;

/// One raw alarm and what refinement made of it. Times are 1-based stream indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmRecord {
    /// Index just before the alarm window; the window covers `t_hat + 1 ..= t_hat + omega`.
    pub t_hat: usize,
    /// Newest observation read when the alarm fired.
    pub last_read: usize,
    pub statistic: f64,
    pub refined: Option<usize>,
    pub confirmed: Option<bool>,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Index of the observation just pushed.
    pub time: usize,
    pub statistic: Option<f64>,
    pub alarm: bool,
}

struct Slot {
    x: Vec<f64>,
    /// Squared residual per component, valid once `h` predecessors exist.
    sq: Vec<f64>,
    norm: f64,
}

/// Sliding window over the most recent `h + omega` observations.
pub struct MonitorState {
    baseline: Arc<FittedBaseline>,
    omega: usize,
    threshold: f64,
    ring: VecDeque<Slot>,
    spare: Option<Slot>,
    lagged: Vec<f64>,
    pred: Vec<f64>,
    next_time: usize,
    last_stat: Option<f64>,
}

impl MonitorState {
    /// `first_time` is the index given to the first pushed observation.
    pub fn new(baseline: Arc<FittedBaseline>, config: &MonitorConfig, first_time: usize) -> Result<Self> {
        baseline.validate()?;
        if config.variance_mode != baseline.variance_mode {
            return Err(Error::InvalidConfig(
                "monitor variance mode differs from the baseline's".into(),
            ));
        }
        let omega = config.validate(baseline.h, baseline.p)?;
        let (h, p) = (baseline.h, baseline.p);
        Ok(Self {
            omega,
            threshold: threshold(config.alpha)?,
            ring: VecDeque::with_capacity(h + omega),
            spare: None,
            lagged: vec![0.0; h * p],
            pred: vec![0.0; p],
            next_time: first_time,
            last_stat: None,
            baseline,
        })
    }

    pub fn baseline(&self) -> &Arc<FittedBaseline> {
        &self.baseline
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Index of the newest observation, if any.
    pub fn time(&self) -> Option<usize> {
        (!self.ring.is_empty()).then(|| self.next_time - 1)
    }

    pub fn last_stat(&self) -> Option<f64> {
        self.last_stat
    }

    pub fn is_full(&self) -> bool {
        self.ring.len() == self.baseline.h + self.omega
    }

    pub fn step(&mut self, x: &[f64]) -> Result<StepOutput> {
        let (h, p) = (self.baseline.h, self.baseline.p);
        if x.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        if self.ring.len() == h + self.omega {
            self.spare = self.ring.pop_front();
        }
        let mut slot = self.spare.take().unwrap_or_else(|| Slot {
            x: vec![0.0; p],
            sq: vec![0.0; p],
            norm: 0.0,
        });
        slot.x.copy_from_slice(x);
        let have = self.ring.len();
        if have >= h {
            for l in 0..h {
                self.lagged[l * p..(l + 1) * p].copy_from_slice(&self.ring[have - 1 - l].x);
            }
            slot.norm = residual_squares(&self.baseline.beta, &self.lagged, x, &mut self.pred, &mut slot.sq);
        }
        self.ring.push_back(slot);
        let time = self.next_time;
        self.next_time += 1;

        if !self.is_full() {
            return Ok(StepOutput {
                time,
                statistic: None,
                alarm: false,
            });
        }
        let total: f64 = self.ring.iter().skip(h).map(|s| s.norm).sum();
        let stat = test_statistic(total / self.omega as f64, &self.baseline, self.omega)?;
        self.last_stat = Some(stat);
        Ok(StepOutput {
            time,
            statistic: Some(stat),
            alarm: stat.abs() > self.threshold,
        })
    }

    /// The current `h + omega` observations, oldest first.
    pub fn window(&self) -> Dataset {
        let values: Vec<f64> = self.ring.iter().flat_map(|s| s.x.iter().copied()).collect();
        Dataset::from_row_major(values, self.baseline.p).expect("ring holds finite rows")
    }

    /// The newest `count` observations, oldest first.
    pub(crate) fn recent(&self, count: usize) -> Vec<Vec<f64>> {
        let skip = self.ring.len().saturating_sub(count);
        self.ring.iter().skip(skip).map(|s| s.x.clone()).collect()
    }
}
