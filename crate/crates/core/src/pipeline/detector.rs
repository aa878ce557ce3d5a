use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cluster::{cluster_alarms, Cluster};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{fit_baseline, min_training_rows, FittedBaseline, LagChoice};
use crate::model::NoiseScale;
use crate::monitor::{refine, AlarmRecord, MonitorConfig, MonitorState};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Training responses per baseline; each training block holds `n + h` observations.
    pub n: usize,
    pub lag: LagChoice,
    /// Fixed penalty; `None` selects one by cross-validation.
    pub lambda: Option<f64>,
    pub monitor: MonitorConfig,
    /// Refit after every confirmed alarm.
    pub retrain: bool,
    /// Expected minimum distance between change points. Recorded, never enforced.
    pub min_spacing_hint: Option<usize>,
}

impl PipelineConfig {
    pub fn new(n: usize, lag: LagChoice) -> Self {
        Self {
            n,
            lag,
            lambda: None,
            monitor: MonitorConfig::default(),
            retrain: false,
            min_spacing_hint: None,
        }
    }

    /// Observations per training block: `n` plus the (largest candidate) lag.
    pub fn training_rows(&self) -> usize {
        self.n + self.lag_bound()
    }

    fn lag_bound(&self) -> usize {
        match self.lag {
            LagChoice::Fixed(h) => h,
            LagChoice::Select { max } => max,
        }
    }

    /// Every violated constraint for a `dim`-dimensional stream.
    pub fn problems(&self, dim: usize) -> Vec<String> {
        let mut out = Vec::new();
        let h = self.lag_bound();
        if h == 0 {
            out.push("lag must be at least 1".into());
        }
        if dim == 0 {
            out.push("series dimension must be positive".into());
        }
        if h > 0 && dim > 0 {
            let n_min = min_training_rows(h, dim);
            if self.n < n_min {
                out.push(format!("training length n = {} is below the minimum {n_min}", self.n));
            }
            out.extend(self.monitor.problems(h, dim));
            let omega = self.monitor.omega_for(h, dim);
            if omega > self.n {
                out.push(format!("omega = {omega} exceeds the training length n = {}", self.n));
            }
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                out.push(format!("lambda must be finite and >= 0, got {l}"));
            }
        }
        if self.retrain && !self.monitor.confirm {
            out.push("retraining requires the confirmation step".into());
        }
        out
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let problems = self.problems(dim);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub h: usize,
    pub n: usize,
    pub lambda: f64,
    pub sigma2_hat: NoiseScale,
    pub v_hat: NoiseScale,
    pub nonzero_coefficients: usize,
}

impl From<&FittedBaseline> for BaselineSummary {
    fn from(b: &FittedBaseline) -> Self {
        Self {
            h: b.h,
            n: b.n,
            lambda: b.lambda,
            sigma2_hat: b.sigma2_hat.clone(),
            v_hat: b.v_hat.clone(),
            nonzero_coefficients: b.beta.iter().filter(|v| **v != 0.0).count(),
        }
    }
}

/// One baseline's life: the rows it was trained on and the rows it monitored (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub training: (usize, usize),
    pub monitoring: Option<(usize, usize)>,
    pub omega: usize,
    pub baseline: BaselineSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub observations: usize,
    pub alarms: Vec<AlarmRecord>,
    pub clusters: Vec<Cluster>,
    pub segments: Vec<SegmentReport>,
    /// Observations monitored by the first baseline up to and including its first alarm.
    pub run_length: usize,
    /// No alarm was raised, so `run_length` counts everything monitored.
    pub run_length_censored: bool,
    /// First index of a training block that ran out of data.
    pub incomplete_retraining: Option<usize>,
}

impl RunReport {
    /// Refined estimates of confirmed alarms, in time order.
    pub fn confirmed_estimates(&self) -> Vec<usize> {
        self.alarms
            .iter()
            .filter(|a| a.confirmed == Some(true))
            .filter_map(|a| a.refined)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Statistic { time: usize, value: f64 },
    Alarm(AlarmRecord),
    Confirmed { t_hat: usize, refined: usize },
    Dismissed { t_hat: usize },
    /// A new baseline was fitted on rows `start..=end` after a confirmed alarm.
    Retrain { start: usize, end: usize },
}

enum Phase {
    Training { start: usize, rows: Vec<Vec<f64>> },
    Monitoring(MonitorState),
}

/// Push-based driver: trains on the first block, then monitors, refines and (optionally)
/// retrains. Times are 1-based positions in the stream.
pub struct Detector {
    config: PipelineConfig,
    emit_stats: bool,
    dim: Option<usize>,
    seen: usize,
    phase: Phase,
    alarms: Vec<AlarmRecord>,
    segments: Vec<SegmentReport>,
    first_alarm: Option<usize>,
}

impl Detector {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            config,
            emit_stats: false,
            dim: None,
            seen: 0,
            phase: Phase::Training {
                start: 1,
                rows: Vec::new(),
            },
            alarms: Vec::new(),
            segments: Vec::new(),
            first_alarm: None,
        }
    }

    /// Also report every computed statistic as an event.
    pub fn with_statistics(mut self, on: bool) -> Self {
        self.emit_stats = on;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn alarms(&self) -> &[AlarmRecord] {
        &self.alarms
    }

    /// The baseline currently monitoring, if any.
    pub fn baseline(&self) -> Option<&Arc<FittedBaseline>> {
        match &self.phase {
            Phase::Monitoring(state) => Some(state.baseline()),
            Phase::Training { .. } => None,
        }
    }

    pub fn push(&mut self, x: &[f64]) -> Result<Vec<Event>> {
        match self.dim {
            None => {
                self.config.validate(x.len())?;
                self.dim = Some(x.len());
            }
            Some(p) if p != x.len() => return Err(Error::DimensionMismatch { expected: p, got: x.len() }),
            _ => {}
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        self.seen += 1;
        let time = self.seen;
        let mut events = Vec::new();
        match &mut self.phase {
            Phase::Training { rows, .. } => {
                rows.push(x.to_vec());
                if rows.len() == self.config.training_rows() {
                    self.start_monitoring(&mut events)?;
                }
            }
            Phase::Monitoring(state) => {
                let out = state.step(x)?;
                let seg = self.segments.last_mut().expect("monitoring implies a segment");
                let span = seg.monitoring.get_or_insert((time, time));
                span.1 = time;
                if let (true, Some(value)) = (self.emit_stats, out.statistic) {
                    events.push(Event::Statistic { time, value });
                }
                if out.alarm {
                    self.handle_alarm(time, out.statistic.unwrap_or(f64::NAN), &mut events)?;
                }
            }
        }
        Ok(events)
    }

    fn start_monitoring(&mut self, events: &mut Vec<Event>) -> Result<()> {
        let Phase::Training { start, rows } = &self.phase else {
            unreachable!("fit requested outside training")
        };
        let (start, end) = (*start, *start + rows.len() - 1);
        let data = Dataset::from_rows(rows)?;
        let monitor = &self.config.monitor;
        let baseline = fit_baseline(&data, self.config.lag, monitor.variance_mode, self.config.lambda)?;
        let omega = monitor.validate(baseline.h, baseline.p)?;
        let preload = baseline.h + omega - 1;
        if preload > rows.len() {
            return Err(Error::InsufficientData {
                needed: preload,
                got: rows.len(),
            });
        }
        let summary = BaselineSummary::from(&baseline);
        let mut state = MonitorState::new(Arc::new(baseline), monitor, end + 1 - preload)?;
        for row in &rows[rows.len() - preload..] {
            state.step(row)?;
        }
        if !self.segments.is_empty() {
            events.push(Event::Retrain { start, end });
        }
        self.segments.push(SegmentReport {
            training: (start, end),
            monitoring: None,
            omega,
            baseline: summary,
        });
        self.phase = Phase::Monitoring(state);
        Ok(())
    }

    fn handle_alarm(&mut self, time: usize, statistic: f64, events: &mut Vec<Event>) -> Result<()> {
        let Phase::Monitoring(state) = &self.phase else {
            unreachable!("alarm outside monitoring")
        };
        let omega = state.omega();
        let t_hat = time - omega;
        let refined = refine(&state.window(), t_hat, state.baseline(), &self.config.monitor)?;
        let confirmed = self.config.monitor.confirm.then_some(refined.is_some());
        let record = AlarmRecord {
            t_hat,
            last_read: time,
            statistic,
            refined,
            confirmed,
            cluster: None,
        };
        if self.segments.len() == 1 && self.first_alarm.is_none() {
            self.first_alarm = Some(time);
        }
        events.push(Event::Alarm(record.clone()));
        match (confirmed, refined) {
            (Some(true), Some(r)) => events.push(Event::Confirmed { t_hat, refined: r }),
            (Some(false), _) => events.push(Event::Dismissed { t_hat }),
            _ => {}
        }
        self.alarms.push(record);

        if let (true, Some(true), Some(r)) = (self.config.retrain, confirmed, refined) {
            // Everything after the refined estimate is still in the ring.
            let rows = state.recent(time - r);
            self.phase = Phase::Training { start: r + 1, rows };
        }
        Ok(())
    }

    pub fn finish(self) -> Result<RunReport> {
        let Some(first) = self.segments.first() else {
            return Err(Error::InsufficientData {
                needed: self.config.training_rows(),
                got: self.seen,
            });
        };
        let trained_end = first.training.1;
        let (run_length, censored) = match self.first_alarm {
            Some(t) => (t - trained_end, false),
            None => (first.monitoring.map_or(0, |(_, e)| e - trained_end), true),
        };
        let incomplete_retraining = match &self.phase {
            Phase::Training { start, .. } => Some(*start),
            Phase::Monitoring(_) => None,
        };
        let omega = self.segments.iter().map(|s| s.omega).max().unwrap_or(0);
        let mut alarms = self.alarms;
        let clusters = cluster_alarms(&alarms, omega);
        for c in &clusters {
            for &i in &c.members {
                alarms[i].cluster = Some(c.id);
            }
        }
        Ok(RunReport {
            observations: self.seen,
            alarms,
            clusters,
            segments: self.segments,
            run_length,
            run_length_censored: censored,
            incomplete_retraining,
        })
    }
}

fn run(data: &Dataset, config: PipelineConfig) -> Result<RunReport> {
    let mut det = Detector::new(config);
    for row in data.iter_rows() {
        det.push(row)?;
    }
    det.finish()
}

/// Train on the first block, then monitor the rest without ever retraining.
pub fn run_single(data: &Dataset, config: &PipelineConfig) -> Result<RunReport> {
    run(data, PipelineConfig {
        retrain: false,
        ..config.clone()
    })
}

/// Like [`run_single`], but refits after each confirmed alarm when `config.retrain` is set.
pub fn run_sequential(data: &Dataset, config: &PipelineConfig) -> Result<RunReport> {
    run(data, config.clone())
}
