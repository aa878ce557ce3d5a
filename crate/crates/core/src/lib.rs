//! Online change-point detection for high-dimensional vector auto-regressive series.
//!
//! A sparse VAR baseline is fitted on change-free training data; new observations are then
//! scored by the normalized one-step prediction error over a sliding window, and alarms are
//! refined, confirmed, and (optionally) followed by retraining.

pub mod dataset;
pub mod error;
pub mod estimation;
pub mod model;
pub mod monitor;
pub mod pipeline;
pub mod scenario;
pub mod simulate;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimation::{fit_baseline, FittedBaseline, LagChoice, VarianceMode};
pub use model::{companion, is_stationary, make_jump, spectral_radius, stationary_covariance, NoiseKind, NoiseScale, VarModel};
pub use simulate::{simulate, ChangeSpec, Segment};
pub use monitor::{AlarmRecord, MonitorConfig, MonitorState};
pub use pipeline::{run_sequential, run_single, Detector, PipelineConfig, RunReport};
