//! Sliding-window monitoring, alarm refinement and confirmation.

mod config;
mod quantile;
mod refine;
mod state;
mod statistic;

pub use config::{default_omega, MonitorConfig, DEFAULT_ALPHA, DEFAULT_REFINE_RATIO};
pub use quantile::{normal_quantile, threshold};
pub use refine::{confirm, refine};
pub use state::{AlarmRecord, MonitorState, StepOutput};
pub use statistic::{test_statistic, window_residual_stat, WindowResidual};
