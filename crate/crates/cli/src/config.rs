//! Run configuration: a TOML file whose keys mirror the command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use varcpd_core::estimation::min_training_rows;
use varcpd_core::monitor::{DEFAULT_ALPHA, DEFAULT_REFINE_RATIO};
use varcpd_core::{LagChoice, MonitorConfig, PipelineConfig, VarianceMode};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA: &str = "varcpd-config/1";

/// Every key is optional; unset keys take the documented defaults.
///
/// | key | default |
/// |-----|---------|
/// | `lag` | 1 (ignored when `max_lag` is set) |
/// | `omega` | `round(10 ln(h p^2))`, at least 2 |
/// | `alpha` | 0.001 |
/// | `refine_ratio` | 0.15 |
/// | `confirm` | true |
/// | `variance_mode` | `homogeneous` |
/// | `retrain` | false |
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub alarm_log: Option<PathBuf>,
    pub columns: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub lag: Option<usize>,
    pub max_lag: Option<usize>,
    pub lambda: Option<f64>,
    pub omega: Option<usize>,
    pub alpha: Option<f64>,
    pub refine_ratio: Option<f64>,
    pub confirm: Option<bool>,
    pub variance_mode: Option<VarianceMode>,
    pub retrain: Option<bool>,
    pub min_spacing_hint: Option<usize>,
    pub statistics: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ConfigFile =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = &cfg.schema {
            if s != CONFIG_SCHEMA {
                return Err(CliError::Config(format!(
                    "{}: unsupported schema {s:?}, expected {CONFIG_SCHEMA:?}",
                    path.display()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Keys set in `top` win.
    pub fn overlay(mut self, top: ConfigFile) -> Self {
        overlay!(
            self, top, schema, input, output, alarm_log, columns, seed, n, lag, max_lag, lambda, omega,
            alpha, refine_ratio, confirm, variance_mode, retrain, min_spacing_hint, statistics
        );
        self
    }

    pub fn lag_choice(&self) -> LagChoice {
        match self.max_lag {
            Some(max) => LagChoice::Select { max },
            None => LagChoice::Fixed(self.lag.unwrap_or(1)),
        }
    }

    pub fn monitor(&self) -> MonitorConfig {
        MonitorConfig {
            omega: self.omega,
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            refine_ratio: self.refine_ratio.unwrap_or(DEFAULT_REFINE_RATIO),
            confirm: self.confirm.unwrap_or(true),
            variance_mode: self.variance_mode.unwrap_or_default(),
        }
    }

    /// Pipeline settings for a `dim`-dimensional stream. All problems are reported together.
    pub fn pipeline(&self, dim: usize) -> CliResult<PipelineConfig> {
        let mut problems = Vec::new();
        if self.max_lag.is_some() && self.lag.is_some() {
            problems.push("set either lag or max_lag, not both".to_string());
        }
        let lag = self.lag_choice();
        let n = match self.n {
            Some(n) => n,
            None => {
                problems.push("training length n is required".into());
                let h = match lag {
                    LagChoice::Fixed(h) | LagChoice::Select { max: h } => h,
                };
                min_training_rows(h.max(1), dim.max(1))
            }
        };
        let config = PipelineConfig {
            n,
            lag,
            lambda: self.lambda,
            monitor: self.monitor(),
            retrain: self.retrain.unwrap_or(false),
            min_spacing_hint: self.min_spacing_hint,
        };
        if self.n.is_some() {
            problems.extend(config.problems(dim));
        } else {
            problems.extend(config.problems(dim).into_iter().filter(|p| !p.contains("training")));
        }
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(CliError::config_list(&problems))
        }
    }
}
