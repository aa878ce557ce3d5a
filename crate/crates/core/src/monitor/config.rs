use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::VarianceMode;

pub const DEFAULT_ALPHA: f64 = 1e-3;
pub const DEFAULT_REFINE_RATIO: f64 = 0.15;

/// `round(10 ln(h p^2))`, never below 2.
pub fn default_omega(lag: usize, dim: usize) -> usize {
    let hp2 = (lag * dim * dim).max(1) as f64;
    ((10.0 * hp2.ln()).round() as usize).max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    /// Window length; `None` applies [`default_omega`] once the lag is known.
    pub omega: Option<usize>,
    pub alpha: f64,
    pub refine_ratio: f64,
    pub confirm: bool,
    pub variance_mode: VarianceMode,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            omega: None,
            alpha: DEFAULT_ALPHA,
            refine_ratio: DEFAULT_REFINE_RATIO,
            confirm: true,
            variance_mode: VarianceMode::Homogeneous,
        }
    }
}

impl MonitorConfig {
    pub fn omega_for(&self, lag: usize, dim: usize) -> usize {
        self.omega.unwrap_or_else(|| default_omega(lag, dim))
    }

    /// `round(refine_ratio * omega)`.
    pub fn refine_omega(&self, omega: usize) -> usize {
        (self.refine_ratio * omega as f64).round() as usize
    }

    /// Every violated constraint, for a lag-`h`, dimension-`p` baseline.
    pub fn problems(&self, lag: usize, dim: usize) -> Vec<String> {
        let mut out = Vec::new();
        let omega = self.omega_for(lag, dim);
        if omega < 2 {
            out.push(format!("omega must be at least 2, got {omega}"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.refine_ratio > 0.0 && self.refine_ratio < 1.0) {
            out.push(format!("refine_ratio must lie in (0, 1), got {}", self.refine_ratio));
        } else if omega >= 2 {
            let sub = self.refine_omega(omega);
            if sub < 1 || sub >= omega {
                out.push(format!(
                    "refine window round({} * {omega}) = {sub} must lie in [1, {omega})",
                    self.refine_ratio
                ));
            }
        }
        out
    }

    /// Checks the configuration and returns the resolved window length.
    pub fn validate(&self, lag: usize, dim: usize) -> Result<usize> {
        let problems = self.problems(lag, dim);
        if problems.is_empty() {
            Ok(self.omega_for(lag, dim))
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_lengths() {
        assert_eq!(default_omega(1, 10), 46);
        assert_eq!(default_omega(1, 40), 74);
        assert_eq!(default_omega(1, 70), 85);
        assert_eq!(default_omega(1, 100), 92);
        assert_eq!(default_omega(1, 1), 2);
    }

    #[test]
    fn validation_reports_every_problem() {
        let cfg = MonitorConfig {
            omega: Some(1),
            alpha: 1.5,
            ..MonitorConfig::default()
        };
        assert_eq!(cfg.problems(1, 10).len(), 2);
        let cfg = MonitorConfig {
            omega: Some(50),
            refine_ratio: 0.001,
            ..MonitorConfig::default()
        };
        assert!(cfg.validate(1, 10).is_err());
        let cfg = MonitorConfig {
            omega: Some(50),
            refine_ratio: 0.1,
            ..MonitorConfig::default()
        };
        assert_eq!(cfg.validate(1, 10).unwrap(), 50);
        assert_eq!(cfg.refine_omega(50), 5);
    }
}
