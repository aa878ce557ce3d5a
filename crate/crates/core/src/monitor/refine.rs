//! Localization and confirmation inside an alarm window.

use super::config::MonitorConfig;
use super::quantile::threshold;
use super::statistic::{test_statistic, window_squares};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::FittedBaseline;

/// Offset `k` of the first sub-window (covering window observations `k + 1 ..= k + omega'`)
/// whose statistic crosses the threshold.
pub(crate) fn first_sub_alarm(window: &Dataset, baseline: &FittedBaseline, config: &MonitorConfig) -> Result<Option<usize>> {
    let omega = config.validate(baseline.h, baseline.p)?;
    if window.dim() != baseline.p {
        return Err(Error::DimensionMismatch {
            expected: baseline.p,
            got: window.dim(),
        });
    }
    if window.rows() != baseline.h + omega {
        return Err(Error::DimensionMismatch {
            expected: baseline.h + omega,
            got: window.rows(),
        });
    }
    let sub = config.refine_omega(omega);
    let cut = threshold(config.alpha)?;
    let rows: Vec<&[f64]> = window.iter_rows().collect();
    let norms: Vec<f64> = window_squares(&rows, baseline).into_iter().map(|(n, _)| n).collect();
    for k in 0..=omega - sub {
        let total: f64 = norms[k..k + sub].iter().sum();
        let stat = test_statistic(total / sub as f64, baseline, sub)?;
        if stat.abs() > cut {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Re-runs detection inside the alarm window (`h` lead-in rows, then the `omega` observations
/// `t_hat + 1 ..= t_hat + omega`) with the shorter window `round(refine_ratio * omega)`.
///
/// The estimate is the last index before the newest observation of the first alarming
/// sub-window: that observation is the earliest one the shorter window flags, so the change
/// is placed just ahead of it. It never falls below `t_hat + 1`.
pub fn refine(window: &Dataset, t_hat: usize, baseline: &FittedBaseline, config: &MonitorConfig) -> Result<Option<usize>> {
    let sub = config.refine_omega(config.omega_for(baseline.h, baseline.p));
    Ok(first_sub_alarm(window, baseline, config)?.map(|k| (t_hat + k + sub - 1).max(t_hat + 1)))
}

/// An alarm stands only if refinement finds a sub-alarm.
pub fn confirm(window: &Dataset, baseline: &FittedBaseline, config: &MonitorConfig) -> Result<bool> {
    Ok(first_sub_alarm(window, baseline, config)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::VarianceMode;
    use crate::model::NoiseScale;

    fn white_noise_baseline() -> FittedBaseline {
        FittedBaseline {
            beta: vec![0.0],
            sigma2_hat: NoiseScale::Scalar(1.0),
            v_hat: NoiseScale::Scalar(2.0),
            lambda: 0.0,
            n: 100,
            h: 1,
            p: 1,
            variance_mode: VarianceMode::Homogeneous,
        }
    }

    fn config() -> MonitorConfig {
        MonitorConfig {
            omega: Some(10),
            refine_ratio: 0.2,
            alpha: 0.01,
            ..MonitorConfig::default()
        }
    }

    #[test]
    fn locates_a_burst() {
        // Unit-magnitude values with a burst at window observations 6 and 7.
        let mut values = vec![1.0; 11];
        values[6] = 30.0;
        values[7] = 30.0;
        let w = Dataset::from_row_major(values, 1).unwrap();
        let b = white_noise_baseline();
        // Sub-windows of length 2; the first one flagged ends at observation 6, so the
        // estimate is observation 5.
        assert_eq!(refine(&w, 100, &b, &config()).unwrap(), Some(105));
        assert!(confirm(&w, &b, &config()).unwrap());
    }

    #[test]
    fn quiet_window_is_dismissed() {
        let values: Vec<f64> = (0..11).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let w = Dataset::from_row_major(values, 1).unwrap();
        let b = white_noise_baseline();
        assert_eq!(refine(&w, 7, &b, &config()).unwrap(), None);
        assert!(!confirm(&w, &b, &config()).unwrap());
    }

    #[test]
    fn estimate_stays_in_range() {
        let b = white_noise_baseline();
        for spike in 1..11 {
            let mut values = vec![1.0; 11];
            values[spike] = 50.0;
            let w = Dataset::from_row_major(values, 1).unwrap();
            let r = refine(&w, 40, &b, &config()).unwrap().unwrap();
            assert!(r > 40 && r <= 50, "{r}");
            assert!(confirm(&w, &b, &config()).unwrap());
        }
    }

    #[test]
    fn window_shape_checked() {
        let w = Dataset::from_row_major(vec![1.0; 9], 1).unwrap();
        assert!(refine(&w, 0, &white_noise_baseline(), &config()).is_err());
    }
}
