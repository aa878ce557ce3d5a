//! Simulation specs: a TOML description of piecewise-constant VAR regimes.
//!
//! ```toml
//! dim = 10
//! length = 6900
//! noise = 1.0
//!
//! [[segment]]
//! start = 1
//! diagonal = 0.8
//!
//! [[segment]]
//! start = 2301
//! jump = 3.0
//!
//! [[segment]]
//! start = 4601
//! same_as = 1
//! ```
//!
//! Each segment sets exactly one of `diagonal` (a times the identity), `transitions`
//! (one row-major matrix per lag), `jump` (a random sparse perturbation of segment `from`,
//! default 1, with that Euclidean size) or `same_as` (repeat an earlier segment). Segment
//! numbers are 1-based.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use varcpd_core::scenario::{post_change_model, replication_seed};
use varcpd_core::simulate::DEFAULT_BURN_IN;
use varcpd_core::{ChangeSpec, NoiseKind, NoiseScale, Segment, VarModel};

use crate::error::{CliError, CliResult};

pub const SIMULATE_SCHEMA: &str = "varcpd-simulate/1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub schema: Option<String>,
    pub dim: usize,
    pub length: usize,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default = "unit_noise")]
    pub noise: NoiseScale,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    pub segment: Vec<SegmentSpec>,
}

fn unit_noise() -> NoiseScale {
    NoiseScale::Scalar(1.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start: usize,
    pub diagonal: Option<f64>,
    pub transitions: Option<Vec<Vec<Vec<f64>>>>,
    pub jump: Option<f64>,
    pub from: Option<usize>,
    /// Perturbed coefficients for `jump`; defaults to `dim`.
    pub sparsity: Option<usize>,
    pub same_as: Option<usize>,
    /// Overrides the spec-wide noise for this segment.
    pub noise: Option<NoiseScale>,
}

impl SimSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let spec: SimSpec =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = &spec.schema {
            if s != SIMULATE_SCHEMA {
                return Err(CliError::Config(format!("unsupported schema {s:?}, expected {SIMULATE_SCHEMA:?}")));
            }
        }
        Ok(spec)
    }

    /// Build the regimes. `seed` drives the random jumps.
    pub fn change_spec(&self, seed: u64) -> CliResult<ChangeSpec> {
        let mut models: Vec<VarModel> = Vec::with_capacity(self.segment.len());
        for (i, seg) in self.segment.iter().enumerate() {
            let at = |msg: String| CliError::Config(format!("segment {}: {msg}", i + 1));
            let earlier = |k: usize| -> CliResult<&VarModel> {
                if k == 0 || k > i {
                    return Err(at(format!("refers to segment {k}, which is not an earlier segment")));
                }
                Ok(&models[k - 1])
            };
            let set = [
                seg.diagonal.is_some(),
                seg.transitions.is_some(),
                seg.jump.is_some(),
                seg.same_as.is_some(),
            ];
            if set.iter().filter(|s| **s).count() != 1 {
                return Err(at("set exactly one of diagonal, transitions, jump, same_as".into()));
            }
            if seg.from.is_some() && seg.jump.is_none() {
                return Err(at("from only applies to jump".into()));
            }
            let noise = seg.noise.clone().unwrap_or_else(|| self.noise.clone());
            let model = if let Some(a) = seg.diagonal {
                VarModel::new(
                    vec![DMatrix::from_diagonal_element(self.dim, self.dim, a)],
                    noise,
                    self.noise_kind,
                )?
            } else if let Some(ts) = &seg.transitions {
                if ts.is_empty() {
                    return Err(at("transitions needs at least one matrix".into()));
                }
                let mats = ts
                    .iter()
                    .enumerate()
                    .map(|(l, rows)| {
                        if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                            return Err(at(format!("lag {} matrix must be {} x {}", l + 1, self.dim, self.dim)));
                        }
                        Ok(DMatrix::from_fn(self.dim, self.dim, |r, c| rows[r][c]))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                VarModel::new(mats, noise, self.noise_kind)?
            } else if let Some(jump) = seg.jump {
                let base = earlier(seg.from.unwrap_or(1))?.clone().with_noise(noise)?;
                let sparsity = seg.sparsity.unwrap_or(self.dim);
                post_change_model(&base, jump, sparsity, replication_seed(seed, i, 0))?
            } else {
                let k = seg.same_as.expect("one source is set");
                earlier(k)?.clone().with_noise(noise)?
            };
            models.push(model);
        }
        let segments = self
            .segment
            .iter()
            .zip(models)
            .map(|(s, model)| Segment { start: s.start, model })
            .collect();
        Ok(ChangeSpec::new(segments, self.length, self.burn_in.unwrap_or(DEFAULT_BURN_IN))?)
    }
}
