//! Seeded simulation of piecewise-constant VAR series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{ensure_stationary, predict_into, VarModel};

pub const DEFAULT_BURN_IN: usize = 500;

/// A regime that takes effect at 1-based time `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub model: VarModel,
}

/// Piecewise-constant VAR regimes over `1..=total_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSpec {
    segments: Vec<Segment>,
    total_length: usize,
    burn_in: usize,
}

impl ChangeSpec {
    pub fn new(segments: Vec<Segment>, total_length: usize, burn_in: usize) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidConfig("at least one segment is required".into()));
        };
        if first.start != 1 {
            return Err(Error::InvalidConfig(format!(
                "first segment must start at 1, got {}",
                first.start
            )));
        }
        if total_length == 0 {
            return Err(Error::InvalidConfig("total length must be positive".into()));
        }
        let dim = first.model.dim();
        for pair in segments.windows(2) {
            if pair[1].start <= pair[0].start {
                return Err(Error::InvalidConfig(
                    "segment start indices must be strictly increasing".into(),
                ));
            }
        }
        for seg in &segments {
            if seg.model.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: seg.model.dim(),
                });
            }
            if seg.start > total_length {
                return Err(Error::InvalidConfig(format!(
                    "segment start {} exceeds total length {total_length}",
                    seg.start
                )));
            }
        }
        Ok(Self {
            segments,
            total_length,
            burn_in,
        })
    }

    /// A single regime with no change.
    pub fn stationary(model: VarModel, total_length: usize) -> Result<Self> {
        Self::new(vec![Segment { start: 1, model }], total_length, DEFAULT_BURN_IN)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn dim(&self) -> usize {
        self.segments[0].model.dim()
    }

    /// True change points: the last time index of every segment except the final one.
    pub fn change_points(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start - 1).collect()
    }
}

/// Draw `spec.total_length()` rows. The first `burn_in` draws under the first regime are
/// discarded. Output is a pure function of `(spec, seed)`.
pub fn simulate(spec: &ChangeSpec, seed: u64) -> Result<Dataset> {
    for seg in &spec.segments {
        ensure_stationary(&seg.model)?;
    }
    let p = spec.dim();
    let lag = spec.segments.iter().map(|s| s.model.lag()).max().unwrap_or(1);
    let hp = lag * p;
    let regimes: Vec<(usize, Vec<f64>, &VarModel)> = spec
        .segments
        .iter()
        .map(|s| (s.start, s.model.padded_to(lag).coefficients(), &s.model))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (X_{t-1}, ..., X_{t-h}) for the next draw
    let mut lagged = vec![0.0; hp];
    let mut next = vec![0.0; p];
    let mut out = Vec::with_capacity(spec.total_length * p);
    let mut regime = 0;
    for step in 0..spec.burn_in + spec.total_length {
        let time = step as isize - spec.burn_in as isize + 1;
        while regime + 1 < regimes.len() && time >= regimes[regime + 1].0 as isize {
            regime += 1;
        }
        let (_, beta, model) = &regimes[regime];
        predict_into(beta, &lagged, &mut next);
        let kind = model.noise_kind();
        for (j, x) in next.iter_mut().enumerate() {
            let var = model.noise().component(j);
            if var > 0.0 {
                *x += var.sqrt() * kind.draw(&mut rng);
            }
        }
        lagged.copy_within(0..hp - p, p);
        lagged[..p].copy_from_slice(&next);
        if time >= 1 {
            out.extend_from_slice(&next);
        }
    }
    Dataset::from_row_major(out, p)
}
