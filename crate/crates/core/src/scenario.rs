//! Seeded Monte Carlo studies: run length, detection delay, window size, refinement and
//! multiple change points.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{LagChoice, VarianceMode};
use crate::model::{make_jump, spectral_radius, stationary_covariance, NoiseScale, VarModel};
use crate::monitor::MonitorConfig;
use crate::pipeline::{match_change_points, run_sequential, run_single, PipelineConfig, RunReport};
use crate::simulate::{simulate, ChangeSpec, Segment, DEFAULT_BURN_IN};

/// Diagonal entry of the pre-change transition matrix.
pub const BASE_COEFFICIENT: f64 = 0.8;
/// Post-change models whose stationary variance (trace of the lag-0 covariance) exceeds the
/// pre-change one by more than this factor are redrawn. Sparse perturbations of a diagonal
/// matrix are often stationary yet strongly non-normal, with variances many orders of
/// magnitude above the base; such regimes have an unbounded-in-practice spectral density.
pub const MAX_VARIANCE_INFLATION: f64 = 100.0;
/// Redraws allowed before giving up on a post-change model.
pub const POST_CHANGE_DRAWS: usize = 10_000;
/// Estimates within this many steps of a true change point count as hits.
pub const MATCH_TOLERANCE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RunLength,
    Delay,
    WindowSweep,
    Refine,
    Multicp,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::RunLength,
        Scenario::Delay,
        Scenario::WindowSweep,
        Scenario::Refine,
        Scenario::Multicp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RunLength => "run_length",
            Scenario::Delay => "delay",
            Scenario::WindowSweep => "window_sweep",
            Scenario::Refine => "refine",
            Scenario::Multicp => "multicp",
        }
    }

    pub fn parse(name: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Study parameters. Every list is a grid axis; the study runs the Cartesian product of the
/// axes it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    pub alpha: Vec<f64>,
    pub omega: Vec<usize>,
    pub jump: Vec<f64>,
    pub refine_ratio: Vec<f64>,
    pub confirm: bool,
    /// Draw per-component noise variances from U(0.5, 1.5) and monitor heterogeneously.
    pub heterogeneous: bool,
    /// Monitored observations per no-change stream; defaults to `10 / alpha`.
    pub monitored: Option<usize>,
    /// Perturbed coefficients per jump; defaults to `p`.
    pub sparsity: Option<usize>,
}

impl BenchParams {
    pub fn defaults(scenario: Scenario) -> Self {
        let base = BenchParams {
            n: vec![2000],
            p: vec![10],
            alpha: vec![1e-3],
            omega: vec![50],
            jump: vec![4.0],
            refine_ratio: vec![0.1],
            confirm: false,
            heterogeneous: false,
            monitored: None,
            sparsity: None,
        };
        match scenario {
            Scenario::WindowSweep => BenchParams {
                omega: vec![10, 25, 50, 75, 100],
                jump: vec![2.0, 3.0, 4.0],
                ..base
            },
            Scenario::Multicp => BenchParams {
                alpha: vec![1e-4],
                jump: vec![2.0, 2.5, 3.0, 3.5, 4.0, 4.5],
                confirm: true,
                ..base
            },
            _ => base,
        }
    }

    fn validate(&self) -> Result<()> {
        let empty = [
            ("n", self.n.is_empty()),
            ("p", self.p.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("omega", self.omega.is_empty()),
            ("jump", self.jump.is_empty()),
            ("refine_ratio", self.refine_ratio.is_empty()),
        ];
        let missing: Vec<&str> = empty.iter().filter(|(_, e)| *e).map(|(k, _)| *k).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("empty parameter lists: {}", missing.join(", "))))
        }
    }
}

/// A numeric table; missing values are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub raw: Table,
    pub summary: Table,
}

/// Linear-interpolation sample quantile of the finite entries; NaN if there are none.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn spread(values: &[f64]) -> [f64; 3] {
    [quantile(values, 0.5), quantile(values, 0.025), quantile(values, 0.975)]
}

fn mean(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// Seed for replication `rep` of grid cell `cell`.
pub fn replication_seed(master: u64, cell: usize, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng.next_u64()
}

/// Pre-change model `0.8 I_p`, with unit or U(0.5, 1.5) noise variances.
pub fn base_model(p: usize, heterogeneous: bool, seed: u64) -> Result<VarModel> {
    let model = VarModel::diagonal(p, BASE_COEFFICIENT, 1.0)?;
    if heterogeneous {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = (0..p).map(|_| rng.random_range(0.5..1.5)).collect();
        model.with_noise(NoiseScale::PerComponent(vars))
    } else {
        Ok(model)
    }
}

/// A jump of size `jump` from `base` (see [`make_jump`]) whose stationary variance stays within
/// [`MAX_VARIANCE_INFLATION`] of the base's.
pub fn post_change_model(base: &VarModel, jump: f64, sparsity: usize, seed: u64) -> Result<VarModel> {
    let base_trace = stationary_covariance(base)
        .map(|g| g.trace())
        .ok_or(Error::NonStationary {
            spectral_radius: spectral_radius(base),
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..POST_CHANGE_DRAWS {
        let candidate = make_jump(base, jump, sparsity, rng.next_u64())?;
        let tame = stationary_covariance(&candidate).is_some_and(|g| g.trace() <= MAX_VARIANCE_INFLATION * base_trace);
        if tame {
            return Ok(candidate);
        }
    }
    Err(Error::RetryBudgetExhausted(POST_CHANGE_DRAWS))
}

/// Streams whose model switches at each listed change point (the last pre-change index).
fn stream(models: &[VarModel], change_points: &[usize], length: usize, seed: u64) -> Result<Dataset> {
    let mut segments = vec![Segment {
        start: 1,
        model: models[0].clone(),
    }];
    for (cp, m) in change_points.iter().zip(&models[1..]) {
        segments.push(Segment {
            start: cp + 1,
            model: m.clone(),
        });
    }
    simulate(&ChangeSpec::new(segments, length, DEFAULT_BURN_IN)?, seed)
}

struct Cell {
    n: usize,
    p: usize,
    alpha: f64,
    omega: usize,
    jump: f64,
    ratio: f64,
}

impl Cell {
    fn config(&self, params: &BenchParams, confirm: bool) -> PipelineConfig {
        PipelineConfig {
            monitor: MonitorConfig {
                omega: Some(self.omega),
                alpha: self.alpha,
                refine_ratio: self.ratio,
                confirm,
                variance_mode: if params.heterogeneous {
                    VarianceMode::Heterogeneous
                } else {
                    VarianceMode::Homogeneous
                },
            },
            ..PipelineConfig::new(self.n, LagChoice::Fixed(1))
        }
    }
}

/// Per-replication inputs: seeds for the noise draw, the jump, and the stream.
struct Draw {
    base: VarModel,
    jumped: Option<VarModel>,
    stream_seed: u64,
}

fn draw(cell: &Cell, params: &BenchParams, seed: u64, with_jump: bool) -> Result<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = base_model(cell.p, params.heterogeneous, rng.next_u64())?;
    let jump_seed = rng.next_u64();
    let jumped = if with_jump {
        Some(post_change_model(&base, cell.jump, params.sparsity.unwrap_or(cell.p), jump_seed)?)
    } else {
        None
    };
    Ok(Draw {
        base,
        jumped,
        stream_seed: rng.next_u64(),
    })
}

fn grid(scenario: Scenario, params: &BenchParams) -> Vec<Cell> {
    let one = |v: f64| vec![v];
    let omegas = params.omega.clone();
    let (jumps, ratios, alphas, ns) = match scenario {
        Scenario::RunLength => (one(0.0), one(params.refine_ratio[0]), params.alpha.clone(), params.n.clone()),
        Scenario::Refine => (params.jump.clone(), params.refine_ratio.clone(), params.alpha.clone(), params.n.clone()),
        _ => (params.jump.clone(), one(params.refine_ratio[0]), params.alpha.clone(), params.n.clone()),
    };
    let mut cells = Vec::new();
    for &n in &ns {
        for &p in &params.p {
            for &alpha in &alphas {
                for &omega in &omegas {
                    for &jump in &jumps {
                        for &ratio in &ratios {
                            cells.push(Cell {
                                n,
                                p,
                                alpha,
                                omega,
                                jump,
                                ratio,
                            });
                        }
                    }
                }
            }
        }
    }
    cells
}

/// Runs one study. Replications run in parallel; output order and values depend only on
/// `(scenario, params, replications, seed)`.
pub fn bench(scenario: Scenario, params: &BenchParams, replications: usize, seed: u64) -> Result<BenchOutput> {
    params.validate()?;
    if replications == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let (raw_cols, sum_cols): (&[&str], &[&str]) = match scenario {
        Scenario::RunLength => (
            &["n", "p", "alpha", "omega", "replication", "run_length", "censored"],
            &["n", "p", "alpha", "median", "q2.5", "q97.5"],
        ),
        Scenario::Delay => (
            &["n", "p", "alpha", "omega", "jump", "replication", "delay"],
            &["n", "p", "alpha", "omega", "jump", "detected", "median", "q2.5", "q97.5"],
        ),
        Scenario::WindowSweep => (
            &["n", "p", "alpha", "omega", "jump", "replication", "early_stop", "delay"],
            &["n", "p", "alpha", "omega", "jump", "early_stop_rate", "median", "q2.5", "q97.5"],
        ),
        Scenario::Refine => (
            &["n", "p", "alpha", "omega", "jump", "refine_ratio", "replication", "early_stop", "delay", "refined_error"],
            &[
                "n",
                "p",
                "alpha",
                "omega",
                "jump",
                "refine_ratio",
                "early_stop_rate",
                "delay_median",
                "median",
                "q2.5",
                "q97.5",
            ],
        ),
        Scenario::Multicp => (
            &["n", "p", "alpha", "omega", "jump", "replication", "tp", "fp", "fn", "f1"],
            &["n", "p", "alpha", "omega", "jump", "mean", "median", "q2.5", "q97.5"],
        ),
    };
    let mut raw = Table::new(raw_cols);
    let mut summary = Table::new(sum_cols);

    for (ci, cell) in grid(scenario, params).iter().enumerate() {
        let records: Vec<Vec<f64>> = (0..replications)
            .into_par_iter()
            .map(|rep| replicate(scenario, cell, params, replication_seed(seed, ci, rep)))
            .collect::<Result<_>>()?;
        let col = |k: usize| -> Vec<f64> { records.iter().map(|r| r[k]).collect() };
        let keys = [cell.n as f64, cell.p as f64, cell.alpha, cell.omega as f64, cell.jump];
        for (rep, rec) in records.iter().enumerate() {
            let mut row: Vec<f64> = match scenario {
                Scenario::RunLength => keys[..4].to_vec(),
                Scenario::Refine => {
                    let mut k = keys.to_vec();
                    k.push(cell.ratio);
                    k
                }
                _ => keys.to_vec(),
            };
            row.push(rep as f64);
            row.extend(rec);
            raw.rows.push(row);
        }
        let srow: Vec<f64> = match scenario {
            Scenario::RunLength => [&keys[..3], &spread(&col(0))[..]].concat(),
            Scenario::Delay => {
                let d = col(0);
                let detected = d.iter().filter(|x| x.is_finite()).count() as f64 / d.len() as f64;
                [&keys[..], &[detected], &spread(&d)[..]].concat()
            }
            Scenario::WindowSweep => [&keys[..], &[mean(&col(0))], &spread(&col(1))[..]].concat(),
            Scenario::Refine => [
                &keys[..],
                &[cell.ratio, mean(&col(0)), quantile(&col(1), 0.5)],
                &spread(&col(2))[..],
            ]
            .concat(),
            Scenario::Multicp => {
                let f1 = col(3);
                [&keys[..], &[mean(&f1)], &spread(&f1)[..]].concat()
            }
        };
        summary.rows.push(srow);
    }
    Ok(BenchOutput { raw, summary })
}

/// Measurements of one replication, in raw-table order after the replication column.
fn replicate(scenario: Scenario, cell: &Cell, params: &BenchParams, seed: u64) -> Result<Vec<f64>> {
    let train_end = cell.n + 1;
    match scenario {
        Scenario::RunLength => {
            let d = draw(cell, params, seed, false)?;
            let monitored = params.monitored.unwrap_or((10.0 / cell.alpha).round() as usize);
            let data = stream(&[d.base], &[], train_end + monitored, d.stream_seed)?;
            let r = run_single(&data, &cell.config(params, params.confirm))?;
            Ok(vec![r.run_length as f64, r.run_length_censored as u8 as f64])
        }
        Scenario::Delay => {
            let d = draw(cell, params, seed, true)?;
            let data = stream(&[d.base, d.jumped.unwrap()], &[train_end], train_end + 200, d.stream_seed)?;
            let r = run_single(&data, &cell.config(params, params.confirm))?;
            Ok(vec![first_alarm_after(&r, 0).map_or(f64::NAN, |a| (a - train_end) as f64)])
        }
        Scenario::WindowSweep | Scenario::Refine => {
            let cp = cell.n + 300;
            let d = draw(cell, params, seed, true)?;
            let data = stream(&[d.base, d.jumped.unwrap()], &[cp], cp + 300, d.stream_seed)?;
            let r = run_single(&data, &cell.config(params, params.confirm))?;
            let counted: Vec<_> = r.alarms.iter().filter(|a| a.confirmed != Some(false)).collect();
            let early = counted.first().is_some_and(|a| a.last_read <= cp);
            let hit = counted.iter().find(|a| a.last_read > cp);
            let delay = match (early, hit) {
                (false, Some(a)) => (a.last_read - cp) as f64,
                _ => f64::NAN,
            };
            if scenario == Scenario::WindowSweep {
                return Ok(vec![early as u8 as f64, delay]);
            }
            let error = match (early, hit) {
                (false, Some(a)) => a.refined.unwrap_or(a.last_read).abs_diff(cp) as f64,
                _ => f64::NAN,
            };
            Ok(vec![early as u8 as f64, delay, error])
        }
        Scenario::Multicp => {
            let (cp1, cp2, length) = (2300, 4600, 6900);
            let d = draw(cell, params, seed, true)?;
            let models = [d.base.clone(), d.jumped.unwrap(), d.base];
            let data = stream(&models, &[cp1, cp2], length, d.stream_seed)?;
            let config = PipelineConfig {
                retrain: true,
                ..cell.config(params, true)
            };
            let r = run_sequential(&data, &config)?;
            let m = match_change_points(&r.confirmed_estimates(), &[cp1, cp2], MATCH_TOLERANCE);
            Ok(vec![
                m.true_positives as f64,
                m.false_positives as f64,
                m.false_negatives as f64,
                m.f1(),
            ])
        }
    }
}

/// Last-read index of the first alarm after `after`.
fn first_alarm_after(report: &RunReport, after: usize) -> Option<usize> {
    report.alarms.iter().map(|a| a.last_read).find(|&t| t > after)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.025) - 1.075).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.975), 7.0);
        assert!(quantile(&[f64::NAN], 0.5).is_nan());
    }

    #[test]
    fn seeds_differ_across_cells_and_replications() {
        let a = replication_seed(1, 0, 0);
        assert_eq!(a, replication_seed(1, 0, 0));
        assert_ne!(a, replication_seed(1, 0, 1));
        assert_ne!(a, replication_seed(1, 1, 0));
        assert_ne!(a, replication_seed(2, 0, 0));
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()), Some(s));
        }
    }

    #[test]
    fn single_replication_summary_is_the_raw_row() {
        let params = BenchParams {
            n: vec![200],
            p: vec![3],
            omega: vec![20],
            monitored: Some(300),
            ..BenchParams::defaults(Scenario::RunLength)
        };
        let out = bench(Scenario::RunLength, &params, 1, 9).unwrap();
        assert_eq!(out.summary.columns, ["n", "p", "alpha", "median", "q2.5", "q97.5"]);
        let rl = out.raw.column("run_length").unwrap()[0];
        assert_eq!(out.summary.rows[0][3..], [rl, rl, rl]);
        let again = bench(Scenario::RunLength, &params, 1, 9).unwrap();
        assert_eq!(out, again);
    }
}
