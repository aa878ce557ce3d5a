use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varcpd_core::pipeline::{Detector, RunReport};
use varcpd_core::scenario::{bench as run_bench, BenchParams, Scenario};
use varcpd_core::{fit_baseline, simulate as run_simulation, FittedBaseline, LagChoice};

use crate::config::ConfigFile;
use crate::csvio::{read_series, write_numeric_table, write_series, SeriesReader};
use crate::error::{io_error, CliError, CliResult};
use crate::log::{AlarmLog, LogLine};
use crate::simspec::SimSpec;
use crate::{BenchArgs, SimulateArgs};

pub const REPORT_SCHEMA: &str = "varcpd-report/1";
pub const BASELINE_SCHEMA: &str = "varcpd-baseline/1";
pub const BENCH_SCHEMA: &str = "varcpd-bench/1";
pub const COEFFICIENT_LAYOUT: &str = "beta[j*h*p + l*p + k]: series k at lag l+1 in the equation for series j";

#[derive(Serialize)]
struct ReportFile<'a> {
    schema: &'static str,
    #[serde(flatten)]
    report: &'a RunReport,
}

#[derive(Serialize, Deserialize)]
pub struct BaselineFile {
    pub schema: String,
    pub layout: String,
    pub columns: Vec<String>,
    pub baseline: FittedBaseline,
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let write = |out: &mut dyn Write| -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)?;
        out.flush()
    };
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_error(p, e))?;
            write(&mut BufWriter::new(file)).map_err(|e| io_error(p, e))
        }
        None => write(&mut io::stdout().lock()).map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn required(value: &Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
    value
        .clone()
        .ok_or_else(|| CliError::Config(format!("{key} is required (flag --{} or config key)", key.replace('_', "-"))))
}

/// Errors raised while handling observation `row`.
fn at_row(e: varcpd_core::Error, row: usize) -> CliError {
    match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("row {row}: {m}")),
        CliError::Data(m) => CliError::Data(format!("row {row}: {m}")),
        CliError::Numerical(m) => CliError::Numerical(format!("row {row}: {m}")),
    }
}

pub fn monitor(cfg: ConfigFile) -> CliResult<()> {
    let input = required(&cfg.input, "input")?;
    let mut reader = SeriesReader::open(&input, cfg.columns.as_deref())?;
    let pipeline = cfg.pipeline(reader.dim())?;
    let mut log = cfg.alarm_log.as_deref().map(AlarmLog::create).transpose()?;
    let mut detector = Detector::new(pipeline).with_statistics(cfg.statistics.unwrap_or(false));
    while let Some(row) = reader.next_row()? {
        let events = detector.push(row);
        let time = reader.rows_read();
        let events = events.map_err(|e| at_row(e, time))?;
        if let Some(log) = log.as_mut() {
            for e in &events {
                log.write(&LogLine::from_event(e, time))?;
            }
        }
    }
    let report = detector.finish()?;
    if let Some(log) = log.as_mut() {
        for c in &report.clusters {
            log.write(&LogLine::from_cluster(c, report.observations))?;
        }
    }
    write_json(
        cfg.output.as_deref(),
        &ReportFile {
            schema: REPORT_SCHEMA,
            report: &report,
        },
    )
}

pub fn fit(cfg: ConfigFile) -> CliResult<()> {
    let input = required(&cfg.input, "input")?;
    let data = read_series(&input, cfg.columns.as_deref())?;
    let rows = match cfg.n {
        Some(_) => cfg.pipeline(data.dim())?.training_rows(),
        None => {
            if cfg.max_lag.is_some() && cfg.lag.is_some() {
                return Err(CliError::Config("set either lag or max_lag, not both".into()));
            }
            if let LagChoice::Fixed(0) | LagChoice::Select { max: 0 } = cfg.lag_choice() {
                return Err(CliError::Config("lag must be at least 1".into()));
            }
            data.rows()
        }
    };
    if rows > data.rows() {
        return Err(CliError::Data(format!(
            "{}: training needs {rows} rows, file has {}",
            input.display(),
            data.rows()
        )));
    }
    let baseline = fit_baseline(
        &data.window(0, rows),
        cfg.lag_choice(),
        cfg.monitor().variance_mode,
        cfg.lambda,
    )?;
    write_json(
        cfg.output.as_deref(),
        &BaselineFile {
            schema: BASELINE_SCHEMA.into(),
            layout: COEFFICIENT_LAYOUT.into(),
            columns: data.labels().map(<[String]>::to_vec).unwrap_or_default(),
            baseline,
        },
    )
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let spec = SimSpec::load(&args.spec)?;
    let seed = args.seed.or(spec.seed).unwrap_or(0);
    let data = run_simulation(&spec.change_spec(seed)?, seed)?;
    write_series(&args.output, &data)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    schema: Option<String>,
    n: Option<Vec<usize>>,
    p: Option<Vec<usize>>,
    alpha: Option<Vec<f64>>,
    omega: Option<Vec<usize>>,
    jump: Option<Vec<f64>>,
    refine_ratio: Option<Vec<f64>>,
    confirm: Option<bool>,
    heterogeneous: Option<bool>,
    monitored: Option<usize>,
    sparsity: Option<usize>,
    reps: Option<usize>,
    seed: Option<u64>,
}

pub const DEFAULT_REPLICATIONS: usize = 100;

pub fn bench(args: BenchArgs) -> CliResult<()> {
    let scenario = Scenario::parse(&args.scenario).ok_or_else(|| {
        let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
        CliError::Config(format!("unknown scenario {:?}; expected one of {}", args.scenario, names.join(", ")))
    })?;
    let file: BenchFile = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => BenchFile::default(),
    };
    if let Some(s) = file.schema.as_deref().filter(|s| *s != BENCH_SCHEMA) {
        return Err(CliError::Config(format!("unsupported schema {s:?}, expected {BENCH_SCHEMA:?}")));
    }
    let d = BenchParams::defaults(scenario);
    let params = BenchParams {
        n: args.n.or(file.n).unwrap_or(d.n),
        p: args.p.or(file.p).unwrap_or(d.p),
        alpha: args.alpha.or(file.alpha).unwrap_or(d.alpha),
        omega: args.omega.or(file.omega).unwrap_or(d.omega),
        jump: args.jump.or(file.jump).unwrap_or(d.jump),
        refine_ratio: args.refine_ratio.or(file.refine_ratio).unwrap_or(d.refine_ratio),
        confirm: args.confirm.or(file.confirm).unwrap_or(d.confirm),
        heterogeneous: args.heterogeneous.or(file.heterogeneous).unwrap_or(d.heterogeneous),
        monitored: args.monitored.or(file.monitored).or(d.monitored),
        sparsity: args.sparsity.or(file.sparsity).or(d.sparsity),
    };
    let reps = args.reps.or(file.reps).unwrap_or(DEFAULT_REPLICATIONS);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = run_bench(scenario, &params, reps, seed)?;
    std::fs::create_dir_all(&args.output_dir).map_err(|e| io_error(&args.output_dir, e))?;
    let name = scenario.name();
    write_numeric_table(&args.output_dir.join(format!("{name}_raw.csv")), &out.raw)?;
    write_numeric_table(&args.output_dir.join(format!("{name}_summary.csv")), &out.summary)
}
