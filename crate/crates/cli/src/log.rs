//! JSON-lines alarm log. The first line carries the schema tag; each later line is one event,
//! flushed as soon as it is written so the file can be tailed mid-run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use varcpd_core::pipeline::{Cluster, Event};

use crate::error::{io_error, CliResult};

pub const ALARM_LOG_SCHEMA: &str = "varcpd-alarm-log/1";

#[derive(Debug, Default, Serialize)]
pub struct LogLine {
    pub event: &'static str,
    pub time: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confirmed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl LogLine {
    /// `time` is the index of the observation that produced the event.
    pub fn from_event(event: &Event, time: usize) -> Self {
        match event {
            Event::Statistic { time, value } => LogLine {
                event: "stat",
                time: *time,
                statistic: Some(*value),
                ..Default::default()
            },
            Event::Alarm(a) => LogLine {
                event: "alarm",
                time: a.last_read,
                statistic: Some(a.statistic),
                t_hat: Some(a.t_hat),
                refined: a.refined,
                confirmed: a.confirmed,
                ..Default::default()
            },
            Event::Confirmed { t_hat, refined } => LogLine {
                event: "confirmed",
                time,
                t_hat: Some(*t_hat),
                refined: Some(*refined),
                ..Default::default()
            },
            Event::Dismissed { t_hat } => LogLine {
                event: "dismissed",
                time,
                t_hat: Some(*t_hat),
                ..Default::default()
            },
            Event::Retrain { start, end } => LogLine {
                event: "retrain",
                time,
                start: Some(*start),
                end: Some(*end),
                ..Default::default()
            },
        }
    }

    pub fn from_cluster(c: &Cluster, time: usize) -> Self {
        LogLine {
            event: "cluster",
            time,
            cluster: Some(c.id),
            start: c.start,
            members: Some(c.members.clone()),
            confirmed: Some(c.confirmed),
            ..Default::default()
        }
    }
}

pub struct AlarmLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl AlarmLog {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        let mut log = AlarmLog {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        log.write_json(&serde_json::json!({ "schema": ALARM_LOG_SCHEMA }))?;
        Ok(log)
    }

    fn write_json<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        let line = serde_json::to_string(value).expect("log records serialize");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| io_error(&self.path, e))
    }

    pub fn write(&mut self, line: &LogLine) -> CliResult<()> {
        self.write_json(line)
    }
}
