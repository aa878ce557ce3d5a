//! Series files: an optional `# <schema>` line, a header of series names, one row per step.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use varcpd_core::Dataset;

use crate::error::{io_error, CliError, CliResult};

pub const SERIES_SCHEMA: &str = "varcpd-series/1";
pub const TABLE_SCHEMA: &str = "varcpd-table/1";

/// Twelve significant digits, in the shortest form that reads back to the same rounded value.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded:?}")
}

fn open(path: &Path) -> CliResult<Box<dyn Read>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin()));
    }
    Ok(Box::new(File::open(path).map_err(|e| io_error(path, e))?))
}

/// Streams observation rows from a series file, optionally keeping only named columns.
pub struct SeriesReader {
    reader: csv::Reader<Box<dyn Read>>,
    header: Vec<String>,
    picks: Vec<usize>,
    record: csv::StringRecord,
    row: usize,
    values: Vec<f64>,
}

impl SeriesReader {
    pub fn open(path: &Path, columns: Option<&[String]>) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(open(path)?);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Data(format!("{}: header: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(CliError::Data(format!("{}: missing header line", path.display())));
        }
        let picks = match columns {
            None => (0..header.len()).collect(),
            Some(names) => names
                .iter()
                .map(|name| {
                    header.iter().position(|h| h == name).ok_or_else(|| {
                        CliError::Config(format!("column {name:?} not in {}", path.display()))
                    })
                })
                .collect::<CliResult<_>>()?,
        };
        Ok(Self {
            reader,
            header,
            picks,
            record: csv::StringRecord::new(),
            row: 0,
            values: Vec::new(),
        })
    }

    /// Names of the selected columns.
    pub fn labels(&self) -> Vec<String> {
        self.picks.iter().map(|&i| self.header[i].clone()).collect()
    }

    pub fn dim(&self) -> usize {
        self.picks.len()
    }

    /// The next row, or `None` at end of file. Errors name the 1-based data row.
    pub fn next_row(&mut self) -> CliResult<Option<&[f64]>> {
        let more = self
            .reader
            .read_record(&mut self.record)
            .map_err(|e| CliError::Data(format!("row {}: {e}", self.row + 1)))?;
        if !more {
            return Ok(None);
        }
        self.row += 1;
        let line = self.record.position().map_or(0, |p| p.line());
        if self.record.len() != self.header.len() {
            return Err(CliError::Data(format!(
                "row {} (line {line}): expected {} fields, got {}",
                self.row,
                self.header.len(),
                self.record.len()
            )));
        }
        self.values.clear();
        for &c in &self.picks {
            let field = &self.record[c];
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!(
                    "row {} (line {line}), column {:?}: cannot parse {field:?} as a number",
                    self.row, self.header[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "row {} (line {line}), column {:?}: non-finite value",
                    self.row, self.header[c]
                )));
            }
            self.values.push(v);
        }
        Ok(Some(&self.values))
    }

    pub fn rows_read(&self) -> usize {
        self.row
    }
}

pub fn read_series(path: &Path, columns: Option<&[String]>) -> CliResult<Dataset> {
    let mut reader = SeriesReader::open(path, columns)?;
    let mut values = Vec::new();
    while let Some(row) = reader.next_row()? {
        values.extend_from_slice(row);
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let labels = reader.labels();
    Ok(Dataset::from_row_major(values, labels.len())?.with_labels(labels)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?))
}

fn write_table<'a>(
    path: &Path,
    schema: &str,
    header: &[String],
    rows: impl Iterator<Item = &'a [f64]>,
) -> CliResult<()> {
    let result = (|| -> io::Result<()> {
        let mut out = create(path).map_err(|e| io::Error::other(e.to_string()))?;
        writeln!(out, "# {schema}")?;
        writeln!(out, "{}", header.join(","))?;
        for row in rows {
            let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()
    })();
    result.map_err(|e| io_error(path, e))
}

pub fn write_series(path: &Path, data: &Dataset) -> CliResult<()> {
    let header: Vec<String> = match data.labels() {
        Some(l) => l.to_vec(),
        None => (1..=data.dim()).map(|j| format!("x{j}")).collect(),
    };
    write_table(path, SERIES_SCHEMA, &header, data.iter_rows())
}

pub fn write_numeric_table(path: &Path, table: &varcpd_core::scenario::Table) -> CliResult<()> {
    write_table(path, TABLE_SCHEMA, &table.columns, table.rows.iter().map(Vec::as_slice))
}
