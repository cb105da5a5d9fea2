//! CSV ingestion and emission, plus the atomic file-write helper used by
//! every artifact writer in the crate.

use ndarray::Array2;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// How to interpret a CSV file.
#[derive(Debug, Clone)]
pub struct CsvDatasetSpec {
    pub path: std::path::PathBuf,
    /// Drop the first column (e.g. an ETT-style date column).
    pub has_timestamp_column: bool,
    pub delimiter: u8,
    /// When set, the parsed column names must match exactly.
    pub expected_columns: Option<Vec<String>>,
}

impl CsvDatasetSpec {
    pub fn new(path: impl Into<std::path::PathBuf>) -> Self {
        Self {
            path: path.into(),
            has_timestamp_column: false,
            delimiter: b',',
            expected_columns: None,
        }
    }

    pub fn with_timestamp_column(mut self, yes: bool) -> Self {
        self.has_timestamp_column = yes;
        self
    }
}

/// Loads a rectangular numeric CSV. A header row is detected by attempting to
/// parse the first row's data cells as numbers; column order is preserved.
pub fn load_csv(spec: &CsvDatasetSpec) -> Result<TimeSeries> {
    let file = std::fs::File::open(&spec.path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(spec.delimiter)
        .flexible(true)
        .from_reader(file);

    let skip = usize::from(spec.has_timestamp_column);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;

    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: row_idx + 1,
            col: 1,
            msg: e.to_string(),
        })?;
        if record.len() <= skip {
            return Err(Error::Parse {
                row: row_idx + 1,
                col: 1,
                msg: format!("row has only {} cells", record.len()),
            });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row: row_idx + 1,
                    col: 1,
                    msg: format!("row has {} cells, expected {w}", record.len()),
                })
            }
            _ => {}
        }

        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .skip(skip)
            .map(|(col, cell)| cell.trim().parse::<f64>().map_err(|_| col))
            .collect();

        match parsed {
            Ok(values) => {
                for (offset, v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue {
                            row: row_idx + 1,
                            col: skip + offset + 1,
                        });
                    }
                }
                rows.push(values);
            }
            Err(col) if row_idx == 0 && names.is_none() => {
                // First row with non-numeric data cells is the header.
                names = Some(record.iter().skip(skip).map(str::to_string).collect());
                let _ = col;
            }
            Err(col) => {
                return Err(Error::Parse {
                    row: row_idx + 1,
                    col: col + 1,
                    msg: format!("cell {:?} is not a number", &record[col]),
                });
            }
        }
    }

    if rows.is_empty() {
        return Err(Error::Parse {
            row: 1,
            col: 1,
            msg: "no data rows".into(),
        });
    }
    let cols = rows[0].len();
    let names = names.unwrap_or_else(|| (0..cols).map(|c| format!("v{c}")).collect());
    if let Some(expected) = &spec.expected_columns {
        if *expected != names {
            return Err(Error::Parse {
                row: 1,
                col: 1,
                msg: format!("columns {names:?} do not match expected {expected:?}"),
            });
        }
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let values = Array2::from_shape_vec((flat.len() / cols, cols), flat)
        .map_err(|e| Error::Shape(e.to_string()))?;
    TimeSeries::new(values, names)
}

/// Writes a series as CSV with a header row. Values use Rust's shortest
/// round-trip decimal form, so a write/load cycle is lossless.
pub fn write_csv(series: &TimeSeries, path: &Path) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{}", series.names().join(","));
    for row in series.values().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(text, "{}", line.join(","));
    }
    write_atomic(path, text.as_bytes())
}

/// Write-temp-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
