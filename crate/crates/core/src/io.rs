//! CSV input and output: comma-separated, one header row, one row per time
//! point, no index column.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::varma::Series;

/// A rectangular numeric table with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub values: Matrix,
}

impl CsvTable {
    pub fn into_series(self) -> Series {
        Series::new(self.values).expect("parsed cells are finite")
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses CSV text. Parse errors report the 1-based line (the header is line
/// 1) and the 1-based column.
pub fn parse_csv<R: Read>(reader: R, name: &str) -> Result<CsvTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyData(name.to_string()));
    }
    let k = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(line, |p| p.line() as usize),
            column: 1,
            message: e.to_string(),
        })?;
        if record.len() != k {
            return Err(Error::Parse {
                row: line,
                column: record.len().min(k) + 1,
                message: format!("expected {k} fields, found {}", record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: j + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: j + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyData(name.to_string()));
    }
    Ok(CsvTable {
        header,
        values: Matrix::from_row_major(rows, k, data)?,
    })
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    parse_csv(file, &path.display().to_string())
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv_to<W: Write>(writer: W, header: &[String], values: &Matrix) -> Result<()> {
    assert_eq!(header.len(), values.cols(), "header width");
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(csv_err)?;
    for t in 0..values.rows() {
        w.write_record(values.row(t).iter().map(|&v| format_value(v)))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })
}

pub fn write_csv(path: &Path, header: &[String], values: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_csv_to(file, header, values).map_err(|e| match e {
        Error::Io { source, .. } => io_error(path, source),
        other => other,
    })
}

/// Column names `z1, z2, …`.
pub fn default_header(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("z{j}")).collect()
}
