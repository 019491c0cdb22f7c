//! Delimited-text input.
//!
//! Coordinates in errors are 1-based file line and column numbers, counting
//! the header line when there is one.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::types::DataMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Every selected column is a variable. `None` selects all columns.
    Wide { columns: Option<Vec<String>> },
    /// One value column plus one or more label columns.
    Long { value: String, labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub path: PathBuf,
    pub layout: Layout,
    /// `None` picks tab when the first line contains one, else comma.
    pub delimiter: Option<u8>,
    pub header: bool,
}

impl TableSpec {
    pub fn wide(path: impl Into<PathBuf>) -> Self {
        TableSpec {
            path: path.into(),
            layout: Layout::Wide { columns: None },
            delimiter: None,
            header: true,
        }
    }

    pub fn long(path: impl Into<PathBuf>, value: &str, labels: &[&str]) -> Self {
        TableSpec {
            path: path.into(),
            layout: Layout::Long {
                value: value.to_string(),
                labels: labels.iter().map(|s| s.to_string()).collect(),
            },
            delimiter: None,
            header: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Variables (wide) or the single value column (long).
    pub matrix: DataMatrix,
    pub names: Vec<String>,
    /// Long layout only: one label vector per requested label column.
    pub labels: Vec<Vec<String>>,
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn parse_cell(raw: &str, line: usize, col: usize) -> Result<f64> {
    let t = raw.trim();
    let v: f64 = t.parse().map_err(|_| Error::ParseError {
        row: line,
        col,
        message: format!("{t:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue {
            row: line,
            col,
            value: t.to_string(),
        });
    }
    Ok(v)
}

fn find_column(names: &[String], wanted: &str, path: &Path) -> Result<usize> {
    names
        .iter()
        .position(|n| n == wanted)
        .or_else(|| {
            // Without a header, columns are addressed by 1-based position.
            wanted.parse::<usize>().ok().filter(|&i| i >= 1 && i <= names.len()).map(|i| i - 1)
        })
        .ok_or_else(|| Error::ParseError {
            row: 1,
            col: 0,
            message: format!("column {wanted:?} not found in {}", display(path)),
        })
}

pub fn load_table(spec: &TableSpec) -> Result<Table> {
    let text = std::fs::read_to_string(&spec.path)
        .map_err(|e| Error::Io(format!("{}: {e}", display(&spec.path))))?;
    parse_table(&text, spec)
}

/// Parses already-read text according to `spec` (the path is only used in
/// messages).
pub fn parse_table(text: &str, spec: &TableSpec) -> Result<Table> {
    let delimiter = spec.delimiter.unwrap_or_else(|| sniff_delimiter(text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::ParseError {
            row: i + 1,
            col: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push((i + 1, rec));
    }
    let (names, body): (Vec<String>, &[(usize, csv::StringRecord)]) = if spec.header {
        let Some((_, head)) = records.first() else {
            return Err(Error::EmptyTable(display(&spec.path)));
        };
        (head.iter().map(str::to_string).collect(), &records[1..])
    } else {
        let width = records.first().map_or(0, |(_, r)| r.len());
        ((1..=width).map(|i| format!("var{i}")).collect(), &records[..])
    };
    if body.is_empty() || names.is_empty() {
        return Err(Error::EmptyTable(display(&spec.path)));
    }
    for (line, rec) in body {
        if rec.len() != names.len() {
            return Err(Error::ParseError {
                row: *line,
                col: rec.len().min(names.len()) + 1,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
    }

    match &spec.layout {
        Layout::Wide { columns } => {
            let picked: Vec<usize> = match columns {
                None => (0..names.len()).collect(),
                Some(cols) => cols
                    .iter()
                    .map(|c| find_column(&names, c, &spec.path))
                    .collect::<Result<_>>()?,
            };
            let mut data = vec![Vec::with_capacity(body.len()); picked.len()];
            for (line, rec) in body {
                for (slot, &c) in data.iter_mut().zip(&picked) {
                    slot.push(parse_cell(&rec[c], *line, c + 1)?);
                }
            }
            Ok(Table {
                matrix: DataMatrix::from_columns(data)?,
                names: picked.iter().map(|&c| names[c].clone()).collect(),
                labels: Vec::new(),
            })
        }
        Layout::Long { value, labels } => {
            let vc = find_column(&names, value, &spec.path)?;
            let lcs: Vec<usize> = labels
                .iter()
                .map(|c| find_column(&names, c, &spec.path))
                .collect::<Result<_>>()?;
            let mut values = Vec::with_capacity(body.len());
            let mut label_cols = vec![Vec::with_capacity(body.len()); lcs.len()];
            for (line, rec) in body {
                values.push(parse_cell(&rec[vc], *line, vc + 1)?);
                for (slot, &c) in label_cols.iter_mut().zip(&lcs) {
                    slot.push(rec[c].to_string());
                }
            }
            Ok(Table {
                matrix: DataMatrix::from_vec(values)?,
                names: vec![names[vc].clone()],
                labels: label_cols,
            })
        }
    }
}
