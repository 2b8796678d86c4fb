use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parsed CSV with possibly missing feature cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub names: Vec<String>,
    pub target_name: String,
    pub rows: Vec<Vec<Option<f64>>>,
    pub targets: Vec<f64>,
}

impl RawTable {
    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|v| v.is_none()).count()
    }
}

pub fn load_csv(path: impl AsRef<Path>, target: &str, missing: &str) -> Result<RawTable> {
    read_csv(std::fs::File::open(path)?, target, missing)
}

/// Read a headed CSV; cells equal to `missing` (after trimming) are treated as absent.
pub fn read_csv<R: Read>(input: R, target: &str, missing: &str) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target_col =
        header
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| Error::MalformedCsv {
                line: 1,
                reason: format!("target column '{target}' not found"),
            })?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_col)
        .map(|(_, h)| h.clone())
        .collect();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 2, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::MalformedCsv {
                line,
                reason: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(names.len());
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let value = if cell == missing {
                None
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::MalformedCsv {
                    line,
                    reason: format!("cannot parse '{cell}' in column '{}'", header[j]),
                })?;
                if !v.is_finite() {
                    return Err(Error::MalformedCsv {
                        line,
                        reason: format!("non-finite value in column '{}'", header[j]),
                    });
                }
                Some(v)
            };
            if j == target_col {
                targets.push(value.ok_or_else(|| Error::MalformedCsv {
                    line,
                    reason: "missing target value".into(),
                })?);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(RawTable {
        names,
        target_name: target.to_string(),
        rows,
        targets,
    })
}

/// Write features then the target column; absent cells become `missing`.
pub fn write_csv<W: Write>(table: &RawTable, out: W, missing: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.names.clone();
    header.push(table.target_name.clone());
    w.write_record(&header)?;
    for (row, t) in table.rows.iter().zip(&table.targets) {
        let mut cells: Vec<String> = row
            .iter()
            .map(|v| v.map_or_else(|| missing.to_string(), |x| format!("{x:?}")))
            .collect();
        cells.push(format!("{t:?}"));
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}
