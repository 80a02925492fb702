//! CSV ingestion: a header of variable names, then one row per observation.

use std::io::Read;
use std::path::Path;

use covci::SampleMatrix;

use crate::error::{CliError, CliResult};

pub const MIN_OBSERVATIONS: usize = 3;

pub fn ingest_csv(path: &Path) -> CliResult<SampleMatrix> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Ingest {
        path: path.to_path_buf(),
        message: format!("cannot open: {e}"),
        row: None,
        column: None,
    })?;
    ingest_reader(file, path)
}

/// Parses CSV from any reader; `path` is only used in error messages.
/// Rows are numbered from 1 for the first observation (line 2 of the file).
pub fn ingest_reader<R: Read>(reader: R, path: &Path) -> CliResult<SampleMatrix> {
    let err = |message: String, row: Option<usize>, column: Option<String>| CliError::Ingest {
        path: path.to_path_buf(),
        message,
        row,
        column,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| err(format!("unreadable header: {e}"), None, None))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(err("missing header row".into(), None, None));
    }
    let p = names.len();
    let mut observations: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| err(format!("row {row}: {e}"), Some(row), None))?;
        if record.len() != p {
            return Err(err(
                format!("row {row} has {} fields, header has {p}", record.len()),
                Some(row),
                None,
            ));
        }
        let values = record
            .iter()
            .zip(&names)
            .map(|(cell, name)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(
                    format!("row {row}, column '{name}': '{cell}' is not a finite number"),
                    Some(row),
                    Some(name.clone()),
                )),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        observations.push(values);
    }
    if observations.len() < MIN_OBSERVATIONS {
        return Err(err(
            format!(
                "n < {MIN_OBSERVATIONS}: found {} observations",
                observations.len()
            ),
            None,
            None,
        ));
    }
    SampleMatrix::from_observations(&observations)
        .and_then(|s| s.with_names(names))
        .map_err(|e| err(e.to_string(), None, None))
}
