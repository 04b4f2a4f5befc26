use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{io_err, CliError, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline; parent directories are created.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// One value per line (first column), in point-index order. A non-numeric
/// first row is taken as a header.
pub fn read_field_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let Some(cell) = rec.get(0) else { continue };
        match cell.trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    msg: format!("row {}: `{cell}` is not a number", i + 1),
                })
            }
        }
    }
    Ok(out)
}

pub fn write_field_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["value"]).map_err(|e| csv_err(path, e))?;
    for v in values {
        w.write_record([v.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}
