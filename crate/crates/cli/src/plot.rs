use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{io_err, Result};
use crate::io::csv_err;
use crate::report::{CheckResult, Report};

pub const STATS_HEADER: [&str; 7] = ["suite", "check", "label", "params", "min", "max", "median"];
pub const SERIES_HEADER: [&str; 6] = ["suite", "check", "label", "params", "x", "y"];

/// Writes `checks.csv` with one row per check of the report, one
/// `<suite>-<check>.csv` per check name, and `<suite>-<check>-series.csv`
/// where a check carries a plot series. Floats are written in shortest
/// round-trip form.
pub fn emit_plot_data(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let all: Vec<&CheckResult> = report.checks().collect();
    let path = dir.join("checks.csv");
    write_stats(&path, &all)?;
    written.push(path);
    let mut groups: Vec<(String, Vec<&CheckResult>)> = Vec::new();
    for c in &all {
        let name = format!("{}-{}", c.suite, c.check);
        match groups.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => v.push(c),
            None => groups.push((name, vec![c])),
        }
    }
    for (name, checks) in &groups {
        let path = dir.join(format!("{}.csv", file_stem(name)));
        write_stats(&path, checks)?;
        written.push(path);
        if checks.iter().any(|c| !c.series.is_empty()) {
            let path = dir.join(format!("{}-series.csv", file_stem(name)));
            write_series(&path, checks)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_stats(path: &Path, checks: &[&CheckResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(STATS_HEADER).map_err(|e| csv_err(path, e))?;
    for c in checks {
        let r = c.ratios;
        w.write_record([
            c.suite.clone(),
            c.check.clone(),
            c.label.clone(),
            c.params.clone(),
            r.min.to_string(),
            r.max.to_string(),
            r.median.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_series(path: &Path, checks: &[&CheckResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(SERIES_HEADER).map_err(|e| csv_err(path, e))?;
    for c in checks {
        for [x, y] in &c.series {
            w.write_record([
                c.suite.clone(),
                c.check.clone(),
                c.label.clone(),
                c.params.clone(),
                x.to_string(),
                y.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(io_err(path))
}
