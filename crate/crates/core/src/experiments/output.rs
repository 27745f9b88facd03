use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

use super::ExperimentReport;

/// Column order of `rows.csv`.
pub const CSV_COLUMNS: [&str; 9] = ["experiment", "case", "param", "formula", "empirical", "error", "ratio", "tol", "pass"];

/// Writes `bytes` to `path` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Renders the rows of a report as CSV.
pub fn rows_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.experiment.clone(),
            r.case.clone(),
            r.param.clone(),
            fmt(r.formula),
            fmt(r.empirical),
            fmt(r.error),
            fmt(r.ratio),
            fmt(r.tol),
            r.pass.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
}

/// Shortest round-trip formatting, with `inf`/`-inf`/`nan` for non-finite values.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

/// Writes `<out>/<experiment>/summary.json` and `rows.csv`; returns the experiment directory.
pub fn write_report(out: &Path, report: &ExperimentReport) -> Result<PathBuf> {
    let dir = out.join(&report.experiment);
    write_atomic(&dir.join("rows.csv"), &rows_csv(report)?)?;
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_atomic(&dir.join("summary.json"), &json)?;
    Ok(dir)
}
