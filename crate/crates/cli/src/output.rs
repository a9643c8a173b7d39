//! CSV and JSON emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

/// 17 significant digits; NaN and infinities spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// File-name fragment for an optical depth, e.g. `10` or `0.3`.
pub fn d_tag(d: f64) -> String {
    format!("{d}")
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))
}

/// Write `rows` under `header` to `dir/name`.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(header).map_err(|e| csv_error(&path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_f64(*x))).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(io(&path))?;
    Ok(path)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(err) => err,
        other => std::io::Error::other(format!("{other:?}")),
    };
    CliError::Io { path: path.to_path_buf(), source }
}

/// `{command, params, results, metadata{version, grids, tolerances}}`.
pub fn summary(command: &str, params: Value, results: Value, grids: Value, tolerances: Value) -> Value {
    json!({
        "command": command,
        "params": params,
        "results": results,
        "metadata": {
            "version": env!("CARGO_PKG_VERSION"),
            "grids": grids,
            "tolerances": tolerances,
        },
    })
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("summary values serialize");
    text.push('\n');
    fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}

/// JSON number, or `null` for NaN and infinities.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
