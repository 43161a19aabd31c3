//! CSV and manifest emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::run::{Deltas, MethodResult};
use crate::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip-safe, 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn series_csv(r: &MethodResult) -> String {
    let mut out = String::from("t,sx,sy,sz");
    if r.stderr.is_some() {
        out.push_str(",se_sx,se_sy,se_sz");
    }
    out.push('\n');
    for (p, (&t, v)) in r.times.iter().zip(&r.values).enumerate() {
        let _ = write!(out, "{},{},{},{}", num(t), num(v[0]), num(v[1]), num(v[2]));
        if let Some(se) = &r.stderr {
            let _ = write!(out, ",{},{},{}", num(se[p][0]), num(se[p][1]), num(se[p][2]));
        }
        out.push('\n');
    }
    out
}

pub fn deltas_csv(d: &Deltas) -> String {
    let mut out = String::from("t");
    for m in &d.others {
        let n = m.name();
        let _ = write!(out, ",{n}_dsx,{n}_dsy,{n}_dsz");
    }
    out.push('\n');
    for (t, row) in d.times.iter().zip(&d.rows) {
        out.push_str(&num(*t));
        for v in row {
            let _ = write!(out, ",{},{},{}", num(v[0]), num(v[1]), num(v[2]));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub data_file: String,
    pub config: &'a RunConfig,
    pub wall_clock_seconds: f64,
    pub diagnostics: Value,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

pub fn series_manifest<'a>(cfg: &'a RunConfig, data_file: &str, r: &MethodResult) -> Manifest<'a> {
    let mut details = serde_json::Map::new();
    details.insert("method".into(), json!(r.method));
    details.extend(r.details.clone());
    Manifest {
        artifact: "nmbloch",
        version: ARTIFACT_VERSION,
        data_file: data_file.to_string(),
        config: cfg,
        wall_clock_seconds: r.seconds,
        diagnostics: json!(r.diagnostics),
        details: Value::Object(details),
    }
}

pub fn deltas_manifest<'a>(cfg: &'a RunConfig, data_file: &str, d: &Deltas, seconds: f64) -> Manifest<'a> {
    let sup: serde_json::Map<String, Value> = d
        .others
        .iter()
        .zip(&d.sup)
        .map(|(m, s)| (m.name().to_string(), json!({"sx": s[0], "sy": s[1], "sz": s[2]})))
        .collect();
    Manifest {
        artifact: "nmbloch",
        version: ARTIFACT_VERSION,
        data_file: data_file.to_string(),
        config: cfg,
        wall_clock_seconds: seconds,
        diagnostics: json!({}),
        details: json!({
            "reference": d.reference,
            "points": d.times.len(),
            "sup_norm": sup,
        }),
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// `<stem>.csv` plus `<stem>.manifest.json` in `dir`; returns both file names.
pub fn write_series(dir: &Path, stem: &str, cfg: &RunConfig, r: &MethodResult) -> Result<(String, String), CliError> {
    let csv = format!("{stem}.csv");
    let manifest = format!("{stem}.manifest.json");
    write_text(&dir.join(&csv), &series_csv(r))?;
    write_json(&dir.join(&manifest), &series_manifest(cfg, &csv, r))?;
    Ok((csv, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Method;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn csv_layout() {
        let r = MethodResult {
            method: Method::Mc,
            times: vec![0.0, 0.5],
            values: vec![[0.0, 0.0, 1.0], [0.1, 0.2, 0.3]],
            stderr: Some(vec![[0.0; 3], [0.01; 3]]),
            diagnostics: Default::default(),
            details: Default::default(),
            seconds: 0.0,
        };
        let text = series_csv(&r);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,sx,sy,sz,se_sx,se_sy,se_sz");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2].split(',').count(), 7);
    }
}
