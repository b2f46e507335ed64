//! CSV and JSON artifacts. Floats in CSV carry 17 significant digits.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use sav_core::harness::{ConvergenceEntry, Snapshot};
use sav_core::stepper::StepRecord;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

pub const TRACE_HEADER: &str = "step,t,r,xi,eta,energy,principal_norm_sq,err_l2,err_h1,err_h2";
pub const CONVERGENCE_HEADER: &str = "dt,err_l2,err_h1,err_h2";
pub const SNAPSHOT_HEADER: &str = "x,u";

/// Scientific notation with 16 digits after the point.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    match v {
        Some(v) if !v.is_nan() => float(v),
        _ => String::new(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), WriteError> {
    let wrap = |source| WriteError {
        path: path.to_owned(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(wrap)?;
    f.write_all(contents.as_bytes()).map_err(wrap)?;
    f.flush().map_err(wrap)
}

pub fn ensure_dir(dir: &Path) -> Result<(), WriteError> {
    std::fs::create_dir_all(dir).map_err(|source| WriteError {
        path: dir.to_owned(),
        source,
    })
}

pub fn trace_csv(records: &[StepRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in records {
        let e = r.errors;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            float(r.t),
            float(r.r),
            float(r.xi),
            float(r.eta),
            float(r.energy),
            float(r.principal_norm_sq),
            opt_float(e.map(|e| e.l2)),
            opt_float(e.map(|e| e.h1)),
            opt_float(e.map(|e| e.h2)),
        );
    }
    s
}

pub fn convergence_csv(entries: &[ConvergenceEntry]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for e in entries {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            float(e.dt),
            opt_float(Some(e.err_l2)),
            opt_float(Some(e.err_h1)),
            opt_float(Some(e.err_h2)),
        );
    }
    s
}

pub fn snapshot_csv(snap: &Snapshot) -> String {
    let mut s = String::from(SNAPSHOT_HEADER);
    s.push('\n');
    for (x, u) in snap.x.iter().zip(&snap.u) {
        let _ = writeln!(s, "{},{}", float(*x), float(*u));
    }
    s
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, WriteError> {
    let path = dir.join(name);
    write_file(&path, contents)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, WriteError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_text(dir, name, &text)
}
