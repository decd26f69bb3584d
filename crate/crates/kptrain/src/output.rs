//! CSV and JSON writers. Floats go out as `{:.16e}` so files round-trip
//! exactly and stay byte-identical between runs.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes a header and numeric rows.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("opening {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| float(*v)))?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(path)
}
