//! CSV and run-manifest output.
//!
//! CSV files carry one header row naming the columns; the JSON manifest is
//! written atomically (temp file + rename) only after every other output
//! succeeded, so its presence marks a complete run.

use crate::error::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "csv row width mismatch");
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}

/// Canonical float formatting for CSV cells: shortest round-trip form.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub classical: bool,
    pub time_scale_exponent: f64,
    pub version: String,
    pub wall_ms: u128,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| crate::Error::numerical(format!("manifest serialization: {e}")))?;
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}
