//! Field dumps, trajectory CSV and JSON summaries.
//!
//! A dump is `<stem>.bin` (row-major little-endian `f64`) next to
//! `<stem>.json` holding `{n, L, label, time}`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kslab_core::dynamics::DiagnosticSample;
use kslab_core::{make_grid, Field2D, TrajectoryRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub label: String,
    pub time: f64,
}

/// `<stem>.<ext>`; stems may contain dots of their own (`profile_M6.283185`).
fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.bin` and `<stem>.json` and returns the `.bin` path.
pub fn write_field(stem: &Path, f: &Field2D, time: f64) -> Result<PathBuf> {
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let bin = with_ext(stem, "bin");
    let bytes: Vec<u8> = f.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&bin, bytes).with_context(|| format!("writing {}", bin.display()))?;
    let header = DumpHeader {
        n: f.grid().n(),
        half_width: f.grid().half_width(),
        label: f.label.clone(),
        time,
    };
    write_json(&with_ext(stem, "json"), &header)?;
    Ok(bin)
}

/// Reads a dump given either of its two paths.
pub fn read_field(path: &Path) -> Result<(Field2D, f64)> {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("bin" | "json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let path = stem.as_path();
    let json = with_ext(path, "json");
    let text = fs::read_to_string(&json).with_context(|| format!("reading {}", json.display()))?;
    let header: DumpHeader = serde_json::from_str(&text).with_context(|| format!("parsing {}", json.display()))?;
    let bin = with_ext(path, "bin");
    let bytes = fs::read(&bin).with_context(|| format!("reading {}", bin.display()))?;
    if bytes.len() != 8 * header.n * header.n {
        bail!("{}: expected {} values, found {} bytes", bin.display(), header.n * header.n, bytes.len());
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let grid = make_grid(header.n, header.half_width)?;
    let f = Field2D::from_values(grid, values)?.with_label(header.label);
    Ok((f, header.time))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Trajectory samples with the fixed diagnostic header.
pub fn write_trajectory(path: &Path, samples: &[DiagnosticSample]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(DiagnosticSample::CSV_HEADER)?;
    for s in samples {
        // `{:?}` round-trips f64 exactly
        w.write_record(s.as_row().iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_record(path: &Path, rec: &TrajectoryRecord) -> Result<()> {
    write_trajectory(path, &rec.samples)
}

/// Generic numeric table (for scenario time series).
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            bail!("row of {} values under a {}-column header", r.len(), header.len());
        }
        w.write_record(r.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV written by this module.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>()?);
    }
    Ok((header, rows))
}
