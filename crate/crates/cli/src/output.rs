//! CSV writers and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lambdasim_core::oracle::CrossSample;
use lambdasim_core::{ObservableSeries, Spectrum, Truncation};
use ndarray::Array2;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "UNRELIABLE")]
    Unreliable,
    #[serde(rename = "FAILED")]
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub status: Status,
    pub code_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub config: RunConfig,
    pub truncation: Truncation,
    pub dimension: usize,
    pub warnings: Vec<String>,
    pub diagnostics: serde_json::Value,
    /// Scenario-specific headline numbers.
    pub summary: serde_json::Value,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

/// Output directory that keeps an inventory of what was written.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

/// Write through a temporary file and rename, so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

impl OutputDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.files.push(FileEntry { name: name.to_string(), bytes: contents.len() as u64 });
        Ok(())
    }

    /// Writes `manifest.json` last.
    pub fn finish(self, mut manifest: Manifest) -> anyhow::Result<(PathBuf, Manifest)> {
        manifest.files = self.files;
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        write_atomic(&path, text.as_bytes())?;
        Ok((path, manifest))
    }
}

/// `12.710000000000001` → `12.71`, `500.0` → `500`.
pub fn time_label(t: f64) -> String {
    let s = format!("{t:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Shortest round-trip text, switching to exponent notation for tiny or huge values.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// One row per record, one column per scalar observable.
pub fn series_csv(series: &ObservableSeries) -> String {
    let mut out = String::new();
    let Some(first) = series.records.first() else { return out };
    let names: Vec<String> = first.scalars().into_iter().map(|(n, _)| n).collect();
    out.push_str("time");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for r in &series.records {
        out.push_str(&num(r.time));
        for (_, v) in r.scalars() {
            out.push(',');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    out
}

/// Long format: `time,n,probe,coupling`.
pub fn statistics_csv(series: &ObservableSeries) -> String {
    let mut out = String::from("time,n,probe,coupling\n");
    for r in &series.records {
        let (Some(wp), Some(wc)) = (&r.photon_probe, &r.photon_coupling) else { continue };
        for n in 0..wp.len().max(wc.len()) {
            let p = wp.get(n).copied().unwrap_or(0.0);
            let c = wc.get(n).copied().unwrap_or(0.0);
            writeln!(out, "{},{n},{},{}", num(r.time), num(p), num(c)).unwrap();
        }
    }
    out
}

/// `(k_max+1) × (m_max+1)` matrix, row k, column m.
pub fn grid_csv(w: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in w.rows() {
        let line: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("delta,absorption,qpol_re,qpol_im,reliable_flag\n");
    for i in 0..s.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(s.delta[i]),
            num(s.absorption[i]),
            num(s.qpol_re[i]),
            num(s.qpol_im[i]),
            u8::from(s.reliable[i])
        )
        .unwrap();
    }
    out
}

pub fn validation_csv(samples: &[CrossSample]) -> String {
    let mut out = String::from("time,max_deviation\n");
    for s in samples {
        writeln!(out, "{},{}", num(s.time), num(s.max_deviation)).unwrap();
    }
    out
}
