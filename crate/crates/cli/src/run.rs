//! Scenario execution.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use lambdasim_core::master_equation::apply_generator_validation;
use lambdasim_core::observables::normalize_to_max;
use lambdasim_core::oracle::cross_validate;
use lambdasim_core::spectra::eit_sweep;
use lambdasim_core::{build_initial, build_initial_pure, evolve, Probe, SweepConfig, Truncation};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, Scenario};
use crate::output::{self, Manifest, OutputDir, Status};

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration; nothing was run.
    Config(anyhow::Error),
    /// The run executed but failed (I/O, numerics, or a failed validation).
    Failed(anyhow::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e:#}"),
            RunError::Failed(e) => write!(f, "run failed: {e:#}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Failed(_) => 1,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

struct Products {
    status: Status,
    diagnostics: Value,
    summary: Value,
}

fn failed(e: impl Into<anyhow::Error>) -> RunError {
    RunError::Failed(e.into())
}

/// Validate `cfg`, run its scenario and write all outputs into `cfg.output.dir`.
pub fn execute(cfg: &RunConfig, preset: Option<&str>) -> Result<RunOutcome, RunError> {
    let checked = cfg.check().map_err(RunError::Config)?;
    for w in &checked.warnings {
        eprintln!("warning: {w}");
    }
    let start = Instant::now();
    let mut out = OutputDir::create(&cfg.output.dir).map_err(failed)?;
    let trunc = checked.truncation;
    let products = match cfg.scenario {
        Scenario::Evolve | Scenario::Transfer => run_evolve(cfg, trunc, &mut out)?,
        Scenario::Sweep => run_sweep(cfg, trunc, &mut out)?,
        Scenario::Validate => run_validate(cfg, trunc, &mut out)?,
    };
    let manifest = Manifest {
        status: products.status,
        code_version: env!("CARGO_PKG_VERSION"),
        preset: preset.map(str::to_string),
        config: cfg.clone(),
        truncation: trunc,
        dimension: trunc.dim(),
        warnings: checked.warnings,
        diagnostics: products.diagnostics,
        summary: products.summary,
        wall_time_s: start.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    let (manifest_path, manifest) = out.finish(manifest).map_err(failed)?;
    if manifest.status == Status::Failed {
        return Err(RunError::Failed(anyhow::anyhow!("validation did not pass, see {}", manifest_path.display())));
    }
    Ok(RunOutcome { manifest_path, manifest })
}

fn run_evolve(cfg: &RunConfig, trunc: Truncation, out: &mut OutputDir) -> Result<Products, RunError> {
    let f = &cfg.fields;
    let probes = cfg.probes();
    let p0 = build_initial_pure(&f.electronic, &f.probe, &f.coupling, trunc).map_err(|e| RunError::Config(e.into()))?;
    let run = evolve(&p0, &cfg.system, &cfg.losses, &cfg.grid, &probes).map_err(failed)?;
    let series = &run.series;
    out.write("series.csv", &output::series_csv(series)).map_err(failed)?;
    if probes.contains(&Probe::PhotonStatistics) {
        out.write("statistics.csv", &output::statistics_csv(series)).map_err(failed)?;
    }
    if probes.contains(&Probe::Bipartite) {
        let last = series.last().map(|r| r.time).unwrap_or(0.0);
        let times = if cfg.output.grid_times.is_empty() { vec![last] } else { cfg.output.grid_times.clone() };
        for t in times {
            let Some(rec) = series.at(t) else { continue };
            let Some(w) = &rec.bipartite else { continue };
            let w = if cfg.output.normalize_grids { normalize_to_max(w) } else { w.clone() };
            let name = format!("wkm_t{}.csv", output::time_label(rec.time));
            out.write(&name, &output::grid_csv(&w)).map_err(failed)?;
        }
    }

    let mut summary = Map::new();
    if let Some(last) = series.last() {
        let finals: Map<String, Value> = last.scalars().into_iter().map(|(k, v)| (k, json!(v))).collect();
        summary.insert("final_time".into(), json!(last.time));
        summary.insert("final".into(), Value::Object(finals));
    }
    if cfg.scenario == Scenario::Transfer {
        let first = series.records.first().and_then(|r| r.photon_probe.clone()).unwrap_or_default();
        let last = series.last();
        let probe_final = last.and_then(|r| r.photon_probe.clone()).unwrap_or_default();
        let coupling_final = last.and_then(|r| r.photon_coupling.clone()).unwrap_or_default();
        let l1: f64 = (0..first.len().max(coupling_final.len()))
            .map(|n| (first.get(n).unwrap_or(&0.0) - coupling_final.get(n).unwrap_or(&0.0)).abs())
            .sum();
        summary.insert("probe_vacuum_weight".into(), json!(probe_final.first().copied().unwrap_or(0.0)));
        summary.insert("transfer_l1".into(), json!(l1));
    }
    let d = run.diagnostics;
    let unreliable = d.unreliable();
    let mut diagnostics = serde_json::to_value(d).map_err(failed)?;
    diagnostics["unreliable"] = json!(unreliable);
    if unreliable {
        eprintln!(
            "warning: run flagged UNRELIABLE (trace error {:.2e}, boundary {:.2e})",
            d.max_trace_error, d.boundary_population
        );
    }
    Ok(Products {
        status: if unreliable { Status::Unreliable } else { Status::Ok },
        diagnostics,
        summary: Value::Object(summary),
    })
}

fn run_sweep(cfg: &RunConfig, trunc: Truncation, out: &mut OutputDir) -> Result<Products, RunError> {
    let f = &cfg.fields;
    let sweep = SweepConfig {
        deltas: cfg.deltas(),
        window: cfg.window(),
        system: cfg.system,
        losses: cfg.losses,
        electronic: f.electronic,
        probe: f.probe.clone(),
        coupling: f.coupling.clone(),
        truncation: trunc,
        grid: cfg.grid,
    };
    let spectrum = eit_sweep(&sweep).map_err(failed)?;
    out.write("spectrum.csv", &output::spectrum_csv(&spectrum)).map_err(failed)?;
    let flagged = spectrum.reliable.iter().filter(|r| !**r).count();
    let maxima: Vec<f64> = spectrum.absorption_maxima().into_iter().map(|i| spectrum.delta[i]).collect();
    if flagged > 0 {
        eprintln!("warning: {flagged} sweep points flagged UNRELIABLE");
    }
    Ok(Products {
        status: if flagged > 0 { Status::Unreliable } else { Status::Ok },
        diagnostics: json!({ "points": spectrum.len(), "unreliable_points": flagged, "unreliable": flagged > 0 }),
        summary: json!({ "absorption_maxima": maxima, "window": sweep.window }),
    })
}

fn run_validate(cfg: &RunConfig, trunc: Truncation, out: &mut OutputDir) -> Result<Products, RunError> {
    let f = &cfg.fields;
    let v = cfg.validate.clone().unwrap_or_default();
    let p0 = build_initial(&f.electronic, &f.probe, &f.coupling, trunc).map_err(|e| RunError::Config(e.into()))?;
    let generator = apply_generator_validation(&p0, 0.0, &cfg.system, &cfg.losses);
    let generator_deviation = match &generator {
        Ok(g) => json!(g.max_deviation),
        Err(e) => json!(e.to_string()),
    };
    let samples = cross_validate(
        &p0,
        &cfg.system,
        &cfg.losses,
        v.dephasing_model.into(),
        cfg.grid.dt,
        cfg.grid.steps(),
        v.compare_every,
    )
    .map_err(failed)?;
    out.write("validation.csv", &output::validation_csv(&samples)).map_err(failed)?;
    let worst = samples.iter().map(|s| s.max_deviation).fold(0.0, f64::max);
    let passed = generator.is_ok() && worst <= v.tolerance;
    println!(
        "oracle max deviation {worst:.3e} (tolerance {:.1e}): {}",
        v.tolerance,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(Products {
        status: if passed { Status::Ok } else { Status::Failed },
        diagnostics: json!({ "samples": samples.len(), "unreliable": false }),
        summary: json!({
            "max_deviation": worst,
            "tolerance": v.tolerance,
            "generator_deviation": generator_deviation,
            "passed": passed,
        }),
    })
}
