//! Detuning sweeps, the analytic weak-probe polarization and the
//! quasienergy splitting estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve, Probe, TimeGrid};
use crate::fock_basis::Truncation;
use crate::initial_states::{build_initial_pure, ElectronicSpec, FieldSpec};
use crate::master_equation::{LossConfig, SystemConfig};
use crate::C64;

/// Tail mass below which amplitude sums are treated as exact.
pub const SUM_TAIL: f64 = 1e-12;

/// Δ_P grid with step `fine` inside `[−inner, inner]` and `coarse` outside, up to `±outer`.
pub fn detuning_grid(outer: f64, inner: f64, fine: f64, coarse: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let n_coarse = ((outer - inner) / coarse).round() as i64;
    for i in (1..=n_coarse).rev() {
        out.push(-inner - i as f64 * coarse);
    }
    let n_fine = (inner / fine).round() as i64;
    for i in -n_fine..=n_fine {
        out.push(i as f64 * fine);
    }
    for i in 1..=n_coarse {
        out.push(inner + i as f64 * coarse);
    }
    out
}

/// Default grid on `[−outer, outer]`: step 0.1 in `[−5, 5]`, 1 elsewhere.
pub fn default_detuning_grid(outer: f64) -> Vec<f64> {
    if outer <= 5.0 {
        return detuning_grid(outer, outer, 0.1, 1.0);
    }
    detuning_grid(outer, 5.0, 0.1, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub deltas: Vec<f64>,
    /// Averaging window `(t_start, t_end)`.
    pub window: (f64, f64),
    pub system: SystemConfig,
    pub losses: LossConfig,
    pub electronic: ElectronicSpec,
    pub probe: FieldSpec,
    pub coupling: FieldSpec,
    pub truncation: Truncation,
    pub grid: TimeGrid,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let (a, b) = self.window;
        if !(0.0 <= a && a < b && b <= self.grid.t_end + 1e-9) {
            return Err(Error::Config(format!("averaging window ({a}, {b}) must lie inside [0, {}]", self.grid.t_end)));
        }
        if self.deltas.is_empty() {
            return Err(Error::Config("sweep needs at least one detuning".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Spectrum {
    pub delta: Vec<f64>,
    /// Time-averaged O₃.
    pub absorption: Vec<f64>,
    pub qpol_re: Vec<f64>,
    pub qpol_im: Vec<f64>,
    pub reliable: Vec<bool>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// Indices of strict local maxima of the absorption.
    pub fn absorption_maxima(&self) -> Vec<usize> {
        let a = &self.absorption;
        (1..a.len().saturating_sub(1)).filter(|&i| a[i] > a[i - 1] && a[i] >= a[i + 1]).collect()
    }
}

/// One independent run per Δ_P, averaged with uniform weights over the records in the window.
pub fn eit_sweep(cfg: &SweepConfig) -> Result<Spectrum> {
    cfg.validate()?;
    let p0 = build_initial_pure(&cfg.electronic, &cfg.probe, &cfg.coupling, cfg.truncation)?;
    let points: Vec<Result<(f64, f64, C64, bool)>> = cfg
        .deltas
        .par_iter()
        .map(|&delta| {
            let sys = SystemConfig { delta_p: delta, ..cfg.system };
            let run = evolve(&p0, &sys, &cfg.losses, &cfg.grid, &[Probe::Populations, Probe::QuantumPolarization])?;
            let (a, b) = cfg.window;
            let inside: Vec<_> =
                run.series.records.iter().filter(|r| r.time >= a - 1e-9 && r.time <= b + 1e-9).collect();
            let n = inside.len() as f64;
            let o3 = inside.iter().map(|r| r.populations.unwrap()[2]).sum::<f64>() / n;
            let q = inside.iter().map(|r| r.quantum.unwrap()[0]).sum::<C64>() / n;
            Ok((delta, o3, q, !run.diagnostics.unreliable()))
        })
        .collect();
    let mut s = Spectrum::default();
    for p in points {
        let (d, o3, q, ok) = p?;
        s.delta.push(d);
        s.absorption.push(o3);
        s.qpol_re.push(q.re);
        s.qpol_im.push(q.im);
        s.reliable.push(ok);
    }
    Ok(s)
}

fn probabilities(field: &FieldSpec) -> Result<Vec<f64>> {
    let cutoff = field.recommended_cutoff(SUM_TAIL)?;
    Ok(field.amplitudes(cutoff)?.probabilities())
}

/// `Ω_g = (Ω₁/√2) Σ_m |c_m|² √m`.
pub fn splitting_estimate(coupling: &FieldSpec, omega1: f64) -> Result<f64> {
    let w = probabilities(coupling)?;
    let s: f64 = w.iter().enumerate().map(|(m, p)| p * (m as f64).sqrt()).sum();
    Ok(omega1 / 2f64.sqrt() * s)
}

/// Weak-probe quantum polarization of the 3–1 transition.
pub fn analytic_qpol(
    delta_p: f64,
    probe: &FieldSpec,
    coupling: &FieldSpec,
    omega1: f64,
    omega2: f64,
    r13_tilde: f64,
) -> Result<C64> {
    if !(r13_tilde >= 0.0) {
        return Err(Error::Config(format!("r13_tilde must be non-negative, got {r13_tilde}")));
    }
    let wp = probabilities(probe)?;
    let wc = probabilities(coupling)?;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..wp.len().saturating_sub(1) {
        let pk = wp[k + 1];
        if pk == 0.0 {
            continue;
        }
        for (m, &pm) in wc.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            let den = C64::new(omega2 * omega2 * (m + 1) as f64 / 2.0 - delta_p * delta_p, -delta_p * r13_tilde);
            let num = omega1 * delta_p * ((k + 1) as f64 / 2.0).sqrt() * pk * pm;
            if den.norm() == 0.0 {
                if num == 0.0 {
                    continue;
                }
                return Err(Error::Numerical(format!(
                    "analytic polarization has a pole at delta_p = {delta_p}; use r13_tilde > 0"
                )));
            }
            acc += num / den;
        }
    }
    Ok(acc)
}
