//! Run configuration file.
//!
//! TOML with these sections (rates and frequencies in units of Ω₁):
//!
//! ```toml
//! scenario = "evolve"            # evolve | sweep | transfer | validate
//! observables = ["populations", "reduced"]
//!
//! [system]                       # omega1, omega2, delta_p, delta_c, omega31, omega21
//! [losses]                       # kappa1, kappa2, r13, r23, r12, g31, g32, g21
//! [fields.electronic]            # amplitudes = [[re, im], [re, im], [re, im]]
//! [fields.probe]                 # kind = "vacuum" | "fock" | "coherent" | "squeezed" | "custom"
//! [fields.coupling]
//! [truncation]                   # k_max, m_max; omitted = larger tail-based cutoff for both
//! [grid]                         # t_end, dt, record_every
//! [sweep]                        # deltas or outer, window = [t_start, t_end]
//! [validate]                     # dephasing_model, compare_every, tolerance
//! [output]                       # dir, grid_times, normalize_grids
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lambdasim_core::oracle::{self, DephasingModel};
use lambdasim_core::spectra::default_detuning_grid;
use lambdasim_core::{ElectronicSpec, FieldSpec, LossConfig, Probe, SystemConfig, TimeGrid, Truncation};
use serde::{Deserialize, Serialize};

/// Tail mass above which a field is rejected as under-resolved.
pub const TAIL_REJECT: f64 = 1e-3;
/// Tail mass above which a warning is recorded; also the target of automatic cutoffs.
pub const TAIL_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Evolve,
    Sweep,
    Transfer,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fields {
    #[serde(default)]
    pub electronic: ElectronicSpec,
    pub probe: FieldSpec,
    pub coupling: FieldSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit Δ_P list; when absent the default grid on `[−outer, outer]` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default = "default_outer")]
    pub outer: f64,
    /// Averaging window; defaults to the whole run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
}

fn default_outer() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingConvention {
    PairDifference,
    PairDifferenceHalfRate,
    LevelProjectors,
}

impl From<DephasingConvention> for DephasingModel {
    fn from(d: DephasingConvention) -> Self {
        match d {
            DephasingConvention::PairDifference => DephasingModel::PairDifference,
            DephasingConvention::PairDifferenceHalfRate => DephasingModel::PairDifferenceHalfRate,
            DephasingConvention::LevelProjectors => DephasingModel::LevelProjectors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "default_dephasing")]
    pub dephasing_model: DephasingConvention,
    #[serde(default = "default_compare_every")]
    pub compare_every: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            dephasing_model: default_dephasing(),
            compare_every: default_compare_every(),
            tolerance: default_tolerance(),
        }
    }
}

fn default_dephasing() -> DephasingConvention {
    DephasingConvention::LevelProjectors
}

fn default_compare_every() -> usize {
    500
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Times at which `W_km` grids are written (nearest record). Empty means the final record.
    #[serde(default)]
    pub grid_times: Vec<f64>,
    #[serde(default = "default_true")]
    pub normalize_grids: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), grid_times: Vec::new(), normalize_grids: true }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub observables: Vec<Probe>,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub losses: LossConfig,
    pub fields: Fields,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
    pub grid: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateSection>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Outcome of [`RunConfig::check`].
#[derive(Debug, Clone, PartialEq)]
pub struct Checked {
    pub truncation: Truncation,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn probes(&self) -> Vec<Probe> {
        let mut probes = self.observables.clone();
        let mut need = |p: Probe| {
            if !probes.contains(&p) {
                probes.push(p);
            }
        };
        match self.scenario {
            Scenario::Evolve if self.observables.is_empty() => need(Probe::Populations),
            Scenario::Transfer => {
                need(Probe::Populations);
                need(Probe::PhotonStatistics);
            }
            _ => {}
        }
        if !self.output.grid_times.is_empty() {
            need(Probe::Bipartite);
        }
        probes
    }

    pub fn deltas(&self) -> Vec<f64> {
        match &self.sweep {
            Some(SweepSection { deltas: Some(d), .. }) => d.clone(),
            Some(s) => default_detuning_grid(s.outer),
            None => Vec::new(),
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.sweep.as_ref().and_then(|s| s.window).unwrap_or((0.0, self.grid.t_end))
    }

    /// Schema-level checks plus field resolution at the chosen truncation.
    pub fn check(&self) -> anyhow::Result<Checked> {
        self.system.validate()?;
        self.losses.validate()?;
        self.grid.validate()?;
        let f = &self.fields;
        let truncation = match self.truncation {
            Some(t) => t,
            None => {
                // photons move between the modes, so both get the larger tail-based cutoff
                let c = f.probe.recommended_cutoff(TAIL_WARN)?.max(f.coupling.recommended_cutoff(TAIL_WARN)?);
                Truncation::new(c, c)
            }
        };
        let mut warnings = Vec::new();
        for (name, field, cutoff) in
            [("probe", &f.probe, truncation.k_max), ("coupling", &f.coupling, truncation.m_max)]
        {
            let tail = field.amplitudes(cutoff)?.tail_mass;
            if tail > TAIL_REJECT {
                bail!("{name} field loses {tail:.2e} of its probability above cutoff {cutoff}; raise the truncation");
            }
            if tail > TAIL_WARN {
                warnings.push(format!("{name} field tail mass {tail:.2e} above cutoff {cutoff}"));
            }
        }
        for &t in &self.output.grid_times {
            if !(0.0..=self.grid.t_end + 1e-9).contains(&t) {
                bail!("grid time {t} lies outside [0, {}]", self.grid.t_end);
            }
        }
        match self.scenario {
            Scenario::Sweep => {
                let Some(s) = &self.sweep else { bail!("sweep scenario needs a [sweep] section") };
                if !(s.outer > 0.0) {
                    bail!("sweep.outer must be positive");
                }
                let (a, b) = self.window();
                if !(0.0 <= a && a < b && b <= self.grid.t_end + 1e-9) {
                    bail!("averaging window ({a}, {b}) must lie inside [0, {}]", self.grid.t_end);
                }
                if self.deltas().is_empty() {
                    bail!("sweep needs at least one detuning");
                }
            }
            Scenario::Validate => {
                if truncation.dim() > oracle::MAX_DIM {
                    bail!("validate needs dimension <= {}, got {}", oracle::MAX_DIM, truncation.dim());
                }
                let v = self.validate.clone().unwrap_or_default();
                if v.compare_every == 0 || !self.grid.steps().is_multiple_of(v.compare_every) {
                    bail!("validate.compare_every must divide the step count {}", self.grid.steps());
                }
            }
            _ => {}
        }
        if self.sweep.is_some() && self.scenario != Scenario::Sweep {
            warnings.push("[sweep] section ignored for this scenario".into());
        }
        Ok(Checked { truncation, warnings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "evolve"
[fields.probe]
kind = "coherent"
mean = 2.0
[fields.coupling]
kind = "vacuum"
[grid]
t_end = 1.0
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.system, SystemConfig::default());
        assert_eq!(c.fields.electronic, ElectronicSpec::ground());
        assert_eq!(c.probes(), vec![Probe::Populations]);
        let checked = c.check().unwrap();
        assert_eq!(checked.truncation, Truncation::new(12, 12));
        assert!(checked.warnings.is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("t_end = 1.0", "t_end = 1.0\nstep = 3");
        assert!(RunConfig::from_toml(&bad).is_err());
        let bad = format!("colour = 1\n{MINIMAL}");
        assert!(RunConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn small_truncation_rejected() {
        let text = format!("{MINIMAL}[truncation]\nk_max = 2\nm_max = 0\n");
        let c = RunConfig::from_toml(&text).unwrap();
        assert!(c.check().is_err());
    }

    #[test]
    fn marginal_truncation_warns() {
        let text = format!("{MINIMAL}[truncation]\nk_max = 8\nm_max = 0\n");
        let checked = RunConfig::from_toml(&text).unwrap().check().unwrap();
        assert_eq!(checked.warnings.len(), 1);
    }

    #[test]
    fn sweep_needs_section() {
        let c = RunConfig::from_toml(&MINIMAL.replace("evolve", "sweep")).unwrap();
        assert!(c.check().is_err());
    }
}
