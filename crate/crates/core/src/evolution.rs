//! Fixed-step RK4 integration of the envelope equations.
//!
//! [`evolve`] only integrates the sectors (see [`crate::sector`]) that the
//! requested probes read, which is exact because the generator never mixes
//! sectors. Elements outside the integrated sectors stay zero in the
//! recorded snapshots and in the returned final state; [`Coverage`] reports
//! which case applies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_basis::EnvelopeDensityMatrix;
use crate::master_equation::{derivative, CompiledGenerator, LossConfig, SystemConfig};
use crate::observables::{self, Mode, ObservableRecord, ObservableSeries, PhaseMode, Transition};
use crate::sector::{self, SectorMap, SectorSelection};
use crate::state::{SectorState, StateView};
use crate::C64;

pub const TRACE_LIMIT: f64 = 1e-3;
pub const BOUNDARY_LIMIT: f64 = 1e-2;
/// Largest dimension for which the final state is diagonalized.
pub const EIGEN_DIM_LIMIT: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_dt() -> f64 {
    0.01
}

fn default_record_every() -> usize {
    10
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64, record_every: usize) -> Result<Self> {
        let g = TimeGrid { t_end, dt, record_every };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        let n = self.t_end / self.dt;
        if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::Config(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Step indices at which a record is taken: 0, every `record_every`, and the last step.
    pub fn record_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let mut out: Vec<usize> = (0..=n).step_by(self.record_every).collect();
        if *out.last().unwrap() != n {
            out.push(n);
        }
        out
    }
}

/// Observable families a run should record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Populations,
    PhotonStatistics,
    ClassicalPolarization,
    QuantumPolarization,
    /// Reduced electronic matrix and Schmidt number.
    Reduced,
    Bipartite,
    Purity,
}

impl Probe {
    pub const ALL: [Probe; 7] = [
        Probe::Populations,
        Probe::PhotonStatistics,
        Probe::ClassicalPolarization,
        Probe::QuantumPolarization,
        Probe::Reduced,
        Probe::Bipartite,
        Probe::Purity,
    ];

    pub fn sectors(self) -> SectorSelection {
        use sector::{COHERENCE_21, COHERENCE_31, COHERENCE_32, DIAGONAL};
        match self {
            Probe::Populations | Probe::PhotonStatistics | Probe::QuantumPolarization | Probe::Bipartite => {
                SectorSelection::only([DIAGONAL])
            }
            Probe::ClassicalPolarization | Probe::Reduced => {
                SectorSelection::only([DIAGONAL, COHERENCE_31, COHERENCE_32, COHERENCE_21])
            }
            Probe::Purity => SectorSelection::All,
        }
    }
}

/// Whether every element of the state was integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Full,
    Sectors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Smallest diagonal entry seen, lowered further by the smallest
    /// eigenvalue of the final state when `D ≤ 300`.
    pub min_eigenvalue_estimate: f64,
    pub boundary_population: f64,
    pub steps: usize,
    pub coverage: Coverage,
    /// Sectors actually integrated.
    pub sectors: usize,
}

impl RunDiagnostics {
    pub fn unreliable(&self) -> bool {
        self.max_trace_error > TRACE_LIMIT || self.boundary_population > BOUNDARY_LIMIT
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub series: ObservableSeries,
    /// Integrated sectors only, see [`Coverage`].
    pub final_state: SectorState,
    pub diagnostics: RunDiagnostics,
}

/// Options beyond the probe list.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolveOptions {
    /// Integrate every sector even if the probes do not need it.
    pub full_state: bool,
}

/// Integrate from `p0.time` over `grid`, recording the requested probes.
pub fn evolve(
    p0: &impl StateView,
    sys: &SystemConfig,
    loss: &LossConfig,
    grid: &TimeGrid,
    probes: &[Probe],
) -> Result<Evolution> {
    evolve_with(p0, sys, loss, grid, probes, EvolveOptions::default())
}

struct Unit {
    gen: CompiledGenerator,
    y: Vec<C64>,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Unit {
    fn new(gen: CompiledGenerator, y: Vec<C64>) -> Self {
        let n = y.len();
        let z = || vec![C64::new(0.0, 0.0); n];
        Unit { gen, y, k: [z(), z(), z(), z()], tmp: z() }
    }

    fn rk4(&mut self, t: f64, dt: f64) {
        let Unit { gen, y, k, tmp } = self;
        let h = 0.5 * dt;
        gen.apply(t, y, &mut k[0]);
        axpy(tmp, y, h, &k[0]);
        gen.apply(t + h, tmp, &mut k[1]);
        axpy(tmp, y, h, &k[1]);
        gen.apply(t + h, tmp, &mut k[2]);
        axpy(tmp, y, dt, &k[2]);
        gen.apply(t + dt, tmp, &mut k[3]);
        let w = dt / 6.0;
        for i in 0..y.len() {
            y[i] += w * (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]);
        }
    }
}

/// `out = y + h·x`.
fn axpy(out: &mut [C64], y: &[C64], h: f64, x: &[C64]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(x) {
        *o = a + h * b;
    }
}

pub fn evolve_with(
    p0: &impl StateView,
    sys: &SystemConfig,
    loss: &LossConfig,
    grid: &TimeGrid,
    probes: &[Probe],
    options: EvolveOptions,
) -> Result<Evolution> {
    sys.validate()?;
    loss.validate()?;
    grid.validate()?;
    let trunc = p0.truncation();
    let map = SectorMap::new(trunc);
    let selection = if options.full_state {
        SectorSelection::All
    } else {
        probes.iter().fold(SectorSelection::only([sector::DIAGONAL]), |acc, p| acc.union(p.sectors()))
    };
    let labels = selection.resolve(&map);
    let coverage = if labels.len() == map.labels().len() { Coverage::Full } else { Coverage::Sectors };

    // A sector that starts at zero stays at zero.
    let mut units: Vec<Unit> = labels
        .par_iter()
        .filter_map(|&l| {
            let elements = map.elements(l);
            let y: Vec<C64> = elements.iter().map(|&(a, b)| p0.element(a as usize, b as usize)).collect();
            if y.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                return None;
            }
            Some(Unit::new(CompiledGenerator::new(trunc, sys, loss, elements), y))
        })
        .collect();

    let t0 = p0.time();
    let elements: Vec<(u32, u32)> = units.iter().flat_map(|u| u.gen.elements().iter().copied()).collect();
    let mut snapshot = SectorState::new(trunc, elements, t0);
    let tr0 = p0.trace().re;
    let mut diag = RunDiagnostics {
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue_estimate: f64::INFINITY,
        boundary_population: 0.0,
        steps: grid.steps(),
        coverage,
        sectors: units.len(),
    };
    let mut series = ObservableSeries::default();

    let mut done = 0usize;
    for target in grid.record_steps() {
        let from = done;
        units.par_iter_mut().for_each(|u| {
            for s in from..target {
                u.rk4(t0 + s as f64 * grid.dt, grid.dt);
            }
        });
        done = target;
        snapshot.time = t0 + done as f64 * grid.dt;
        let mut offset = 0;
        let values = snapshot.values_mut();
        for u in &units {
            values[offset..offset + u.y.len()].copy_from_slice(&u.y);
            offset += u.y.len();
        }
        check(&snapshot, tr0, &mut diag)?;
        series.records.push(record(&snapshot, sys, probes));
    }
    if trunc.dim() <= EIGEN_DIM_LIMIT {
        let dense = snapshot.to_dense(EIGEN_DIM_LIMIT)?;
        diag.min_eigenvalue_estimate = diag.min_eigenvalue_estimate.min(dense.min_eigenvalue());
    }
    Ok(Evolution { series, final_state: snapshot, diagnostics: diag })
}

fn check(p: &SectorState, tr0: f64, diag: &mut RunDiagnostics) -> Result<()> {
    let trace = p.trace();
    if !trace.re.is_finite() {
        return Err(Error::Numerical(format!("state diverged at t = {}", p.time)));
    }
    diag.max_trace_error = diag.max_trace_error.max((trace.re - tr0).abs().max(trace.im.abs()));
    diag.max_hermiticity_error = diag.max_hermiticity_error.max(p.hermiticity_error());
    let dim = p.truncation().dim();
    let min_diag = (0..dim).map(|i| p.element(i, i).re).fold(f64::INFINITY, f64::min);
    diag.min_eigenvalue_estimate = diag.min_eigenvalue_estimate.min(min_diag);
    diag.boundary_population = diag.boundary_population.max(p.boundary_population());
    Ok(())
}

/// Evaluate the requested probes on one snapshot.
pub fn record(p: &impl StateView, sys: &SystemConfig, probes: &[Probe]) -> ObservableRecord {
    let mut r = ObservableRecord { time: p.time(), trace: p.trace().re, ..Default::default() };
    for probe in probes {
        match probe {
            Probe::Populations => r.populations = Some(observables::populations(p)),
            Probe::PhotonStatistics => {
                r.photon_probe = Some(observables::photon_statistics(p, Mode::Probe));
                r.photon_coupling = Some(observables::photon_statistics(p, Mode::Coupling));
            }
            Probe::ClassicalPolarization => {
                r.classical =
                    Some(Transition::ALL.map(|t| observables::classical_polarization(p, t, sys, PhaseMode::Envelope)))
            }
            Probe::QuantumPolarization => {
                r.quantum = Some(
                    [Transition::T31, Transition::T32]
                        .map(|t| observables::quantum_polarization(p, t).expect("defined for 31 and 32")),
                )
            }
            Probe::Reduced => {
                let red = observables::reduced_electronic(p, sys, PhaseMode::Envelope);
                r.schmidt = observables::normalize_reduced(&red).and_then(|n| observables::schmidt_number(&n)).ok();
                r.reduced = Some(red);
            }
            Probe::Bipartite => r.bipartite = Some(observables::bipartite_distribution(p)),
            Probe::Purity => r.purity = Some(p.purity()),
        }
    }
    r
}

/// One dense RK4 step of length `dt` from time `t`.
pub fn step(
    p: &EnvelopeDensityMatrix,
    t: f64,
    sys: &SystemConfig,
    loss: &LossConfig,
    dt: f64,
) -> EnvelopeDensityMatrix {
    let trunc = p.truncation();
    let at = |entries: ndarray::Array2<C64>| EnvelopeDensityMatrix::from_entries(trunc, entries, t).unwrap();
    let y = p.entries();
    let k1 = derivative(p, t, sys, loss);
    let k2 = derivative(&at(y + &(&k1 * (0.5 * dt))), t + 0.5 * dt, sys, loss);
    let k3 = derivative(&at(y + &(&k2 * (0.5 * dt))), t + 0.5 * dt, sys, loss);
    let k4 = derivative(&at(y + &(&k3 * dt)), t + dt, sys, loss);
    let next = y + &((k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0));
    EnvelopeDensityMatrix::from_entries(trunc, next, t + dt).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_basis::{CompositeIndex, Truncation};
    use crate::initial_states::{build_initial, ElectronicSpec, FieldSpec};
    use crate::oracle::tests_support::random_density;
    use approx::assert_abs_diff_eq;

    fn projector(t: Truncation, n: usize, k: usize, m: usize) -> EnvelopeDensityMatrix {
        EnvelopeDensityMatrix::basis_projector(t, CompositeIndex::new(n, k, m).unwrap()).unwrap()
    }

    fn max_diff(a: &EnvelopeDensityMatrix, b: &EnvelopeDensityMatrix) -> f64 {
        (a.entries() - b.entries()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 0.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 0.3, 1).is_err());
        assert!(TimeGrid::new(1.0, 0.1, 0).is_err());
        let g = TimeGrid::new(1.0, 0.1, 3).unwrap();
        assert_eq!(g.steps(), 10);
        assert_eq!(g.record_steps(), vec![0, 3, 6, 9, 10]);
    }

    #[test]
    fn ground_vacuum_is_stationary() {
        let t = Truncation::new(2, 2);
        let p = projector(t, 1, 0, 0);
        let loss = LossConfig { kappa1: 0.1, kappa2: 0.2, r13: 0.1, r23: 0.1, r12: 0.1, ..LossConfig::lossless() };
        let sys = SystemConfig::default();
        assert_eq!(step(&p, 0.0, &sys, &loss, 0.01).entries(), p.entries());
        let grid = TimeGrid::new(5.0, 0.01, 50).unwrap();
        let run = evolve(&p, &sys, &loss, &grid, &Probe::ALL).unwrap();
        for r in &run.series.records {
            assert_eq!(r.populations.unwrap(), [1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn rabi_closed_form() {
        let t = Truncation::new(1, 1);
        let p = projector(t, 1, 1, 0);
        let grid = TimeGrid::new(10.0, 0.01, 10).unwrap();
        let run = evolve(&p, &SystemConfig::default(), &LossConfig::lossless(), &grid, &[Probe::Populations]).unwrap();
        for r in &run.series.records {
            let o = r.populations.unwrap();
            let (s, c) = r.time.sin_cos();
            assert_abs_diff_eq!(o[2], 0.5 * s * s, epsilon = 1e-8);
            assert_abs_diff_eq!(o[1], 0.25 * (1.0 - c).powi(2), epsilon = 1e-8);
            assert_abs_diff_eq!(o[0], 0.25 * (1.0 + c).powi(2), epsilon = 1e-8);
        }
    }

    #[test]
    fn cavity_decay_of_one_photon() {
        let t = Truncation::new(2, 1);
        let p = projector(t, 1, 1, 0);
        let sys = SystemConfig { omega1: 0.0, omega2: 0.0, ..Default::default() };
        let grid = TimeGrid::new(5.0, 0.01, 20).unwrap();
        let run = evolve(&p, &sys, &LossConfig::cavity(0.4), &grid, &[Probe::PhotonStatistics]).unwrap();
        for r in &run.series.records {
            let w = r.photon_probe.as_ref().unwrap();
            assert_abs_diff_eq!(w[1], (-0.4 * r.time).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn step_consistent_with_derivative() {
        let t = Truncation::new(2, 2);
        let p = random_density(t, 7);
        let sys = SystemConfig { delta_p: 0.5, ..Default::default() };
        let loss = LossConfig::cavity(0.1);
        let d = derivative(&p, 0.3, &sys, &loss);
        let mut prev = f64::INFINITY;
        for dt in [1e-2, 1e-3] {
            let q = step(&p, 0.3, &sys, &loss, dt);
            let err =
                ((q.entries() - p.entries()) / C64::new(dt, 0.0) - &d).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(err < prev / 5.0);
            prev = err;
        }
    }

    #[test]
    fn local_error_is_fifth_order() {
        let t = Truncation::new(2, 2);
        let p = random_density(t, 3);
        let sys = SystemConfig { delta_p: 1.0, delta_c: -0.5, ..Default::default() };
        let loss = LossConfig::radiative(0.2, 0.1, 0.05);
        let gap = |dt: f64| {
            let full = step(&p, 0.0, &sys, &loss, dt);
            let half = step(&step(&p, 0.0, &sys, &loss, dt / 2.0), dt / 2.0, &sys, &loss, dt / 2.0);
            max_diff(&full, &half)
        };
        let ratio = gap(0.2) / gap(0.1);
        assert!((ratio.log2() - 5.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn global_error_is_fourth_order() {
        let t = Truncation::new(3, 3);
        let p = build_initial(&ElectronicSpec::ground(), &FieldSpec::Fock { n: 2 }, &FieldSpec::Vacuum, t).unwrap();
        let sys = SystemConfig::default();
        let loss = LossConfig::lossless();
        let run = |dt: f64| {
            let g = TimeGrid::new(4.0, dt, usize::MAX / 2).unwrap();
            evolve_with(&p, &sys, &loss, &g, &[], EvolveOptions { full_state: true })
                .unwrap()
                .final_state
                .to_dense(1000)
                .unwrap()
        };
        let reference = run(0.0125);
        let e1 = max_diff(&run(0.2), &reference);
        let e2 = max_diff(&run(0.1), &reference);
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
    }

    #[test]
    fn sector_run_matches_full_run() {
        let t = Truncation::new(3, 3);
        let p =
            build_initial(&ElectronicSpec::ground(), &FieldSpec::coherent(1.0), &FieldSpec::coherent(1.0), t).unwrap();
        let sys = SystemConfig { delta_p: 0.7, ..Default::default() };
        let loss = LossConfig { kappa1: 0.1, r13: 0.2, r23: 0.1, r12: 0.05, g31: 0.02, ..LossConfig::lossless() };
        let grid = TimeGrid::new(3.0, 0.01, 100).unwrap();
        let probes = [Probe::Populations, Probe::Reduced];
        let part = evolve(&p, &sys, &loss, &grid, &probes).unwrap();
        let full = evolve_with(&p, &sys, &loss, &grid, &probes, EvolveOptions { full_state: true }).unwrap();
        assert_eq!(part.diagnostics.coverage, Coverage::Sectors);
        assert_eq!(full.diagnostics.coverage, Coverage::Full);
        for (a, b) in part.series.records.iter().zip(&full.series.records) {
            assert_eq!(a.populations, b.populations);
            assert_eq!(a.reduced, b.reduced);
        }
        let dense = (0..300).fold(p.clone(), |q, i| step(&q, i as f64 * 0.01, &sys, &loss, 0.01));
        assert!(max_diff(&dense, &full.final_state.to_dense(1000).unwrap()) < 1e-12);
    }

    #[test]
    fn lossless_purity_conserved() {
        let t = Truncation::new(4, 4);
        let p =
            build_initial(&ElectronicSpec::ground(), &FieldSpec::coherent(1.0), &FieldSpec::coherent(0.5), t).unwrap();
        let grid = TimeGrid::new(20.0, 0.01, 200).unwrap();
        let run = evolve(&p, &SystemConfig::default(), &LossConfig::lossless(), &grid, &[Probe::Purity]).unwrap();
        for r in &run.series.records {
            assert_abs_diff_eq!(r.purity.unwrap(), 1.0, epsilon = 1e-6);
        }
        assert!(run.diagnostics.max_hermiticity_error < 1e-12);
        assert!(run.diagnostics.min_eigenvalue_estimate > -1e-6, "{:?}", run.diagnostics);
    }

    #[test]
    fn truncation_leak_flags_run() {
        let t = Truncation::new(2, 2);
        let p = build_initial(&ElectronicSpec::ground(), &FieldSpec::Fock { n: 2 }, &FieldSpec::Vacuum, t).unwrap();
        let grid = TimeGrid::new(1.0, 0.01, 10).unwrap();
        let run = evolve(&p, &SystemConfig::default(), &LossConfig::lossless(), &grid, &[Probe::Populations]).unwrap();
        assert!(run.diagnostics.unreliable());
    }
}
