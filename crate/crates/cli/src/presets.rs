//! Named desk-scale scenarios. Photon numbers are scaled down from the
//! reference scenarios (mean 10 becomes 3 or 4, coupling 100 becomes 20);
//! loss rates keep their reference values.

use lambdasim_core::{ElectronicSpec, FieldSpec, LossConfig, Probe, SystemConfig, TimeGrid, Truncation};

use crate::config::{Fields, OutputConfig, RunConfig, Scenario, SweepSection, ValidateSection, TAIL_WARN};

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub figure: &'static str,
    pub summary: &'static str,
    /// Photon numbers reduced from the reference values.
    pub desk_scale: bool,
    /// More than a few minutes on one core.
    pub long_running: bool,
    pub config: RunConfig,
}

/// Weak loss set of the long-time return to the ground state.
pub fn weak_losses() -> LossConfig {
    LossConfig { kappa1: 0.001, kappa2: 0.001, r13: 0.01, r23: 0.01, r12: 0.002, g31: 0.01, g32: 0.01, g21: 0.002 }
}

/// First collapse of the lossless mean-3 coherent dynamics.
pub const COLLAPSE_TIME: f64 = 12.71;

fn grid(t_end: f64, dt: f64, record_every: usize) -> TimeGrid {
    TimeGrid { t_end, dt, record_every }
}

fn evolve(
    probe: FieldSpec,
    coupling: FieldSpec,
    losses: LossConfig,
    grid: TimeGrid,
    observables: &[Probe],
) -> RunConfig {
    RunConfig {
        scenario: Scenario::Evolve,
        observables: observables.to_vec(),
        system: SystemConfig::default(),
        losses,
        fields: Fields { electronic: ElectronicSpec::ground(), probe, coupling },
        truncation: None,
        grid,
        sweep: None,
        validate: None,
        output: OutputConfig::default(),
    }
}

fn transfer(probe: FieldSpec, coupling: FieldSpec, losses: LossConfig, t_end: f64) -> RunConfig {
    RunConfig {
        scenario: Scenario::Transfer,
        ..evolve(probe, coupling, losses, grid(t_end, 0.01, 100), &[Probe::Populations, Probe::PhotonStatistics])
    }
}

fn sweep(probe: FieldSpec, t_end: f64, dt: f64, window: Option<(f64, f64)>) -> RunConfig {
    let record_every = (0.1 / dt).round() as usize;
    let k_max = probe.recommended_cutoff(TAIL_WARN).expect("preset field");
    RunConfig {
        scenario: Scenario::Sweep,
        sweep: Some(SweepSection { deltas: None, outer: 10.0, window }),
        truncation: Some(Truncation::new(k_max, 45)),
        ..evolve(probe, FieldSpec::coherent(20.0), LossConfig::lossless(), grid(t_end, dt, record_every), &[])
    }
}

fn bipartite(losses: LossConfig) -> RunConfig {
    let mut c = evolve(
        FieldSpec::coherent(3.0),
        FieldSpec::coherent(3.0),
        losses,
        grid(COLLAPSE_TIME, 0.01, 41),
        &[Probe::Populations, Probe::Bipartite],
    );
    c.output.grid_times = vec![COLLAPSE_TIME];
    c
}

fn cpt() -> RunConfig {
    evolve(
        FieldSpec::coherent(4.0),
        FieldSpec::coherent(4.0),
        LossConfig::radiative(0.05, 0.05, 0.0),
        grid(500.0, 0.01, 100),
        &[Probe::Populations, Probe::ClassicalPolarization, Probe::Reduced],
    )
}

fn validate_small() -> RunConfig {
    RunConfig {
        scenario: Scenario::Validate,
        observables: Vec::new(),
        system: SystemConfig { delta_p: 0.3, delta_c: -0.2, omega31: 3.0, omega21: 1.0, ..SystemConfig::default() },
        losses: LossConfig {
            kappa1: 0.05,
            kappa2: 0.03,
            r13: 0.04,
            r23: 0.03,
            r12: 0.01,
            g31: 0.02,
            g32: 0.02,
            g21: 0.01,
        },
        fields: Fields {
            electronic: ElectronicSpec { amplitudes: [[0.6, 0.0], [0.0, 0.48], [0.64, 0.0]] },
            probe: FieldSpec::Fock { n: 1 },
            coupling: FieldSpec::Fock { n: 2 },
        },
        truncation: Some(Truncation::new(2, 3)),
        grid: grid(10.0, 1e-3, 500),
        sweep: None,
        validate: Some(ValidateSection::default()),
        output: OutputConfig::default(),
    }
}

pub fn all() -> Vec<Preset> {
    let coh = FieldSpec::coherent;
    let sq = FieldSpec::squeezed;
    let radiative = |r: f64| LossConfig::radiative(r, r, r / 5.0);
    vec![
        Preset {
            name: "fig2_losses",
            figure: "Fig. 2",
            summary:
                "two coherent fields under weak cavity, radiative and dephasing losses; return to the ground state",
            desk_scale: true,
            long_running: true,
            config: evolve(coh(3.0), coh(3.0), weak_losses(), grid(1500.0, 0.01, 100), &[Probe::Populations]),
        },
        Preset {
            name: "fig3a_cpt",
            figure: "Fig. 3(a)",
            summary: "coherent fields, r13 = r23 = 0.05, r12 = 0: coherent population trapping",
            desk_scale: true,
            long_running: false,
            config: cpt(),
        },
        Preset {
            name: "fig3b_cpt_decay",
            figure: "Fig. 3(b)",
            summary: "as fig3a_cpt with r12 = 0.01: trapping slowly destroyed",
            desk_scale: true,
            long_running: false,
            config: RunConfig { losses: LossConfig::radiative(0.05, 0.05, 0.01), ..cpt() },
        },
        Preset {
            name: "fig4_squeezed",
            figure: "Fig. 4",
            summary: "squeezed vacuum fields, r13 = r23 = 0.05: mixed electronic state, K = 2",
            desk_scale: true,
            long_running: true,
            config: evolve(
                sq(4.0),
                sq(2.0),
                LossConfig::radiative(0.05, 0.05, 0.0),
                grid(400.0, 0.01, 100),
                &[Probe::Populations, Probe::ClassicalPolarization, Probe::Reduced],
            ),
        },
        Preset {
            name: "fig5_statistics",
            figure: "Fig. 5",
            summary: "photon statistics of both fields under strong radiative losses",
            desk_scale: true,
            long_running: false,
            config: evolve(
                coh(3.0),
                coh(3.0),
                LossConfig::radiative(0.5, 0.5, 0.1),
                grid(100.0, 0.01, 100),
                &[Probe::Populations, Probe::PhotonStatistics],
            ),
        },
        Preset {
            name: "fig6_transfer",
            figure: "Fig. 6(a)",
            summary: "coherent probe, vacuum coupling, only r12 = 0.5: statistics transfer",
            desk_scale: true,
            long_running: false,
            config: transfer(coh(3.0), FieldSpec::Vacuum, LossConfig::radiative(0.0, 0.0, 0.5), 600.0),
        },
        Preset {
            name: "fig6_transfer_squeezed",
            figure: "Fig. 6(b)",
            summary: "squeezed probe, vacuum coupling, only r12 = 0.5: statistics transfer",
            desk_scale: true,
            long_running: true,
            config: transfer(sq(3.0), FieldSpec::Vacuum, LossConfig::radiative(0.0, 0.0, 0.5), 600.0),
        },
        Preset {
            name: "fig7_combined",
            figure: "Fig. 7(a)",
            summary: "two coherent fields, r13 = r23 = 0.05, r12 = 0.01: final coupling-field statistics",
            desk_scale: true,
            long_running: true,
            config: transfer(coh(3.0), coh(3.0), LossConfig::radiative(0.05, 0.05, 0.01), 2000.0),
        },
        Preset {
            name: "fig8_classical_polarization",
            figure: "Fig. 8",
            summary: "lossless classical polarization envelopes for coherent fields",
            desk_scale: true,
            long_running: false,
            config: evolve(
                coh(3.0),
                coh(3.0),
                LossConfig::lossless(),
                grid(50.0, 0.01, 10),
                &[Probe::Populations, Probe::ClassicalPolarization],
            ),
        },
        Preset {
            name: "fig9_eit",
            figure: "Fig. 9",
            summary: "EIT absorption spectrum, coherent probe 2, coherent coupling 20, lossless",
            desk_scale: true,
            long_running: true,
            config: sweep(coh(2.0), 100.0, 0.01, None),
        },
        Preset {
            name: "fig9_eit_squeezed_probe",
            figure: "Fig. 9",
            summary: "EIT absorption spectrum, squeezed probe 2, coherent coupling 20, lossless",
            desk_scale: true,
            long_running: true,
            config: sweep(sq(2.0), 100.0, 0.01, None),
        },
        Preset {
            name: "fig10_quantum_polarization",
            figure: "Fig. 10",
            summary: "lossless quantum polarization for coherent fields",
            desk_scale: true,
            long_running: false,
            config: evolve(
                coh(3.0),
                coh(3.0),
                LossConfig::lossless(),
                grid(50.0, 0.01, 10),
                &[Probe::Populations, Probe::QuantumPolarization],
            ),
        },
        Preset {
            name: "fig11_qpol",
            figure: "Fig. 11(a)",
            summary: "quantum polarization spectrum averaged to t = 20, coherent fields",
            desk_scale: true,
            long_running: false,
            config: sweep(coh(2.0), 20.0, 0.01, Some((0.0, 20.0))),
        },
        Preset {
            name: "fig12_bipartite",
            figure: "Fig. 12",
            summary: "lossless bipartite photon distribution at the first collapse",
            desk_scale: true,
            long_running: false,
            config: bipartite(LossConfig::lossless()),
        },
        Preset {
            name: "fig13_losses",
            figure: "Fig. 13(e)",
            summary: "bipartite distribution at the first collapse with kappa = 0.2",
            desk_scale: true,
            long_running: false,
            config: bipartite(LossConfig::cavity(0.2)),
        },
        Preset {
            name: "fig13_radiative",
            figure: "Fig. 13(j)",
            summary: "bipartite distribution at the first collapse with r13 = r23 = 0.2, r12 = 0.04",
            desk_scale: true,
            long_running: false,
            config: bipartite(radiative(0.2)),
        },
        Preset {
            name: "cpt_coherent",
            figure: "Fig. 3(a)",
            summary: "coherent mean 4 fields under radiative losses; final Schmidt number near 1",
            desk_scale: true,
            long_running: false,
            config: cpt(),
        },
        Preset {
            name: "transfer_ideal",
            figure: "Fig. 6(a)",
            summary: "coherent mean 3 probe, vacuum coupling, only r12 = 0.5",
            desk_scale: true,
            long_running: false,
            config: transfer(coh(3.0), FieldSpec::Vacuum, LossConfig::radiative(0.0, 0.0, 0.5), 600.0),
        },
        Preset {
            name: "validate_small",
            figure: "-",
            summary: "envelope propagator against the lab-frame reference on a 36-state space, all loss channels",
            desk_scale: false,
            long_running: false,
            config: validate_small(),
        },
    ]
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}
