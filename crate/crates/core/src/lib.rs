//! Simulation of a Λ-type three-level system driven by two quantized
//! single-mode fields, with cavity, radiative and dephasing losses.
//!
//! The state is the slowly varying envelope of the density matrix on the
//! truncated product space `{|1>,|2>,|3>} ⊗ Fock(k_max) ⊗ Fock(m_max)`.
//! Times are in units of `1/Ω₁`, rates and frequencies in units of `Ω₁`.

pub mod error;
pub mod evolution;
pub mod fock_basis;
pub mod initial_states;
pub mod master_equation;
pub mod observables;
pub mod oracle;
pub mod sector;
pub mod spectra;
pub mod state;

pub use error::{Error, Result};
pub use evolution::{evolve, step, Evolution, Probe, RunDiagnostics, TimeGrid};
pub use fock_basis::{CompositeIndex, EnvelopeDensityMatrix, Level, Truncation};
pub use initial_states::{build_initial, build_initial_pure, ElectronicSpec, FieldSpec};
pub use master_equation::{derivative, LossConfig, SystemConfig};
pub use observables::{ObservableRecord, ObservableSeries};
pub use spectra::{Spectrum, SweepConfig};
pub use state::{PureState, SectorState, StateView};

pub use num_complex::Complex64 as C64;
