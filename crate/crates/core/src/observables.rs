//! Quantities extracted from an envelope density matrix snapshot.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_basis::Level;
use crate::master_equation::SystemConfig;
use crate::state::StateView;
use crate::C64;

/// Which field mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Probe,
    Coupling,
}

/// Electronic transition carrying a classical polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    T31,
    T32,
    T21,
}

impl Transition {
    pub const ALL: [Transition; 3] = [Transition::T31, Transition::T32, Transition::T21];

    pub fn from_pair(i: usize, j: usize) -> Result<Self> {
        match (i, j) {
            (3, 1) => Ok(Transition::T31),
            (3, 2) => Ok(Transition::T32),
            (2, 1) => Ok(Transition::T21),
            _ => Err(Error::Index(format!("no polarization defined for pair ({i},{j})"))),
        }
    }

    pub fn levels(self) -> (Level, Level) {
        match self {
            Transition::T31 => (Level::Upper, Level::Ground),
            Transition::T32 => (Level::Upper, Level::Lower),
            Transition::T21 => (Level::Lower, Level::Ground),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Transition::T31 => "31",
            Transition::T32 => "32",
            Transition::T21 => "21",
        }
    }

    /// Transition frequency ω_ij used to restore the fast optical phase.
    pub fn frequency(self, sys: &SystemConfig) -> f64 {
        match self {
            Transition::T31 => sys.omega31,
            Transition::T32 => sys.omega32(),
            Transition::T21 => sys.omega21,
        }
    }
}

/// Whether to multiply envelope coherences by `e^{−iω_ij t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    #[default]
    Envelope,
    Reconstructed,
}

/// `O_n = Σ_{k,m} p[(n,k,m),(n,k,m)]`.
pub fn populations(p: &impl StateView) -> [f64; 3] {
    let fd = p.truncation().field_dim();
    let mut out = [0.0; 3];
    for (n, o) in out.iter_mut().enumerate() {
        *o = (0..fd).map(|j| p.element(n * fd + j, n * fd + j).re).sum();
    }
    out
}

/// Photon-number distribution `W_k` (probe) or `W̃_m` (coupling).
pub fn photon_statistics(p: &impl StateView, mode: Mode) -> Vec<f64> {
    let t = p.truncation();
    let len = match mode {
        Mode::Probe => t.k_max + 1,
        Mode::Coupling => t.m_max + 1,
    };
    let mut w = vec![0.0; len];
    for (i, idx) in t.basis().enumerate() {
        let n = match mode {
            Mode::Probe => idx.k,
            Mode::Coupling => idx.m,
        };
        w[n] += p.element(i, i).re;
    }
    w
}

pub fn mean_photon_number(distribution: &[f64]) -> f64 {
    distribution.iter().enumerate().map(|(n, w)| n as f64 * w).sum()
}

/// `Σ_{k,m} p[(i,k,m),(j,k,m)]`, optionally times `e^{−iω_ij t}`.
pub fn classical_polarization(p: &impl StateView, transition: Transition, sys: &SystemConfig, mode: PhaseMode) -> C64 {
    let fd = p.truncation().field_dim();
    let (hi, lo) = transition.levels();
    let sum: C64 = (0..fd).map(|j| p.element(hi.slot() * fd + j, lo.slot() * fd + j)).sum();
    match mode {
        PhaseMode::Envelope => sum,
        PhaseMode::Reconstructed => sum * C64::from_polar(1.0, -transition.frequency(sys) * p.time()),
    }
}

/// Quantum polarization: `Σ p[(3,k,m),(1,k+1,m)]` for 3–1 and
/// `Σ p[(3,k,m),(2,k,m+1)]` for 3–2.
pub fn quantum_polarization(p: &impl StateView, transition: Transition) -> Result<C64> {
    let t = p.truncation();
    let mut acc = C64::new(0.0, 0.0);
    match transition {
        Transition::T31 => {
            for k in 0..t.k_max {
                for m in 0..=t.m_max {
                    let a = t.flatten_unchecked(Level::Upper, k, m);
                    let b = t.flatten_unchecked(Level::Ground, k + 1, m);
                    acc += p.element(a, b);
                }
            }
        }
        Transition::T32 => {
            for k in 0..=t.k_max {
                for m in 0..t.m_max {
                    let a = t.flatten_unchecked(Level::Upper, k, m);
                    let b = t.flatten_unchecked(Level::Lower, k, m + 1);
                    acc += p.element(a, b);
                }
            }
        }
        Transition::T21 => return Err(Error::Index("quantum polarization is defined for 3-1 and 3-2 only".into())),
    }
    Ok(acc)
}

pub type Reduced = [[C64; 3]; 3];

/// Electronic density matrix with both fields traced out.
pub fn reduced_electronic(p: &impl StateView, sys: &SystemConfig, mode: PhaseMode) -> Reduced {
    let fd = p.truncation().field_dim();
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..fd).map(|f| p.element(i * fd + f, j * fd + f)).sum();
        }
    }
    if mode == PhaseMode::Reconstructed {
        let energy = [0.0, sys.omega21, sys.omega31];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= C64::from_polar(1.0, -(energy[i] - energy[j]) * p.time());
            }
        }
    }
    out
}

/// `K = 1 / Tr[ρ_red²]`. The input must have unit trace within `1e−6`.
pub fn schmidt_number(reduced: &Reduced) -> Result<f64> {
    let tr: C64 = (0..3).map(|i| reduced[i][i]).sum();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return Err(Error::Numerical(format!("reduced matrix trace {tr} is not 1; normalize first")));
    }
    let mut purity = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            purity += (reduced[i][j] * reduced[j][i]).re;
        }
    }
    Ok(1.0 / purity)
}

/// Divide a reduced matrix by its trace.
pub fn normalize_reduced(reduced: &Reduced) -> Result<Reduced> {
    let tr: f64 = (0..3).map(|i| reduced[i][i].re).sum();
    if !(tr > 0.0) {
        return Err(Error::Numerical("reduced matrix has no weight".into()));
    }
    Ok(reduced.map(|row| row.map(|v| v / tr)))
}

/// `W_km = p[(3,k,m),(3,k,m)]`.
pub fn bipartite_distribution(p: &impl StateView) -> Array2<f64> {
    let t = p.truncation();
    Array2::from_shape_fn((t.k_max + 1, t.m_max + 1), |(k, m)| {
        let i = t.flatten_unchecked(Level::Upper, k, m);
        p.element(i, i).re
    })
}

/// Grid scaled so that its largest entry is 1 (unchanged if all zero).
pub fn normalize_to_max(grid: &Array2<f64>) -> Array2<f64> {
    let max = grid.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        grid.mapv(|x| x / max)
    } else {
        grid.clone()
    }
}

/// L1 distance between a normalized joint distribution and the outer
/// product of its marginals; zero exactly for factorized grids.
pub fn product_test_residual(w: &Array2<f64>) -> Result<f64> {
    let total: f64 = w.sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("distribution has no mass".into()));
    }
    let joint = w.mapv(|x| x / total);
    let rows = joint.sum_axis(ndarray::Axis(1));
    let cols = joint.sum_axis(ndarray::Axis(0));
    Ok(joint.indexed_iter().map(|((k, m), x)| (x - rows[k] * cols[m]).abs()).sum())
}

/// Probability in each excitation manifold `k + m + [n = 3]`.
pub fn manifold_populations(p: &impl StateView) -> Vec<f64> {
    let t = p.truncation();
    let mut out = vec![0.0; t.k_max + t.m_max + 2];
    for (i, idx) in t.basis().enumerate() {
        out[idx.manifold()] += p.element(i, i).re;
    }
    out
}

/// One recorded time point. Fields are present when the matching probe was requested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableRecord {
    pub time: f64,
    pub trace: f64,
    pub populations: Option<[f64; 3]>,
    pub photon_probe: Option<Vec<f64>>,
    pub photon_coupling: Option<Vec<f64>>,
    /// Envelope values for 31, 32, 21.
    pub classical: Option<[C64; 3]>,
    /// 31, 32.
    pub quantum: Option<[C64; 2]>,
    pub reduced: Option<Reduced>,
    pub schmidt: Option<f64>,
    pub bipartite: Option<Array2<f64>>,
    pub purity: Option<f64>,
}

impl ObservableRecord {
    /// Named scalar values in a fixed column order.
    pub fn scalars(&self) -> Vec<(String, f64)> {
        let mut out = vec![("trace".to_string(), self.trace)];
        if let Some(o) = self.populations {
            for (n, v) in o.iter().enumerate() {
                out.push((format!("O{}", n + 1), *v));
            }
        }
        if let Some(w) = &self.photon_probe {
            out.push(("N_P".into(), mean_photon_number(w)));
        }
        if let Some(w) = &self.photon_coupling {
            out.push(("N_C".into(), mean_photon_number(w)));
        }
        if let Some(c) = self.classical {
            for (tr, v) in Transition::ALL.iter().zip(c) {
                out.push((format!("PC{}_re", tr.label()), v.re));
                out.push((format!("PC{}_im", tr.label()), v.im));
            }
        }
        if let Some(q) = self.quantum {
            for (label, v) in ["31", "32"].iter().zip(q) {
                out.push((format!("PQ{label}_re"), v.re));
                out.push((format!("PQ{label}_im"), v.im));
            }
        }
        if let Some(k) = self.schmidt {
            out.push(("K".into(), k));
        }
        if let Some(p) = self.purity {
            out.push(("purity".into(), p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableSeries {
    pub records: Vec<ObservableRecord>,
}

impl ObservableSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn last(&self) -> Option<&ObservableRecord> {
        self.records.last()
    }

    /// Record closest to time `t`.
    pub fn at(&self, t: f64) -> Option<&ObservableRecord> {
        self.records.iter().min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }

    /// First record from which every scalar observable stays within `tol`
    /// of its value there for the following `window` time units.
    pub fn quasi_steady_index(&self, window: f64, tol: f64) -> Option<usize> {
        let scalars: Vec<Vec<f64>> =
            self.records.iter().map(|r| r.scalars().into_iter().map(|(_, v)| v).collect()).collect();
        let end = self.records.last()?.time;
        for (i, start) in self.records.iter().enumerate() {
            if start.time + window > end + 1e-9 {
                return None;
            }
            let steady = self.records[i..]
                .iter()
                .zip(&scalars[i..])
                .take_while(|(r, _)| r.time <= start.time + window + 1e-9)
                .all(|(_, vals)| vals.iter().zip(&scalars[i]).all(|(v, v0)| (v - v0).abs() < tol));
            if steady {
                return Some(i);
            }
        }
        None
    }
}
