//! Read-only access to density matrix elements independent of storage.
//!
//! Large truncations cannot hold a dense `D × D` matrix, so runs keep only
//! the integrated sectors ([`SectorState`]) and start from the state vector
//! of a pure product state ([`PureState`]). Observables read any of these
//! through [`StateView`].

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fock_basis::{EnvelopeDensityMatrix, Truncation};
use crate::C64;

pub trait StateView: Sync {
    fn truncation(&self) -> Truncation;

    fn time(&self) -> f64;

    /// `p[a, b]`, zero for elements the storage does not hold.
    fn element(&self, a: usize, b: usize) -> C64;

    /// `Tr[p²]`.
    fn purity(&self) -> f64;

    fn trace(&self) -> C64 {
        (0..self.truncation().dim()).map(|i| self.element(i, i)).sum()
    }

    /// Total diagonal weight on `k = k_max` or `m = m_max`.
    fn boundary_population(&self) -> f64 {
        let t = self.truncation();
        t.basis().enumerate().filter(|(_, idx)| t.on_boundary(*idx)).map(|(i, _)| self.element(i, i).re).sum()
    }
}

impl StateView for EnvelopeDensityMatrix {
    fn truncation(&self) -> Truncation {
        EnvelopeDensityMatrix::truncation(self)
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn element(&self, a: usize, b: usize) -> C64 {
        self.entries()[[a, b]]
    }

    fn purity(&self) -> f64 {
        EnvelopeDensityMatrix::purity(self)
    }

    fn trace(&self) -> C64 {
        EnvelopeDensityMatrix::trace(self)
    }

    fn boundary_population(&self) -> f64 {
        EnvelopeDensityMatrix::boundary_population(self)
    }
}

/// `|ψ><ψ|` stored as the vector `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    truncation: Truncation,
    psi: Vec<C64>,
    pub time: f64,
}

impl PureState {
    pub fn new(truncation: Truncation, psi: Vec<C64>) -> Result<Self> {
        if psi.len() != truncation.dim() {
            return Err(Error::Config(format!("state vector length {} != {}", psi.len(), truncation.dim())));
        }
        Ok(PureState { truncation, psi, time: 0.0 })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.psi
    }

    pub fn to_dense(&self) -> Result<EnvelopeDensityMatrix> {
        let mut p = EnvelopeDensityMatrix::pure(self.truncation, &self.psi)?;
        p.time = self.time;
        Ok(p)
    }
}

impl StateView for PureState {
    fn truncation(&self) -> Truncation {
        self.truncation
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn element(&self, a: usize, b: usize) -> C64 {
        self.psi[a] * self.psi[b].conj()
    }

    fn purity(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>().powi(2)
    }

    fn trace(&self) -> C64 {
        C64::new(self.psi.iter().map(|c| c.norm_sqr()).sum(), 0.0)
    }
}

/// Values on a fixed set of elements; every other element is zero.
#[derive(Debug, Clone)]
pub struct SectorState {
    truncation: Truncation,
    elements: Vec<(u32, u32)>,
    values: Vec<C64>,
    index: HashMap<u64, u32>,
    pub time: f64,
}

impl SectorState {
    pub fn new(truncation: Truncation, elements: Vec<(u32, u32)>, time: f64) -> Self {
        let d = truncation.dim() as u64;
        let index = elements.iter().enumerate().map(|(i, &(a, b))| (a as u64 * d + b as u64, i as u32)).collect();
        let values = vec![C64::new(0.0, 0.0); elements.len()];
        SectorState { truncation, elements, values, index, time }
    }

    pub fn elements(&self) -> &[(u32, u32)] {
        &self.elements
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn holds(&self, a: usize, b: usize) -> bool {
        self.index.contains_key(&self.key(a, b))
    }

    fn key(&self, a: usize, b: usize) -> u64 {
        a as u64 * self.truncation.dim() as u64 + b as u64
    }

    /// `max |p[a,b] − conj(p[b,a])|` over held elements.
    pub fn hermiticity_error(&self) -> f64 {
        self.elements
            .iter()
            .zip(&self.values)
            .map(|(&(a, b), v)| (v - self.element(b as usize, a as usize).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Dense copy; refuses dimensions whose dense matrix would exceed `max_dim`.
    pub fn to_dense(&self, max_dim: usize) -> Result<EnvelopeDensityMatrix> {
        let d = self.truncation.dim();
        if d > max_dim {
            return Err(Error::Config(format!("dimension {d} too large for a dense copy (limit {max_dim})")));
        }
        let mut p = EnvelopeDensityMatrix::zeros(self.truncation);
        p.time = self.time;
        let e = p.entries_mut();
        for (&(a, b), v) in self.elements.iter().zip(&self.values) {
            e[[a as usize, b as usize]] = *v;
        }
        Ok(p)
    }
}

impl StateView for SectorState {
    fn truncation(&self) -> Truncation {
        self.truncation
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn element(&self, a: usize, b: usize) -> C64 {
        match self.index.get(&self.key(a, b)) {
            Some(&i) => self.values[i as usize],
            None => C64::new(0.0, 0.0),
        }
    }

    /// Sum of `|p[a,b]|²`, which equals `Tr[p²]` for Hermitian `p`.
    fn purity(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}
