//! Truncated composite basis `|n, k, m>` and the dense envelope matrix stored on it.
//!
//! Basis order is row-major with the electronic level outermost, then the
//! field-1 photon number `k`, then the field-2 photon number `m`:
//!
//! ```text
//! flat(n, k, m) = (n - 1)·(k_max + 1)·(m_max + 1) + k·(m_max + 1) + m
//! ```

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Electronic level of the Λ system. `Ground` and `Lower` are the two lower
/// states, `Upper` is the common excited state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground = 1,
    Lower = 2,
    Upper = 3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::Lower, Level::Upper];

    pub fn from_number(n: usize) -> Result<Level> {
        match n {
            1 => Ok(Level::Ground),
            2 => Ok(Level::Lower),
            3 => Ok(Level::Upper),
            _ => Err(Error::Index(format!("electronic level {n} not in 1..=3"))),
        }
    }

    /// Level number `n` in `{1, 2, 3}`.
    pub fn number(self) -> usize {
        self as usize
    }

    /// Zero-based position, used for 3×3 tables.
    pub fn slot(self) -> usize {
        self as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub k_max: usize,
    pub m_max: usize,
}

impl Truncation {
    pub fn new(k_max: usize, m_max: usize) -> Self {
        Truncation { k_max, m_max }
    }

    /// Number of field configurations `(k_max + 1)(m_max + 1)`.
    pub fn field_dim(&self) -> usize {
        (self.k_max + 1) * (self.m_max + 1)
    }

    /// Total dimension `3·(k_max + 1)·(m_max + 1)`.
    pub fn dim(&self) -> usize {
        3 * self.field_dim()
    }

    pub fn flatten(&self, idx: CompositeIndex) -> Result<usize> {
        if idx.k > self.k_max || idx.m > self.m_max {
            return Err(Error::Index(format!("{idx} outside truncation k_max={} m_max={}", self.k_max, self.m_max)));
        }
        Ok(self.flatten_unchecked(idx.level, idx.k, idx.m))
    }

    #[inline]
    pub(crate) fn flatten_unchecked(&self, level: Level, k: usize, m: usize) -> usize {
        level.slot() * self.field_dim() + k * (self.m_max + 1) + m
    }

    pub fn unflatten(&self, i: usize) -> Result<CompositeIndex> {
        if i >= self.dim() {
            return Err(Error::Index(format!("flat index {i} >= dimension {}", self.dim())));
        }
        Ok(self.unflatten_unchecked(i))
    }

    #[inline]
    pub(crate) fn unflatten_unchecked(&self, i: usize) -> CompositeIndex {
        let fd = self.field_dim();
        let level = Level::ALL[i / fd];
        let rest = i % fd;
        CompositeIndex { level, k: rest / (self.m_max + 1), m: rest % (self.m_max + 1) }
    }

    /// All basis labels in storage order.
    pub fn basis(&self) -> impl Iterator<Item = CompositeIndex> + '_ {
        (0..self.dim()).map(move |i| self.unflatten_unchecked(i))
    }

    /// True when the state sits on the last retained Fock number of either mode.
    pub fn on_boundary(&self, idx: CompositeIndex) -> bool {
        idx.k == self.k_max || idx.m == self.m_max
    }
}

/// Basis label `(n, k, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompositeIndex {
    pub level: Level,
    pub k: usize,
    pub m: usize,
}

impl CompositeIndex {
    pub fn new(n: usize, k: usize, m: usize) -> Result<Self> {
        Ok(CompositeIndex { level: Level::from_number(n)?, k, m })
    }

    /// Excitation labels conserved by every term of the generator.
    ///
    /// `A = k + [n ≠ 1]` counts field-1 quanta including one absorbed into
    /// the excited manifold, `B = m − [n = 2]` does the same for field 2.
    /// The coherent couplings act inside fixed `(A, B)`, while every loss
    /// channel shifts `A` or `B` by the same amount on both sides of an
    /// element, so `(A_a − A_b, B_a − B_b)` never changes for `p[a, b]`.
    pub fn excitation_labels(&self) -> (i64, i64) {
        let a = self.k as i64 + i64::from(self.level != Level::Ground);
        let b = self.m as i64 - i64::from(self.level == Level::Lower);
        (a, b)
    }

    /// Total excitation number `k + m + [n = 3]`, conserved by the lossless dynamics.
    pub fn manifold(&self) -> usize {
        self.k + self.m + usize::from(self.level == Level::Upper)
    }
}

impl fmt::Display for CompositeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}>", self.level.number(), self.k, self.m)
    }
}

/// Slowly varying envelope `p` of the density matrix, dense `D × D`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeDensityMatrix {
    truncation: Truncation,
    entries: Array2<C64>,
    /// Time in units of `1/Ω₁`.
    pub time: f64,
}

impl EnvelopeDensityMatrix {
    pub fn zeros(truncation: Truncation) -> Self {
        let d = truncation.dim();
        EnvelopeDensityMatrix { truncation, entries: Array2::zeros((d, d)), time: 0.0 }
    }

    pub fn from_entries(truncation: Truncation, entries: Array2<C64>, time: f64) -> Result<Self> {
        let d = truncation.dim();
        if entries.dim() != (d, d) {
            return Err(Error::Config(format!("matrix shape {:?} does not match dimension {d}", entries.dim())));
        }
        Ok(EnvelopeDensityMatrix { truncation, entries, time })
    }

    /// Pure state `|ψ><ψ|` from an amplitude vector in storage order.
    pub fn pure(truncation: Truncation, psi: &[C64]) -> Result<Self> {
        let d = truncation.dim();
        if psi.len() != d {
            return Err(Error::Config(format!("state vector length {} != {d}", psi.len())));
        }
        let entries = Array2::from_shape_fn((d, d), |(a, b)| psi[a] * psi[b].conj());
        Ok(EnvelopeDensityMatrix { truncation, entries, time: 0.0 })
    }

    /// `|idx><idx|`.
    pub fn basis_projector(truncation: Truncation, idx: CompositeIndex) -> Result<Self> {
        let mut p = Self::zeros(truncation);
        let i = truncation.flatten(idx)?;
        p.entries[[i, i]] = C64::new(1.0, 0.0);
        Ok(p)
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut Array2<C64> {
        &mut self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn get(&self, a: CompositeIndex, b: CompositeIndex) -> Result<C64> {
        let (i, j) = (self.truncation.flatten(a)?, self.truncation.flatten(b)?);
        Ok(self.entries[[i, j]])
    }

    pub fn set(&mut self, a: CompositeIndex, b: CompositeIndex, value: C64) -> Result<()> {
        let (i, j) = (self.truncation.flatten(a)?, self.truncation.flatten(b)?);
        self.entries[[i, j]] = value;
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    /// `Tr[p²]`, which for a Hermitian matrix is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for a in 0..d {
            for b in 0..d {
                acc += (self.entries[[a, b]] * self.entries[[b, a]]).re;
            }
        }
        acc
    }

    /// `max |p[a,b] − conj(p[b,a])|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in a..d {
                worst = worst.max((self.entries[[a, b]] - self.entries[[b, a]].conj()).norm());
            }
        }
        worst
    }

    /// Total diagonal weight on `k = k_max` or `m = m_max`.
    pub fn boundary_population(&self) -> f64 {
        let t = self.truncation;
        t.basis().enumerate().filter(|(_, idx)| t.on_boundary(*idx)).map(|(i, _)| self.entries[[i, i]].re).sum()
    }

    /// Smallest eigenvalue of the Hermitian part. `O(D³)`, intended for `D` in the hundreds.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let h = nalgebra::DMatrix::from_fn(d, d, |a, b| 0.5 * (self.entries[[a, b]] + self.entries[[b, a]].conj()));
        nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
