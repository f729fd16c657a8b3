//! Right-hand side of the envelope equations of motion.
//!
//! For an element `p[(n,k,m), (n',k',m')]` the generator is the sum of
//!
//! * the Ω₁ coupling of the 1↔3 transition, carrying `e^{±iΔ_P t}`,
//! * the Ω₂ coupling of the 2↔3 transition, carrying `e^{±iΔ_C t}`,
//! * cavity damping of each mode, `κ_i/2 [2 a p a† − a†a p − p a†a]`,
//! * pure dephasing `−γ_{n,n'} p` of off-diagonal electronic blocks,
//! * radiative decay 3→1, 3→2 and 2→1 with feeding of the lower level.
//!
//! Source terms that would need a Fock number above the truncation are
//! dropped. [`for_each_term`] is the single place where these terms are
//! spelled out; both the dense [`derivative`] and the sparse
//! [`CompiledGenerator`] are assembled from it.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_basis::{EnvelopeDensityMatrix, Level, Truncation};
use crate::C64;

/// Couplings and detunings, all in units of Ω₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub omega1: f64,
    pub omega2: f64,
    /// Probe detuning Δ_P.
    pub delta_p: f64,
    /// Coupling detuning Δ_C.
    pub delta_c: f64,
    /// Bandgap ω₃₁, only used to reconstruct the fast optical phase.
    pub omega31: f64,
    /// Lower-level splitting ω₂₁ = (E₂ − E₁)/ħ, used for ω₃₂ = ω₃₁ − ω₂₁.
    pub omega21: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig { omega1: 1.0, omega2: 1.0, delta_p: 0.0, delta_c: 0.0, omega31: 100.0, omega21: 0.0 }
    }
}

impl SystemConfig {
    pub fn resonant() -> Self {
        Self::default()
    }

    pub fn omega32(&self) -> f64 {
        self.omega31 - self.omega21
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega1, self.omega2, self.delta_p, self.delta_c, self.omega31, self.omega21];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("system parameters must be finite".into()));
        }
        if self.omega1 < 0.0 || self.omega2 < 0.0 {
            return Err(Error::Config("Rabi frequencies must be non-negative".into()));
        }
        if self.omega31 <= self.delta_p.abs().max(self.delta_c.abs()) {
            return Err(Error::Config(format!(
                "omega31 = {} must exceed every detuning (|Δ_P| = {}, |Δ_C| = {})",
                self.omega31,
                self.delta_p.abs(),
                self.delta_c.abs()
            )));
        }
        Ok(())
    }
}

/// Loss rates in units of Ω₁. `g31`, `g32`, `g21` are the dephasing rates γ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub r13: f64,
    pub r23: f64,
    pub r12: f64,
    pub g31: f64,
    pub g32: f64,
    pub g21: f64,
}

impl LossConfig {
    pub fn lossless() -> Self {
        Self::default()
    }

    /// Same cavity rate on both modes.
    pub fn cavity(kappa: f64) -> Self {
        LossConfig { kappa1: kappa, kappa2: kappa, ..Self::default() }
    }

    pub fn radiative(r13: f64, r23: f64, r12: f64) -> Self {
        LossConfig { r13, r23, r12, ..Self::default() }
    }

    pub fn dephasing(g31: f64, g32: f64, g21: f64) -> Self {
        LossConfig { g31, g32, g21, ..Self::default() }
    }

    fn rates(&self) -> [f64; 8] {
        [self.kappa1, self.kappa2, self.r13, self.r23, self.r12, self.g31, self.g32, self.g21]
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates().iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("loss rates must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.rates().iter().all(|r| *r == 0.0)
    }

    /// Symmetric dephasing rate γ_{n,n'}; zero on the diagonal.
    pub fn gamma(&self, a: Level, b: Level) -> f64 {
        use Level::*;
        match (a, b) {
            (Upper, Ground) | (Ground, Upper) => self.g31,
            (Upper, Lower) | (Lower, Upper) => self.g32,
            (Lower, Ground) | (Ground, Lower) => self.g21,
            _ => 0.0,
        }
    }
}

/// Time-dependent factor multiplying a generator term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Phase {
    /// Real coefficient.
    Real = 0,
    /// `i·e^{+iΔ_P t}`
    ProbePlus = 1,
    /// `i·e^{−iΔ_P t}`
    ProbeMinus = 2,
    /// `i·e^{+iΔ_C t}`
    CouplingPlus = 3,
    /// `i·e^{−iΔ_C t}`
    CouplingMinus = 4,
}

/// Values of every [`Phase`] at time `t`, indexed by the discriminant.
#[inline]
pub fn phase_table(t: f64, sys: &SystemConfig) -> [C64; 5] {
    let i = C64::new(0.0, 1.0);
    let p = C64::from_polar(1.0, sys.delta_p * t);
    let c = C64::from_polar(1.0, sys.delta_c * t);
    [C64::new(1.0, 0.0), i * p, i * p.conj(), i * c, i * c.conj()]
}

/// Visit every contribution `coef · phase(t) · p[src_a, src_b]` to `∂_t p[a, b]`.
///
/// The self-coupling (all decay of the element itself) is reported once as
/// a `Phase::Real` term with `src = (a, b)`.
pub fn for_each_term<F>(trunc: Truncation, sys: &SystemConfig, loss: &LossConfig, a: usize, b: usize, mut f: F)
where
    F: FnMut(usize, usize, f64, Phase),
{
    use Level::*;
    let ia = trunc.unflatten_unchecked(a);
    let ib = trunc.unflatten_unchecked(b);
    let (n, k, m) = (ia.level, ia.k, ia.m);
    let (n2, k2, m2) = (ib.level, ib.k, ib.m);
    let at = |l: Level, k: usize, m: usize| trunc.flatten_unchecked(l, k, m);
    let sqrt = |x: usize| (x as f64).sqrt();
    let g1 = sys.omega1 * std::f64::consts::FRAC_1_SQRT_2;
    let g2 = sys.omega2 * std::f64::consts::FRAC_1_SQRT_2;

    // 1↔3 driven by field 1, left index
    if g1 != 0.0 {
        if n == Ground && k >= 1 {
            f(at(Upper, k - 1, m), b, g1 * sqrt(k), Phase::ProbePlus);
        }
        if n == Upper && k < trunc.k_max {
            f(at(Ground, k + 1, m), b, g1 * sqrt(k + 1), Phase::ProbeMinus);
        }
        // right index
        if n2 == Ground && k2 >= 1 {
            f(a, at(Upper, k2 - 1, m2), -g1 * sqrt(k2), Phase::ProbeMinus);
        }
        if n2 == Upper && k2 < trunc.k_max {
            f(a, at(Ground, k2 + 1, m2), -g1 * sqrt(k2 + 1), Phase::ProbePlus);
        }
    }

    // 2↔3 driven by field 2
    if g2 != 0.0 {
        if n == Lower && m >= 1 {
            f(at(Upper, k, m - 1), b, g2 * sqrt(m), Phase::CouplingPlus);
        }
        if n == Upper && m < trunc.m_max {
            f(at(Lower, k, m + 1), b, g2 * sqrt(m + 1), Phase::CouplingMinus);
        }
        if n2 == Lower && m2 >= 1 {
            f(a, at(Upper, k2, m2 - 1), -g2 * sqrt(m2), Phase::CouplingMinus);
        }
        if n2 == Upper && m2 < trunc.m_max {
            f(a, at(Lower, k2, m2 + 1), -g2 * sqrt(m2 + 1), Phase::CouplingPlus);
        }
    }

    // cavity: feeding from one photon more on both sides
    if loss.kappa1 != 0.0 && k < trunc.k_max && k2 < trunc.k_max {
        f(at(n, k + 1, m), at(n2, k2 + 1, m2), loss.kappa1 * sqrt((k + 1) * (k2 + 1)), Phase::Real);
    }
    if loss.kappa2 != 0.0 && m < trunc.m_max && m2 < trunc.m_max {
        f(at(n, k, m + 1), at(n2, k2, m2 + 1), loss.kappa2 * sqrt((m + 1) * (m2 + 1)), Phase::Real);
    }

    // radiative feeding of the lower level of each channel
    if n == n2 {
        let from = |l: Level| (at(l, k, m), at(l, k2, m2));
        match n {
            Ground => {
                if loss.r13 != 0.0 {
                    let (sa, sb) = from(Upper);
                    f(sa, sb, loss.r13, Phase::Real);
                }
                if loss.r12 != 0.0 {
                    let (sa, sb) = from(Lower);
                    f(sa, sb, loss.r12, Phase::Real);
                }
            }
            Lower => {
                if loss.r23 != 0.0 {
                    let (sa, sb) = from(Upper);
                    f(sa, sb, loss.r23, Phase::Real);
                }
            }
            Upper => {}
        }
    }

    let decay = self_rate(loss, n, k, m, n2, k2, m2);
    if decay != 0.0 {
        f(a, b, decay, Phase::Real);
    }
}

/// Coefficient of `p[a, b]` in its own derivative (≤ 0).
fn self_rate(loss: &LossConfig, n: Level, k: usize, m: usize, n2: Level, k2: usize, m2: usize) -> f64 {
    let cavity = 0.5 * loss.kappa1 * (k + k2) as f64 + 0.5 * loss.kappa2 * (m + m2) as f64;
    let dephasing = if n != n2 { loss.gamma(n, n2) } else { 0.0 };
    let upper = f64::from(u8::from(n == Level::Upper) + u8::from(n2 == Level::Upper));
    let lower = f64::from(u8::from(n == Level::Lower) + u8::from(n2 == Level::Lower));
    let radiative = 0.5 * (loss.r13 + loss.r23) * upper + 0.5 * loss.r12 * lower;
    -(cavity + dephasing + radiative)
}

/// `∂_t p` evaluated densely, element by element.
pub fn derivative(p: &EnvelopeDensityMatrix, t: f64, sys: &SystemConfig, loss: &LossConfig) -> Array2<C64> {
    let trunc = p.truncation();
    let d = trunc.dim();
    let phases = phase_table(t, sys);
    let src = p.entries();
    let mut out = Array2::<C64>::zeros((d, d));
    out.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(a, mut row)| {
        for b in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for_each_term(trunc, sys, loss, a, b, |sa, sb, coef, phase| {
                acc += phases[phase as usize] * coef * src[[sa, sb]];
            });
            row[b] = acc;
        }
    });
    out
}

/// Sparse form of the generator restricted to a set of elements closed
/// under it, acting on a compact vector of those elements.
#[derive(Debug, Clone)]
pub struct CompiledGenerator {
    /// Dense `(a, b)` of each compact slot.
    elements: Vec<(u32, u32)>,
    diag: Vec<f64>,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    coefs: Vec<f64>,
    phases: Vec<u8>,
    sys: SystemConfig,
}

impl CompiledGenerator {
    /// Panics if a term reaches outside `elements`, which would mean the set
    /// is not closed under the generator.
    pub fn new(trunc: Truncation, sys: &SystemConfig, loss: &LossConfig, elements: Vec<(u32, u32)>) -> Self {
        let d = trunc.dim() as u64;
        let slot: std::collections::HashMap<u64, u32> =
            elements.iter().enumerate().map(|(i, &(a, b))| (a as u64 * d + b as u64, i as u32)).collect();
        let mut diag = vec![0.0; elements.len()];
        let mut row_ptr = Vec::with_capacity(elements.len() + 1);
        let mut cols = Vec::new();
        let mut coefs = Vec::new();
        let mut phases = Vec::new();
        row_ptr.push(0);
        for (i, &(a, b)) in elements.iter().enumerate() {
            for_each_term(trunc, sys, loss, a as usize, b as usize, |sa, sb, coef, phase| {
                if sa == a as usize && sb == b as usize && phase == Phase::Real {
                    diag[i] += coef;
                    return;
                }
                let col =
                    *slot.get(&(sa as u64 * d + sb as u64)).expect("element set is not closed under the generator");
                cols.push(col);
                coefs.push(coef);
                phases.push(phase as u8);
            });
            row_ptr.push(cols.len() as u32);
        }
        CompiledGenerator { elements, diag, row_ptr, cols, coefs, phases, sys: *sys }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[(u32, u32)] {
        &self.elements
    }

    pub fn nonzeros(&self) -> usize {
        self.cols.len() + self.diag.len()
    }

    /// `out = G(t) · y`.
    pub fn apply(&self, t: f64, y: &[C64], out: &mut [C64]) {
        let table = phase_table(t, &self.sys);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = y[i] * self.diag[i];
            let (lo, hi) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
            for j in lo..hi {
                acc += table[self.phases[j] as usize] * (self.coefs[j] * y[self.cols[j] as usize]);
            }
            *o = acc;
        }
    }

    pub fn gather(&self, p: &Array2<C64>) -> Vec<C64> {
        self.elements.iter().map(|&(a, b)| p[[a as usize, b as usize]]).collect()
    }

    pub fn scatter(&self, y: &[C64], p: &mut Array2<C64>) {
        for (&(a, b), v) in self.elements.iter().zip(y) {
            p[[a as usize, b as usize]] = *v;
        }
    }
}

/// Outcome of comparing [`derivative`] with the generic Lindblad superoperator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorValidation {
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl GeneratorValidation {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Compare `derivative(p, t)` with the generic superoperator of the oracle.
///
/// Dephasing is excluded from the comparison; see
/// [`crate::oracle::DephasingModel`] for the conventions that reproduce it.
pub fn apply_generator_validation(
    p: &EnvelopeDensityMatrix,
    t: f64,
    sys: &SystemConfig,
    loss: &LossConfig,
) -> Result<GeneratorValidation> {
    let tolerance = 1e-10;
    let loss = LossConfig { g31: 0.0, g32: 0.0, g21: 0.0, ..*loss };
    let trunc = p.truncation();
    let spec = crate::oracle::build_generic(sys, &loss, trunc, crate::oracle::DephasingModel::PairDifference)?;
    let rho = crate::oracle::to_lab_frame(p.entries(), t, &spec.energies);
    let lab_rate = spec.superoperator_apply(&rho)?;
    // p = ρ e^{iωt} ⇒ ṗ = (ρ̇ + iωρ) e^{iωt}
    let d = trunc.dim();
    let mut expected = crate::oracle::frame_transform(&lab_rate, t, &spec.energies);
    for a in 0..d {
        for b in 0..d {
            let w = spec.energies[a] - spec.energies[b];
            expected[[a, b]] += C64::new(0.0, w) * p.entries()[[a, b]];
        }
    }
    let got = derivative(p, t, sys, &loss);
    let max_deviation = got.iter().zip(expected.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let report = GeneratorValidation { max_deviation, tolerance };
    if !report.passed() {
        return Err(Error::Validation(format!(
            "generator deviates from the generic Lindblad form by {max_deviation:e}"
        )));
    }
    Ok(report)
}
