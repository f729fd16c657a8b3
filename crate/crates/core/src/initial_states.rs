//! Initial product states `|M> ⊗ |P> ⊗ |C>` and their envelope density matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_basis::{EnvelopeDensityMatrix, Level, Truncation};
use crate::state::PureState;
use crate::C64;

/// Tail mass above which a truncated field is reported as under-resolved.
pub const TAIL_WARNING: f64 = 1e-6;

/// Declarative description of a single-mode field state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Vacuum,
    Fock {
        n: usize,
    },
    Coherent {
        mean: f64,
        #[serde(default)]
        phase: f64,
    },
    Squeezed {
        mean: f64,
    },
    /// Explicit amplitudes as `[re, im]` pairs, starting at the vacuum.
    Custom {
        amplitudes: Vec<[f64; 2]>,
    },
}

/// Fock amplitudes after truncation and renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitudes {
    pub values: Vec<C64>,
    /// Probability mass discarded above the cutoff, before renormalization.
    pub tail_mass: f64,
}

impl Amplitudes {
    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.values.iter().enumerate().map(|(j, c)| j as f64 * c.norm_sqr()).sum()
    }

    pub fn truncation_warning(&self) -> bool {
        self.tail_mass > TAIL_WARNING
    }
}

/// `ln j!` for `j = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..=n {
        acc += (j as f64).ln();
        out.push(acc);
    }
    out
}

fn check_mean(mean: f64) -> Result<()> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::Config(format!("mean photon number must be finite and >= 0, got {mean}")));
    }
    Ok(())
}

/// Renormalize over the retained entries, given the exact untruncated norm.
fn renormalize(mut values: Vec<C64>, total_mass: f64) -> Result<Amplitudes> {
    let kept: f64 = values.iter().map(|c| c.norm_sqr()).sum();
    if kept <= 0.0 || !kept.is_finite() {
        return Err(Error::Config("field state has no weight inside the cutoff".into()));
    }
    let scale = kept.sqrt().recip();
    values.iter_mut().for_each(|c| *c *= scale);
    Ok(Amplitudes { values, tail_mass: (total_mass - kept).max(0.0) })
}

/// Coherent state `c_j = e^{−|α|²/2} α^j / √(j!)` with `α = √mean · e^{i·phase}`.
pub fn coherent_amplitudes(mean: f64, phase: f64, cutoff: usize) -> Result<Amplitudes> {
    check_mean(mean)?;
    if mean == 0.0 {
        return vacuum(cutoff);
    }
    let lf = ln_factorials(cutoff);
    let ln_abs_alpha = 0.5 * mean.ln();
    let values = (0..=cutoff)
        .map(|j| {
            let ln_mag = -0.5 * mean + j as f64 * ln_abs_alpha - 0.5 * lf[j];
            C64::from_polar(ln_mag.exp(), j as f64 * phase)
        })
        .collect();
    renormalize(values, 1.0)
}

/// Positive root `β ≥ 1` of `(β − 1/β)²/4 = mean`.
pub fn squeezed_beta(mean: f64) -> Result<f64> {
    check_mean(mean)?;
    // β² − 2√N·β − 1 = 0
    let s = mean.sqrt();
    Ok(s + (mean + 1.0).sqrt())
}

/// Squeezed vacuum: only even Fock numbers are populated,
/// `c_{2j} = (−1)^j √(2β/(1+β²)) · √((2j)!)/(2^j j!) · ((1−β²)/(1+β²))^j`.
pub fn squeezed_amplitudes(mean: f64, cutoff: usize) -> Result<Amplitudes> {
    let beta = squeezed_beta(mean)?;
    if mean == 0.0 {
        return vacuum(cutoff);
    }
    let lf = ln_factorials(cutoff);
    let b2 = beta * beta;
    let ratio = (1.0 - b2) / (1.0 + b2);
    let ln_prefactor = 0.5 * (2.0 * beta / (1.0 + b2)).ln();
    let ln_ratio = ratio.abs().ln();
    let mut values = vec![C64::new(0.0, 0.0); cutoff + 1];
    for j in 0..=cutoff / 2 {
        let ln_mag = ln_prefactor + 0.5 * lf[2 * j] - j as f64 * std::f64::consts::LN_2 - lf[j] + j as f64 * ln_ratio;
        // (−1)^j · sign(ratio)^j
        let negative = j % 2 == 1 && ratio > 0.0;
        let mag = ln_mag.exp();
        values[2 * j] = C64::new(if negative { -mag } else { mag }, 0.0);
    }
    renormalize(values, 1.0)
}

fn vacuum(cutoff: usize) -> Result<Amplitudes> {
    let mut values = vec![C64::new(0.0, 0.0); cutoff + 1];
    values[0] = C64::new(1.0, 0.0);
    Ok(Amplitudes { values, tail_mass: 0.0 })
}

impl FieldSpec {
    pub fn coherent(mean: f64) -> Self {
        FieldSpec::Coherent { mean, phase: 0.0 }
    }

    pub fn squeezed(mean: f64) -> Self {
        FieldSpec::Squeezed { mean }
    }

    /// Amplitudes on Fock numbers `0..=cutoff`.
    pub fn amplitudes(&self, cutoff: usize) -> Result<Amplitudes> {
        match self {
            FieldSpec::Vacuum => vacuum(cutoff),
            FieldSpec::Fock { n } => {
                if *n > cutoff {
                    return Err(Error::Config(format!("Fock state |{n}> exceeds cutoff {cutoff}")));
                }
                let mut values = vec![C64::new(0.0, 0.0); cutoff + 1];
                values[*n] = C64::new(1.0, 0.0);
                Ok(Amplitudes { values, tail_mass: 0.0 })
            }
            FieldSpec::Coherent { mean, phase } => coherent_amplitudes(*mean, *phase, cutoff),
            FieldSpec::Squeezed { mean } => squeezed_amplitudes(*mean, cutoff),
            FieldSpec::Custom { amplitudes } => {
                if amplitudes.len() > cutoff + 1 {
                    return Err(Error::Config(format!(
                        "{} custom amplitudes do not fit cutoff {cutoff}",
                        amplitudes.len()
                    )));
                }
                let mut values = vec![C64::new(0.0, 0.0); cutoff + 1];
                for (v, [re, im]) in values.iter_mut().zip(amplitudes) {
                    *v = C64::new(*re, *im);
                }
                let total: f64 = values.iter().map(|c| c.norm_sqr()).sum();
                renormalize(values, total)
            }
        }
    }

    /// Smallest cutoff whose discarded tail is at most `tail`.
    pub fn recommended_cutoff(&self, tail: f64) -> Result<usize> {
        let mut cutoff = match self {
            FieldSpec::Vacuum => return Ok(0),
            FieldSpec::Fock { n } => return Ok(*n),
            FieldSpec::Custom { amplitudes } => return Ok(amplitudes.len().saturating_sub(1)),
            FieldSpec::Coherent { mean, .. } | FieldSpec::Squeezed { mean } => {
                check_mean(*mean)?;
                (mean.ceil() as usize).max(1)
            }
        };
        let fits = |c: usize| -> Result<bool> { Ok(self.amplitudes(c)?.tail_mass <= tail) };
        while !fits(cutoff)? {
            cutoff *= 2;
            if cutoff > 1 << 22 {
                return Err(Error::Numerical("cutoff search did not converge".into()));
            }
        }
        // tail mass decreases with the cutoff: bisect down to the smallest one
        let (mut lo, mut hi) = (0, cutoff);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if fits(mid)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(hi)
    }

    /// Nominal mean photon number of the spec (before truncation).
    pub fn nominal_mean(&self) -> Option<f64> {
        match self {
            FieldSpec::Vacuum => Some(0.0),
            FieldSpec::Fock { n } => Some(*n as f64),
            FieldSpec::Coherent { mean, .. } | FieldSpec::Squeezed { mean } => Some(*mean),
            FieldSpec::Custom { .. } => None,
        }
    }
}

/// Amplitudes `c^M_n` of the initial electronic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronicSpec {
    /// `[re, im]` for levels 1, 2, 3.
    pub amplitudes: [[f64; 2]; 3],
}

impl Default for ElectronicSpec {
    fn default() -> Self {
        ElectronicSpec::ground()
    }
}

impl ElectronicSpec {
    pub fn ground() -> Self {
        ElectronicSpec::level(Level::Ground)
    }

    pub fn level(level: Level) -> Self {
        let mut amplitudes = [[0.0; 2]; 3];
        amplitudes[level.slot()] = [1.0, 0.0];
        ElectronicSpec { amplitudes }
    }

    pub fn values(&self) -> [C64; 3] {
        self.amplitudes.map(|[re, im]| C64::new(re, im))
    }

    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.values().iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("electronic amplitudes have norm² {norm}, expected 1")));
        }
        Ok(())
    }
}

/// Field amplitudes for both modes at the truncation's cutoffs.
pub fn field_amplitudes(f1: &FieldSpec, f2: &FieldSpec, trunc: Truncation) -> Result<(Amplitudes, Amplitudes)> {
    Ok((f1.amplitudes(trunc.k_max)?, f2.amplitudes(trunc.m_max)?))
}

/// Product state vector in storage order.
pub fn initial_vector(e: &ElectronicSpec, f1: &FieldSpec, f2: &FieldSpec, trunc: Truncation) -> Result<Vec<C64>> {
    e.validate()?;
    let (probe, coupling) = field_amplitudes(f1, f2, trunc)?;
    let electronic = e.values();
    let mut psi = Vec::with_capacity(trunc.dim());
    for ce in electronic {
        for cp in &probe.values {
            for cc in &coupling.values {
                psi.push(ce * cp * cc);
            }
        }
    }
    Ok(psi)
}

/// `p(0)[a, b] = ψ_a · conj(ψ_b)` for the product state of the three subsystems.
pub fn build_initial(
    e: &ElectronicSpec,
    f1: &FieldSpec,
    f2: &FieldSpec,
    trunc: Truncation,
) -> Result<EnvelopeDensityMatrix> {
    let psi = initial_vector(e, f1, f2, trunc)?;
    EnvelopeDensityMatrix::pure(trunc, &psi)
}

/// The same product state kept as its state vector.
pub fn build_initial_pure(e: &ElectronicSpec, f1: &FieldSpec, f2: &FieldSpec, trunc: Truncation) -> Result<PureState> {
    PureState::new(trunc, initial_vector(e, f1, f2, trunc)?)
}
