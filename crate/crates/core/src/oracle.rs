//! Brute-force reference propagator on small spaces.
//!
//! Builds the lab-frame Hamiltonian and jump operators as explicit matrices
//! from Kronecker products of single-subsystem operators and integrates
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_L ( L ρ L† − ½ L†L ρ − ½ ρ L†L )
//! ```
//!
//! Nothing here reuses the term assembly of [`crate::master_equation`]; the
//! two meet only through [`frame_transform`].
//!
//! The lab-frame carrier frequencies are `ω₁ = ω₃₁ + Δ_P` and
//! `ω₂ = ω₃₂ + Δ_C`, the sign convention under which the envelope
//! equations carry `e^{+iΔ_P t}` on the `p[(1,k), ·] ← p[(3,k−1), ·]` term.

use ndarray::{s, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve_with, EvolveOptions, TimeGrid};
use crate::fock_basis::{EnvelopeDensityMatrix, Truncation};
use crate::master_equation::{LossConfig, SystemConfig};
use crate::state::StateView;
use crate::C64;

/// Largest dimension the oracle accepts (its superoperator is `D² × D²`).
pub const MAX_DIM: usize = 48;

/// How the pairwise dephasing rates become jump operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DephasingModel {
    /// `L = √γ_{ij} (|i><i| − |j><j|)` for each pair.
    PairDifference,
    /// As `PairDifference` with every γ halved. Reproduces the envelope decay
    /// `−γ_{ij} p_{ij}` of a coherence exactly when the other two electronic
    /// coherences vanish; otherwise each operator also damps the neighbouring
    /// coherences at `γ/4`.
    PairDifferenceHalfRate,
    /// Level projectors `L_n = √c_n |n><n|` with `c_i + c_j = 2γ_{ij}`, which
    /// damp each coherence `(i, j)` at exactly `γ_{ij}` and nothing else.
    LevelProjectors,
}

#[derive(Debug, Clone)]
pub struct GenericLindbladSpec {
    pub truncation: Truncation,
    pub hamiltonian: Array2<C64>,
    /// Jump operators with their rates folded in.
    pub jump_ops: Vec<(String, Array2<C64>)>,
    /// Diagonal of the free Hamiltonian, `E_n + k ω₁ + m ω₂`.
    pub energies: Vec<f64>,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x.norm() == 0.0 {
                continue;
            }
            let mut blk = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            blk.zip_mut_with(b, |o, v| *o = x * v);
        }
    }
    out
}

fn kron3(a: &Array2<C64>, b: &Array2<C64>, cc: &Array2<C64>) -> Array2<C64> {
    kron(&kron(a, b), cc)
}

fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, c(1.0))
}

/// `|i><j|` on the electronic levels, 1-based.
fn sigma(i: usize, j: usize) -> Array2<C64> {
    let mut out = Array2::zeros((3, 3));
    out[[i - 1, j - 1]] = c(1.0);
    out
}

fn annihilation(cutoff: usize) -> Array2<C64> {
    let mut a = Array2::zeros((cutoff + 1, cutoff + 1));
    for n in 1..=cutoff {
        a[[n - 1, n]] = c((n as f64).sqrt());
    }
    a
}

fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}

pub fn build_generic(
    sys: &SystemConfig,
    loss: &LossConfig,
    trunc: Truncation,
    dephasing: DephasingModel,
) -> Result<GenericLindbladSpec> {
    let d = trunc.dim();
    if d > MAX_DIM {
        return Err(Error::Config(format!("oracle refuses dimension {d} > {MAX_DIM}")));
    }
    sys.validate()?;
    loss.validate()?;
    let (ik, im) = (eye(trunc.k_max + 1), eye(trunc.m_max + 1));
    let e3 = eye(3);
    let a1 = annihilation(trunc.k_max);
    let a2 = annihilation(trunc.m_max);
    let num1 = dagger(&a1).dot(&a1);
    let num2 = dagger(&a2).dot(&a2);

    let level_energy = [0.0, sys.omega21, sys.omega31];
    let w1 = sys.omega31 + sys.delta_p;
    let w2 = sys.omega32() + sys.delta_c;

    let mut h = Array2::<C64>::zeros((d, d));
    for (n, e) in level_energy.iter().enumerate() {
        h.scaled_add(c(*e), &kron3(&sigma(n + 1, n + 1), &ik, &im));
    }
    h.scaled_add(c(w1), &kron3(&e3, &num1, &im));
    h.scaled_add(c(w2), &kron3(&e3, &ik, &num2));
    let energies: Vec<f64> = h.diag().iter().map(|x| x.re).collect();

    // −(Ω/√2)(a σ_3j + a† σ_j3) after the rotating-wave approximation
    let g1 = -sys.omega1 / 2f64.sqrt();
    let g2 = -sys.omega2 / 2f64.sqrt();
    let absorb1 = kron3(&sigma(3, 1), &a1, &im);
    let absorb2 = kron3(&sigma(3, 2), &ik, &a2);
    h.scaled_add(c(g1), &absorb1);
    h.scaled_add(c(g1), &dagger(&absorb1));
    h.scaled_add(c(g2), &absorb2);
    h.scaled_add(c(g2), &dagger(&absorb2));

    let mut jump_ops = Vec::new();
    let mut push = |name: &str, rate: f64, op: Array2<C64>| {
        if rate > 0.0 {
            jump_ops.push((name.to_string(), op.mapv(|x| x * rate.sqrt())));
        }
    };
    push("kappa1", loss.kappa1, kron3(&e3, &a1, &im));
    push("kappa2", loss.kappa2, kron3(&e3, &ik, &a2));
    push("r13", loss.r13, kron3(&sigma(1, 3), &ik, &im));
    push("r23", loss.r23, kron3(&sigma(2, 3), &ik, &im));
    push("r12", loss.r12, kron3(&sigma(1, 2), &ik, &im));

    let pairs = [("g31", 3, 1, loss.g31), ("g32", 3, 2, loss.g32), ("g21", 2, 1, loss.g21)];
    match dephasing {
        DephasingModel::PairDifference | DephasingModel::PairDifferenceHalfRate => {
            let scale = if dephasing == DephasingModel::PairDifference { 1.0 } else { 0.5 };
            for (name, i, j, g) in pairs {
                let mut op = sigma(i, i);
                op.scaled_add(c(-1.0), &sigma(j, j));
                push(name, scale * g, kron3(&op, &ik, &im));
            }
        }
        DephasingModel::LevelProjectors => {
            let rates =
                [loss.g31 + loss.g21 - loss.g32, loss.g32 + loss.g21 - loss.g31, loss.g31 + loss.g32 - loss.g21];
            if rates.iter().any(|r| *r < -1e-15) {
                return Err(Error::Config(format!(
                    "dephasing rates {:?} cannot be written with level projectors",
                    (loss.g31, loss.g32, loss.g21)
                )));
            }
            for (n, r) in rates.iter().enumerate() {
                push(&format!("proj{}", n + 1), r.max(0.0), kron3(&sigma(n + 1, n + 1), &ik, &im));
            }
        }
    }

    Ok(GenericLindbladSpec { truncation: trunc, hamiltonian: h, jump_ops, energies })
}

/// Nonzero entries of a matrix, used to keep the products cheap.
struct Sparse(Vec<(usize, usize, C64)>);

impl Sparse {
    fn from_dense(m: &Array2<C64>) -> Self {
        Sparse(m.indexed_iter().filter(|(_, v)| v.norm() != 0.0).map(|((i, j), v)| (i, j, *v)).collect())
    }

    /// `out += alpha · S · x`
    fn left_mul_add(&self, alpha: C64, x: &Array2<C64>, out: &mut Array2<C64>) {
        for &(i, j, v) in &self.0 {
            let f = alpha * v;
            let src = x.row(j);
            out.row_mut(i).zip_mut_with(&src, |o, s| *o += f * s);
        }
    }

    /// `out += alpha · x · S†`
    fn right_mul_dagger_add(&self, alpha: C64, x: &Array2<C64>, out: &mut Array2<C64>) {
        for &(i, j, v) in &self.0 {
            let f = alpha * v.conj();
            let src = x.column(j);
            out.column_mut(i).zip_mut_with(&src, |o, s| *o += f * s);
        }
    }
}

/// Right-hand side in operator form: `−i(H_eff ρ − ρ H_eff†) + Σ L ρ L†`.
struct LabGenerator {
    h_eff: Sparse,
    jumps: Vec<Sparse>,
}

impl LabGenerator {
    fn new(spec: &GenericLindbladSpec) -> Self {
        let mut h_eff = spec.hamiltonian.clone();
        for (_, l) in &spec.jump_ops {
            h_eff.scaled_add(C64::new(0.0, -0.5), &dagger(l).dot(l));
        }
        LabGenerator {
            h_eff: Sparse::from_dense(&h_eff),
            jumps: spec.jump_ops.iter().map(|(_, l)| Sparse::from_dense(l)).collect(),
        }
    }

    fn apply(&self, rho: &Array2<C64>, out: &mut Array2<C64>) {
        out.fill(c(0.0));
        let mi = C64::new(0.0, -1.0);
        self.h_eff.left_mul_add(mi, rho, out);
        self.h_eff.right_mul_dagger_add(-mi, rho, out);
        let mut tmp = Array2::zeros(rho.dim());
        for l in &self.jumps {
            tmp.fill(c(0.0));
            l.left_mul_add(c(1.0), rho, &mut tmp);
            l.right_mul_dagger_add(c(1.0), &tmp, out);
        }
    }
}

impl GenericLindbladSpec {
    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }

    /// Dense Liouvillian acting on row-major `vec(ρ)`, using
    /// `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
    pub fn superoperator(&self) -> Array2<C64> {
        let d = self.dim();
        let id = eye(d);
        let i = C64::new(0.0, 1.0);
        let mut s = kron(&self.hamiltonian, &id).mapv(|x| -i * x);
        s.scaled_add(i, &kron(&id, &self.hamiltonian.t().to_owned()));
        for (_, l) in &self.jump_ops {
            let ldl = dagger(l).dot(l);
            s += &kron(l, &l.mapv(|x| x.conj()));
            s.scaled_add(c(-0.5), &kron(&ldl, &id));
            s.scaled_add(c(-0.5), &kron(&id, &ldl.t().to_owned()));
        }
        s
    }

    /// `L(ρ)` through the dense superoperator.
    pub fn superoperator_apply(&self, rho: &Array2<C64>) -> Result<Array2<C64>> {
        let d = self.dim();
        if rho.dim() != (d, d) {
            return Err(Error::Config("density matrix shape mismatch".into()));
        }
        let v = ndarray::Array1::from_iter(rho.iter().copied());
        let out = self.superoperator().dot(&v);
        Ok(Array2::from_shape_vec((d, d), out.to_vec()).expect("shape"))
    }

    /// `L(ρ)` in operator form.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(rho.dim());
        LabGenerator::new(self).apply(rho, &mut out);
        out
    }
}

/// Lab-frame trajectory sample.
#[derive(Debug, Clone)]
pub struct LabSample {
    pub time: f64,
    pub rho: Array2<C64>,
}

/// Fixed-step RK4 of the lab-frame master equation from `t0`. Records the
/// initial state and every `record_every`-th step.
pub fn evolve_generic(
    spec: &GenericLindbladSpec,
    rho0: &Array2<C64>,
    t0: f64,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<Vec<LabSample>> {
    let d = spec.dim();
    if rho0.dim() != (d, d) {
        return Err(Error::Config("initial density matrix shape mismatch".into()));
    }
    if !(dt > 0.0) || record_every == 0 {
        return Err(Error::Config("dt must be positive and record_every >= 1".into()));
    }
    let gen = LabGenerator::new(spec);
    let mut rho = rho0.clone();
    let mut out = vec![LabSample { time: t0, rho: rho.clone() }];
    let (mut k1, mut k2, mut k3, mut k4) =
        (Array2::zeros((d, d)), Array2::zeros((d, d)), Array2::zeros((d, d)), Array2::zeros((d, d)));
    for step in 1..=steps {
        gen.apply(&rho, &mut k1);
        let y = &rho + &(&k1 * c(0.5 * dt));
        gen.apply(&y, &mut k2);
        let y = &rho + &(&k2 * c(0.5 * dt));
        gen.apply(&y, &mut k3);
        let y = &rho + &(&k3 * c(dt));
        gen.apply(&y, &mut k4);
        let w = dt / 6.0;
        rho.zip_mut_with(&k1, |r, k| *r += k * w);
        rho.zip_mut_with(&k2, |r, k| *r += k * (2.0 * w));
        rho.zip_mut_with(&k3, |r, k| *r += k * (2.0 * w));
        rho.zip_mut_with(&k4, |r, k| *r += k * w);
        if step % record_every == 0 {
            out.push(LabSample { time: t0 + step as f64 * dt, rho: rho.clone() });
        }
    }
    Ok(out)
}

/// Envelope `p[a,b] = ρ[a,b] · e^{+i(E_a − E_b)t}`.
pub fn frame_transform(rho_lab: &Array2<C64>, t: f64, energies: &[f64]) -> Array2<C64> {
    Array2::from_shape_fn(rho_lab.dim(), |(a, b)| {
        rho_lab[[a, b]] * C64::from_polar(1.0, (energies[a] - energies[b]) * t)
    })
}

/// Inverse of [`frame_transform`].
pub fn to_lab_frame(p: &Array2<C64>, t: f64, energies: &[f64]) -> Array2<C64> {
    frame_transform(p, -t, energies)
}

/// Deviation between the envelope propagator and the oracle at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossSample {
    pub time: f64,
    pub max_deviation: f64,
}

/// Propagate `p0` with both [`crate::evolution`] and [`evolve_generic`] for
/// `steps` RK4 steps of `dt` and compare elementwise every `compare_every` steps.
pub fn cross_validate(
    p0: &EnvelopeDensityMatrix,
    sys: &SystemConfig,
    loss: &LossConfig,
    model: DephasingModel,
    dt: f64,
    steps: usize,
    compare_every: usize,
) -> Result<Vec<CrossSample>> {
    let trunc = p0.truncation();
    let spec = build_generic(sys, loss, trunc, model)?;
    let rho0 = to_lab_frame(p0.entries(), p0.time(), &spec.energies);
    let lab = evolve_generic(&spec, &rho0, p0.time(), dt, steps, compare_every)?;
    let chunk = TimeGrid::new(compare_every as f64 * dt, dt, compare_every)?;
    let mut p = p0.clone();
    let mut out = Vec::with_capacity(lab.len().saturating_sub(1));
    for sample in lab.iter().skip(1) {
        let run = evolve_with(&p, sys, loss, &chunk, &[], EvolveOptions { full_state: true })?;
        p = run.final_state.to_dense(trunc.dim())?;
        let envelope = frame_transform(&sample.rho, sample.time, &spec.energies);
        let max_deviation = (p.entries() - &envelope).iter().map(|v| v.norm()).fold(0.0, f64::max);
        out.push(CrossSample { time: sample.time, max_deviation });
    }
    Ok(out)
}
