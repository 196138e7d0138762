//! Pure and mixed states, their construction and analysis.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::hamiltonians::{h_tau_frame, ModelFrequencies};
use crate::operators::{c, check_headroom, hermitian_defect, CMatrix, CVector, TensorSpace, C64, CAVITY, QUBIT};

/// Accepted deviation of a pure state's norm or a density matrix's trace from 1.
pub const NORM_TOL: f64 = 1e-8;

/// Most negative eigenvalue tolerated in a density matrix.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Largest probability mass allowed in the top Fock levels of a trusted state.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Number of top Fock levels counted as the truncation tail.
pub const TAIL_LEVELS: usize = 4;

/// Largest geometric tail `e^{−dim·ℏω/kT}` accepted for a truncated thermal state.
pub const THERMAL_TAIL_LIMIT: f64 = 1e-9;

/// Smallest measurement probability for which a collapse is defined.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-12;

/// Qubit basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitLevel {
    #[serde(rename = "g")]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl QubitLevel {
    pub fn index(self) -> usize {
        match self {
            QubitLevel::Ground => 0,
            QubitLevel::Excited => 1,
        }
    }
}

impl fmt::Display for QubitLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitLevel::Ground => "g",
            QubitLevel::Excited => "e",
        })
    }
}

impl FromStr for QubitLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(QubitLevel::Ground),
            "e" => Ok(QubitLevel::Excited),
            other => Err(Error::Domain(format!("qubit level must be `g` or `e`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A normalized state over a labelled tensor space.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    space: TensorSpace,
    kind: StateKind,
    tail_population: f64,
    truncation_loss: f64,
}

fn is_bosonic(label: &str) -> bool {
    label != QUBIT
}

impl QuantumState {
    /// A pure state; the norm must already be 1 within [`NORM_TOL`].
    pub fn pure(space: TensorSpace, psi: CVector) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: psi.len() });
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("state norm² is {norm:.12}, expected 1")));
        }
        Ok(Self::unchecked(space, StateKind::Pure(psi), 0.0))
    }

    /// A pure state rescaled to unit norm.
    pub fn normalized(space: TensorSpace, psi: CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Self::pure(space, psi.unscale(norm))
    }

    /// A density matrix: unit trace, Hermitian and positive within tolerance.
    pub fn mixed(space: TensorSpace, rho: CMatrix) -> Result<Self> {
        let n = space.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho.nrows() });
        }
        if rho.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::Domain(format!("density matrix trace is {trace}, expected 1")));
        }
        let defect = hermitian_defect(&rho);
        if defect > crate::operators::HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let lowest = ((&rho + rho.adjoint()) * c(0.5)).symmetric_eigen().eigenvalues.min();
        if lowest < EIGENVALUE_FLOOR {
            return Err(Error::Domain(format!("density matrix has eigenvalue {lowest:.3e}")));
        }
        Ok(Self::unchecked(space, StateKind::Mixed(rho), 0.0))
    }

    fn unchecked(space: TensorSpace, kind: StateKind, truncation_loss: f64) -> Self {
        let mut s = Self { space, kind, tail_population: 0.0, truncation_loss };
        s.tail_population = s.compute_tail();
        s
    }

    /// Product basis state with the given local indices.
    pub fn basis(space: TensorSpace, local: &[usize]) -> Result<Self> {
        if local.len() != space.factors().len()
            || local.iter().zip(space.factors()).any(|(i, f)| *i >= f.dim)
        {
            return Err(Error::Domain(format!("basis index {local:?} outside {space}")));
        }
        let mut psi = CVector::zeros(space.dim());
        psi[space.flat_index(local)] = c(1.0);
        Self::pure(space, psi)
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn vector(&self) -> Option<&CVector> {
        match &self.kind {
            StateKind::Pure(v) => Some(v),
            StateKind::Mixed(_) => None,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.kind, StateKind::Pure(_))
    }

    pub fn density(&self) -> CMatrix {
        match &self.kind {
            StateKind::Pure(v) => v * v.adjoint(),
            StateKind::Mixed(r) => r.clone(),
        }
    }

    /// Largest probability mass in the top [`TAIL_LEVELS`] levels of any
    /// bosonic factor.
    pub fn tail_population(&self) -> f64 {
        self.tail_population
    }

    /// Probability mass discarded when the state was truncated, before
    /// renormalization.
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn is_trusted(&self) -> bool {
        self.tail_population <= TAIL_LIMIT
    }

    /// Fails with [`Error::Truncation`] when the tail exceeds [`TAIL_LIMIT`].
    pub fn check_tail(&self, what: &str) -> Result<()> {
        if self.tail_population > TAIL_LIMIT {
            return Err(Error::Truncation {
                what: what.to_string(),
                tail: self.tail_population,
                limit: TAIL_LIMIT,
            });
        }
        Ok(())
    }

    /// `⟨ψ|ψ⟩` or `Tr ρ`.
    pub fn norm(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(v) => v.norm_squared(),
            StateKind::Mixed(r) => r.trace().re,
        }
    }

    /// `⟨A⟩` for a matrix on the full space.
    pub fn expectation(&self, op: &CMatrix) -> Result<C64> {
        let n = self.space.dim();
        if op.nrows() != n || op.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: op.nrows() });
        }
        Ok(match &self.kind {
            StateKind::Pure(v) => v.dotc(&(op * v)),
            StateKind::Mixed(r) => (r * op).trace(),
        })
    }

    /// Diagonal of the reduced state on one factor.
    pub fn populations(&self, label: &str) -> Result<Vec<f64>> {
        let pos = self.space.position(label)?;
        let mut out = vec![0.0; self.space.factors()[pos].dim];
        for i in 0..self.space.dim() {
            let p = match &self.kind {
                StateKind::Pure(v) => v[i].norm_sqr(),
                StateKind::Mixed(r) => r[(i, i)].re,
            };
            out[self.space.local_indices(i)[pos]] += p;
        }
        Ok(out)
    }

    /// Partial trace keeping the listed factors, in the space's own order.
    pub fn reduced(&self, keep: &[&str]) -> Result<QuantumState> {
        for label in keep {
            self.space.position(label)?;
        }
        let kept: Vec<(String, usize)> = self
            .space
            .factors()
            .iter()
            .filter(|f| keep.contains(&f.label.as_str()))
            .map(|f| (f.label.clone(), f.dim))
            .collect();
        let traced: Vec<(String, usize)> = self
            .space
            .factors()
            .iter()
            .filter(|f| !keep.contains(&f.label.as_str()))
            .map(|f| (f.label.clone(), f.dim))
            .collect();
        let kept_space = TensorSpace::new(kept.clone())?;
        let k_dim = kept_space.dim();
        let t_dim: usize = traced.iter().map(|(_, d)| d).product();
        let keep_mask: Vec<bool> =
            self.space.factors().iter().map(|f| keep.contains(&f.label.as_str())).collect();
        // Split each flat index into (kept, traced) flat indices.
        let split: Vec<(usize, usize)> = (0..self.space.dim())
            .map(|i| {
                let local = self.space.local_indices(i);
                let (mut k, mut t) = (0usize, 0usize);
                for ((idx, f), kept) in local.iter().zip(self.space.factors()).zip(&keep_mask) {
                    if *kept {
                        k = k * f.dim + idx;
                    } else {
                        t = t * f.dim + idx;
                    }
                }
                (k, t)
            })
            .collect();
        let rho = match &self.kind {
            StateKind::Pure(v) => {
                let mut m = CMatrix::zeros(k_dim, t_dim);
                for (i, (k, t)) in split.iter().enumerate() {
                    m[(*k, *t)] = v[i];
                }
                &m * m.adjoint()
            }
            StateKind::Mixed(r) => {
                let mut out = CMatrix::zeros(k_dim, k_dim);
                for (i, (ki, ti)) in split.iter().enumerate() {
                    for (j, (kj, tj)) in split.iter().enumerate() {
                        if ti == tj {
                            out[(*ki, *kj)] += r[(i, j)];
                        }
                    }
                }
                out
            }
        };
        Ok(Self::unchecked(kept_space, StateKind::Mixed(rho), self.truncation_loss))
    }

    fn compute_tail(&self) -> f64 {
        let mut tail = 0.0f64;
        for f in self.space.factors() {
            if !is_bosonic(&f.label) {
                continue;
            }
            if let Ok(pops) = self.populations(&f.label) {
                let start = f.dim.saturating_sub(TAIL_LEVELS);
                tail = tail.max(pops[start..].iter().sum());
            }
        }
        tail
    }

    /// Pure state as `{label: [[re, im], ...]}`-style JSON value.
    pub fn to_json(&self) -> serde_json::Value {
        let pairs = |it: Vec<C64>| -> Vec<[f64; 2]> { it.into_iter().map(|z| [z.re, z.im]).collect() };
        let factors: Vec<serde_json::Value> = self
            .space
            .factors()
            .iter()
            .map(|f| serde_json::json!({ "label": f.label, "dim": f.dim }))
            .collect();
        match &self.kind {
            StateKind::Pure(v) => serde_json::json!({
                "factors": factors,
                "kind": "pure",
                "amplitudes": pairs(v.iter().copied().collect()),
            }),
            StateKind::Mixed(r) => serde_json::json!({
                "factors": factors,
                "kind": "mixed",
                "rows": (0..r.nrows())
                    .map(|i| pairs(r.row(i).iter().copied().collect()))
                    .collect::<Vec<_>>(),
            }),
        }
    }
}

/// `|⟨a|b⟩|²`, `⟨ψ|ρ|ψ⟩`, or `(Σ√(p_i q_i))²` for two diagonal density
/// matrices. Clamped to `[0, 1]`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.space != b.space {
        return Err(Error::InvalidSpace(format!("fidelity between {} and {}", a.space, b.space)));
    }
    let f = match (&a.kind, &b.kind) {
        (StateKind::Pure(x), StateKind::Pure(y)) => {
            let s = x.dotc(y);
            s.norm_sqr() / (x.dotc(x).re * y.dotc(y).re)
        }
        (StateKind::Pure(x), StateKind::Mixed(r)) | (StateKind::Mixed(r), StateKind::Pure(x)) => {
            x.dotc(&(r * x)).re / x.norm_squared()
        }
        (StateKind::Mixed(r), StateKind::Mixed(s)) => {
            let diagonal = |m: &CMatrix| {
                (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == c(0.0)))
            };
            if !(diagonal(r) && diagonal(s)) {
                return Err(Error::Domain(
                    "fidelity between two non-diagonal mixed states is not supported".into(),
                ));
            }
            let root: f64 = (0..r.nrows()).map(|i| (r[(i, i)].re.max(0.0) * s[(i, i)].re.max(0.0)).sqrt()).sum();
            root * root
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `1 − F`; for two pure states computed as `‖b̂ − ⟨â|b̂⟩â‖²` to avoid
/// cancellation near 1.
pub fn infidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    match (&a.kind, &b.kind) {
        (StateKind::Pure(x), StateKind::Pure(y)) => {
            if a.space != b.space {
                return Err(Error::InvalidSpace(format!("infidelity between {} and {}", a.space, b.space)));
            }
            Ok(pure_infidelity(x, y))
        }
        _ => Ok(1.0 - fidelity(a, b)?),
    }
}

pub(crate) fn pure_infidelity(x: &CVector, y: &CVector) -> f64 {
    let x = x.unscale(x.norm());
    let y = y.unscale(y.norm());
    let overlap = x.dotc(&y);
    (&y - &x * overlap).norm_squared().clamp(0.0, 1.0)
}

/// Normalized coherent state on a `dim`-level cavity.
pub fn coherent(alpha: C64, dim: usize) -> Result<QuantumState> {
    check_headroom(alpha.norm(), dim)?;
    let psi = coherent_amplitudes(alpha, dim);
    let kept = psi.norm_squared();
    let space = TensorSpace::single(CAVITY, dim)?;
    let state = QuantumState::unchecked(space, StateKind::Pure(psi.unscale(kept.sqrt())), (1.0 - kept).max(0.0));
    state.check_tail("coherent state")?;
    Ok(state)
}

fn coherent_amplitudes(alpha: C64, dim: usize) -> CVector {
    let mut psi = CVector::zeros(dim);
    let mut a = c((-0.5 * alpha.norm_sqr()).exp());
    for m in 0..dim {
        if m > 0 {
            a *= alpha / (m as f64).sqrt();
        }
        psi[m] = a;
    }
    psi
}

/// `|α⟩ + sign·|−α⟩`, normalized: the even (`sign = +1`) or odd (`−1`)
/// coherent state.
pub fn parity_coherent(alpha: C64, dim: usize, sign: f64) -> Result<QuantumState> {
    check_headroom(alpha.norm(), dim)?;
    let psi = coherent_amplitudes(alpha, dim) + coherent_amplitudes(-alpha, dim) * c(sign);
    let space = TensorSpace::single(CAVITY, dim)?;
    let state = QuantumState::normalized(space, psi)?;
    state.check_tail("parity coherent state")?;
    Ok(state)
}

/// `|±⟩ = (|g⟩ ± |e⟩)/√2`.
pub fn plus_minus(sign: f64) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![c(s), c(sign * s)])
}

/// `(|α⟩|+⟩ + |−α⟩|−⟩)/√2` on (qubit, cavity).
pub fn cat_target(alpha: C64, dim: usize) -> Result<QuantumState> {
    check_headroom(alpha.norm(), dim)?;
    let space = TensorSpace::qubit_cavity(dim)?;
    let psi = plus_minus(1.0).kronecker(&coherent_amplitudes(alpha, dim))
        + plus_minus(-1.0).kronecker(&coherent_amplitudes(-alpha, dim));
    let state = QuantumState::normalized(space, psi)?;
    state.check_tail("cat state")?;
    Ok(state)
}

/// Result of a dynamical preparation under the strong-drive Hamiltonian.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Evolved qubit–cavity state.
    pub joint: QuantumState,
    /// Reduced cavity state.
    pub cavity: QuantumState,
    /// Analytic target on the joint space.
    pub target: QuantumState,
    pub alpha: C64,
    pub infidelity: f64,
}

fn prepare(omega_rabi_c: f64, t: f64, dim: usize, initial: CVector, target: QuantumState) -> Result<Prepared> {
    let alpha = C64::new(0.0, -omega_rabi_c * t);
    check_headroom(alpha.norm(), dim)?;
    let space = TensorSpace::qubit_cavity(dim)?;
    let freqs = ModelFrequencies::resonant(1.0, omega_rabi_c, 0.0, 0.0);
    let frame = h_tau_frame(&freqs, &space)?;
    let initial = QuantumState::pure(space, initial)?;
    let joint = dynamics::evolve(&frame.h_eff, &initial, t)?;
    joint.check_tail("prepared state")?;
    let cavity = joint.reduced(&[CAVITY])?;
    let infidelity = infidelity(&target, &joint)?;
    Ok(Prepared { joint, cavity, target, alpha, infidelity })
}

/// Evolves `|+⟩|0⟩` for time `t` under `ℏΩ_c(b†+b)τ_z`; the cavity ends in
/// `|α⟩` with `α = −iΩ_c t` and the qubit stays in `|+⟩`.
pub fn prepare_coherent_dynamically(omega_rabi_c: f64, t: f64, dim: usize) -> Result<Prepared> {
    let alpha = C64::new(0.0, -omega_rabi_c * t);
    check_headroom(alpha.norm(), dim)?;
    let vacuum = coherent_amplitudes(c(0.0), dim);
    let initial = plus_minus(1.0).kronecker(&vacuum);
    let space = TensorSpace::qubit_cavity(dim)?;
    let target = QuantumState::normalized(space, plus_minus(1.0).kronecker(&coherent_amplitudes(alpha, dim)))?;
    prepare(omega_rabi_c, t, dim, initial, target)
}

/// Evolves `|g⟩|0⟩` for time `t` under `ℏΩ_c(b†+b)τ_z`, producing the cat
/// state `(|α⟩|+⟩ + |−α⟩|−⟩)/√2`.
pub fn prepare_cat(omega_rabi_c: f64, t: f64, dim: usize) -> Result<Prepared> {
    let alpha = C64::new(0.0, -omega_rabi_c * t);
    let space = TensorSpace::qubit_cavity(dim)?;
    let initial = QuantumState::basis(space, &[0, 0])?.vector().cloned().unwrap_or_default();
    prepare(omega_rabi_c, t, dim, initial, cat_target(alpha, dim)?)
}

/// Projects the qubit of a pure (qubit, cavity) state onto `outcome`;
/// returns the normalized cavity state and the outcome probability.
pub fn measure_qubit(state: &QuantumState, outcome: QubitLevel) -> Result<(QuantumState, f64)> {
    let f = state.space().factors();
    if f.len() != 2 || f[0].label != QUBIT || f[1].label != CAVITY || f[0].dim != 2 {
        return Err(Error::InvalidSpace(format!("measurement needs (qubit, cavity), got {}", state.space())));
    }
    let psi = state
        .vector()
        .ok_or_else(|| Error::Domain("qubit measurement needs a pure joint state".into()))?;
    let n = f[1].dim;
    let branch = psi.rows(outcome.index() * n, n).into_owned();
    let p = branch.norm_squared() / psi.norm_squared();
    if p < MIN_OUTCOME_PROBABILITY {
        return Err(Error::ZeroProbability(p));
    }
    let mut collapsed = QuantumState::normalized(TensorSpace::single(CAVITY, n)?, branch)?;
    collapsed.truncation_loss = state.truncation_loss;
    Ok((collapsed, p))
}

/// Thermal state `Σ (1−q) q^m |m⟩⟨m|`, `q = e^{−ℏω/kT}`, truncated to `dim`
/// levels and renormalized.
pub fn thermal(omega_c: f64, temperature: f64, dim: usize) -> Result<QuantumState> {
    if !(omega_c > 0.0 && temperature > 0.0) {
        return Err(Error::Domain(format!(
            "thermal state needs omega_c > 0 and T > 0, got {omega_c} and {temperature}"
        )));
    }
    let x = HBAR * omega_c / (BOLTZMANN * temperature);
    let tail = (-(dim as f64) * x).exp();
    if tail > THERMAL_TAIL_LIMIT {
        return Err(Error::Truncation {
            what: format!("thermal state at {dim} levels"),
            tail,
            limit: THERMAL_TAIL_LIMIT,
        });
    }
    let one_minus_q = -(-x).exp_m1();
    let kept = -(-(dim as f64) * x).exp_m1();
    let weights = CVector::from_fn(dim, |m, _| c(one_minus_q * (-(m as f64) * x).exp() / kept));
    let space = TensorSpace::single(CAVITY, dim)?;
    let state = QuantumState::unchecked(space, StateKind::Mixed(CMatrix::from_diagonal(&weights)), tail);
    state.check_tail("thermal state")?;
    Ok(state)
}

/// Photon statistics of the cavity factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub photon_distribution: Vec<f64>,
    /// `Σ (−1)^m p_m`.
    pub parity: f64,
    pub mean_n: f64,
    /// `Tr ρ_c²` of the reduced cavity state.
    pub purity: f64,
    pub tail_population: f64,
}

pub fn analyze(state: &QuantumState) -> Result<Analysis> {
    let dist = state.populations(CAVITY)?;
    let parity = dist.iter().enumerate().map(|(m, p)| if m % 2 == 0 { *p } else { -*p }).sum();
    let mean_n = dist.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
    let purity = if state.space().factors().len() == 1 && state.is_pure() {
        1.0
    } else {
        let rho = state.reduced(&[CAVITY])?.density();
        (&rho * &rho).trace().re
    };
    Ok(Analysis {
        photon_distribution: dist,
        parity,
        mean_n,
        purity,
        tail_population: state.tail_population(),
    })
}

/// CSV with header `m,p_m`.
pub fn write_distribution_csv<W: Write>(dist: &[f64], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["m", "p_m"])?;
    for (m, p) in dist.iter().enumerate() {
        w.write_record([m.to_string(), format!("{p:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Uniform phase-space grid in quadrature coordinates `β = (x + ip)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub resolution: usize,
}

impl WignerSpec {
    /// Square window covering `|β| ≤ radius`.
    pub fn covering(radius: f64, resolution: usize) -> Self {
        let half = std::f64::consts::SQRT_2 * radius;
        Self { x_range: (-half, half), p_range: (-half, half), resolution }
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![range.0];
        }
        (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect()
    }
}

/// Wigner function samples; `values[i * ps.len() + j]` is `W(xs[i], ps[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ps.len() + j]
    }

    /// Trapezoidal `∫∫ W dx dp`.
    pub fn integral(&self) -> f64 {
        let weights = |axis: &[f64]| -> Vec<f64> {
            let n = axis.len();
            (0..n)
                .map(|k| {
                    let left = if k > 0 { axis[k] - axis[k - 1] } else { 0.0 };
                    let right = if k + 1 < n { axis[k + 1] - axis[k] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect()
        };
        let (wx, wp) = (weights(&self.xs), weights(&self.ps));
        let mut total = 0.0;
        for (i, a) in wx.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                total += a * b * self.at(i, j);
            }
        }
        total
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `x,p,W`, `x` varying slowest.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["x", "p", "W"])?;
        for (i, x) in self.xs.iter().enumerate() {
            for (j, p) in self.ps.iter().enumerate() {
                w.write_record([format!("{x:.16e}"), format!("{p:.16e}"), format!("{:.16e}", self.at(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `⟨n|D(γ)|m⟩` for `n, m < dim` from the associated-Laguerre closed form,
/// with the prefactor evaluated in logarithms.
pub fn displacement_elements(gamma: C64, dim: usize) -> CMatrix {
    let x = gamma.norm_sqr();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..dim).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_abs = gamma.norm().ln();
    let arg = gamma.arg();
    let mut out = CMatrix::zeros(dim, dim);
    for d in 0..dim {
        // L_k^{(d)}(x) for k = 0..dim−d by the three-term recurrence.
        let alpha = d as f64;
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        for k in 0..dim - d {
            if k > 0 {
                let kf = (k - 1) as f64;
                let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
            }
            let (lo, hi) = (k, k + d);
            let magnitude = if d == 0 {
                (-0.5 * x).exp()
            } else if x == 0.0 {
                0.0
            } else {
                (0.5 * (ln_fact[lo] - ln_fact[hi]) + alpha * ln_abs - 0.5 * x).exp()
            };
            let lower = C64::from_polar(magnitude * cur, alpha * arg);
            out[(hi, lo)] = lower;
            if d > 0 {
                // ⟨lo|D(γ)|hi⟩ = (−γ*)^d … = (−1)^d conj(⟨hi|D(γ)|lo⟩).
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                out[(lo, hi)] = lower.conj() * sign;
            }
        }
    }
    out
}

/// `W(x, p) = (1/π) Tr[ρ_c D(2β) Π]` with `β = (x + ip)/√2`, so that
/// `∫∫ W dx dp = 1` and the vacuum peaks at `1/π`.
pub fn wigner_grid(state: &QuantumState, spec: &WignerSpec) -> Result<WignerGrid> {
    if spec.resolution == 0 {
        return Err(Error::Domain("Wigner grid resolution must be >= 1".into()));
    }
    let rho = if state.space().factors().len() == 1 {
        state.space().position(CAVITY)?;
        state.density()
    } else {
        state.reduced(&[CAVITY])?.density()
    };
    let xs = WignerSpec::axis(spec.x_range, spec.resolution);
    let ps = WignerSpec::axis(spec.p_range, spec.resolution);
    let n = rho.nrows();
    // Row m of ρ scaled by (−1)^m, so that Tr(ρDΠ) = Σ_{m,k} (Πρ)_{mk} D_{km}.
    let mut rho_pi = rho.clone();
    for m in (1..n).step_by(2) {
        rho_pi.row_mut(m).iter_mut().for_each(|z| *z = -*z);
    }
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|x| ps.iter().map(move |p| (*x, *p))).collect();
    let values = points
        .par_iter()
        .map(|(x, p)| {
            let beta = C64::new(*x, *p) * std::f64::consts::FRAC_1_SQRT_2;
            let d = displacement_elements(beta * 2.0, n);
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..n {
                for k in 0..n {
                    acc += rho_pi[(m, k)] * d[(k, m)];
                }
            }
            acc.re / std::f64::consts::PI
        })
        .collect();
    Ok(WignerGrid { xs, ps, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{displacement, fock_ops, max_norm};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cavity_state(psi: Vec<C64>) -> QuantumState {
        let n = psi.len();
        QuantumState::normalized(TensorSpace::single(CAVITY, n).unwrap(), CVector::from_vec(psi)).unwrap()
    }

    #[test]
    fn coherent_basics() {
        let vac = coherent(c(0.0), 16).unwrap();
        assert_eq!(vac.vector().unwrap()[0], c(1.0));
        let alpha = C64::new(0.9, 1.2);
        let s = coherent(alpha, 32).unwrap();
        let a = analyze(&s).unwrap();
        assert!((a.mean_n - alpha.norm_sqr()).abs() < 1e-6);
        assert!((a.parity - (-2.0 * alpha.norm_sqr()).exp()).abs() < 1e-6);
        let f = fock_ops(32).unwrap();
        let psi = s.vector().unwrap();
        let lowered = &f.annihilate * psi;
        for m in 0..(32 - 4) {
            assert!((lowered[m] - alpha * psi[m]).norm() < 1e-6);
        }
        assert!(matches!(coherent(c(3.0), 20), Err(Error::Headroom { .. })));
    }

    #[test]
    fn coherent_matches_displaced_vacuum() {
        let r = C64::new(0.6, -0.8);
        let d = displacement(r, 32).unwrap().value;
        let s = coherent(r, 32).unwrap();
        let col = d.column(0);
        for m in 0..20 {
            assert!((col[m] - s.vector().unwrap()[m]).norm() < 1e-10);
        }
    }

    #[test]
    fn parity_coherent_support() {
        let alpha = C64::new(0.0, -1.7);
        let even = parity_coherent(alpha, 40, 1.0).unwrap();
        let odd = parity_coherent(alpha, 40, -1.0).unwrap();
        for m in 0..40 {
            let (e, o) = (even.vector().unwrap()[m].norm(), odd.vector().unwrap()[m].norm());
            if m % 2 == 1 {
                assert!(e < 1e-8);
            } else {
                assert!(o < 1e-8);
            }
        }
        assert!((analyze(&even).unwrap().parity - 1.0).abs() < 1e-8);
        assert!((analyze(&odd).unwrap().parity + 1.0).abs() < 1e-8);
    }

    #[test]
    fn cat_second_form() {
        let alpha = C64::new(0.0, -1.5);
        let dim = 64;
        let cat = cat_target(alpha, dim).unwrap();
        let a = coherent_amplitudes(alpha, dim);
        let b = coherent_amplitudes(-alpha, dim);
        let g = CVector::from_vec(vec![c(1.0), c(0.0)]);
        let e = CVector::from_vec(vec![c(0.0), c(1.0)]);
        let second = (g.kronecker(&(&a + &b)) + e.kronecker(&(&a - &b))) * c(0.5);
        assert!((cat.vector().unwrap() - second).norm() < 1e-12);
    }

    #[test]
    fn measurement_of_basis_and_cat() {
        let s = QuantumState::basis(TensorSpace::qubit_cavity(8).unwrap(), &[0, 0]).unwrap();
        let (cav, p) = measure_qubit(&s, QubitLevel::Ground).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(cav.vector().unwrap()[0], c(1.0));
        assert!(matches!(measure_qubit(&s, QubitLevel::Excited), Err(Error::ZeroProbability(_))));

        let alpha = C64::new(0.0, 2.0);
        let cat = cat_target(alpha, 64).unwrap();
        let (even, pg) = measure_qubit(&cat, QubitLevel::Ground).unwrap();
        let (_, pe) = measure_qubit(&cat, QubitLevel::Excited).unwrap();
        let overlap = (-2.0 * alpha.norm_sqr()).exp();
        assert!((pg - (1.0 + overlap) / 2.0).abs() < 1e-6);
        assert!((pe - (1.0 - overlap) / 2.0).abs() < 1e-6);
        assert!((pg + pe - 1.0).abs() < 1e-10);
        let v = even.vector().unwrap();
        assert!((1..64).step_by(2).all(|m| v[m].norm() < 1e-8));
    }

    #[test]
    fn thermal_weights() {
        let omega = 2.0 * PI * 1e12;
        let t = 2.2;
        let s = thermal(omega, t, 16).unwrap();
        let p0 = crate::feasibility::thermal_vacuum_probability(omega, t).unwrap();
        assert!((s.density()[(0, 0)].re - p0).abs() < 1e-9);

        let x = 50.0;
        let cold = thermal(x * BOLTZMANN / HBAR, 1.0, 8).unwrap();
        let mut vac = CMatrix::zeros(8, 8);
        vac[(0, 0)] = c(1.0);
        assert!(max_norm(&(cold.density() - vac)) < 1e-21);

        let warm_t = 50.0;
        let s = thermal(omega, warm_t, 48).unwrap();
        let y = HBAR * omega / (BOLTZMANN * warm_t);
        let mean = analyze(&s).unwrap().mean_n;
        assert!((mean - 1.0 / y.exp_m1()).abs() < 1e-8);
        let f = fock_ops(48).unwrap();
        let rho = s.density();
        assert_eq!(&rho * &f.number, &f.number * &rho);
        assert!(matches!(thermal(omega, 500.0, 8), Err(Error::Truncation { .. })));
    }

    #[test]
    fn fidelity_properties() {
        let a = coherent(C64::new(0.5, 0.2), 24).unwrap();
        let b = coherent(C64::new(0.1, -0.4), 24).unwrap();
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
        let mixed = a.reduced(&[CAVITY]).unwrap();
        assert!((fidelity(&mixed, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(infidelity(&a, &a).unwrap() < 1e-30);
        let th = thermal(2.0 * PI * 1e12, 20.0, 24).unwrap();
        assert!(fidelity(&th, &th).unwrap() > 1.0 - 1e-12);
        assert!(fidelity(&mixed, &th).is_err());
    }

    #[test]
    fn reduced_of_product_state() {
        let space = TensorSpace::qubit_cavity(6).unwrap();
        let qubit = plus_minus(1.0);
        let cav = coherent_amplitudes(C64::new(0.3, 0.1), 6);
        let cav = cav.unscale(cav.norm());
        let s = QuantumState::normalized(space, qubit.kronecker(&cav)).unwrap();
        let rq = s.reduced(&[QUBIT]).unwrap().density();
        assert!(max_norm(&(rq - &qubit * qubit.adjoint())) < 1e-15);
        let rc = s.reduced(&[CAVITY]).unwrap();
        let rc2 = rc.reduced(&[CAVITY]).unwrap();
        assert!(max_norm(&(rc.density() - &cav * cav.adjoint())) < 1e-15);
        assert_eq!(rc.density(), rc2.density());
    }

    #[test]
    fn displacement_elements_agree_with_expm() {
        for gamma in [C64::new(0.3, 0.4), C64::new(-1.1, 0.7), C64::new(0.0, 2.0)] {
            let dim = 80;
            let exact = displacement(gamma, dim).unwrap().value;
            let analytic = displacement_elements(gamma, 24);
            for n in 0..24 {
                for m in 0..24 {
                    assert!((exact[(n, m)] - analytic[(n, m)]).norm() < 1e-10, "{gamma} {n} {m}");
                }
            }
        }
    }

    #[test]
    fn displacement_elements_unitary_on_large_window() {
        // Columns of D(γ) restricted to n < dim keep almost all their mass
        // when m is well below dim − |γ|².
        let gamma = C64::new(3.0, -2.0);
        let dim = 90;
        let d = displacement_elements(gamma, dim);
        for m in 0..10 {
            let mass: f64 = d.column(m).iter().map(|z| z.norm_sqr()).sum();
            assert!((mass - 1.0).abs() < 1e-9, "column {m}: {mass}");
        }
    }

    #[test]
    fn wigner_vacuum_fock_and_coherent() {
        let vac = coherent(c(0.0), 16).unwrap();
        let spec = WignerSpec { x_range: (0.0, 0.0), p_range: (0.0, 0.0), resolution: 1 };
        let w = wigner_grid(&vac, &spec).unwrap();
        assert!((w.values[0] - 1.0 / PI).abs() < 1e-6);

        let one = cavity_state(vec![c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!((wigner_grid(&one, &spec).unwrap().values[0] + 1.0 / PI).abs() < 1e-12);

        let alpha = C64::new(1.0, -0.5);
        let s = coherent(alpha, 32).unwrap();
        let spec = WignerSpec { x_range: (-2.0, 3.0), p_range: (-2.5, 1.5), resolution: 9 };
        let w = wigner_grid(&s, &spec).unwrap();
        for (i, x) in w.xs.iter().enumerate() {
            for (j, p) in w.ps.iter().enumerate() {
                let beta = C64::new(*x, *p) * std::f64::consts::FRAC_1_SQRT_2;
                let expect = (-2.0 * (beta - alpha).norm_sqr()).exp() / PI;
                assert!((w.at(i, j) - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn wigner_cat_normalized_and_negative() {
        let alpha = C64::new(0.0, -1.5);
        let cat = cat_target(alpha, 64).unwrap();
        let spec = WignerSpec::covering(alpha.norm() + 4.0, 121);
        let w = wigner_grid(&cat, &spec).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-3);
        let (even, _) = measure_qubit(&cat, QubitLevel::Ground).unwrap();
        let w = wigner_grid(&even, &spec).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-3);
        assert!(w.min() < -0.05);
    }

    #[test]
    fn csv_outputs() {
        let mut buf = Vec::new();
        write_distribution_csv(&[0.75, 0.25], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "m,p_m\n0,7.5000000000000000e-1\n1,2.5000000000000000e-1\n");
        let grid = WignerGrid { xs: vec![0.0], ps: vec![1.0, 2.0], values: vec![0.5, -0.5] };
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,p,W\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rejects_bad_states() {
        let space = TensorSpace::single(CAVITY, 2).unwrap();
        assert!(QuantumState::pure(space.clone(), CVector::from_vec(vec![c(1.0), c(1.0)])).is_err());
        let rho = CMatrix::from_row_slice(2, 2, &[c(1.2), c(0.0), c(0.0), c(-0.2)]);
        assert!(QuantumState::mixed(space, rho).is_err());
        assert!("x".parse::<QubitLevel>().is_err());
        assert_eq!("e".parse::<QubitLevel>().unwrap(), QubitLevel::Excited);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fidelity_bounded_and_symmetric(
            re in proptest::collection::vec(-1.0f64..1.0, 6),
            im in proptest::collection::vec(-1.0f64..1.0, 6),
            re2 in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            prop_assume!(re.iter().any(|x| x.abs() > 1e-3) && re2.iter().any(|x| x.abs() > 1e-3));
            let a = cavity_state(re.iter().zip(&im).map(|(r, i)| C64::new(*r, *i)).collect());
            let b = cavity_state(re2.iter().zip(&im).map(|(r, i)| C64::new(*r, -*i)).collect());
            let f = fidelity(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert_eq!(f, fidelity(&b, &a).unwrap());
            prop_assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
            prop_assert!((infidelity(&a, &b).unwrap() - (1.0 - f)).abs() < 1e-12);
        }

        #[test]
        fn parity_decomposition(re in -2.0f64..2.0, im in -2.0f64..2.0, sign in prop::bool::ANY) {
            prop_assume!(re.abs() + im.abs() > 0.05);
            let s = if sign { 1.0 } else { -1.0 };
            let state = parity_coherent(C64::new(re, im), 48, s).unwrap();
            let v = state.vector().unwrap();
            let wrong = if sign { 1 } else { 0 };
            for m in (wrong..48).step_by(2) {
                prop_assert!(v[m].norm() < 1e-8);
            }
        }
    }
}
