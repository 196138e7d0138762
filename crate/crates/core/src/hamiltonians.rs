//! Hamiltonians of the qubit–cavity(–vibration) model, in Joules.
//!
//! All builders return matrices with ℏ kept explicit; the propagators divide
//! by ℏ once.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::feasibility::FeasibilityReport;
use crate::operators::{
    c, fock_ops, hermitian_defect, qubit_ops, tensor, CMatrix, HermitianEigen, Operator,
    TensorSpace, C64, CAVITY, QUBIT, VIBRATION,
};

/// Hermiticity bound every builder output must meet (relative max-norm).
pub const BUILDER_HERMITIAN_TOL: f64 = 1e-12;

/// Relative frequency mismatch accepted as exact resonance.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Tail bound on the vibration factor for the Lamb-Dicke exponentials.
pub const VIBRATION_TAIL_LIMIT: f64 = 1e-6;

const SPOT_CHECKS: usize = 16;
const HERMITIAN_TOL_TD: f64 = 1e-10;

/// Frequencies and couplings of the model, all angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFrequencies {
    pub omega_a: f64,
    pub omega_c: f64,
    pub omega_l: f64,
    pub nu: f64,
    pub omega_rabi_c: f64,
    pub omega_rabi_c_tilde: f64,
    pub omega_rabi_l: f64,
    pub omega_rabi_l_tilde: f64,
    pub eta_c: f64,
    pub eta_l: f64,
    pub phi_l: f64,
}

impl ModelFrequencies {
    /// Cavity and laser both resonant with the transition.
    pub fn from_report(report: &FeasibilityReport, phi_l: f64) -> Self {
        Self {
            omega_a: report.omega_a,
            omega_c: report.omega_c,
            omega_l: report.omega_c,
            nu: report.nu,
            omega_rabi_c: report.omega_rabi_c,
            omega_rabi_c_tilde: report.omega_rabi_c_tilde,
            omega_rabi_l: report.omega_rabi_l,
            omega_rabi_l_tilde: report.omega_rabi_l_tilde,
            eta_c: report.eta_c,
            eta_l: report.eta_l,
            phi_l,
        }
    }

    /// Resonant model with only the JC and drive couplings set; no
    /// σ_z-coupled terms, no vibration.
    pub fn resonant(omega: f64, omega_rabi_c: f64, omega_rabi_l: f64, phi_l: f64) -> Self {
        Self {
            omega_a: omega,
            omega_c: omega,
            omega_l: omega,
            nu: 0.0,
            omega_rabi_c,
            omega_rabi_c_tilde: 0.0,
            omega_rabi_l,
            omega_rabi_l_tilde: 0.0,
            eta_c: 0.0,
            eta_l: 0.0,
            phi_l,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= RESONANCE_TOL * a.abs().max(b.abs())
    }

    pub fn cavity_resonant(&self) -> bool {
        Self::close(self.omega_a, self.omega_c)
    }

    pub fn laser_resonant(&self) -> bool {
        self.cavity_resonant() && Self::close(self.omega_a, self.omega_l)
    }

    fn require_cavity_resonance(&self) -> Result<()> {
        if !self.cavity_resonant() {
            return Err(Error::OffResonance(format!(
                "the JC model needs omega_a = omega_c, got {:.6e} and {:.6e} rad/s",
                self.omega_a, self.omega_c
            )));
        }
        Ok(())
    }

    fn require_laser_resonance(&self) -> Result<()> {
        self.require_cavity_resonance()?;
        if !self.laser_resonant() {
            return Err(Error::OffResonance(format!(
                "the driven JC model needs omega_l = omega_a, got {:.6e} and {:.6e} rad/s",
                self.omega_l, self.omega_a
            )));
        }
        Ok(())
    }
}

/// `matrix · e^{i(ωt+φ)} + h.c.`
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingTerm {
    pub matrix: CMatrix,
    pub frequency: f64,
    pub phase: f64,
}

impl RotatingTerm {
    pub fn new(matrix: CMatrix, frequency: f64, phase: f64) -> Self {
        Self { matrix, frequency, phase }
    }

    pub fn coefficient(&self, t: f64) -> C64 {
        C64::from_polar(1.0, self.frequency * t + self.phase)
    }
}

/// `H(t) = H_static + Σ_k (c_k(t) M_k + h.c.)`.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    space: TensorSpace,
    static_part: CMatrix,
    terms: Vec<RotatingTerm>,
    max_frequency: f64,
}

impl TimeDependentHamiltonian {
    /// Validates shapes and spot-checks Hermiticity at 16 times spread over
    /// the slowest period.
    pub fn new(
        space: TensorSpace,
        static_part: CMatrix,
        terms: Vec<RotatingTerm>,
        max_frequency: f64,
    ) -> Result<Self> {
        let n = space.dim();
        for m in std::iter::once(&static_part).chain(terms.iter().map(|t| &t.matrix)) {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
            }
        }
        if !(max_frequency.is_finite() && max_frequency >= 0.0) {
            return Err(Error::Domain(format!("max_frequency must be >= 0, got {max_frequency}")));
        }
        let h = Self { space, static_part, terms, max_frequency };
        let slowest = h
            .terms
            .iter()
            .map(|t| t.frequency.abs())
            .filter(|w| *w > 0.0)
            .fold(f64::INFINITY, f64::min);
        let window = if slowest.is_finite() { 2.0 * std::f64::consts::PI / slowest } else { 1.0 };
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        for k in 1..=SPOT_CHECKS {
            let t = window * (k as f64 * golden).fract();
            let defect = hermitian_defect(&h.evaluate_matrix(t));
            if defect > HERMITIAN_TOL_TD {
                return Err(Error::NotHermitian(defect));
            }
        }
        Ok(h)
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn static_part(&self) -> &CMatrix {
        &self.static_part
    }

    pub fn terms(&self) -> &[RotatingTerm] {
        &self.terms
    }

    pub fn max_frequency(&self) -> f64 {
        self.max_frequency
    }

    fn evaluate_matrix(&self, t: f64) -> CMatrix {
        let mut out = self.static_part.clone();
        for term in &self.terms {
            let z = term.coefficient(t);
            out += &term.matrix * z + term.matrix.adjoint() * z.conj();
        }
        out
    }

    pub fn evaluate(&self, t: f64) -> Result<Operator> {
        Operator::hermitian(self.space.clone(), self.evaluate_matrix(t))
    }
}

fn finish(space: &TensorSpace, m: CMatrix) -> Result<Operator> {
    let defect = hermitian_defect(&m);
    if defect > BUILDER_HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Operator::hermitian(space.clone(), m)
}

fn require_factors(space: &TensorSpace, labels: &[&str]) -> Result<()> {
    for label in labels {
        space.position(label)?;
    }
    Ok(())
}

fn require_two_factor(space: &TensorSpace) -> Result<()> {
    let f = space.factors();
    if f.len() != 2 || f[0].label != QUBIT || f[1].label != CAVITY {
        return Err(Error::InvalidSpace(format!("expected (qubit, cavity), got {space}")));
    }
    if f[0].dim != 2 {
        return Err(Error::InvalidSpace(format!("qubit factor must have dimension 2, got {}", f[0].dim)));
    }
    Ok(())
}

/// Cavity quadrature `b† + b` and the qubit operators, embedded in `space`.
struct Embedded {
    x_b: CMatrix,
    create: CMatrix,
    annihilate: CMatrix,
    number: CMatrix,
    sigma_x: CMatrix,
    sigma_z: CMatrix,
    sigma_plus: CMatrix,
    sigma_minus: CMatrix,
}

impl Embedded {
    fn new(space: &TensorSpace) -> Result<Self> {
        let f = fock_ops(space.factor_dim(CAVITY)?)?;
        let q = qubit_ops();
        let on_c = |m: &CMatrix| tensor(space, &[(CAVITY, m)]);
        let on_q = |m: &CMatrix| tensor(space, &[(QUBIT, m)]);
        Ok(Self {
            x_b: on_c(&(&f.create + &f.annihilate))?,
            create: on_c(&f.create)?,
            annihilate: on_c(&f.annihilate)?,
            number: on_c(&f.number)?,
            sigma_x: on_q(&q.sigma_x)?,
            sigma_z: on_q(&q.sigma_z)?,
            sigma_plus: on_q(&q.sigma_plus)?,
            sigma_minus: on_q(&q.sigma_minus)?,
        })
    }
}

fn h0_matrix(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<CMatrix> {
    require_factors(space, &[QUBIT, CAVITY])?;
    let q = qubit_ops();
    let f = fock_ops(space.factor_dim(CAVITY)?)?;
    let mut h = tensor(space, &[(QUBIT, &(q.sigma_z * c(0.5 * HBAR * freqs.omega_a)))])?
        + tensor(space, &[(CAVITY, &(f.number * c(HBAR * freqs.omega_c)))])?;
    if space.has(VIBRATION) {
        let v = fock_ops(space.factor_dim(VIBRATION)?)?;
        let half = CMatrix::identity(v.number.nrows(), v.number.ncols()) * c(0.5);
        h += tensor(space, &[(VIBRATION, &((v.number + half) * c(HBAR * freqs.nu)))])?;
    }
    Ok(h)
}

/// `ℏν(a†a + ½) + (ℏω_a/2)σ_z + ℏω_c b†b`; the vibration term only when the
/// space has a vibration factor.
pub fn h0(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<Operator> {
    finish(space, h0_matrix(freqs, space)?)
}

/// Qubit–cavity coupling without the Lamb-Dicke factor:
/// `ℏΩ_c(b†+b)σ_x + ℏΩ̃_c(b†+b)σ_z` on the (qubit, cavity) space.
fn coupling_two_factor(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<CMatrix> {
    let e = Embedded::new(space)?;
    Ok(&e.x_b * &e.sigma_x * c(HBAR * freqs.omega_rabi_c)
        + &e.x_b * &e.sigma_z * c(HBAR * freqs.omega_rabi_c_tilde))
}

/// `e^{iη(a†+a)} + e^{−iη(a†+a)} = 2cos(η(a†+a))` on an `n_v`-level vibration.
pub fn lamb_dicke_factor(eta: f64, n_v: usize) -> Result<CMatrix> {
    if eta == 0.0 {
        return Ok(CMatrix::identity(n_v, n_v) * c(2.0));
    }
    let v = fock_ops(n_v)?;
    let eig = HermitianEigen::new(&(&v.create + &v.annihilate))?;
    let mut scaled = eig.vectors.clone();
    for (j, l) in eig.values.iter().enumerate() {
        let w = c(2.0 * (eta * l).cos());
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
    }
    Ok(scaled * eig.vectors.adjoint())
}

/// Full Lamb-Dicke model on (qubit, cavity, vibration):
/// `H₀ + [ℏΩ_c(b†+b)σ_x + ℏΩ̃_c(b†+b)σ_z] ⊗ (e^{iη_c(a†+a)} + e^{−iη_c(a†+a)})`.
pub fn h_full_ld(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<Operator> {
    let f = space.factors();
    if f.len() != 3 || f[0].label != QUBIT || f[1].label != CAVITY || f[2].label != VIBRATION {
        return Err(Error::InvalidSpace(format!("expected (qubit, cavity, vibration), got {space}")));
    }
    let n_v = f[2].dim;
    let ld = lamb_dicke_factor(freqs.eta_c, n_v)?;
    let column = ld.column(0);
    let total: f64 = column.iter().map(|z| z.norm_sqr()).sum();
    let tail: f64 = column.iter().skip(n_v.saturating_sub(4)).map(|z| z.norm_sqr()).sum::<f64>() / total;
    if n_v <= 4 || tail > VIBRATION_TAIL_LIMIT {
        return Err(Error::Truncation {
            what: format!("vibration factor, N_v = {n_v}, eta = {:.3e}", freqs.eta_c),
            tail: if n_v <= 4 { 1.0 } else { tail },
            limit: VIBRATION_TAIL_LIMIT,
        });
    }
    let pair = TensorSpace::new([(QUBIT, f[0].dim), (CAVITY, f[1].dim)])?;
    let coupling = coupling_two_factor(freqs, &pair)?;
    finish(space, h0_matrix(freqs, space)? + coupling.kronecker(&ld))
}

/// Vibration-free model on (qubit, cavity):
/// `H₀ + 2ℏΩ_c(b†+b)σ_x + 2ℏΩ̃_c(b†+b)σ_z`.
pub fn h_simplified(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<Operator> {
    require_two_factor(space)?;
    let coupling = coupling_two_factor(freqs, space)?;
    finish(space, h0_matrix(freqs, space)? + coupling * c(2.0))
}

/// Interaction-picture Hamiltonian with respect to `H₀`, with the classical
/// drive terms added when `driven`. Resonance is not required.
pub fn h_interaction(
    freqs: &ModelFrequencies,
    space: &TensorSpace,
    driven: bool,
) -> Result<TimeDependentHamiltonian> {
    require_two_factor(space)?;
    let e = Embedded::new(space)?;
    let g = 2.0 * HBAR * freqs.omega_rabi_c;
    let g_tilde = 2.0 * HBAR * freqs.omega_rabi_c_tilde;
    let mut terms = vec![
        RotatingTerm::new(&e.create * &e.sigma_minus * c(g), freqs.omega_c - freqs.omega_a, 0.0),
        RotatingTerm::new(&e.create * &e.sigma_plus * c(g), freqs.omega_c + freqs.omega_a, 0.0),
        RotatingTerm::new(&e.sigma_z * &e.create * c(g_tilde), freqs.omega_c, 0.0),
    ];
    let mut max_frequency = freqs.omega_a + freqs.omega_c;
    if driven {
        let l = HBAR * freqs.omega_rabi_l;
        let l_tilde = HBAR * freqs.omega_rabi_l_tilde;
        let phi = freqs.phi_l;
        terms.push(RotatingTerm::new(&e.sigma_plus * c(l), freqs.omega_a + freqs.omega_l, phi));
        terms.push(RotatingTerm::new(&e.sigma_plus * c(l), freqs.omega_a - freqs.omega_l, -phi));
        terms.push(RotatingTerm::new(&e.sigma_z * c(l_tilde), freqs.omega_l, phi));
        max_frequency += freqs.omega_l;
    }
    let n = space.dim();
    TimeDependentHamiltonian::new(space.clone(), CMatrix::zeros(n, n), terms, max_frequency)
}

fn jc_matrix(freqs: &ModelFrequencies, e: &Embedded) -> CMatrix {
    (&e.create * &e.sigma_minus + &e.annihilate * &e.sigma_plus) * c(2.0 * HBAR * freqs.omega_rabi_c)
}

/// `2ℏΩ_c(b†σ_− + bσ_+)`; refused off resonance.
pub fn h_jc(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<Operator> {
    freqs.require_cavity_resonance()?;
    require_two_factor(space)?;
    finish(space, jc_matrix(freqs, &Embedded::new(space)?))
}

/// `N̂ = b†b + σ₊σ₋`, conserved by [`h_jc`].
pub fn excitation_number(space: &TensorSpace) -> Result<Operator> {
    require_two_factor(space)?;
    let e = Embedded::new(space)?;
    finish(space, &e.number + &e.sigma_plus * &e.sigma_minus)
}

fn drive_matrix(freqs: &ModelFrequencies, e: &Embedded) -> CMatrix {
    let phase = C64::from_polar(1.0, freqs.phi_l);
    (&e.sigma_minus * phase + &e.sigma_plus * phase.conj()) * c(HBAR * freqs.omega_rabi_l)
}

/// `h_jc + ℏΩ_l(e^{iφ_l}σ_− + e^{−iφ_l}σ_+)`; refused unless cavity and
/// laser are both resonant.
pub fn h_djc(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<Operator> {
    freqs.require_laser_resonance()?;
    require_two_factor(space)?;
    let e = Embedded::new(space)?;
    finish(space, jc_matrix(freqs, &e) + drive_matrix(freqs, &e))
}

/// Qubit operators of the `|±⟩ = (|g⟩ ± |e⟩)/√2` frame, written in the
/// `[|g⟩, |e⟩]` basis.
#[derive(Debug, Clone)]
pub struct TauOps {
    /// `σ_x`.
    pub z: CMatrix,
    /// `(−σ_z − σ_− + σ_+)/2`.
    pub plus: CMatrix,
    /// `(−σ_z + σ_− − σ_+)/2`.
    pub minus: CMatrix,
}

pub fn tau_ops() -> TauOps {
    let q = qubit_ops();
    TauOps {
        z: q.sigma_x.clone(),
        plus: (-&q.sigma_z - &q.sigma_minus + &q.sigma_plus) * c(0.5),
        minus: (-&q.sigma_z + &q.sigma_minus - &q.sigma_plus) * c(0.5),
    }
}

/// Change of qubit basis sending `|−⟩ ↦ |g⟩` and `|+⟩ ↦ |e⟩`, so that the
/// τ operators become the ordinary Pauli matrices.
pub fn plus_minus_rotation() -> CMatrix {
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    CMatrix::from_row_slice(2, 2, &[s, -s, s, s])
}

/// `(R ⊗ I) A (R ⊗ I)†` for an operator on a space with a qubit factor.
pub fn to_plus_minus_basis(op: &Operator) -> Result<Operator> {
    let r = tensor(op.space(), &[(QUBIT, &plus_minus_rotation())])?;
    let m = &r * op.matrix() * r.adjoint();
    if op.is_flagged_hermitian() {
        Operator::hermitian(op.space().clone(), m)
    } else {
        Operator::new(op.space().clone(), m)
    }
}

/// The driven model in the `|±⟩` frame.
#[derive(Debug, Clone)]
pub struct TauFrame {
    /// `ℏΩ_c[b†(τ_z − τ_+ + τ_−) + b(τ_z + τ_+ − τ_−)] + ℏΩ_l τ_z`.
    pub h_djc: Operator,
    /// The same in the frame rotating with `exp(−iΩ_l t τ_z)`.
    pub h_rotating: TimeDependentHamiltonian,
    /// Strong-drive limit `ℏΩ_c(b† + b)τ_z`.
    pub h_eff: Operator,
}

/// Builds the τ-frame Hamiltonians from the τ operators as defined; all three
/// act in the `[|g⟩, |e⟩]` basis. Requires `φ_l = 0`.
pub fn h_tau_frame(freqs: &ModelFrequencies, space: &TensorSpace) -> Result<TauFrame> {
    if freqs.phi_l != 0.0 {
        return Err(Error::Domain(format!(
            "the tau frame is defined for laser phase 0, got {}",
            freqs.phi_l
        )));
    }
    freqs.require_laser_resonance()?;
    require_two_factor(space)?;
    let e = Embedded::new(space)?;
    let tau = tau_ops();
    let on_q = |m: &CMatrix| tensor(space, &[(QUBIT, m)]);
    let (tz, tp, tm) = (on_q(&tau.z)?, on_q(&tau.plus)?, on_q(&tau.minus)?);
    let g = c(HBAR * freqs.omega_rabi_c);

    let eq21 = (&e.create * (&tz - &tp + &tm) + &e.annihilate * (&tz + &tp - &tm)) * g
        + &tz * c(HBAR * freqs.omega_rabi_l);
    let static_part = &e.x_b * &tz * g;
    let rotating = (&e.annihilate * &tp - &e.create * &tp) * g;
    let h_rotating = TimeDependentHamiltonian::new(
        space.clone(),
        static_part.clone(),
        vec![RotatingTerm::new(rotating, 2.0 * freqs.omega_rabi_l, 0.0)],
        2.0 * freqs.omega_rabi_l,
    )?;
    Ok(TauFrame { h_djc: finish(space, eq21)?, h_rotating, h_eff: finish(space, static_part)? })
}

/// `exp(−iΩ_l t τ_z)` on the qubit factor of `space`.
pub fn tau_frame_rotation(omega_rabi_l: f64, t: f64, space: &TensorSpace) -> Result<CMatrix> {
    let q = qubit_ops();
    let theta = omega_rabi_l * t;
    let u = CMatrix::identity(2, 2) * c(theta.cos()) - q.sigma_x * C64::new(0.0, theta.sin());
    tensor(space, &[(QUBIT, &u)])
}
