//! Time evolution: exact JC solutions, eigendecomposition and adaptive
//! Runge–Kutta propagation, and the approximation checks built on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::hamiltonians::{
    h_full_ld, h_interaction, h_jc, h_simplified, h_tau_frame, tau_frame_rotation, ModelFrequencies,
    TimeDependentHamiltonian,
};
use crate::operators::{
    c, check_headroom, displacement, tensor, CMatrix, CVector, HermitianEigen, Operator, TensorSpace, C64,
    CAVITY, QUBIT, VIBRATION,
};
use crate::states::{plus_minus, pure_infidelity, QuantumState, QubitLevel, StateKind, TAIL_LIMIT};

/// Largest norm drift tolerated on any trajectory.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// `Ω_m = 2Ω_c√(m+1)` for `m ≥ 0`, zero for `m < 0`.
pub fn rabi_frequency(m: i64, omega_rabi_c: f64) -> f64 {
    if m < 0 {
        0.0
    } else {
        2.0 * omega_rabi_c * ((m + 1) as f64).sqrt()
    }
}

/// Effective Rabi frequency for a given photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiSpectrum {
    pub m: i64,
    pub omega_m: f64,
}

impl RabiSpectrum {
    pub fn new(m: i64, omega_rabi_c: f64) -> Self {
        Self { m, omega_m: rabi_frequency(m, omega_rabi_c) }
    }
}

/// Closed-form JC evolution of `|m⟩|g⟩` or `|m⟩|e⟩` on a `dim`-level cavity.
pub fn jc_exact(m: usize, qubit: QubitLevel, omega_rabi_c: f64, t: f64, dim: usize) -> Result<QuantumState> {
    let space = TensorSpace::qubit_cavity(dim)?;
    let top = if qubit == QubitLevel::Excited { m + 1 } else { m };
    if top >= dim {
        return Err(Error::Domain(format!("initial |{m},{qubit}⟩ couples to level {top}, outside dim {dim}")));
    }
    let mut psi = CVector::zeros(space.dim());
    match qubit {
        QubitLevel::Ground => {
            let w = rabi_frequency(m as i64 - 1, omega_rabi_c) * t;
            psi[space.flat_index(&[0, m])] = c(w.cos());
            if m > 0 {
                psi[space.flat_index(&[1, m - 1])] = C64::new(0.0, -w.sin());
            }
        }
        QubitLevel::Excited => {
            let w = rabi_frequency(m as i64, omega_rabi_c) * t;
            psi[space.flat_index(&[1, m])] = c(w.cos());
            psi[space.flat_index(&[0, m + 1])] = C64::new(0.0, -w.sin());
        }
    }
    QuantumState::pure(space, psi)
}

/// Hamiltonian accepted by [`propagate`].
#[derive(Debug, Clone, Copy)]
pub enum Generator<'a> {
    Static(&'a Operator),
    TimeDependent(&'a TimeDependentHamiltonian),
}

impl<'a> From<&'a Operator> for Generator<'a> {
    fn from(h: &'a Operator) -> Self {
        Generator::Static(h)
    }
}

impl<'a> From<&'a TimeDependentHamiltonian> for Generator<'a> {
    fn from(h: &'a TimeDependentHamiltonian) -> Self {
        Generator::TimeDependent(h)
    }
}

/// Step control for the time-dependent integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step as a fraction of the period `2π/max_frequency`.
    pub max_step_fraction: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_step_fraction: 1.0 / 20.0 }
    }
}

/// Trajectory with named scalar observables.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    observables: Vec<(String, Vec<f64>)>,
    /// Largest `|⟨ψ|ψ⟩ − 1|` seen along the trajectory.
    pub max_norm_drift: f64,
    /// Accepted integrator steps (0 on the eigendecomposition path).
    pub steps: usize,
}

impl EvolutionResult {
    fn from_states(times: Vec<f64>, states: Vec<QuantumState>, steps: usize) -> Result<Self> {
        let space = states[0].space().clone();
        let norms: Vec<f64> = states.iter().map(|s| s.norm()).collect();
        let max_norm_drift = norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
        let mut out = Self { times, states, observables: Vec::new(), max_norm_drift, steps };
        if space.has(QUBIT) {
            let p = out.states.iter().map(|s| s.populations(QUBIT).map(|v| v[1])).collect::<Result<_>>()?;
            out.push_observable("p_excited", p)?;
        }
        if space.has(CAVITY) {
            let pops: Vec<Vec<f64>> = out.states.iter().map(|s| s.populations(CAVITY)).collect::<Result<_>>()?;
            let mean = pops.iter().map(|d| d.iter().enumerate().map(|(m, p)| m as f64 * p).sum()).collect();
            let parity = pops
                .iter()
                .map(|d| d.iter().enumerate().map(|(m, p)| if m % 2 == 0 { *p } else { -*p }).sum())
                .collect();
            out.push_observable("mean_n", mean)?;
            out.push_observable("parity", parity)?;
        }
        out.push_observable("norm", norms)?;
        Ok(out)
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn observable_names(&self) -> Vec<&str> {
        self.observables.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Appends or replaces a named series.
    pub fn push_observable(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::DimensionMismatch { expected: self.times.len(), found: values.len() });
        }
        match self.observables.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = values,
            None => self.observables.push((name.to_string(), values)),
        }
        Ok(())
    }

    /// Adds a `fidelity` series against reference states at the same times.
    pub fn add_fidelity(&mut self, reference: &[QuantumState]) -> Result<()> {
        if reference.len() != self.states.len() {
            return Err(Error::DimensionMismatch { expected: self.states.len(), found: reference.len() });
        }
        let f = self
            .states
            .iter()
            .zip(reference)
            .map(|(a, b)| crate::states::fidelity(a, b))
            .collect::<Result<_>>()?;
        self.push_observable("fidelity", f)
    }

    /// CSV: `t` then each observable, one row per time.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.observables.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(self.observables.iter().map(|(_, v)| format!("{:.16e}", v[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `[{"t": …, "state": …}, …]`.
    pub fn states_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.times
                .iter()
                .zip(&self.states)
                .map(|(t, s)| serde_json::json!({ "t": t, "state": s.to_json() }))
                .collect(),
        )
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain("propagation needs at least one time".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("times must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Evolves `initial`, taken to be the state at `times[0]`, and records it at
/// every listed time.
pub fn propagate<'a>(h: impl Into<Generator<'a>>, initial: &QuantumState, times: &[f64]) -> Result<EvolutionResult> {
    propagate_with(h, initial, times, &IntegratorOptions::default())
}

pub fn propagate_with<'a>(
    h: impl Into<Generator<'a>>,
    initial: &QuantumState,
    times: &[f64],
    options: &IntegratorOptions,
) -> Result<EvolutionResult> {
    check_times(times)?;
    let h = h.into();
    let space = match h {
        Generator::Static(op) => op.space(),
        Generator::TimeDependent(td) => td.space(),
    };
    if space != initial.space() {
        return Err(Error::InvalidSpace(format!("Hamiltonian on {space}, state on {}", initial.space())));
    }
    let (states, steps) = match h {
        Generator::Static(op) => (propagate_static(op, initial, times)?, 0),
        Generator::TimeDependent(td) => propagate_dopri(td, initial, times, options)?,
    };
    let result = EvolutionResult::from_states(times.to_vec(), states, steps)?;
    if result.max_norm_drift > NORM_DRIFT_LIMIT {
        let suggested_step = match h {
            Generator::TimeDependent(td) if td.max_frequency() > 0.0 => {
                0.5 * options.max_step_fraction * std::f64::consts::TAU / td.max_frequency()
            }
            _ => 0.5 * (times[times.len() - 1] - times[0]),
        };
        return Err(Error::Accuracy { drift: result.max_norm_drift, limit: NORM_DRIFT_LIMIT, suggested_step });
    }
    Ok(result)
}

fn propagate_static(h: &Operator, initial: &QuantumState, times: &[f64]) -> Result<Vec<QuantumState>> {
    let eig = HermitianEigen::new(&(h.matrix() / c(HBAR)))?;
    let space = initial.space().clone();
    let t0 = times[0];
    match initial.kind() {
        StateKind::Pure(psi) => {
            let coeffs = eig.vectors.adjoint() * psi;
            times
                .iter()
                .map(|t| {
                    let mut k = coeffs.clone();
                    for (z, l) in k.iter_mut().zip(eig.values.iter()) {
                        *z *= C64::from_polar(1.0, -l * (t - t0));
                    }
                    QuantumState::pure(space.clone(), &eig.vectors * k)
                })
                .collect()
        }
        StateKind::Mixed(rho) => times
            .iter()
            .map(|t| {
                let u = eig.exp(C64::new(0.0, -(t - t0)));
                QuantumState::mixed(space.clone(), &u * rho * u.adjoint())
            })
            .collect(),
    }
}

/// Single-time evolution under a static Hamiltonian.
pub fn evolve(h: &Operator, initial: &QuantumState, t: f64) -> Result<QuantumState> {
    if t == 0.0 {
        return Ok(initial.clone());
    }
    let mut states = propagate_static(h, initial, &[0.0, t])?;
    Ok(states.swap_remove(1))
}

/// Compressed sparse rows, built from a dense matrix by dropping exact zeros.
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &CMatrix, scale: f64) -> Self {
        let mut indptr = vec![0];
        let (mut indices, mut values) = (Vec::new(), Vec::new());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                if z != c(0.0) {
                    indices.push(j);
                    values.push(z * scale);
                }
            }
            indptr.push(indices.len());
        }
        Self { indptr, indices, values }
    }

    fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `out += coef · A x`.
    fn add_mul(&self, coef: C64, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o += coef * acc;
        }
    }
}

/// `H(t)/ℏ` in sparse form, for `dψ/dt = −i H(t)ψ/ℏ`.
struct SparseGenerator {
    static_part: Csr,
    terms: Vec<(Csr, Csr, f64, f64)>,
}

impl SparseGenerator {
    fn new(h: &TimeDependentHamiltonian) -> Self {
        let scale = 1.0 / HBAR;
        Self {
            static_part: Csr::from_dense(h.static_part(), scale),
            terms: h
                .terms()
                .iter()
                .map(|t| {
                    (
                        Csr::from_dense(&t.matrix, scale),
                        Csr::from_dense(&t.matrix.adjoint(), scale),
                        t.frequency,
                        t.phase,
                    )
                })
                .collect(),
        }
    }

    fn derivative(&self, t: f64, y: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let minus_i = C64::new(0.0, -1.0);
        if !self.static_part.is_empty() {
            self.static_part.add_mul(minus_i, y, out);
        }
        for (m, m_dag, w, phi) in &self.terms {
            let z = C64::from_polar(1.0, w * t + phi);
            m.add_mul(minus_i * z, y, out);
            m_dag.add_mul(minus_i * z.conj(), y, out);
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const MAX_STEPS: usize = 50_000_000;

fn combine(y: &[C64], h: f64, parts: &[(f64, &[C64])], out: &mut [C64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = y[i];
        for (a, k) in parts {
            if *a != 0.0 {
                acc += k[i] * (h * a);
            }
        }
        *o = acc;
    }
}

/// Dormand–Prince 5(4) with FSAL, step capped at `fraction · 2π/max_frequency`.
fn propagate_dopri(
    h: &TimeDependentHamiltonian,
    initial: &QuantumState,
    times: &[f64],
    options: &IntegratorOptions,
) -> Result<(Vec<QuantumState>, usize)> {
    let psi0 = initial
        .vector()
        .ok_or_else(|| Error::Domain("time-dependent propagation needs a pure state".into()))?;
    let gen = SparseGenerator::new(h);
    let n = psi0.len();
    let h_max = if h.max_frequency() > 0.0 {
        options.max_step_fraction * std::f64::consts::TAU / h.max_frequency()
    } else {
        f64::INFINITY
    };
    let mut y: Vec<C64> = psi0.iter().copied().collect();
    let mut t = times[0];
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    gen.derivative(t, &y, &mut k[0]);
    let mut step = h_max.min(times.last().copied().unwrap_or(t) - t).max(0.0);
    if !step.is_finite() || step == 0.0 {
        step = 1.0;
    }
    let mut states = vec![initial.clone()];
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    for &target in &times[1..] {
        while t < target {
            attempts += 1;
            if attempts > MAX_STEPS {
                return Err(Error::Convergence(format!("integrator exceeded {MAX_STEPS} steps at t = {t:.6e} s")));
            }
            let hs = step.min(h_max).min(target - t);
            let last = hs >= target - t;
            {
                let (k1, rest) = k.split_at_mut(1);
                let k1 = &k1[0];
                combine(&y, hs, &[(A21, k1)], &mut tmp);
                gen.derivative(t + C2 * hs, &tmp, &mut rest[0]);
                combine(&y, hs, &[(A31, k1), (A32, &rest[0])], &mut tmp);
                gen.derivative(t + C3 * hs, &tmp, &mut rest[1]);
                combine(&y, hs, &[(A41, k1), (A42, &rest[0]), (A43, &rest[1])], &mut tmp);
                gen.derivative(t + C4 * hs, &tmp, &mut rest[2]);
                combine(&y, hs, &[(A51, k1), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])], &mut tmp);
                gen.derivative(t + C5 * hs, &tmp, &mut rest[3]);
                combine(
                    &y,
                    hs,
                    &[(A61, k1), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
                    &mut tmp,
                );
                gen.derivative(t + hs, &tmp, &mut rest[4]);
                combine(
                    &y,
                    hs,
                    &[(B1, k1), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])],
                    &mut y_new,
                );
            }
            let t_new = if last { target } else { t + hs };
            gen.derivative(t_new, &y_new, &mut k[6]);
            let mut err = 0.0f64;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7)
                    * hs;
                let scale = options.atol + options.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }
            if !err.is_finite() {
                return Err(Error::NonFinite);
            }
            if err <= 1.0 {
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                accepted += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposed = hs * factor;
            // A step clipped to land on an output time should not shrink the next one.
            step = if last && err <= 1.0 { step.max(proposed) } else { proposed };
        }
        let psi = CVector::from_vec(y.clone());
        let drift = (psi.norm_squared() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Accuracy { drift, limit: NORM_DRIFT_LIMIT, suggested_step: 0.5 * h_max.min(step) });
        }
        states.push(QuantumState::pure(initial.space().clone(), psi)?);
    }
    Ok((states, accepted))
}

/// `U(t) = D(−r) exp(−itH_JC/ℏ) D(r)` with `r = e^{−iφ_l}Ω_l/(2Ω_c)`.
pub fn djc_propagator(omega_rabi_c: f64, omega_rabi_l: f64, phi_l: f64, t: f64, dim: usize) -> Result<Operator> {
    if omega_rabi_c == 0.0 && omega_rabi_l != 0.0 {
        return Err(Error::Domain("displacement r = Ω_l/(2Ω_c) is undefined for Ω_c = 0".into()));
    }
    let r = if omega_rabi_l == 0.0 {
        c(0.0)
    } else {
        C64::from_polar(omega_rabi_l / (2.0 * omega_rabi_c), -phi_l)
    };
    check_headroom(r.norm(), dim)?;
    let space = TensorSpace::qubit_cavity(dim)?;
    let freqs = ModelFrequencies::resonant(1.0, omega_rabi_c, 0.0, 0.0);
    let jc = h_jc(&freqs, &space)?;
    let u = HermitianEigen::new(&(jc.matrix() / c(HBAR)))?.exp(C64::new(0.0, -t));
    if r == c(0.0) {
        return Operator::new(space, u);
    }
    let d_plus = tensor(&space, &[(CAVITY, &displacement(r, dim)?.value)])?;
    let d_minus = tensor(&space, &[(CAVITY, &displacement(-r, dim)?.value)])?;
    Operator::new(space, d_minus * u * d_plus)
}

/// Infidelity between the rotating-frame driven model and its
/// strong-drive limit `ℏΩ_c(b†+b)τ_z`, both started in `|+⟩|0⟩` and mapped
/// back through `exp(−iΩ_l t τ_z)` at `t_final`.
pub fn strong_driving_check(omega_rabi_c: f64, omega_rabi_l: f64, t_final: f64, dim: usize) -> Result<f64> {
    if omega_rabi_c > 0.0 && omega_rabi_l < 10.0 * omega_rabi_c {
        return Err(Error::Domain(format!(
            "strong driving needs Ω_l/Ω_c >= 10, got {:.3}",
            omega_rabi_l / omega_rabi_c
        )));
    }
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("t_final must be > 0, got {t_final}")));
    }
    check_headroom(omega_rabi_c * t_final, dim)?;
    let space = TensorSpace::qubit_cavity(dim)?;
    let freqs = ModelFrequencies::resonant(1.0, omega_rabi_c, omega_rabi_l, 0.0);
    let frame = h_tau_frame(&freqs, &space)?;
    let mut vacuum = CVector::zeros(dim);
    vacuum[0] = c(1.0);
    let initial = QuantumState::pure(space.clone(), plus_minus(1.0).kronecker(&vacuum))?;
    let times = [0.0, t_final];
    let driven = propagate(&frame.h_rotating, &initial, &times)?;
    let effective = evolve(&frame.h_eff, &initial, t_final)?;
    let u = tau_frame_rotation(omega_rabi_l, t_final, &space)?;
    let a = &u * driven.states[1].vector().ok_or(Error::NonFinite)?;
    let b = &u * effective.vector().ok_or(Error::NonFinite)?;
    for s in [&driven.states[1], &effective] {
        s.check_tail("strong-drive check")?;
    }
    Ok(pure_infidelity(&a, &b))
}

/// Infidelity between the interaction-picture model and the JC
/// model at `t_final`, from the basis state `|m⟩|qubit⟩`.
pub fn rwa_check(
    freqs: &ModelFrequencies,
    t_final: f64,
    dim: usize,
    initial: (usize, QubitLevel),
) -> Result<f64> {
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("t_final must be > 0, got {t_final}")));
    }
    let space = TensorSpace::qubit_cavity(dim)?;
    let psi0 = QuantumState::basis(space.clone(), &[initial.1.index(), initial.0])?;
    let full = h_interaction(freqs, &space, false)?;
    let jc = h_jc(freqs, &space)?;
    let times = [0.0, t_final];
    let a = propagate(&full, &psi0, &times)?;
    let b = evolve(&jc, &psi0, t_final)?;
    a.states[1].check_tail("RWA check")?;
    Ok(pure_infidelity(a.states[1].vector().ok_or(Error::NonFinite)?, b.vector().ok_or(Error::NonFinite)?))
}

/// For each η, infidelity between the (qubit, cavity) state of the
/// three-factor Lamb-Dicke model with the vibration traced out and the
/// two-factor model, from `(|g⟩+|e⟩)/√2 ⊗ |0⟩_c ⊗ |0⟩_v`, at `t_final`.
pub fn ld_check(freqs: &ModelFrequencies, etas: &[f64], t_final: f64, dims: (usize, usize)) -> Result<Vec<f64>> {
    let (n_c, n_v) = dims;
    if n_v < 8 {
        return Err(Error::Domain(format!("vibration truncation must be >= 8, got {n_v}")));
    }
    if !(t_final >= 0.0) {
        return Err(Error::Domain(format!("t_final must be >= 0, got {t_final}")));
    }
    let pair = TensorSpace::qubit_cavity(n_c)?;
    let three = TensorSpace::qubit_cavity_vibration(n_c, n_v)?;
    let mut qubit_cavity = CVector::zeros(pair.dim());
    qubit_cavity[pair.flat_index(&[0, 0])] = c(std::f64::consts::FRAC_1_SQRT_2);
    qubit_cavity[pair.flat_index(&[1, 0])] = c(std::f64::consts::FRAC_1_SQRT_2);
    let mut vib0 = CVector::zeros(n_v);
    vib0[0] = c(1.0);
    let psi_pair = QuantumState::pure(pair.clone(), qubit_cavity.clone())?;
    let psi_three = QuantumState::pure(three.clone(), qubit_cavity.kronecker(&vib0))?;

    let simple = evolve(&h_simplified(freqs, &pair)?, &psi_pair, t_final)?;
    let reference = simple.vector().ok_or(Error::NonFinite)?;
    etas.iter()
        .map(|&eta| {
            let mut f = *freqs;
            f.eta_c = eta;
            let full = evolve(&h_full_ld(&f, &three)?, &psi_three, t_final)?;
            let vib_tail: f64 = full.populations(VIBRATION)?[n_v - 4..].iter().sum();
            if vib_tail > TAIL_LIMIT {
                return Err(Error::Truncation {
                    what: format!("vibration factor at eta = {eta:.3e}"),
                    tail: vib_tail,
                    limit: TAIL_LIMIT,
                });
            }
            let big = full.vector().ok_or(Error::NonFinite)?;
            // v = (⟨ψ| ⊗ I_v) Ψ, infidelity = ‖Ψ − ψ ⊗ v‖².
            let mut v = CVector::zeros(n_v);
            for i in 0..pair.dim() {
                for k in 0..n_v {
                    v[k] += reference[i].conj() * big[i * n_v + k];
                }
            }
            Ok((big - reference.kronecker(&v)).norm_squared())
        })
        .collect()
}
