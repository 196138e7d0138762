//! Closed-form experimental figures of merit for a surface-state electron
//! in a Fabry-Perot THz cavity.
//!
//! Every frequency in this module is angular (rad/s). Divide by `2π` for Hz.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{
    BOLTZMANN, ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};
use crate::error::{Error, Result};

/// Image-potential strength for a dielectric constant `epsilon`:
/// `(ε − 1) / (4(ε + 1))`.
pub fn lambda_from_epsilon(epsilon: f64) -> f64 {
    (epsilon - 1.0) / (4.0 * (epsilon + 1.0))
}

/// Experimental inputs, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    /// Image-potential strength Λ.
    pub lambda_image: f64,
    /// Dielectric constant of liquid ⁴He.
    pub epsilon_he: f64,
    /// Perpendicular holding field, V/m.
    pub e_perp: f64,
    /// Depth of the trapping electrode below the helium surface, m.
    pub depth_h: f64,
    /// Cavity length, m.
    pub cavity_len: f64,
    pub finesse: f64,
    /// Cavity mode waist, m.
    pub waist: f64,
    /// Cavity temperature, K.
    pub temperature: f64,
    /// Decay rate of the electron's vertical transition, rad/s.
    pub atom_decay: f64,
    /// Classical drive amplitude, V/m.
    pub laser_amp: f64,
    /// Classical drive phase, rad.
    pub laser_phase: f64,
    /// Standing-wave phase at the electron. Only the antinode (0) is supported.
    pub standing_phase: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            lambda_image: 0.0069,
            epsilon_he: 1.0568,
            e_perp: 3.0e4,
            depth_h: 5.0e-7,
            cavity_len: 1.0e-3,
            finesse: 4.4e5,
            waist: 20.0e-6,
            temperature: 2.2,
            atom_decay: 1.0e4,
            laser_amp: 100.0,
            laser_phase: 0.0,
            standing_phase: 0.0,
        }
    }
}

impl PhysicalParams {
    /// Relative tolerance between `lambda_image` and the value implied by
    /// `epsilon_he`. The tabulated Λ = 0.0069 is a 2-digit rounding of
    /// 0.006904.
    pub const LAMBDA_CONSISTENCY: f64 = 1e-2;

    /// Check positivity, the finesse bound, Λ/ε consistency and φ_c = 0.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_image", self.lambda_image),
            ("e_perp", self.e_perp),
            ("depth_h", self.depth_h),
            ("cavity_len", self.cavity_len),
            ("waist", self.waist),
            ("temperature", self.temperature),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.epsilon_he.is_finite() && self.epsilon_he > 1.0) {
            return Err(Error::Domain(format!(
                "epsilon_he must exceed 1, got {}",
                self.epsilon_he
            )));
        }
        if !(self.finesse.is_finite() && self.finesse >= 1.0) {
            return Err(Error::Domain(format!("finesse must be >= 1, got {}", self.finesse)));
        }
        for (name, value) in [
            ("atom_decay", self.atom_decay),
            ("laser_amp", self.laser_amp),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Domain(format!("{name} must be non-negative, got {value}")));
            }
        }
        if !self.laser_phase.is_finite() {
            return Err(Error::Domain("laser_phase must be finite".into()));
        }
        if self.standing_phase != 0.0 {
            return Err(Error::Domain(format!(
                "standing_phase must be 0 (electron at a field antinode), got {}",
                self.standing_phase
            )));
        }
        let derived = lambda_from_epsilon(self.epsilon_he);
        let mismatch = (self.lambda_image / derived - 1.0).abs();
        if mismatch > Self::LAMBDA_CONSISTENCY {
            return Err(Error::Domain(format!(
                "lambda_image {} inconsistent with epsilon_he {} (implies {derived:.6})",
                self.lambda_image, self.epsilon_he
            )));
        }
        Ok(())
    }

    /// Mode volume `π (w/2)² L`, m³.
    pub fn mode_volume(&self) -> f64 {
        PI * (self.waist / 2.0).powi(2) * self.cavity_len
    }
}

/// In-plane trap frequency `ν = √(e E⊥ / (m_e h))`, rad/s.
pub fn trap_frequency(params: &PhysicalParams) -> Result<f64> {
    if !(params.e_perp > 0.0 && params.depth_h > 0.0) {
        return Err(Error::Domain(format!(
            "trap frequency needs e_perp > 0 and depth_h > 0, got {} and {}",
            params.e_perp, params.depth_h
        )));
    }
    Ok((ELEMENTARY_CHARGE * params.e_perp / (ELECTRON_MASS * params.depth_h)).sqrt())
}

/// Lamb-Dicke parameter `ω √(ℏ / (2 m_e ν)) / c` of a field at `omega`
/// acting on an in-plane oscillator of frequency `nu`.
pub fn lamb_dicke(omega: f64, nu: f64) -> Result<f64> {
    if !(omega >= 0.0 && nu > 0.0) {
        return Err(Error::Domain(format!(
            "Lamb-Dicke parameter needs omega >= 0 and nu > 0, got {omega} and {nu}"
        )));
    }
    Ok(omega * (HBAR / (2.0 * ELECTRON_MASS * nu)).sqrt() / SPEED_OF_LIGHT)
}

/// Cavity and laser couplings, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingStrengths {
    /// Transverse cavity coupling Ω_c.
    pub omega_rabi_c: f64,
    /// Longitudinal (σ_z) cavity coupling Ω̃_c from the broken parity of the levels.
    pub omega_rabi_c_tilde: f64,
    /// Transverse laser coupling Ω_l.
    pub omega_rabi_l: f64,
    /// Longitudinal laser coupling Ω̃_l.
    pub omega_rabi_l_tilde: f64,
}

/// Evaluate the four coupling strengths.
///
/// `z_diff` is `z_ee − z_gg`. The cavity couplings use the single-photon
/// field amplitude `√(ℏω_c / (2ε₀V))` and the laser couplings use `E_z`.
pub fn coupling_strengths(
    params: &PhysicalParams,
    z_ge: f64,
    z_diff: f64,
    omega_c: f64,
    volume: f64,
) -> Result<CouplingStrengths> {
    if !(volume > 0.0 && omega_c > 0.0) {
        return Err(Error::Domain(format!(
            "couplings need volume > 0 and omega_c > 0, got {volume} and {omega_c}"
        )));
    }
    let e = ELEMENTARY_CHARGE;
    let field = omega_c / (HBAR * VACUUM_PERMITTIVITY * volume);
    Ok(CouplingStrengths {
        omega_rabi_c: e * z_ge * (field / 8.0).sqrt(),
        omega_rabi_c_tilde: e * z_diff * (field / 32.0).sqrt(),
        omega_rabi_l: e * z_ge * params.laser_amp / (2.0 * HBAR),
        omega_rabi_l_tilde: e * z_diff * params.laser_amp / (4.0 * HBAR),
    })
}

/// Cavity loss and strong-coupling figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityFigures {
    /// Cavity decay rate κ = cπ / (2FL), rad/s.
    pub kappa: f64,
    /// Critical photon number γ² / (2g₀²).
    pub n0: f64,
    /// Critical electron number 2κγ / g₀².
    pub cap_n0: f64,
    /// Mode volume, m³.
    pub mode_volume: f64,
    /// In-plane localization length √(ℏ / (m_e ν)), m.
    pub loc_length: f64,
}

pub fn cavity_figures(params: &PhysicalParams, g0: f64) -> Result<CavityFigures> {
    if !(params.finesse > 0.0 && params.cavity_len > 0.0 && params.waist > 0.0) {
        return Err(Error::Domain(
            "cavity figures need positive finesse, length and waist".into(),
        ));
    }
    if !(g0 > 0.0) {
        return Err(Error::Domain(format!(
            "critical numbers divide by g0², got g0 = {g0}"
        )));
    }
    let kappa = SPEED_OF_LIGHT * PI / (2.0 * params.finesse * params.cavity_len);
    let gamma = params.atom_decay;
    let nu = trap_frequency(params)?;
    Ok(CavityFigures {
        kappa,
        n0: gamma * gamma / (2.0 * g0 * g0),
        cap_n0: 2.0 * kappa * gamma / (g0 * g0),
        mode_volume: params.mode_volume(),
        loc_length: (HBAR / (ELECTRON_MASS * nu)).sqrt(),
    })
}

/// Vacuum weight `1 − exp(−ℏω_c / (k_B T))` of a thermal cavity mode.
pub fn thermal_vacuum_probability(omega_c: f64, temperature: f64) -> Result<f64> {
    if !(omega_c > 0.0 && temperature > 0.0) {
        return Err(Error::Domain(format!(
            "thermal occupation needs omega_c > 0 and T > 0, got {omega_c} and {temperature}"
        )));
    }
    let x = HBAR * omega_c / (BOLTZMANN * temperature);
    Ok(-(-x).exp_m1())
}

/// Transition properties of the two lowest vertical levels, as produced by
/// the hydrogen solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionData {
    pub omega_a: f64,
    pub z_gg: f64,
    pub z_ee: f64,
    pub z_ge: f64,
    pub bohr_radius: f64,
}

/// All derived figures for one parameter set, cavity and laser tuned to
/// resonance with the electron transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub bohr_radius: f64,
    pub nu: f64,
    pub omega_a: f64,
    pub omega_c: f64,
    pub eta_c: f64,
    pub eta_l: f64,
    pub omega_rabi_c: f64,
    pub omega_rabi_c_tilde: f64,
    pub omega_rabi_l: f64,
    pub omega_rabi_l_tilde: f64,
    pub g0: f64,
    pub kappa: f64,
    pub n0: f64,
    pub cap_n0: f64,
    pub p0: f64,
    pub mode_volume: f64,
    pub loc_length: f64,
}

impl FeasibilityReport {
    pub fn evaluate(params: &PhysicalParams, transition: &TransitionData) -> Result<Self> {
        params.validate()?;
        let nu = trap_frequency(params)?;
        let omega_c = transition.omega_a;
        let eta = lamb_dicke(omega_c, nu)?;
        let volume = params.mode_volume();
        let couplings = coupling_strengths(
            params,
            transition.z_ge,
            transition.z_ee - transition.z_gg,
            omega_c,
            volume,
        )?;
        let g0 = 2.0 * couplings.omega_rabi_c;
        let cavity = cavity_figures(params, g0)?;
        Ok(Self {
            bohr_radius: transition.bohr_radius,
            nu,
            omega_a: transition.omega_a,
            omega_c,
            eta_c: eta,
            eta_l: eta,
            omega_rabi_c: couplings.omega_rabi_c,
            omega_rabi_c_tilde: couplings.omega_rabi_c_tilde,
            omega_rabi_l: couplings.omega_rabi_l,
            omega_rabi_l_tilde: couplings.omega_rabi_l_tilde,
            g0,
            kappa: cavity.kappa,
            n0: cavity.n0,
            cap_n0: cavity.cap_n0,
            p0: thermal_vacuum_probability(omega_c, params.temperature)?,
            mode_volume: cavity.mode_volume,
            loc_length: cavity.loc_length,
        })
    }

    /// Names of [`FeasibilityReport::entries`], in order.
    pub const ENTRY_NAMES: [&'static str; 17] = [
        "bohr_radius",
        "nu",
        "omega_a",
        "omega_c",
        "eta_c",
        "eta_l",
        "omega_rabi_c",
        "omega_rabi_c_tilde",
        "omega_rabi_l",
        "omega_rabi_l_tilde",
        "g0",
        "kappa",
        "n0",
        "cap_n0",
        "p0",
        "mode_volume",
        "loc_length",
    ];

    /// Name/value pairs in a stable order, for flat JSON and table output.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let values = [
            self.bohr_radius,
            self.nu,
            self.omega_a,
            self.omega_c,
            self.eta_c,
            self.eta_l,
            self.omega_rabi_c,
            self.omega_rabi_c_tilde,
            self.omega_rabi_l,
            self.omega_rabi_l_tilde,
            self.g0,
            self.kappa,
            self.n0,
            self.cap_n0,
            self.p0,
            self.mode_volume,
            self.loc_length,
        ];
        Self::ENTRY_NAMES.into_iter().zip(values).collect()
    }
}
