//! Vertical motion of the surface-state electron.
//!
//! Above the helium surface the electron sees the image potential `−Λe²/z`
//! (SI: `e² → e²/(4πε₀)`), a hard wall at `z = 0`, and the holding field
//! term `eE⊥z`. Without the field the spectrum is a 1D hydrogen with Bohr
//! radius `r_B = ℏ²/(m_e e² Λ)`; with it, the two lowest levels are found on a
//! finite-difference grid.
//!
//! Internally the solver works in units of `r_B` (length) and
//! `ℏ²/(m_e r_B²)` (energy), where the unperturbed levels are `−1/(2n²)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::{coulomb_e2, ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::feasibility::{PhysicalParams, TransitionData};
use crate::numerics::quadrature::{integrate, trapezoid};
use crate::numerics::tridiagonal::SymTridiagonal;

/// Generalized Laguerre polynomial `L_n^(α)(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+α−x) L_k − (k+α) L_{k−1}`.
pub fn laguerre(n: u32, alpha: i32, x: f64) -> f64 {
    let a = f64::from(alpha);
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Effective Bohr radius `ℏ²/(m_e e² Λ)` in SI, m.
pub fn bohr_radius(lambda_image: f64) -> f64 {
    HBAR * HBAR / (ELECTRON_MASS * coulomb_e2() * lambda_image)
}

/// Energy unit of the scaled problem, `ℏ²/(m_e r_B²)`, J.
pub fn energy_unit(lambda_image: f64) -> f64 {
    let r_b = bohr_radius(lambda_image);
    HBAR * HBAR / (ELECTRON_MASS * r_b * r_b)
}

/// Unperturbed eigenfunction
/// `ψ_n(z) = 2 n^(−5/2) r_B^(−3/2) z e^(−z/(n r_B)) L_{n−1}^(1)(2z/(n r_B))`, m^(−1/2).
pub fn wavefunction(n: u32, z: f64, r_b: f64) -> f64 {
    assert!(n >= 1, "hydrogen levels start at n = 1");
    let nf = f64::from(n);
    let x = z / (nf * r_b);
    2.0 * nf.powf(-2.5) * r_b.powf(-1.5) * z * (-x).exp() * laguerre(n - 1, 1, 2.0 * x)
}

/// Unperturbed level `E_n = −Λ² e⁴ m_e / (2 n² ℏ²)`, J.
pub fn energy_unperturbed(n: u32, lambda_image: f64) -> f64 {
    assert!(n >= 1, "hydrogen levels start at n = 1");
    let e2 = coulomb_e2();
    -lambda_image * lambda_image * e2 * e2 * ELECTRON_MASS
        / (2.0 * f64::from(n * n) * HBAR * HBAR)
}

/// Position matrix elements of the two lowest levels, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleElements {
    pub z_gg: f64,
    pub z_ee: f64,
    /// Off-diagonal element. The phase of `|e⟩` is chosen to make it positive.
    pub z_ge: f64,
}

impl DipoleElements {
    pub fn z_diff(&self) -> f64 {
        self.z_ee - self.z_gg
    }
}

/// Relative accuracy targeted by [`dipole_elements_unperturbed`].
pub const DIPOLE_QUADRATURE_TOL: f64 = 1e-10;

/// `⟨i|z|j⟩` for the unperturbed `n = 1, 2` states by adaptive quadrature.
pub fn dipole_elements_unperturbed(r_b: f64) -> Result<DipoleElements> {
    if !(r_b > 0.0) {
        return Err(Error::Domain(format!("Bohr radius must be positive, got {r_b}")));
    }
    // In units of r_B; the n = 2 envelope is z³e^(−z) ≈ 1e-36 at z = 120.
    let cut = 120.0;
    let element = |i: u32, j: u32| -> Result<f64> {
        let integral = integrate(
            |x| wavefunction(i, x, 1.0) * x * wavefunction(j, x, 1.0),
            0.0,
            cut,
            DIPOLE_QUADRATURE_TOL,
        )?;
        Ok(integral.value * r_b)
    };
    Ok(DipoleElements {
        z_gg: element(1, 1)?,
        z_ee: element(2, 2)?,
        z_ge: element(1, 2)?.abs(),
    })
}

/// Finite-difference grid on `(0, z_max)` with `n_points` interior points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Box height, m.
    pub z_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub const DEFAULT_HEIGHT_RB: f64 = 40.0;
    pub const DEFAULT_POINTS: usize = 8000;
    pub const MIN_HEIGHT_RB: f64 = 20.0;
    pub const MIN_POINTS: usize = 2000;

    /// 40 Bohr radii, 8000 points.
    pub fn default_for(r_b: f64) -> Self {
        Self { z_max: Self::DEFAULT_HEIGHT_RB * r_b, n_points: Self::DEFAULT_POINTS }
    }
}

/// Relative eigenvalue change tolerated between `n` and `2n` grid points.
pub const GRID_CONVERGENCE_TOL: f64 = 1e-4;

/// Two lowest eigenpairs of the Stark-shifted vertical problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HydrogenSolution {
    /// Interior grid points, m.
    pub grid: Vec<f64>,
    pub e_ground: f64,
    pub e_excited: f64,
    pub omega_a: f64,
    /// Ground state on `grid`, m^(−1/2), positive near the surface.
    pub psi_g: Vec<f64>,
    /// Excited state on `grid`, m^(−1/2), phased so that `z_ge > 0`.
    pub psi_e: Vec<f64>,
    pub z_gg: f64,
    pub z_ee: f64,
    pub z_ge: f64,
    pub bohr_radius: f64,
    /// Largest relative eigenvalue change against the doubled grid.
    pub grid_shift: f64,
}

/// Scalar part of a [`HydrogenSolution`], for JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydrogenSummary {
    pub e_ground: f64,
    pub e_excited: f64,
    pub omega_a: f64,
    pub z_gg: f64,
    pub z_ee: f64,
    pub z_ge: f64,
    pub bohr_radius: f64,
    pub grid_shift: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl HydrogenSolution {
    pub fn transition(&self) -> TransitionData {
        TransitionData {
            omega_a: self.omega_a,
            z_gg: self.z_gg,
            z_ee: self.z_ee,
            z_ge: self.z_ge,
            bohr_radius: self.bohr_radius,
        }
    }

    pub fn dipoles(&self) -> DipoleElements {
        DipoleElements { z_gg: self.z_gg, z_ee: self.z_ee, z_ge: self.z_ge }
    }

    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn summary(&self) -> HydrogenSummary {
        HydrogenSummary {
            e_ground: self.e_ground,
            e_excited: self.e_excited,
            omega_a: self.omega_a,
            z_gg: self.z_gg,
            z_ee: self.z_ee,
            z_ge: self.z_ge,
            bohr_radius: self.bohr_radius,
            grid_shift: self.grid_shift,
            z_max: self.spacing() * (self.grid.len() + 1) as f64,
            n_points: self.grid.len(),
        }
    }

    /// Trapezoidal `∫ f g dz` over the box, walls included.
    pub fn overlap(&self, f: &[f64], g: &[f64]) -> f64 {
        wall_trapezoid(f.iter().zip(g).map(|(a, b)| a * b), self.spacing())
    }

    /// Write `z,psi_g,psi_e` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["z", "psi_g", "psi_e"])?;
        for ((z, g), e) in self.grid.iter().zip(&self.psi_g).zip(&self.psi_e) {
            w.write_record([format!("{z:.16e}"), format!("{g:.16e}"), format!("{e:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trapezoidal rule over interior samples of a function that vanishes at
/// both walls.
fn wall_trapezoid(interior: impl Iterator<Item = f64>, step: f64) -> f64 {
    let samples: Vec<f64> = std::iter::once(0.0).chain(interior).chain(std::iter::once(0.0)).collect();
    trapezoid(&samples, step)
}

struct ScaledEigen {
    energies: [f64; 2],
    vectors: [Vec<f64>; 2],
    step: f64,
}

fn solve_scaled(field: f64, height: f64, n: usize) -> Result<ScaledEigen> {
    let step = height / (n + 1) as f64;
    let kinetic = 1.0 / (step * step);
    let diag: Vec<f64> = (1..=n)
        .map(|i| {
            let x = i as f64 * step;
            kinetic - 1.0 / x + field * x
        })
        .collect();
    let t = SymTridiagonal::new(diag, vec![-0.5 * kinetic; n - 1])?;
    let e0 = t.eigenvalue(0)?;
    let e1 = t.eigenvalue(1)?;
    let mut v0 = t.eigenvector(e0)?;
    let mut v1 = t.eigenvector(e1)?;
    // Unit Euclidean norm → unit trapezoidal norm on the grid.
    let scale = 1.0 / step.sqrt();
    v0.iter_mut().for_each(|x| *x *= scale);
    v1.iter_mut().for_each(|x| *x *= scale);
    Ok(ScaledEigen { energies: [e0, e1], vectors: [v0, v1], step })
}

fn first_significant_sign(v: &[f64]) -> f64 {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter()
        .find(|x| x.abs() > 1e-6 * peak)
        .map_or(1.0, |x| x.signum())
}

/// Solve `−(ℏ²/2m_e)ψ'' − Λe²ψ/z + eE⊥zψ = Eψ` on `(0, z_max)` with
/// `ψ(0) = ψ(z_max) = 0`, returning the two lowest levels.
///
/// The problem is solved on `n_points` and on `2·n_points`; if either
/// energy moves by more than [`GRID_CONVERGENCE_TOL`] (relative) the grid
/// is reported as too coarse.
pub fn stark_solve(params: &PhysicalParams, grid: GridSpec) -> Result<HydrogenSolution> {
    if !(params.lambda_image > 0.0) {
        return Err(Error::Domain("lambda_image must be positive".into()));
    }
    if !(params.e_perp >= 0.0 && params.e_perp.is_finite()) {
        return Err(Error::Domain(format!("e_perp must be non-negative, got {}", params.e_perp)));
    }
    let r_b = bohr_radius(params.lambda_image);
    let height = grid.z_max / r_b;
    if !(height >= GridSpec::MIN_HEIGHT_RB) {
        return Err(Error::Domain(format!(
            "grid height {height:.2} r_B is below the {} r_B minimum",
            GridSpec::MIN_HEIGHT_RB
        )));
    }
    if grid.n_points < GridSpec::MIN_POINTS {
        return Err(Error::Domain(format!(
            "grid needs at least {} points, got {}",
            GridSpec::MIN_POINTS,
            grid.n_points
        )));
    }
    let unit = energy_unit(params.lambda_image);
    let field = ELEMENTARY_CHARGE * params.e_perp * r_b / unit;

    let coarse = solve_scaled(field, height, grid.n_points)?;
    let fine = solve_scaled(field, height, 2 * grid.n_points)?;
    let grid_shift = coarse
        .energies
        .iter()
        .zip(&fine.energies)
        .map(|(c, f)| ((c - f) / f).abs())
        .fold(0.0, f64::max);
    if grid_shift > GRID_CONVERGENCE_TOL {
        return Err(Error::Convergence(format!(
            "eigenvalues moved by {grid_shift:.3e} (relative) when doubling {} grid points; \
             tolerance {GRID_CONVERGENCE_TOL:.0e}",
            grid.n_points
        )));
    }

    let ScaledEigen { energies, vectors: [mut g, mut e], step } = coarse;
    let sg = first_significant_sign(&g);
    g.iter_mut().for_each(|x| *x *= sg);
    let xs: Vec<f64> = (1..=g.len()).map(|i| i as f64 * step).collect();
    let moment = |a: &[f64], b: &[f64]| -> f64 {
        wall_trapezoid(a.iter().zip(b).zip(&xs).map(|((p, q), x)| p * q * x), step)
    };
    if moment(&g, &e) < 0.0 {
        e.iter_mut().for_each(|x| *x = -*x);
    }
    let (z_gg, z_ee, z_ge) = (moment(&g, &g), moment(&e, &e), moment(&g, &e));

    let amp = 1.0 / r_b.sqrt();
    let e_ground = energies[0] * unit;
    let e_excited = energies[1] * unit;
    Ok(HydrogenSolution {
        grid: xs.iter().map(|x| x * r_b).collect(),
        e_ground,
        e_excited,
        omega_a: (e_excited - e_ground) / HBAR,
        psi_g: g.iter().map(|x| x * amp).collect(),
        psi_e: e.iter().map(|x| x * amp).collect(),
        z_gg: z_gg * r_b,
        z_ee: z_ee * r_b,
        z_ge: z_ge * r_b,
        bohr_radius: r_b,
        grid_shift,
    })
}

/// Transition data of the field-free spectrum: `ω_a = (E_2 − E_1)/ℏ` and the
/// analytic-wavefunction matrix elements.
pub fn unperturbed_transition(lambda_image: f64) -> Result<TransitionData> {
    let r_b = bohr_radius(lambda_image);
    let d = dipole_elements_unperturbed(r_b)?;
    Ok(TransitionData {
        omega_a: (energy_unperturbed(2, lambda_image) - energy_unperturbed(1, lambda_image)) / HBAR,
        z_gg: d.z_gg,
        z_ee: d.z_ee,
        z_ge: d.z_ge,
        bohr_radius: r_b,
    })
}
