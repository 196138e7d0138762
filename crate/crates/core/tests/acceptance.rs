//! Acceptance suite. Runs every quantitative criterion, prints one line per
//! criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use helium_jc::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY};
use helium_jc::dynamics::{
    djc_propagator, jc_exact, ld_check, propagate, rwa_check, strong_driving_check,
};
use helium_jc::feasibility::{
    cavity_figures, coupling_strengths, lamb_dicke, thermal_vacuum_probability, trap_frequency,
};
use helium_jc::hamiltonians::{
    excitation_number, h0, h_djc, h_full_ld, h_interaction, h_jc, h_simplified, h_tau_frame,
};
use helium_jc::hydrogen::{
    bohr_radius, dipole_elements_unperturbed, energy_unperturbed, stark_solve, wavefunction,
};
use helium_jc::operators::{hermitian_defect, low_fock_block, max_norm, HermitianEigen};
use helium_jc::states::{measure_qubit, prepare_cat};
use helium_jc::{
    FeasibilityReport, GridSpec, ModelFrequencies, PhysicalParams, QuantumState, QubitLevel,
    TensorSpace, C64, CMatrix,
};

type Outcome = Result<(bool, String), String>;

struct Suite {
    passed: usize,
    failed: Vec<String>,
}

impl Suite {
    fn run(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {detail} [{:.2} s, budget {} s]", elapsed.as_secs_f64(), budget.as_secs());
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(name.to_string());
        }
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    ((value - target) / target).abs() <= rel
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn default_report() -> Result<FeasibilityReport, String> {
    let p = PhysicalParams::default();
    let grid = GridSpec::default_for(bohr_radius(p.lambda_image));
    let solution = stark_solve(&p, grid).map_err(err)?;
    FeasibilityReport::evaluate(&p, &solution.transition()).map_err(err)
}

fn max_amp_diff(a: &QuantumState, b: &QuantumState) -> f64 {
    let (a, b) = (a.vector().unwrap(), b.vector().unwrap());
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

// Composite Simpson rule on [a, b] with an even number of panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

// Closed forms in units of r_B.
fn psi1(z: f64) -> f64 {
    2.0 * z * (-z).exp()
}

fn psi2(z: f64) -> f64 {
    z * (1.0 - 0.5 * z) * (-0.5 * z).exp() / 2f64.sqrt()
}

fn feasibility(suite: &mut Suite) {
    let instant = Duration::from_secs(1);
    let p = PhysicalParams::default();

    suite.run("trap frequency nu/2pi = 16 GHz +-5%", instant, || {
        let nu = trap_frequency(&p).map_err(err)?;
        let oracle = (ELEMENTARY_CHARGE * 3.0e4 / (ELECTRON_MASS * 5.0e-7)).sqrt();
        let f = nu / (2.0 * PI);
        Ok((within(f, 16e9, 0.05) && within(nu, oracle, 1e-12), format!("{:.4} GHz", f / 1e9)))
    });

    suite.run("g0 = 33 MHz +-10% at z_ge = 0.5 r_B, V = 3.14e-13 m^3", instant, || {
        let r_b = bohr_radius(p.lambda_image);
        let omega_c = 2.0 * PI * 0.27e12;
        let volume = 3.14e-13;
        let k = coupling_strengths(&p, 0.5 * r_b, 4.5 * r_b, omega_c, volume).map_err(err)?;
        let g0 = 2.0 * k.omega_rabi_c;
        let oracle = ELEMENTARY_CHARGE * 0.5 * r_b * (omega_c / (2.0 * HBAR * VACUUM_PERMITTIVITY * volume)).sqrt();
        Ok((within(g0, 33e6, 0.10) && within(g0, oracle, 1e-12), format!("g0 = {:.4e} rad/s", g0)))
    });

    suite.run("kappa = 1.1 MHz +-5% at L = 1 mm, 8.9 MHz +-5% at L = 0.12 mm", instant, || {
        let long = cavity_figures(&p, 3.3e7).map_err(err)?.kappa;
        let short_p = PhysicalParams { cavity_len: 0.12e-3, ..p.clone() };
        let short = cavity_figures(&short_p, 3.3e7).map_err(err)?.kappa;
        Ok((
            within(long, 1.1e6, 0.05) && within(short, 8.9e6, 0.05),
            format!("{:.4e}, {:.4e} rad/s", long, short),
        ))
    });

    suite.run("n0 = 4.6e-8 +-15% and N0 = 2e-5 +-15% at gamma = 1e4", instant, || {
        let r_b = bohr_radius(p.lambda_image);
        let k = coupling_strengths(&p, 0.5 * r_b, 4.5 * r_b, 2.0 * PI * 0.27e12, p.mode_volume())
            .map_err(err)?;
        let q = PhysicalParams { atom_decay: 1.0e4, ..p.clone() };
        let fig = cavity_figures(&q, 2.0 * k.omega_rabi_c).map_err(err)?;
        Ok((
            within(fig.n0, 4.6e-8, 0.15) && within(fig.cap_n0, 2e-5, 0.15),
            format!("n0 = {:.4e}, N0 = {:.4e}", fig.n0, fig.cap_n0),
        ))
    });

    suite.run("P0 > 0.96 at 1 THz for T <= 2.2 K", instant, || {
        let mut worst = 1.0f64;
        for t in [0.1, 0.5, 1.0, 1.5, 2.0, 2.2] {
            worst = worst.min(thermal_vacuum_probability(2.0 * PI * 1e12, t).map_err(err)?);
        }
        Ok((worst > 0.96, format!("min P0 = {worst:.6}")))
    });

    let mut report = None;
    suite.run("omega_a/2pi in [0.19, 0.35] THz from stark_solve", Duration::from_secs(10), || {
        let r = default_report()?;
        let f = r.omega_a / (2.0 * PI);
        report = Some(r);
        Ok(((0.19e12..=0.35e12).contains(&f), format!("{:.4} THz", f / 1e12)))
    });

    suite.run("eta_c at resonance in [0.5e-4, 2e-4]", instant, || {
        let r = report.ok_or("no Stark solution")?;
        let oracle = lamb_dicke(r.omega_c, r.nu).map_err(err)?;
        Ok(((0.5e-4..=2e-4).contains(&r.eta_c) && r.eta_c == oracle, format!("{:.4e}", r.eta_c)))
    });

    suite.run("L_par equals sqrt(hbar/(m nu)), about 34 nm", instant, || {
        let r = report.ok_or("no Stark solution")?;
        let oracle = (HBAR / (ELECTRON_MASS * r.nu)).sqrt();
        Ok((
            within(r.loc_length, oracle, 1e-12) && within(r.loc_length, 34e-9, 0.05),
            format!("{:.3} nm (0.3 nm is the quoted figure)", r.loc_length * 1e9),
        ))
    });
}

fn dynamics(suite: &mut Suite) {
    let report = match default_report() {
        Ok(r) => r,
        Err(e) => {
            suite.run("dynamics setup", Duration::from_secs(10), || Err(e));
            return;
        }
    };
    let omega_rabi_c = report.omega_rabi_c;

    suite.run("jc_exact vs propagation < 1e-8, m 0..5, g and e, 10 Rabi periods", Duration::from_secs(30), || {
        let dim = 16;
        let space = TensorSpace::qubit_cavity(dim).map_err(err)?;
        let freqs = ModelFrequencies::resonant(report.omega_a, omega_rabi_c, 0.0, 0.0);
        let h = h_jc(&freqs, &space).map_err(err)?;
        let mut worst = 0.0f64;
        let mut drift = 0.0f64;
        for m in 0..=5 {
            for q in [QubitLevel::Ground, QubitLevel::Excited] {
                // The slowest oscillation in the m-manifold sets the period.
                let slowest = if q == QubitLevel::Ground && m > 0 { m - 1 } else { m };
                let period = 2.0 * PI / (2.0 * omega_rabi_c * ((slowest + 1) as f64).sqrt());
                let times: Vec<f64> = (0..=200).map(|k| 10.0 * period * k as f64 / 200.0).collect();
                let psi0 = QuantumState::basis(space.clone(), &[q.index(), m]).map_err(err)?;
                let run = propagate(&h, &psi0, &times).map_err(err)?;
                drift = drift.max(run.max_norm_drift);
                for (t, s) in times.iter().zip(&run.states) {
                    let exact = jc_exact(m, q, omega_rabi_c, *t, dim).map_err(err)?;
                    worst = worst.max(max_amp_diff(s, &exact));
                }
            }
        }
        Ok((worst < 1e-8 && drift < 1e-6, format!("max deviation {worst:.3e}, norm drift {drift:.1e}")))
    });

    suite.run("displaced JC propagator equals driven JC exponential to 1e-6, ratios 0.5, 1, 2", Duration::from_secs(30), || {
        let dim = 48;
        let space = TensorSpace::qubit_cavity(dim).map_err(err)?;
        let mut worst = 0.0f64;
        for ratio in [0.5, 1.0, 2.0] {
            let freqs = ModelFrequencies::resonant(report.omega_a, omega_rabi_c, ratio * omega_rabi_c, 0.0);
            let h = h_djc(&freqs, &space).map_err(err)?;
            let eig = HermitianEigen::new(&(h.matrix() / C64::new(HBAR, 0.0))).map_err(err)?;
            let block = low_fock_block(ratio / 2.0, dim);
            for tau in [0.5, 1.0, 2.0] {
                let t = tau / omega_rabi_c;
                let direct = eig.exp(C64::new(0.0, -t));
                let u = djc_propagator(omega_rabi_c, freqs.omega_rabi_l, 0.0, t, dim).map_err(err)?;
                for i in 0..space.dim() {
                    for j in 0..space.dim() {
                        if space.local_indices(i)[1] < block && space.local_indices(j)[1] < block {
                            worst = worst.max((u.matrix()[(i, j)] - direct[(i, j)]).norm());
                        }
                    }
                }
            }
        }
        Ok((worst < 1e-6, format!("max deviation {worst:.3e}")))
    });

    suite.run("RWA infidelity shrinks >= x3 as Omega_c/omega_c halves from 1e-2", Duration::from_secs(120), || {
        let omega = 1.0e9;
        let tilde_ratio = report.omega_rabi_c_tilde / report.omega_rabi_c;
        let infidelity = |r: f64| {
            let oc = r * omega;
            let mut f = ModelFrequencies::resonant(omega, oc, 0.0, 0.0);
            f.omega_rabi_c_tilde = tilde_ratio * oc;
            rwa_check(&f, PI / oc, 16, (0, QubitLevel::Excited)).map_err(err)
        };
        let (a, b) = (infidelity(1e-2)?, infidelity(5e-3)?);
        Ok((a / b >= 3.0, format!("{a:.3e} -> {b:.3e}, ratio {:.2} (longitudinal/transverse {tilde_ratio:.3})", a / b)))
    });

    suite.run("strong-drive infidelity shrinks >= x5 as Omega_l/Omega_c grows 100 -> 1000", Duration::from_secs(120), || {
        let oc = 1.0e6;
        let a = strong_driving_check(oc, 100.0 * oc, 1.0 / oc, 32).map_err(err)?;
        let b = strong_driving_check(oc, 1000.0 * oc, 1.0 / oc, 32).map_err(err)?;
        Ok((a / b >= 5.0, format!("{a:.3e} -> {b:.3e}, ratio {:.1}", a / b)))
    });

    suite.run("Lamb-Dicke eta = 1e-4 three-factor vs two-factor < 1e-6 at t = 5/Omega_c, N_v = 8", Duration::from_secs(120), || {
        let freqs = ModelFrequencies::from_report(&report, 0.0);
        let out = ld_check(&freqs, &[1e-4], 5.0 / omega_rabi_c, (8, 8)).map_err(err)?;
        Ok((out[0] < 1e-6, format!("infidelity {:.3e}", out[0])))
    });

    suite.run("cat preparation at Omega_c t = 1.5: target, parity and outcome probabilities", Duration::from_secs(30), || {
        let prepared = prepare_cat(omega_rabi_c, 1.5 / omega_rabi_c, 64).map_err(err)?;
        let (cavity, p_g) = measure_qubit(&prepared.joint, QubitLevel::Ground).map_err(err)?;
        let (_, p_e) = measure_qubit(&prepared.joint, QubitLevel::Excited).map_err(err)?;
        let odd: f64 = cavity.populations("cavity").map_err(err)?.iter().skip(1).step_by(2).sum();
        let overlap = (-2.0 * prepared.alpha.norm_sqr()).exp();
        let dp = ((p_g - 0.5 * (1.0 + overlap)).abs()).max((p_e - 0.5 * (1.0 - overlap)).abs());
        Ok((
            prepared.infidelity < 1e-8 && odd < 1e-8 && dp < 1e-6,
            format!("infidelity {:.3e}, odd mass {odd:.3e}, probability error {dp:.3e}", prepared.infidelity),
        ))
    });

    suite.run("conservation: norm, [h_jc, N] = 0, Hermiticity 1e-12", Duration::from_secs(60), || {
        let dim = 12;
        let pair = TensorSpace::qubit_cavity(dim).map_err(err)?;
        let three = TensorSpace::qubit_cavity_vibration(8, 8).map_err(err)?;
        let mut freqs = ModelFrequencies::from_report(&report, 0.0);
        freqs.omega_rabi_l = 0.7 * omega_rabi_c;

        let jc = h_jc(&freqs, &pair).map_err(err)?;
        let n = excitation_number(&pair).map_err(err)?;
        let commutator = max_norm(jc.commutator(&n).map_err(err)?.matrix());

        let mut statics: Vec<CMatrix> = vec![
            h0(&freqs, &pair).map_err(err)?.into_matrix(),
            h_full_ld(&freqs, &three).map_err(err)?.into_matrix(),
            h_simplified(&freqs, &pair).map_err(err)?.into_matrix(),
            jc.matrix().clone(),
            h_djc(&freqs, &pair).map_err(err)?.into_matrix(),
        ];
        let frame_freqs = ModelFrequencies::resonant(report.omega_a, omega_rabi_c, 200.0 * omega_rabi_c, 0.0);
        let frame = h_tau_frame(&frame_freqs, &pair).map_err(err)?;
        statics.push(frame.h_djc.into_matrix());
        statics.push(frame.h_eff.matrix().clone());
        let driven = h_interaction(&freqs, &pair, true).map_err(err)?;
        let undriven = h_interaction(&freqs, &pair, false).map_err(err)?;
        for k in 0..8 {
            let t = k as f64 * 0.37 / omega_rabi_c;
            statics.push(driven.evaluate(t).map_err(err)?.into_matrix());
            statics.push(frame.h_rotating.evaluate(t).map_err(err)?.into_matrix());
        }
        let hermitian = statics.iter().map(hermitian_defect).fold(0.0, f64::max);

        let psi0 = QuantumState::basis(pair.clone(), &[1, 0]).map_err(err)?;
        let times: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25 / omega_rabi_c).collect();
        let mut drift = 0.0f64;
        for run in [
            propagate(&undriven, &psi0, &times).map_err(err)?,
            propagate(&frame.h_rotating, &psi0, &times[..2]).map_err(err)?,
            propagate(&frame.h_eff, &psi0, &times).map_err(err)?,
        ] {
            drift = drift.max(run.max_norm_drift);
            for s in &run.states {
                drift = drift.max((s.norm() - 1.0).abs());
            }
        }
        Ok((
            commutator == 0.0 && hermitian <= 1e-12 && drift <= 1e-6,
            format!("commutator {commutator:e}, Hermitian defect {hermitian:.1e}, norm drift {drift:.1e}"),
        ))
    });
}

fn hydrogen(suite: &mut Suite) {
    let budget = Duration::from_secs(30);
    let cut = 120.0;
    let panels = 240_000;

    suite.run("hydrogen normalization 1e-6 and orthogonality 1e-8", budget, || {
        let mut shape = 0.0f64;
        for k in 0..=600 {
            let z = k as f64 * 0.05;
            shape = shape.max((wavefunction(1, z, 1.0).abs() - psi1(z).abs()).abs());
            shape = shape.max((wavefunction(2, z, 1.0).abs() - psi2(z).abs()).abs());
        }
        let n1 = simpson(|z| wavefunction(1, z, 1.0).powi(2), 0.0, cut, panels);
        let n2 = simpson(|z| wavefunction(2, z, 1.0).powi(2), 0.0, cut, panels);
        let o12 = simpson(|z| wavefunction(1, z, 1.0) * wavefunction(2, z, 1.0), 0.0, cut, panels);
        let norm = (n1 - 1.0).abs().max((n2 - 1.0).abs());
        Ok((
            norm < 1e-6 && o12.abs() < 1e-8 && shape < 1e-12,
            format!("normalization {norm:.1e}, overlap {:.1e}, closed-form mismatch {shape:.1e}", o12.abs()),
        ))
    });

    suite.run("z_gg = 1.5 r_B, z_ee = 6 r_B, z_ge within 2% of 0.5587 r_B", budget, || {
        let d = dipole_elements_unperturbed(1.0).map_err(err)?;
        let gg = simpson(|z| psi1(z) * z * psi1(z), 0.0, cut, panels);
        let ee = simpson(|z| psi2(z) * z * psi2(z), 0.0, cut, panels);
        let ge = simpson(|z| psi1(z) * z * psi2(z), 0.0, cut, panels).abs();
        let agree = within(d.z_gg, gg, 1e-8) && within(d.z_ee, ee, 1e-8) && within(d.z_ge, ge, 1e-8);
        Ok((
            agree && within(d.z_gg, 1.5, 1e-8) && within(d.z_ee, 6.0, 1e-8) && within(d.z_ge, 0.5587, 0.02),
            format!("z_gg {:.8}, z_ee {:.8}, z_ge {:.6} r_B", d.z_gg, d.z_ee, d.z_ge),
        ))
    });

    suite.run("stark_solve at zero field matches the analytic spectrum to 1e-4", budget, || {
        let p = PhysicalParams { e_perp: 0.0, ..PhysicalParams::default() };
        let s = stark_solve(&p, GridSpec::default_for(bohr_radius(p.lambda_image))).map_err(err)?;
        let (e1, e2) = (energy_unperturbed(1, p.lambda_image), energy_unperturbed(2, p.lambda_image));
        let rel = ((s.e_ground - e1) / e1).abs().max(((s.e_excited - e2) / e2).abs());
        Ok((rel < 1e-4, format!("max relative error {rel:.2e}")))
    });
}

fn main() -> ExitCode {
    let mut suite = Suite { passed: 0, failed: Vec::new() };
    feasibility(&mut suite);
    dynamics(&mut suite);
    hydrogen(&mut suite);
    println!("{} passed, {} failed", suite.passed, suite.failed.len());
    if suite.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for name in &suite.failed {
            println!("failed: {name}");
        }
        ExitCode::FAILURE
    }
}
