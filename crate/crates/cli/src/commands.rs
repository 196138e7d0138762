use std::f64::consts::PI;

use helium_jc::dynamics::{jc_exact, ld_check, propagate, rwa_check, strong_driving_check};
use helium_jc::hamiltonians::h_jc;
use helium_jc::hydrogen::{
    bohr_radius, stark_solve, unperturbed_transition, HydrogenSummary, GRID_CONVERGENCE_TOL,
};
use helium_jc::operators::QUBIT;
use helium_jc::states::{
    analyze, measure_qubit, prepare_cat, prepare_coherent_dynamically, wigner_grid,
    write_distribution_csv, WignerSpec, TAIL_LIMIT,
};
use helium_jc::{
    FeasibilityReport, ModelFrequencies, PhysicalParams, QuantumState, TensorSpace, TransitionData,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, Target};
use crate::error::{CliError, CliResult};
use crate::output::{Check, OutDir};

pub const PREPARATION_INFIDELITY_LIMIT: f64 = 1e-8;
pub const RABI_AGREEMENT_LIMIT: f64 = 1e-8;

/// Reported along with every feasibility table: the quoted in-plane
/// localization length disagrees with `√(ℏ/(m_e ν))`.
pub const LOC_LENGTH_NOTE: &str = "loc_length is sqrt(hbar/(m_e nu)), about 34 nm at the default field; \
the published value of about 0.3 nm does not follow from that formula";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Ld,
    Rwa,
    StrongDrive,
}

pub struct Run<'a> {
    pub config: &'a RunConfig,
    pub no_stark: bool,
    pub quiet: bool,
    pub out: OutDir,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Run<'_> {
    fn say(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    pub fn transition_source(&self) -> &'static str {
        if self.no_stark {
            "unperturbed"
        } else {
            "stark"
        }
    }

    fn transition(&self, params: &PhysicalParams) -> CliResult<(TransitionData, Option<HydrogenSummary>)> {
        if self.no_stark {
            return Ok((unperturbed_transition(params.lambda_image)?, None));
        }
        let grid = self.config.grid.spec(bohr_radius(params.lambda_image));
        let solution = stark_solve(params, grid)?;
        Ok((solution.transition(), Some(solution.summary())))
    }

    fn report(&self) -> CliResult<FeasibilityReport> {
        let (transition, _) = self.transition(&self.config.params)?;
        Ok(FeasibilityReport::evaluate(&self.config.params, &transition)?)
    }

    pub fn feasibility(&mut self) -> CliResult<()> {
        self.say("solving the vertical Stark problem");
        let params = &self.config.params;
        let (transition, hydrogen) = self.transition(params)?;
        let report = FeasibilityReport::evaluate(params, &transition)?;
        if let Some(h) = &hydrogen {
            self.checks.push(Check::at_most("grid_shift", h.grid_shift, GRID_CONVERGENCE_TOL));
        }
        self.notes.push(LOC_LENGTH_NOTE.into());

        let rows = feasibility_rows(&report);
        let figures: serde_json::Map<String, serde_json::Value> =
            report.entries().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let quoted: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| json!({ "name": r.name, "value": r.value, "unit": r.unit, "quoted": r.quoted }))
            .collect();
        self.out.write_json(
            "report.json",
            &json!({
                "transition_source": self.transition_source(),
                "figures": figures,
                "table": quoted,
                "hydrogen": hydrogen,
            }),
        )?;
        self.out.write_bytes("report.txt", render_report(&rows).as_bytes())?;
        Ok(())
    }

    pub fn rabi(&mut self) -> CliResult<()> {
        let report = self.report()?;
        let omega_rabi_c = report.omega_rabi_c;
        let dim = self.config.truncation.n_c;
        let (m, qubit) = (self.config.rabi.m, self.config.rabi.qubit);
        let space = TensorSpace::qubit_cavity(dim)?;
        let freqs = ModelFrequencies::resonant(report.omega_a, omega_rabi_c, 0.0, 0.0);
        let h = h_jc(&freqs, &space)?;
        let times = self.config.time.times(omega_rabi_c);
        self.say(&format!("propagating |{m},{qubit}> over {} samples", times.len()));
        let psi0 = QuantumState::basis(space, &[qubit.index(), m])?;
        let run = propagate(&h, &psi0, &times)?;
        let numeric = run.observable("p_excited").unwrap_or_default();

        let mut rows = Vec::with_capacity(times.len());
        let mut worst = 0.0f64;
        for (k, &t) in times.iter().enumerate() {
            let exact = jc_exact(m, qubit, omega_rabi_c, t, dim)?.populations(QUBIT)?[1];
            let diff = (exact - numeric[k]).abs();
            worst = worst.max(diff);
            rows.push(vec![t, omega_rabi_c * t, exact, numeric[k], diff]);
        }
        self.checks.push(Check::at_most("rabi_exact_vs_numeric", worst, RABI_AGREEMENT_LIMIT));
        self.checks.push(Check::at_most("norm_drift", run.max_norm_drift, helium_jc::dynamics::NORM_DRIFT_LIMIT));
        self.out.write_table("rabi.csv", &["t", "tau", "p_excited_exact", "p_excited_numeric", "abs_diff"], &rows)
    }

    pub fn prepare(&mut self) -> CliResult<()> {
        let report = self.report()?;
        let p = self.config.prepare;
        let dim = self.config.truncation.n_c;
        let t = p.t_rabi / report.omega_rabi_c;
        self.say(&format!("preparing {:?} at tau = {}", p.target, p.t_rabi));
        let prepared = match p.target {
            Target::Coherent => prepare_coherent_dynamically(report.omega_rabi_c, t, dim)?,
            Target::Cat => prepare_cat(report.omega_rabi_c, t, dim)?,
        };
        let (cavity, probability) = match p.measure.level() {
            Some(level) => {
                let (state, prob) = measure_qubit(&prepared.joint, level)?;
                (state, Some(prob))
            }
            None => (prepared.cavity.clone(), None),
        };
        let analysis = analyze(&cavity)?;
        let fidelity = 1.0 - prepared.infidelity;
        self.checks.push(Check::at_least("preparation_fidelity", fidelity, 1.0 - PREPARATION_INFIDELITY_LIMIT));
        self.checks.push(Check::at_most("tail_population", prepared.joint.tail_population(), TAIL_LIMIT));

        self.out.write_with("distribution.csv", |buf| write_distribution_csv(&analysis.photon_distribution, buf))?;
        self.out.write_json(
            "analysis.json",
            &PrepareSummary {
                target: p.target,
                t_rabi: p.t_rabi,
                alpha: [prepared.alpha.re, prepared.alpha.im],
                infidelity: prepared.infidelity,
                fidelity,
                measure: p.measure,
                outcome_probability: probability,
                parity: analysis.parity,
                mean_n: analysis.mean_n,
                purity: analysis.purity,
                tail_population: analysis.tail_population,
            },
        )?;
        self.out.write_json("state.json", &prepared.joint.to_json())?;
        if p.wigner {
            let radius = p.wigner_radius.unwrap_or(prepared.alpha.norm() + 3.0);
            let grid = wigner_grid(&cavity, &WignerSpec::covering(radius, p.wigner_resolution))?;
            self.out.write_with("wigner.csv", |buf| grid.write_csv(buf))?;
        }
        Ok(())
    }

    pub fn validate(&mut self, which: Which) -> CliResult<()> {
        let report = self.report()?;
        let v = &self.config.validate;
        let n_c = self.config.truncation.n_c;
        let (name, header, rows): (&str, Vec<&str>, Vec<Vec<f64>>) = match which {
            Which::Ld => {
                let freqs = ModelFrequencies::from_report(&report, 0.0);
                let t = v.ld.t_rabi / report.omega_rabi_c;
                let dims = (n_c, self.config.truncation.n_v);
                self.say(&format!("Lamb-Dicke check at {} points", v.ld.etas.len()));
                let values = v
                    .ld
                    .etas
                    .par_iter()
                    .map(|&eta| ld_check(&freqs, &[eta], t, dims).map(|r| vec![eta, r[0]]))
                    .collect::<helium_jc::Result<Vec<_>>>()?;
                ("validate_ld.csv", vec!["eta", "infidelity"], values)
            }
            Which::Rwa => {
                let tilde = report.omega_rabi_c_tilde / report.omega_rabi_c;
                let omega = report.omega_a;
                let initial = (v.rwa.m, v.rwa.qubit);
                self.say(&format!("RWA check at {} points", v.rwa.ratios.len()));
                let values = v
                    .rwa
                    .ratios
                    .par_iter()
                    .map(|&r| {
                        let oc = r * omega;
                        let mut f = ModelFrequencies::resonant(omega, oc, 0.0, 0.0);
                        f.omega_rabi_c_tilde = tilde * oc;
                        rwa_check(&f, v.rwa.t_rabi / oc, n_c, initial).map(|inf| vec![r, oc, inf])
                    })
                    .collect::<helium_jc::Result<Vec<_>>>()?;
                ("validate_rwa.csv", vec!["ratio", "omega_rabi_c", "infidelity"], values)
            }
            Which::StrongDrive => {
                let oc = report.omega_rabi_c;
                let t = v.strong_drive.t_rabi / oc;
                self.say(&format!("strong-drive check at {} points", v.strong_drive.ratios.len()));
                let values = v
                    .strong_drive
                    .ratios
                    .par_iter()
                    .map(|&r| strong_driving_check(oc, r * oc, t, n_c).map(|inf| vec![r, inf]))
                    .collect::<helium_jc::Result<Vec<_>>>()?;
                ("validate_strong_drive.csv", vec!["ratio", "infidelity"], values)
            }
        };
        self.out.write_table(name, &header, &rows)
    }

    pub fn sweep(&mut self) -> CliResult<()> {
        let sweep = &self.config.sweep;
        self.say(&format!("feasibility sweep over {} at {} points", sweep.parameter, sweep.values.len()));
        let params: Vec<PhysicalParams> =
            sweep.values.iter().map(|&x| self.config.swept_params(x)).collect::<CliResult<_>>()?;
        for p in &params {
            p.validate().map_err(|e| CliError::Config(format!("sweep point: {e}")))?;
        }
        let reports = params
            .par_iter()
            .map(|p| {
                let (transition, _) = self.transition(p)?;
                Ok(FeasibilityReport::evaluate(p, &transition)?)
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut header = vec![sweep.parameter.as_str()];
        header.extend(FeasibilityReport::ENTRY_NAMES);
        let rows: Vec<Vec<f64>> = sweep
            .values
            .iter()
            .zip(&reports)
            .map(|(x, r)| std::iter::once(*x).chain(r.entries().into_iter().map(|e| e.1)).collect())
            .collect();
        self.out.write_table("sweep.csv", &header, &rows)
    }
}

#[derive(Serialize)]
struct PrepareSummary {
    target: Target,
    t_rabi: f64,
    alpha: [f64; 2],
    infidelity: f64,
    fidelity: f64,
    measure: crate::config::Measure,
    outcome_probability: Option<f64>,
    parity: f64,
    mean_n: f64,
    purity: f64,
    tail_population: f64,
}

struct Row {
    name: &'static str,
    value: f64,
    unit: &'static str,
    quoted: &'static str,
}

fn feasibility_rows(r: &FeasibilityReport) -> Vec<Row> {
    let hz = 1.0 / (2.0 * PI);
    let row = |name, value, unit, quoted| Row { name, value, unit, quoted };
    vec![
        row("bohr_radius", r.bohr_radius, "m", "76 Angstrom"),
        row("nu/2pi", r.nu * hz, "Hz", "16 GHz"),
        row("omega_a/2pi", r.omega_a * hz, "Hz", "0.27 THz"),
        row("eta_c", r.eta_c, "", "1e-4"),
        row("omega_rabi_c", r.omega_rabi_c, "rad/s", ""),
        row("omega_rabi_c_tilde", r.omega_rabi_c_tilde, "rad/s", ""),
        row("omega_rabi_l", r.omega_rabi_l, "rad/s", ""),
        row("omega_rabi_l_tilde", r.omega_rabi_l_tilde, "rad/s", ""),
        row("g0", r.g0, "rad/s", "33 MHz"),
        row("kappa", r.kappa, "rad/s", "1.1 MHz"),
        row("n0", r.n0, "", "4.6e-8"),
        row("cap_n0", r.cap_n0, "", "2e-5"),
        row("p0", r.p0, "", "> 0.96"),
        row("mode_volume", r.mode_volume, "m^3", "3.14e-4 mm^3"),
        row("loc_length", r.loc_length, "m", "0.3 nm (inconsistent with formula)"),
    ]
}

fn render_report(rows: &[Row]) -> String {
    let mut out = format!("{:<20} {:>24} {:<6} {}\n", "quantity", "value", "unit", "quoted");
    for r in rows {
        out.push_str(&format!("{:<20} {:>24.16e} {:<6} {}\n", r.name, r.value, r.unit, r.quoted));
    }
    out.push('\n');
    out.push_str(LOC_LENGTH_NOTE);
    out.push('\n');
    out
}
