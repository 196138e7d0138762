use helium_jc::dynamics::{jc_exact, propagate};
use helium_jc::hamiltonians::h_jc;
use helium_jc::hydrogen::{bohr_radius, stark_solve, unperturbed_transition};
use helium_jc::states::{analyze, measure_qubit, prepare_cat, prepare_coherent_dynamically, wigner_grid, WignerSpec};
use helium_jc::{FeasibilityReport, GridSpec, ModelFrequencies, PhysicalParams, QuantumState, QubitLevel, TensorSpace};
use proptest::prelude::*;

#[test]
fn report_feeds_jc_dynamics() {
    let p = PhysicalParams::default();
    let s = stark_solve(&p, GridSpec::default_for(bohr_radius(p.lambda_image))).unwrap();
    let r = FeasibilityReport::evaluate(&p, &s.transition()).unwrap();
    let space = TensorSpace::qubit_cavity(8).unwrap();
    let f = ModelFrequencies::from_report(&r, 0.0);
    let h = h_jc(&f, &space).unwrap();
    let psi0 = QuantumState::basis(space, &[1, 0]).unwrap();
    let t = 0.7 / r.omega_rabi_c;
    let run = propagate(&h, &psi0, &[0.0, t]).unwrap();
    let exact = jc_exact(0, QubitLevel::Excited, r.omega_rabi_c, t, 8).unwrap();
    let d = run.states[1].vector().unwrap() - exact.vector().unwrap();
    assert!(d.norm() < 1e-10);
}

#[test]
fn stark_shift_raises_transition() {
    let p = PhysicalParams::default();
    let s = stark_solve(&p, GridSpec::default_for(bohr_radius(p.lambda_image))).unwrap();
    let free = unperturbed_transition(p.lambda_image).unwrap();
    assert!(s.omega_a > free.omega_a);
    // The holding field presses both levels toward the surface.
    assert!(s.z_ee - s.z_gg < free.z_ee - free.z_gg);
}

#[test]
fn cat_wigner_has_fringes() {
    let cat = prepare_cat(1.0, 1.5, 40).unwrap();
    let (even, _) = measure_qubit(&cat.joint, QubitLevel::Ground).unwrap();
    let grid = wigner_grid(&even, &WignerSpec::covering(4.5, 91)).unwrap();
    assert!(grid.min() < -0.1);
    assert!((grid.integral() - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coherent_preparation_is_poissonian(tau in 0.0f64..2.5) {
        let prep = prepare_coherent_dynamically(1.0, tau, 40).unwrap();
        prop_assert!(prep.infidelity < 1e-10);
        let a = analyze(&prep.cavity).unwrap();
        prop_assert!((a.mean_n - tau * tau).abs() < 1e-8);
        prop_assert!((a.parity - (-2.0 * tau * tau).exp()).abs() < 1e-8);
        prop_assert!((a.purity - 1.0).abs() < 1e-8);
    }
}
