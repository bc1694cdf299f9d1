use approx::assert_abs_diff_eq;
use cvqkd_core::attacks::{
    chi_collective_part, chi_cross_part, eve_information, hybrid_bundle_circuit, hybrid_bundle_closed_form,
    hybrid_circuit_state, BOB, INDIVIDUAL_1, INDIVIDUAL_2,
};
use cvqkd_core::finite_size::{asymptotic_key_rate, pe_worstcase_channel};
use cvqkd_core::gaussian::symplectic_form;
use cvqkd_core::optimize::{maximize_over_mu, MU_TOL};
use cvqkd_core::{AttackClass, CovarianceMatrix, Execution, MemoryParams, Quadrature, SystemModel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = SystemModel> {
    (
        1.01f64..50.0,
        0.01f64..0.99,
        0.0f64..0.1,
        0.3f64..0.99,
        0.0f64..0.1,
        (0.0f64..=1.0, 0.0f64..=1.0, 1.0f64..3.0, 1.0f64..3.0),
    )
        .prop_map(|(v, t, xi, eta, v_el, (tau1, tau2, omega1, omega2))| {
            SystemModel::new(v, t, xi, eta, v_el, MemoryParams { tau1, tau2, omega1, omega2 }).unwrap()
        })
}

fn mu() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]
}

fn assert_physical(cm: &CovarianceMatrix) {
    let spec = cm.symplectic_eigenvalues().unwrap();
    assert!(spec.min() >= 1.0 - 1e-7, "{:?}", spec.eigenvalues());
}

/// Symplectic spectrum from the moduli of the eigenvalues of `Omega M`,
/// an eigen-route distinct from the library's SVD route.
fn spectrum_by_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let omega = symplectic_form(m.nrows() / 2);
    let mut moduli: Vec<f64> = (omega * m).complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    moduli.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_circuit(m in model(), mu in mu()) {
        let a = hybrid_bundle_closed_form(&m, mu).unwrap();
        let b = hybrid_bundle_circuit(&m, mu).unwrap();
        assert_abs_diff_eq!(a.memory.entries(), b.memory.entries(), epsilon = 1e-9);
        assert_abs_diff_eq!(a.individual.entries(), b.individual.entries(), epsilon = 1e-9);
        assert_abs_diff_eq!(&a.memory_individual, &b.memory_individual, epsilon = 1e-9);
        assert_abs_diff_eq!(&a.memory_bob, &b.memory_bob, epsilon = 1e-9);
        assert_abs_diff_eq!(&a.bob_individual, &b.bob_individual, epsilon = 1e-9);
        assert_abs_diff_eq!(a.bob_variance, b.bob_variance, epsilon = 1e-9);
    }

    #[test]
    fn every_intermediate_matrix_is_physical(m in model(), mu in mu()) {
        let b = hybrid_bundle_closed_form(&m, mu).unwrap();
        assert_physical(&b.memory);
        assert_physical(&b.individual);
        assert_physical(&b.joint().unwrap());
        let split = b.joint_split_bob().unwrap();
        assert_physical(&split);
        assert_physical(&b.eve_joint().unwrap());
        let cond = split.condition_on_homodyne(&[
            (INDIVIDUAL_1, Quadrature::Q),
            (INDIVIDUAL_2, Quadrature::P),
            ("B3", Quadrature::Q),
            ("C", Quadrature::P),
        ]).unwrap();
        assert_physical(&cond);
        let cross = b.eve_joint().unwrap().condition_on_homodyne(&[
            (INDIVIDUAL_1, Quadrature::Q),
            (INDIVIDUAL_2, Quadrature::P),
        ]).unwrap();
        assert_physical(&cross);
    }

    #[test]
    fn circuit_is_pure(m in model(), mu in mu()) {
        let s = hybrid_circuit_state(&m, mu).unwrap();
        assert_abs_diff_eq!(s.entropy().unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn heterodyne_routes_agree(m in model(), mu in mu()) {
        let joint = hybrid_bundle_closed_form(&m, mu).unwrap().joint().unwrap();
        let a = joint.condition_on_heterodyne(BOB).unwrap();
        let b = joint.condition_on_heterodyne_by_dilation(BOB).unwrap();
        assert_abs_diff_eq!(a.entries(), b.entries(), epsilon = 1e-9);
    }

    #[test]
    fn spectrum_matches_eigenvalue_route(m in model(), mu in mu()) {
        let joint = hybrid_bundle_closed_form(&m, mu).unwrap().joint().unwrap();
        let lib = joint.symplectic_eigenvalues().unwrap();
        let reference = spectrum_by_eigenvalues(joint.entries());
        for (a, b) in lib.eigenvalues().iter().zip(&reference) {
            // Clamping at 1 only moves values by < 1e-7.
            assert!((a - b).abs() < 1e-6 * b.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn beamsplitters_preserve_spectrum(m in model(), t in 0.0f64..=1.0) {
        let joint = hybrid_bundle_closed_form(&m, 0.4).unwrap().joint().unwrap();
        let before = joint.symplectic_eigenvalues().unwrap();
        let after = joint.beamsplitter("E'1", BOB, t).unwrap()
            .beamsplitter(INDIVIDUAL_2, "E'2", 1.0 - t).unwrap()
            .symplectic_eigenvalues().unwrap();
        for (a, b) in before.eigenvalues().iter().zip(after.eigenvalues()) {
            assert!((a - b).abs() < 1e-8 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn holevo_terms_nonnegative(m in model(), mu in mu()) {
        let b = hybrid_bundle_closed_form(&m, mu).unwrap();
        let coll = chi_collective_part(&b).unwrap();
        let cross = chi_cross_part(&b).unwrap();
        prop_assert!(coll >= -1e-9 && cross >= -1e-9, "{coll} {cross}");
        prop_assert!(eve_information(&m, mu).unwrap().total >= -1e-9);
    }

    #[test]
    fn pe_is_adverse(m in model(), log_n in 6.0f64..12.0) {
        if let Ok(e) = pe_worstcase_channel(&m, 10f64.powf(log_n), 1e-10) {
            prop_assert!(e.t <= m.t);
            prop_assert!(e.xi >= m.xi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn max_over_mu_dominates_endpoints(m in model()) {
        let f = |mu: f64| Ok(eve_information(&m, mu)?.total);
        let best = maximize_over_mu(f, MU_TOL, Execution::Sequential).unwrap();
        prop_assert!(best.value >= f(0.0).unwrap() - 1e-12);
        prop_assert!(best.value >= f(1.0).unwrap() - 1e-12);
    }
}

fn fig2(v: f64, tau: f64, xi: f64) -> SystemModel {
    SystemModel::new(v, 0.1, xi, 0.6, 0.015, MemoryParams::symmetric(tau, 1.0)).unwrap()
}

#[test]
fn memory_transmissivity_never_hurts_eve() {
    for v in [2.0, 5.0, 20.0] {
        for mu in [0.1, 0.5, 0.9, 1.0] {
            let mut last = f64::NEG_INFINITY;
            for k in 0..=50 {
                let e = eve_information(&fig2(v, k as f64 / 50.0, 0.01), mu).unwrap().total;
                assert!(e >= last - 1e-12, "V={v} mu={mu} tau={}", k as f64 / 50.0);
                last = e;
            }
        }
    }
}

#[test]
fn asymptotic_rates_monotone_in_noise_and_memory() {
    for attack in AttackClass::ALL {
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let xi = 0.005 * k as f64;
            let r = asymptotic_key_rate(&fig2(4.0, 0.5, xi), attack, 0.98, Execution::Sequential).unwrap().rate;
            assert!(r <= last + 1e-12, "{attack} xi = {xi}");
            last = r;
        }
    }
    let mut last = f64::INFINITY;
    for k in 0..=20 {
        let tau = k as f64 / 20.0;
        let r = asymptotic_key_rate(&fig2(4.0, tau, 0.01), AttackClass::Hybrid, 0.98, Execution::Sequential).unwrap().rate;
        assert!(r <= last + 1e-12, "tau = {tau}");
        last = r;
    }
}
