use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spinsearch_core::composition::{symmetric_sandwich, Side};
use spinsearch_core::linalg::{
    conjugate, exp_skew, expm_unitary, hermiticity_residual, is_diagonal, log_unitary, max_diff,
    random_hermitian, unitarity_residual, SpinSystem,
};
use spinsearch_core::mq::{decompose_orders, gradient_crush, order_component, phase_cycle_project, zq_dephase};
use spinsearch_core::oracle::{diag_projector, oracle_uo, restrict_to_aux, selective_phase, MarkedState};
use spinsearch_core::sequences::{
    alpha_closed, alpha_recursion, conjugate_selective, conversion_coefficient,
    conversion_measured, grover_coefficients, initial_state, simple_search, SearchOptions,
};

fn herm(dim: usize, seed: u64) -> spinsearch_core::linalg::OperatorMatrix {
    random_hermitian(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn marked() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), 0..(1usize << n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn selective_phase_is_unitary_and_diagonal((n, s) in marked(), theta in -PI..PI) {
        let m = MarkedState::new(s, n).unwrap();
        let c = selective_phase(&m, theta);
        prop_assert!(unitarity_residual(&c) < 1e-12);
        prop_assert!((c[(s, s)] - C64::from_polar(1.0, -theta)).norm() < 1e-12);
    }

    #[test]
    fn oracle_sector_matches_selective_phase((n, s) in (1usize..=3).prop_flat_map(|n| (Just(n), 0..(1usize << n))), theta in -PI..PI) {
        let m = MarkedState::new(s, n).unwrap();
        let sys = SpinSystem::with_aux(n).unwrap();
        let uo = oracle_uo(&m, &sys, theta).unwrap();
        prop_assert!(max_diff(&restrict_to_aux(&uo, &sys, 0b01), &selective_phase(&m, theta)) < 1e-12);
    }

    #[test]
    fn closed_conjugation_matches_brute_force((n, s) in marked(), theta in -PI..PI, seed in any::<u64>()) {
        let m = MarkedState::new(s, n).unwrap();
        let rho = herm(1 << n, seed);
        let brute = conjugate(&selective_phase(&m, theta), &rho);
        prop_assert!(max_diff(&conjugate_selective(&rho, &m, theta), &brute) < 1e-10);
    }

    #[test]
    fn projector_is_idempotent((n, s) in marked()) {
        let d = diag_projector(&MarkedState::new(s, n).unwrap());
        prop_assert!(max_diff(&(&d * &d), &d) < 1e-12);
        prop_assert!((d.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exp_log_roundtrip(dim in prop::sample::select(vec![2usize, 4, 8]), seed in any::<u64>(), scale in 0.01f64..0.9) {
        let h = herm(dim, seed) * C64::new(scale, 0.0);
        let u = expm_unitary(&h, 1.0).unwrap();
        prop_assert!(unitarity_residual(&u) < 1e-12);
        let k = log_unitary(&u).unwrap();
        prop_assert!(hermiticity_residual(&(k.clone() * C64::new(0.0, -1.0))) < 1e-10);
        prop_assert!(max_diff(&exp_skew(&k).unwrap(), &u) < 1e-10);
    }

    #[test]
    fn orders_partition_the_operator(n in 1usize..=4, seed in any::<u64>()) {
        let sys = SpinSystem::work(n).unwrap();
        let a = herm(sys.dim(), seed);
        prop_assert!(max_diff(&decompose_orders(&a, &sys).reconstruct(), &a) < 1e-12);
        prop_assert!(max_diff(&gradient_crush(&a), &order_component(&a, &sys, 0)) < 1e-15);
        prop_assert!(is_diagonal(&zq_dephase(&gradient_crush(&a))));
    }

    #[test]
    fn phase_cycle_selects_one_order(n in 1usize..=4, seed in any::<u64>(), pick in 0usize..9, extra in 0usize..3) {
        let sys = SpinSystem::work(n).unwrap();
        let a = herm(sys.dim(), seed);
        let m = (pick % (2 * n + 1)) as i32 - n as i32;
        let p = phase_cycle_project(&a, &sys, 2 * n + 1 + extra, m).unwrap();
        prop_assert!(max_diff(&p, &order_component(&a, &sys, m)) < 1e-11);
    }

    #[test]
    fn too_few_phase_steps_alias(n in 1usize..=4, seed in any::<u64>()) {
        let sys = SpinSystem::work(n).unwrap();
        prop_assert!(phase_cycle_project(&herm(sys.dim(), seed), &sys, 2 * n, 0).is_err());
    }

    #[test]
    fn alpha_closed_form_matches_recursion(m in 0u32..40, n in 2usize..=8) {
        let a = alpha_closed(m, 1 << n);
        let b = alpha_recursion(m, 1 << n);
        for (x, y) in a.iter().zip(b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
        prop_assert!(grover_coefficients(m, 1 << n).unwrap().identity_residual() < 1e-8);
    }

    #[test]
    fn conversion_formula_matches_simulation((n, s) in (2usize..=4).prop_flat_map(|n| (Just(n), 0..(1usize << n))), m in 0u32..8, k in 1usize..=4, eps in prop::collection::vec(0.2f64..2.0, 4)) {
        let k = 1 + (k - 1) % n;
        let eps = &eps[..n];
        let marked = MarkedState::new(s, n).unwrap();
        let a = conversion_coefficient(m, 1 << n, eps, k).unwrap();
        let b = conversion_measured(&marked, m, eps, k).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn search_recovers_with_random_polarizations((n, s) in marked(), eps in prop::collection::vec(0.1f64..3.0, 4)) {
        let marked = MarkedState::new(s, n).unwrap();
        let r = simple_search(&marked, &eps[..n], &SearchOptions::default()).unwrap();
        prop_assert_eq!(r.recovered_s, s);
        prop_assert_eq!(r.oracle_calls, 2);
        prop_assert!(r.prefactor.proportionality_residual < 1e-10);
    }

    #[test]
    fn initial_state_is_traceless_hermitian(n in 1usize..=3, aux in any::<bool>(), eps in prop::collection::vec(-2.0f64..2.0, 3)) {
        let sys = if aux { SpinSystem::with_aux(n) } else { SpinSystem::work(n) }.unwrap();
        let st = initial_state(&sys, &eps[..n], spinsearch_core::linalg::Axis::Z).unwrap();
        prop_assert!(st.invariant_residual() < 1e-12);
    }

    #[test]
    fn sandwich_error_shrinks_cubically(seed in any::<u64>()) {
        let a = herm(4, seed) * C64::new(0.2, 0.0);
        let b = herm(4, seed.wrapping_add(1)) * C64::new(0.2, 0.0);
        let r = symmetric_sandwich(&a, &b, 0.2, Side::BOuter).unwrap();
        prop_assert!((r.fitted_order - 3.0).abs() < 0.3, "order {}", r.fitted_order);
    }
}
