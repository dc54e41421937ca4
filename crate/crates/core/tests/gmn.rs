mod common;

use common::*;
use gmn_robustness::linalg::{self, negativity};
use gmn_robustness::{
    apply_local_channel, build_program, genuine_negativity, named_state, verify_certificate,
    ChannelKind, ComplexMatrix, Formulation, GmnOptions, GmnResult, NamedState, Strategy,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn gmn(rho: &ComplexMatrix, n: usize) -> GmnResult {
    let r = genuine_negativity(rho, n, &GmnOptions::default()).unwrap();
    assert!(r.certificate_ok, "{:?}", r.diagnostics);
    assert!(verify_certificate(&r, rho).passed);
    r
}

fn density(s: NamedState) -> ComplexMatrix {
    named_state(s).unwrap().to_density().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn two_qubit_value_is_the_negativity(seed in any::<u64>(), rank in 1usize..5) {
        let rho = random_density(2, rank, &mut rng(seed));
        let e = gmn(&rho, 2).value;
        let neg = negativity(&rho, &[0], 2).unwrap();
        prop_assert!((e - neg).abs() <= 1e-6, "{e} vs {neg}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bounded_by_one_half(seed in any::<u64>(), rank in 1usize..4) {
        let rho = random_density(3, rank, &mut rng(seed));
        prop_assert!(gmn(&rho, 3).value <= 0.5 + 1e-7);
    }

    #[test]
    fn invariant_under_local_unitaries(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random_density(3, 1, &mut r);
        let u = local_unitary(3, &mut r);
        let rotated = linalg::hermitian_part(&(&u * &rho * u.adjoint()));
        let (a, b) = (gmn(&rho, 3).value, gmn(&rotated, 3).value);
        prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }

    #[test]
    fn convex_in_the_state(seed in any::<u64>(), p in 0.05f64..0.95) {
        let mut r = rng(seed);
        let (a, b) = (random_density(3, 1, &mut r), random_density(3, 1, &mut r));
        let mix = linalg::hermitian_part(&(&a * Complex64::new(p, 0.0) + &b * Complex64::new(1.0 - p, 0.0)));
        let bound = p * gmn(&a, 3).value + (1.0 - p) * gmn(&b, 3).value;
        prop_assert!(gmn(&mix, 3).value <= bound + 1e-6);
    }
}

#[test]
fn biseparable_mixtures_score_zero() {
    let mut r = rng(5);
    for (n, count) in [(3, 20), (4, 3)] {
        for i in 0..count {
            let rho = biseparable_mixture(n, 2 + i % 4, &mut r);
            let e = gmn(&rho, n).value;
            assert!(e <= 1e-6, "n={n} #{i}: {e}");
        }
    }
}

#[test]
fn three_qubit_named_states_decay_monotonically() {
    for st in [
        NamedState::Ghz(3),
        NamedState::W(3),
        NamedState::Ghz3b,
        NamedState::W3b,
    ] {
        let rho0 = density(st);
        for kind in ALL_CHANNELS {
            let mut last = f64::INFINITY;
            for k in 0..6 {
                let s = 0.12 * k as f64;
                let e = gmn(&apply_local_channel(&rho0, kind, s, 3).unwrap(), 3).value;
                assert!(e <= last + 1e-7, "{st:?} {kind} s={s}: {e} after {last}");
                last = e;
            }
        }
    }
}

#[test]
fn standard_program_objective_for_ghz3() {
    let prog = build_program(&density(NamedState::Ghz(3)), 3, Formulation::Standard, true).unwrap();
    let sol = densesdp::solve(prog.problem(), &Default::default()).unwrap();
    assert_eq!(sol.status, densesdp::SdpStatus::Optimal);
    assert!(
        (sol.primal_objective + 0.5).abs() < 1e-7,
        "{}",
        sol.primal_objective
    );
}

#[test]
fn formulations_and_bases_agree_on_four_qubits() {
    let rho = apply_local_channel(
        &density(NamedState::Cluster4),
        ChannelKind::PhaseDamping,
        0.2,
        4,
    )
    .unwrap();
    let reference = gmn(&rho, 4).value;
    for (strategy, real) in [
        (Strategy::Only(Formulation::Standard), true),
        (Strategy::Only(Formulation::Multiplier), false),
    ] {
        let opts = GmnOptions {
            strategy,
            real_reduction: real,
            ..Default::default()
        };
        let r = genuine_negativity(&rho, 4, &opts).unwrap();
        assert!(r.certificate_ok, "{:?}", r.diagnostics);
        assert_eq!(r.solver.real_basis, real);
        assert!(
            (r.value - reference).abs() < 1e-7,
            "{strategy:?}: {} vs {reference}",
            r.value
        );
    }
}

#[test]
fn decomposition_respects_bounds_and_multipliers_are_nonnegative() {
    let r = gmn(&density(NamedState::W(3)), 3);
    assert_eq!(r.decompositions.len(), 3);
    for d in &r.decompositions {
        let (a, b) = d.upper_bound_multipliers;
        assert!(a >= -1e-8 && b >= -1e-8, "{a} {b}");
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut rho = density(NamedState::Ghz(3));
    assert!(genuine_negativity(&rho, 2, &GmnOptions::default()).is_err());
    rho[(0, 1)] += Complex64::new(0.1, 0.0);
    assert!(genuine_negativity(&rho, 3, &GmnOptions::default()).is_err());
}
