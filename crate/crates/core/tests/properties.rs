mod common;

use common::{arb_block_primitive, arb_primitive};
use embedgame::classical::{
    dependent_entropies, dependent_part, entropy_report, is_trivial_primitive, Primitive,
};
use embedgame::discrimination::{
    bc98_error_lower_bound, conclusive_upper_bound, discrimination_stats,
    optimal_unambiguous_povm,
};
use embedgame::embedding::{
    build_regular_embedding, check_correct, classify_embedding, find_comparison_pair, Verdict,
};
use embedgame::game::{
    self, evaluate_strategy, separable_product_strategy, ComparisonStates,
};
use embedgame::linalg::{self, c};
use embedgame::quantum::{
    conditional_entropy, partial_trace, purify_choice, von_neumann_entropy, DensityOp, PureState,
};
use embedgame::random;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dependent_part_keeps_information(p in arb_primitive()) {
        let r = entropy_report(&p);
        let d = dependent_entropies(&p);
        prop_assert!((r.I_XY - d.dep_mutual_information).abs() <= 1e-9);
        prop_assert!((r.H_Y_given_X - d.other_given_dep).abs() <= 1e-9);
    }

    #[test]
    fn triviality_directions_agree(p in arb_primitive()) {
        let r = entropy_report(&p);
        prop_assert_eq!(r.H_dep_XY_given_Y <= 1e-9, r.H_dep_YX_given_X <= 1e-9);
        prop_assert!(is_trivial_primitive(&p).is_ok());
    }

    #[test]
    fn block_primitives_are_trivial(p in arb_block_primitive()) {
        prop_assert!(is_trivial_primitive(&p).unwrap());
    }

    #[test]
    fn dependent_part_is_idempotent(p in arb_primitive()) {
        let dep = dependent_part(&p);
        let coarse = p.coarse_grained(&dep);
        let again = dependent_part(&coarse);
        prop_assert_eq!(again.class_count(), coarse.x_len());
        for (x, class) in again.class_of.iter().enumerate() {
            prop_assert_eq!(*class, Some(x));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn regular_embeddings_are_correct(p in arb_primitive()) {
        prop_assume!(p.p_x().iter().all(|&w| w > 0.0));
        let e = build_regular_embedding(&p).unwrap();
        prop_assert!(check_correct(&e, &p).unwrap());
    }

    #[test]
    fn quantum_side_information_never_beats_classical(p in arb_primitive()) {
        prop_assume!(p.p_x().iter().all(|&w| w > 0.0));
        let e = build_regular_embedding(&p).unwrap();
        let cls = classify_embedding(&e).unwrap();
        let r = entropy_report(&p);
        prop_assert!(cls.s_dep_xy_given_b <= r.H_dep_XY_given_Y + 1e-6);
        if is_trivial_primitive(&p).unwrap() {
            prop_assert_eq!(cls.verdict, Verdict::Trivial);
        }
    }

    #[test]
    fn nontrivial_embeddings_have_a_comparison_pair(p in arb_primitive(), seed in any::<u64>()) {
        prop_assume!(p.p_x().iter().all(|&w| w > 0.0));
        // Random phases exercise embeddings other than the real one.
        let mut rng = rng_from(seed);
        let phases = (0..p.x_len())
            .map(|_| (0..p.y_len()).map(|_| rand::Rng::gen_range(&mut rng, 0.0..6.3)).collect())
            .collect();
        let e = embedgame::embedding::RegularEmbedding::with_phases(&p, phases).unwrap();
        if classify_embedding(&e).unwrap().verdict == Verdict::NonTrivial {
            let pair = find_comparison_pair(&e).unwrap();
            prop_assert!(pair.tau > 0.0 && pair.tau < 1.0);
        }
    }

    #[test]
    fn schmidt_symmetry(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = rng_from(seed);
        let psi = random::random_state(da * db, &mut rng);
        let rho = psi.projector().with_dims(vec![da, db]).unwrap();
        let sa = von_neumann_entropy(&partial_trace(&rho, &[0]).unwrap());
        let sb = von_neumann_entropy(&partial_trace(&rho, &[1]).unwrap());
        prop_assert!((sa - sb).abs() <= 1e-9);
    }

    #[test]
    fn partial_traces_compose(seed in any::<u64>(), dims in prop::collection::vec(1usize..=3, 3)) {
        let mut rng = rng_from(seed);
        let total: usize = dims.iter().product();
        let rho = DensityOp::mixture(
            &[0.5, 0.3, 0.2],
            &[
                random::random_state(total, &mut rng),
                random::random_state(total, &mut rng),
                random::random_state(total, &mut rng),
            ],
        )
        .unwrap()
        .with_dims(dims.clone())
        .unwrap();
        let stepwise = partial_trace(&partial_trace(&rho, &[0, 1]).unwrap(), &[0]).unwrap();
        let direct = partial_trace(&rho, &[0]).unwrap();
        prop_assert!((stepwise.matrix() - direct.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn measurement_probabilities_sum_to_one(seed in any::<u64>(), d in 1usize..=4, k in 1usize..=4) {
        let mut rng = rng_from(seed);
        let m = random::random_povm(d, k, &mut rng);
        let psi = random::random_state(d, &mut rng);
        let total: f64 = m.probabilities(&psi.projector()).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn conditional_entropy_bounds(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let mut rng = rng_from(seed);
        let psi = random::random_state(da * db, &mut rng);
        let rho = psi.projector().with_dims(vec![da, db]).unwrap();
        let s = conditional_entropy(&rho, &[0], &[1]).unwrap();
        prop_assert!(s >= -(da as f64).log2() - 1e-9);
        let classical_a = rho.dephase(0).unwrap();
        prop_assert!(conditional_entropy(&classical_a, &[0], &[1]).unwrap() >= -1e-9);
    }

    #[test]
    fn purified_choice_hides_the_bit(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let mut rng = rng_from(seed);
        let phi0 = random::random_state(2, &mut rng);
        let phi1 = random::random_state(2, &mut rng);
        let joint = purify_choice(p, &phi0, &phi1).unwrap();
        let reduced = partial_trace(&joint.projector(), &[1]).unwrap();
        let mixture = linalg::outer(phi0.amplitudes()).scale(p)
            + linalg::outer(phi1.amplitudes()).scale(1.0 - p);
        prop_assert!((reduced.matrix() - mixture).norm() <= 1e-10);
    }

    #[test]
    fn unambiguous_measurement_is_valid_and_exact(seed in any::<u64>(), tau in 0.05f64..0.95) {
        let mut rng = rng_from(seed);
        let psi0 = random::random_state(2, &mut rng);
        // A second state at overlap exactly tau, with a random relative phase.
        let perp = linalg::orthogonal_complement(&[psi0.amplitudes().clone()], 2);
        let phase = c(0.0, rand::Rng::gen_range(&mut rng, 0.0..6.3)).exp();
        let v = psi0.amplitudes() * c(tau, 0.0) + perp.column(0) * phase * c((1.0 - tau * tau).sqrt(), 0.0);
        let psi1 = PureState::new(vec![2], v).unwrap();
        let m = optimal_unambiguous_povm(&psi0, &psi1).unwrap();
        let (q_c, q_err) = discrimination_stats(&m, &psi0, &psi1).unwrap();
        prop_assert!(q_err <= 1e-10);
        prop_assert!((q_c - (1.0 - tau)).abs() <= 1e-9);
        prop_assert_eq!(bc98_error_lower_bound(1.0 - tau, tau).unwrap(), 0.0);
        let above = (1.0 - tau + 1e-3).min(1.0);
        prop_assert!(bc98_error_lower_bound(above, tau).unwrap() > 0.0);
    }

    #[test]
    fn random_measurements_obey_both_tradeoffs(seed in any::<u64>(), tau in 0.05f64..0.95) {
        let mut rng = rng_from(seed);
        let m = random::random_povm(2, 3, &mut rng);
        let psi0 = PureState::from_real(&[1.0, 0.0]).unwrap();
        let psi1 = PureState::from_real(&[tau, (1.0 - tau * tau).sqrt()]).unwrap();
        let (q_c, q_err) = discrimination_stats(&m, &psi0, &psi1).unwrap();
        prop_assert!(q_err + 1e-9 >= bc98_error_lower_bound(q_c.min(1.0), tau).unwrap());
        prop_assert!(q_c <= conclusive_upper_bound(q_err.min(1.0), tau).unwrap() + 1e-9);
    }

    #[test]
    fn conclusive_bound_is_monotone(q in 0.0f64..0.5, dq in 0.0f64..0.1, tau in 0.01f64..0.9, dt in 0.0f64..0.09) {
        let base = conclusive_upper_bound(q, tau).unwrap();
        prop_assert!(conclusive_upper_bound(q + dq, tau).unwrap() >= base - 1e-15);
        prop_assert!(conclusive_upper_bound(q, tau + dt).unwrap() <= base + 1e-15);
    }

    #[test]
    fn searched_strategies_respect_discrimination_tradeoff(seed in any::<u64>(), tau in 0.1f64..0.9, c_pen in 0.1f64..200.0) {
        let out = game::separable_search(tau, c_pen, 20, seed).unwrap();
        let r = out.best;
        prop_assert!(r.q_c <= conclusive_upper_bound(r.q_err.min(1.0), tau).unwrap() + 1e-9);
    }
}

#[test]
fn realized_gap_dominates_certified_gap() {
    for tau in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let st = ComparisonStates::canonical(tau).unwrap();
        let cert = game::gap_certificate(tau).unwrap();
        let coherent = game::coherent_optimal_comparison(st.psi(0), st.psi(1)).unwrap();
        let product = separable_product_strategy(st.psi(0), st.psi(1)).unwrap();
        let a = evaluate_strategy(&coherent, &st, cert.c_star).unwrap().payoff;
        let b = evaluate_strategy(&product, &st, cert.c_star).unwrap().payoff;
        assert!((a - b - tau * (1.0 - tau)).abs() <= 1e-6);
        assert!(a - b >= cert.f_tau);
        // Zero-error frontier.
        assert!(a <= 1.0 - tau + 1e-9);
    }
}

#[test]
fn coin_primitive_fixture_is_valid() {
    let p: Primitive = common::coin();
    assert!(is_trivial_primitive(&p).unwrap());
}
