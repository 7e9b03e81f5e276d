use cbwk::dual::DualState;
use cbwk::env::{make_appendix_c_env, LinkFunction, OutcomeMode};
use cbwk::lp::{brute_force_opt, exact_opt_fixed_context};
use cbwk::oracles::{OnlinePredictor, OracleKind};
use cbwk::policy::{igw_distribution, run_squarecbwk, PolicyConfig};
use cbwk::twostage::empirical_opt_from_tables;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn igw_is_a_shift_invariant_distribution(
        scores in prop::collection::vec(-10.0f64..10.0, 1..12),
        gamma in 0.0f64..1000.0,
        shift in -50.0f64..50.0,
    ) {
        let p = igw_distribution(&scores, gamma);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let q = igw_distribution(&shifted, gamma);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn simplex_matches_brute_force(
        k in 1usize..=3,
        d in 1usize..=2,
        seed in any::<u64>(),
        rate in 0.05f64..=1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let g: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let lp = exact_opt_fixed_context(&f, &g, rate).ok();
        let bf = brute_force_opt(&f, &g, rate, 30).unwrap();
        match (lp, bf) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}"),
            (None, None) => {}
            other => prop_assert!(false, "feasibility differs: {other:?}"),
        }
    }

    #[test]
    fn dual_stays_in_the_scaled_simplex(
        costs in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..200),
        z in 0.1f64..50.0,
        rate in 0.0f64..1.0,
    ) {
        let mut dual = DualState::new(3, z, 1000).unwrap();
        for c in &costs {
            dual.update(c, rate).unwrap();
            let w = dual.weights();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            let l = dual.lambda();
            prop_assert!(l.iter().all(|x| *x >= 0.0) && l.iter().sum::<f64>() <= z * (1.0 + 1e-12));
        }
    }

    #[test]
    fn empirical_program_ignores_context_order(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewards: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
        let costs: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| (0..3).map(|_| (0..2).map(|_| rng.random()).collect()).collect())
            .collect();
        let rhs = rng.random_range(0.3..1.0);
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(n / 2);
        let r2: Vec<_> = order.iter().map(|&i| rewards[i].clone()).collect();
        let c2: Vec<_> = order.iter().map(|&i| costs[i].clone()).collect();
        match (empirical_opt_from_tables(&rewards, &costs, rhs), empirical_opt_from_tables(&r2, &c2, rhs)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn iterates_stay_in_the_unit_ball_under_adversarial_updates() {
    for kind in [OracleKind::GlmtronNewton, OracleKind::Ogd] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut o = OnlinePredictor::new(kind, 4, LinkFunction::Identity);
        for _ in 0..100_000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = if rng.random::<bool>() { 50.0 } else { -50.0 };
            o.update(&x, y).unwrap();
            assert!(o.theta().norm() <= 1.0 + 1e-9, "{kind:?}: {}", o.theta().norm());
        }
    }
}

#[test]
fn consumption_stays_below_the_exit_threshold_until_the_last_round() {
    let env = make_appendix_c_env(10, 3, 4, 0.2)
        .unwrap()
        .with_mode(OutcomeMode::Bounded)
        .with_budget(1500, 600.0)
        .unwrap();
    for seed in 0..10 {
        let t = run_squarecbwk(&env, &PolicyConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut spent = [0.0; 4];
        for (i, r) in t.rounds.iter().enumerate() {
            if i + 1 < t.rounds.len() {
                spent.iter_mut().zip(&r.outcome.cost).for_each(|(s, c)| *s += c);
                assert!(spent.iter().all(|s| *s < 599.0), "seed {seed} round {}", r.round);
            }
        }
        assert!(t.cumulative_cost.iter().all(|c| *c < 600.0));
        assert_eq!(t.diagnostics.reward_updates, t.stopping_time);
    }
}
