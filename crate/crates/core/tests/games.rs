//! Distinguishers against closed-form predictions and the exact quadratic
//! battery advantage.

use forrlab::boolfn::{character, sample_uniform_fn};
use forrlab::fordist::{forrelation_value, sample_conditional_g};
use forrlab::games::{
    estimate_advantage, low_degree_advantage, random_battery, shifted_game_batch,
    shifted_statistic, swap_test_predicted_advantage, CoinFlip, OverlapBruteforce, QuadraticTest,
    ShiftSide, SwapTestDistinguisher,
};
use forrlab::{
    rng_from_seed, ChallengeLaw, ForrelationParams, HybridParams, KeyedEnsemble, OracleSpec,
    Workers,
};

#[test]
fn overlap_bruteforce_separates_h0_from_h4() {
    let params = HybridParams::new(8, 4, None).unwrap();
    let est = estimate_advantage(
        &OverlapBruteforce::default(),
        ChallengeLaw::Hybrid(0),
        ChallengeLaw::Hybrid(4),
        &params,
        200,
        1,
        Workers(2),
    )
    .unwrap();
    assert_eq!(est.p_a, 1.0);
    assert!(est.advantage >= 0.9, "{est:?}");
}

#[test]
fn swap_test_matches_overlap_law() {
    let params = HybridParams::new(4, 2, None).unwrap();
    let est = estimate_advantage(
        &SwapTestDistinguisher::default(),
        ChallengeLaw::Hybrid(0),
        ChallengeLaw::Hybrid(4),
        &params,
        4000,
        2,
        Workers(2),
    )
    .unwrap();
    assert!(
        est.consistent_with(swap_test_predicted_advantage(4, 2)),
        "{est:?}"
    );
}

#[test]
fn coin_flip_has_no_advantage() {
    let params = HybridParams::new(4, 2, None).unwrap();
    let est = estimate_advantage(
        &CoinFlip,
        ChallengeLaw::Hybrid(2),
        ChallengeLaw::TauMixture,
        &params,
        1000,
        3,
        Workers(1),
    )
    .unwrap();
    assert!(est.consistent_with(0.0), "{est:?}");
}

#[test]
fn advantage_is_worker_independent() {
    let params = HybridParams::new(5, 2, None).unwrap();
    let d = SwapTestDistinguisher::default();
    let run = |w| {
        estimate_advantage(
            &d,
            ChallengeLaw::Hybrid(1),
            ChallengeLaw::Hybrid(3),
            &params,
            300,
            4,
            Workers(w),
        )
    };
    assert_eq!(run(1).unwrap(), run(4).unwrap());
}

/// Without truncation `E[f(x) g(y)] = √ε·N^{-1/2}·χ_y(x)` and every other
/// monomial of degree at most two has the same mean under both laws.
fn exact_gap(test: &QuadraticTest, params: &ForrelationParams) -> f64 {
    let dim = params.dim();
    test.quadratic_terms()
        .iter()
        .filter_map(|&(a, b, c)| {
            let (lo, hi) = (a.min(b), a.max(b));
            (lo < dim && hi >= dim)
                .then(|| c * params.epsilon.sqrt() / (dim as f64).sqrt() * character(hi - dim, lo))
        })
        .sum()
}

#[test]
fn battery_estimates_match_exact_gaps() {
    let params = ForrelationParams::new(4).unwrap();
    let mut battery = random_battery(4, 16, 4.0, &mut rng_from_seed(5)).unwrap();
    // one test built entirely from cross terms so the gap is nonzero
    battery.push(QuadraticTest::new(4, 0.0, vec![], vec![(0, 16, 2.0), (3, 21, 2.0)]).unwrap());
    let report = low_degree_advantage(&battery, &params, 20_000, 6, Workers(2)).unwrap();
    for (test, est) in battery.iter().zip(&report.per_test) {
        let exact = exact_gap(test, &params);
        assert!(
            (est.gap - exact).abs() <= est.ci.max(1e-12),
            "{} vs {exact} ± {}",
            est.gap,
            est.ci
        );
    }
    assert!(report.max_advantage > 0.0);
}

#[test]
fn shifted_statistic_sees_the_planted_key() {
    let params = ForrelationParams::new(6).unwrap();
    let e = KeyedEnsemble::new(OracleSpec::new(7, 2, 6).unwrap());
    let mut rng = rng_from_seed(8);
    for k in 0..4 {
        let g = sample_conditional_g(e.f(k), &params, &mut rng).unwrap();
        let h = e.g(k).product(&g).unwrap();
        let planted = forrelation_value(e.f(k), &g).unwrap().abs();
        assert!(shifted_statistic(&e, &h).unwrap() >= planted - 1e-15);
    }
    let h = sample_uniform_fn(6, &mut rng).unwrap();
    assert!(shifted_statistic(&e, &h).unwrap() > 0.0);
}

#[test]
fn shifted_game_batches_are_reproducible() {
    let params = HybridParams::new(6, 2, None).unwrap();
    let a = shifted_game_batch(&params, ShiftSide::HKappa, 20, 9, Workers(1)).unwrap();
    let b = shifted_game_batch(&params, ShiftSide::HKappa, 20, 9, Workers(3)).unwrap();
    assert_eq!(a, b);
}
