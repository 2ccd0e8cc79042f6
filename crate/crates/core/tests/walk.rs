//! Polarizing walk: linear relation, polarization, and agreement of the
//! rounded pair with direct sampling from `F_n`.

use forrlab::fordist::sample_forrelation_pair;
use forrlab::rng::stream_rng;
use forrlab::walk::{polarization_bound, run_walk, summarize, walk_batch, WalkConfig};
use forrlab::{rng_from_seed, ForrelationPair, ForrelationParams, Workers};

#[test]
fn paper_profile_at_n6() {
    let config = WalkConfig::paper(ForrelationParams::new(6).unwrap());
    let runs = walk_batch(&config, 6, 1, Workers(2)).unwrap();
    let report = summarize(&config, 1, &runs);
    assert_eq!(report.relation_rate, 1.0);
    assert!(report.max_residual < 1e-9);
    assert!(report.polarization_holds, "{report:?}");
    assert!(report.mean_sq_deficit <= polarization_bound(config.m, config.epsilon));
    assert!(report.moments_match, "{report:?}");
}

#[test]
fn fast_profile_at_n8() {
    let config = WalkConfig::fast(ForrelationParams::new(8).unwrap());
    let runs = walk_batch(&config, 4, 2, Workers(2)).unwrap();
    let report = summarize(&config, 2, &runs);
    assert!(
        report.linear_relation_holds && report.polarization_holds,
        "{report:?}"
    );
}

#[test]
#[ignore = "200 paper-profile walks at n = 10 take over an hour"]
fn paper_profile_at_n10() {
    let config = WalkConfig::paper(ForrelationParams::new(10).unwrap());
    let runs = walk_batch(&config, 200, 3, Workers(4)).unwrap();
    let report = summarize(&config, 3, &runs);
    assert!(
        report.linear_relation_holds && report.polarization_holds,
        "{report:?}"
    );
}

#[test]
fn deficit_decays_along_the_walk() {
    let config = WalkConfig::fast(ForrelationParams::new(5).unwrap()).with_history();
    let state = run_walk(&config, &mut rng_from_seed(4)).unwrap();
    let early = state.deficit_at(10).unwrap();
    let late = state
        .deficit_at(state.history().unwrap().len() as u64)
        .unwrap();
    assert!(early > 0.9 && late < 1e-6, "{early} {late}");
}

struct Moments {
    f: Vec<f64>,
    g: Vec<f64>,
    fg: Vec<f64>,
}

fn moments(pairs: &[ForrelationPair]) -> Moments {
    let dim = pairs[0].f.len();
    let mut m = Moments {
        f: vec![0.0; dim],
        g: vec![0.0; dim],
        fg: vec![0.0; dim * dim],
    };
    for p in pairs {
        for x in 0..dim {
            m.f[x] += p.f.sign(x);
            m.g[x] += p.g.sign(x);
            for y in 0..dim {
                m.fg[x * dim + y] += p.f.sign(x) * p.g.sign(y);
            }
        }
    }
    let t = pairs.len() as f64;
    for v in m.f.iter_mut().chain(m.g.iter_mut()).chain(m.fg.iter_mut()) {
        *v /= t;
    }
    m
}

/// Two-sample z tests on every first and second moment, Bonferroni
/// corrected to a family-wise level of 0.01.
#[test]
fn rounded_walk_matches_forrelation_moments() {
    // A large ε keeps the walk short; εN < 1 keeps F_n truncation free.
    let params = ForrelationParams::with_epsilon(4, 0.05).unwrap();
    let config = WalkConfig::fast(params);
    let samples = 4000;
    let walked: Vec<ForrelationPair> = walk_batch(&config, samples, 5, Workers(2))
        .unwrap()
        .into_iter()
        .map(|r| r.pair)
        .collect();
    let direct: Vec<ForrelationPair> = (0..samples)
        .map(|i| sample_forrelation_pair(&params, &mut stream_rng(6, "direct", i as u64)).unwrap())
        .collect();
    let (a, b) = (moments(&walked), moments(&direct));
    let pairs: Vec<(f64, f64)> =
        a.f.iter()
            .zip(&b.f)
            .chain(a.g.iter().zip(&b.g))
            .chain(a.fg.iter().zip(&b.fg))
            .map(|(x, y)| (*x, *y))
            .collect();
    // z quantile for 0.01 / 288 two-sided
    let crit = 4.14;
    for (i, (x, y)) in pairs.iter().enumerate() {
        let var = (1.0 - x * x) / samples as f64 + (1.0 - y * y) / samples as f64;
        let z = (x - y) / var.max(1e-12).sqrt();
        assert!(z.abs() < crit, "statistic {i}: {x} vs {y}, z = {z}");
    }
}
