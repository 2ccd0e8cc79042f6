//! Spectral forrelation checked against state simulation and against the
//! naive double sum over `(x, y)`.

use forrlab::boolfn::{character, sample_uniform_fn};
use forrlab::fordist::forrelation_value;
use forrlab::qstate::{apply_hadamard, apply_phase, overlap, plus_state};
use forrlab::{fwht, rng_from_seed, TruthTable};
use proptest::prelude::*;

fn naive_forrelation(f: &TruthTable, g: &TruthTable) -> f64 {
    let dim = f.len();
    let mut total = 0.0;
    for x in 0..dim {
        for y in 0..dim {
            total += f.sign(x) * character(y, x) * g.sign(y);
        }
    }
    total / (dim as f64).powf(1.5)
}

fn simulated_forrelation(f: &TruthTable, g: &TruthTable) -> f64 {
    let plus = plus_state(f.n()).unwrap();
    let out = apply_phase(&apply_hadamard(&apply_phase(&plus, f).unwrap()), g).unwrap();
    let amp = overlap(&plus, &out).unwrap();
    assert!(amp.im.abs() < 1e-12);
    amp.re
}

#[test]
fn spectral_and_simulated_forrelation_agree() {
    let mut rng = rng_from_seed(11);
    for n in 2..=10 {
        for _ in 0..100 {
            let f = sample_uniform_fn(n, &mut rng).unwrap();
            let g = sample_uniform_fn(n, &mut rng).unwrap();
            let spectral = forrelation_value(&f, &g).unwrap();
            assert!(
                (spectral - simulated_forrelation(&f, &g)).abs() < 1e-10,
                "n = {n}"
            );
        }
    }
}

#[test]
fn naive_double_sum_agrees_at_small_n() {
    let mut rng = rng_from_seed(12);
    for n in 1..=6 {
        for _ in 0..20 {
            let f = sample_uniform_fn(n, &mut rng).unwrap();
            let g = sample_uniform_fn(n, &mut rng).unwrap();
            assert!((forrelation_value(&f, &g).unwrap() - naive_forrelation(&f, &g)).abs() < 1e-12);
        }
    }
}

#[test]
fn fwht_matches_definition() {
    let mut rng = rng_from_seed(13);
    let f = sample_uniform_fn(7, &mut rng).unwrap();
    let spectrum = fwht(&f);
    for s in 0..f.len() {
        let direct: f64 = (0..f.len())
            .map(|x| f.sign(x) * character(s, x))
            .sum::<f64>()
            / f.len() as f64;
        assert!((spectrum.coeff(s) - direct).abs() < 1e-14);
    }
}

#[test]
fn forrelation_of_g_equal_to_fourier_sign() {
    // g(x) = sign f̂(x) maximizes the sum; the value is 2^{-n/2} Σ|f̂|.
    let mut rng = rng_from_seed(14);
    let f = sample_uniform_fn(6, &mut rng).unwrap();
    let spectrum = fwht(&f);
    let g = TruthTable::from_fn(6, |x| spectrum.coeff(x) < 0.0).unwrap();
    let expect = spectrum.coeffs().iter().map(|c| c.abs()).sum::<f64>() / 8.0;
    assert!((forrelation_value(&f, &g).unwrap() - expect).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forrelation_bounded_and_sign_symmetric(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = rng_from_seed(seed);
        let f = sample_uniform_fn(n, &mut rng).unwrap();
        let g = sample_uniform_fn(n, &mut rng).unwrap();
        let v = forrelation_value(&f, &g).unwrap();
        prop_assert!(v.abs() <= 1.0 + 1e-12);
        let neg = TruthTable::from_fn(n, |x| !g.is_minus(x)).unwrap();
        prop_assert!((forrelation_value(&f, &neg).unwrap() + v).abs() < 1e-12);
    }
}
