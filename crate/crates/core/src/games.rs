//! Distinguishers, advantage estimation, the shifted-Forrelation game and the
//! bounded-`L_{1,2}` quadratic test battery.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::boolfn::{fwht, sample_uniform_fn, TruthTable};
use crate::error::{LabError, Result};
use crate::fordist::{
    conditional_bias, forrelation_from_spectrum, sample_g_from_spectrum, ForrelationParams,
};
use crate::hybrids::{
    sample_challenge, sample_hybrid, Challenge, ChallengeLaw, HybridParams, KeyedEnsemble,
    OracleSpec,
};
use crate::qstate::{overlap, StateVector};
use crate::rng::{stream_rng, LabRng, Workers};
use crate::stats::{hoeffding_halfwidth, threshold_classifier, Z_99};

/// Declared cost class of a distinguisher. Labels only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceClass {
    OverlapBruteforce,
    SwapTest,
    LowDegree,
    Custom,
}

/// A one-copy test: sees the challenge state and the ensemble's truth tables,
/// outputs a bit. Must be deterministic given the challenge and RNG stream.
pub trait Distinguisher: Sync {
    fn name(&self) -> &str;
    fn resource_class(&self) -> ResourceClass;
    fn decide(&self, challenge: Challenge<'_>, rng: &mut LabRng) -> bool;
}

/// Accepts when some key's state overlaps the challenge by at least
/// `threshold`.
#[derive(Debug, Clone, Copy)]
pub struct OverlapBruteforce {
    pub threshold: f64,
}

impl Default for OverlapBruteforce {
    fn default() -> Self {
        Self { threshold: 0.5 }
    }
}

impl Distinguisher for OverlapBruteforce {
    fn name(&self) -> &str {
        "overlap-bruteforce"
    }

    fn resource_class(&self) -> ResourceClass {
        ResourceClass::OverlapBruteforce
    }

    fn decide(&self, challenge: Challenge<'_>, _rng: &mut LabRng) -> bool {
        let (_, value) = brute_force_max_overlap(challenge.state, challenge.ensemble)
            .expect("challenge shares n");
        value >= self.threshold
    }
}

/// Swap test of the challenge against `|φ_key⟩`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SwapTestDistinguisher {
    pub key: usize,
}

impl Distinguisher for SwapTestDistinguisher {
    fn name(&self) -> &str {
        "swap-test"
    }

    fn resource_class(&self) -> ResourceClass {
        ResourceClass::SwapTest
    }

    fn decide(&self, challenge: Challenge<'_>, rng: &mut LabRng) -> bool {
        swap_test(&challenge.ensemble.state(self.key), challenge.state, rng)
            .expect("challenge shares n")
    }
}

/// Ignores the challenge.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoinFlip;

impl Distinguisher for CoinFlip {
    fn name(&self) -> &str {
        "coin-flip"
    }

    fn resource_class(&self) -> ResourceClass {
        ResourceClass::Custom
    }

    fn decide(&self, _challenge: Challenge<'_>, rng: &mut LabRng) -> bool {
        rng.random()
    }
}

/// Looks up a built-in distinguisher by name.
pub fn distinguisher_by_name(name: &str) -> Result<Box<dyn Distinguisher>> {
    match name {
        "overlap-bruteforce" | "overlap" => Ok(Box::new(OverlapBruteforce::default())),
        "swap-test" | "swap" => Ok(Box::new(SwapTestDistinguisher::default())),
        "coin-flip" | "coin" => Ok(Box::new(CoinFlip)),
        other => Err(LabError::InvalidParameter(format!(
            "unknown distinguisher {other:?}"
        ))),
    }
}

/// `max_k |⟨φ_k|ψ⟩|` by enumeration, with the maximizing key.
pub fn brute_force_max_overlap(
    state: &StateVector,
    ensemble: &KeyedEnsemble,
) -> Result<(usize, f64)> {
    if state.n() != ensemble.n() {
        return Err(LabError::DimensionMismatch {
            left: state.n(),
            right: ensemble.n(),
        });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..ensemble.key_count() {
        let value = if ensemble.spec().t() == 2 {
            let a = ensemble.amplitudes(k);
            a.iter()
                .zip(state.amplitudes())
                .map(|(x, s)| s * *x)
                .sum::<crate::qstate::C64>()
                .norm()
        } else {
            overlap(&ensemble.state(k), state)?.norm()
        };
        if value > best.1 {
            best = (k, value);
        }
    }
    Ok(best)
}

/// Accepts with probability `(1 + |⟨a|b⟩|²)/2`.
pub fn swap_test<R: RngCore + ?Sized>(
    a: &StateVector,
    b: &StateVector,
    rng: &mut R,
) -> Result<bool> {
    let p = 0.5 * (1.0 + overlap(a, b)?.norm_sqr().min(1.0));
    Ok(rng.random::<f64>() < p)
}

/// Predicted `p(H₀) − p(H₄)` for the swap test against a fixed key.
pub fn swap_test_predicted_advantage(n: usize, kappa: usize) -> f64 {
    0.5 * 2f64.powi(-(kappa as i32)) * (1.0 - 2f64.powi(-(n as i32)))
}

/// Acceptance frequencies on two challenge laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvantageEstimate {
    pub p_a: f64,
    pub p_b: f64,
    pub advantage: f64,
    pub abs_advantage: f64,
    /// 99% Hoeffding half-width on the difference.
    pub ci_halfwidth: f64,
    pub trials: usize,
}

impl AdvantageEstimate {
    pub fn from_counts(accept_a: usize, accept_b: usize, trials: usize) -> Self {
        let p_a = accept_a as f64 / trials as f64;
        let p_b = accept_b as f64 / trials as f64;
        Self {
            p_a,
            p_b,
            advantage: p_a - p_b,
            abs_advantage: (p_a - p_b).abs(),
            ci_halfwidth: advantage_halfwidth(trials),
            trials,
        }
    }

    pub fn consistent_with(&self, value: f64) -> bool {
        (self.advantage - value).abs() <= self.ci_halfwidth
    }
}

/// `√(ln(2/0.01)/(2T))·√2`.
pub fn advantage_halfwidth(trials: usize) -> f64 {
    hoeffding_halfwidth(trials, 0.01) * std::f64::consts::SQRT_2
}

/// Runs `d` on `trials` fresh challenges from each law. Trial `i` on side
/// `a` uses stream `i` of `(seed, "challenge-a")`, likewise for `b`.
pub fn estimate_advantage(
    d: &dyn Distinguisher,
    law_a: ChallengeLaw,
    law_b: ChallengeLaw,
    params: &HybridParams,
    trials: usize,
    seed: u64,
    workers: Workers,
) -> Result<AdvantageEstimate> {
    if trials < 100 {
        return Err(LabError::InvalidParameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let side = |law: ChallengeLaw, label: &str| -> Result<usize> {
        let outcomes = workers.map(trials, |i| -> Result<bool> {
            let mut rng = stream_rng(seed, label, i as u64);
            let sample = sample_challenge(law, params, &mut rng)?;
            Ok(d.decide(sample.challenge(), &mut rng))
        });
        outcomes
            .into_iter()
            .try_fold(0, |acc, o| Ok(acc + usize::from(o?)))
    };
    let a = side(law_a, "challenge-a")?;
    let b = side(law_b, "challenge-b")?;
    Ok(AdvantageEstimate::from_counts(a, b, trials))
}

/// One CSV row of an advantage experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameRow {
    pub hybrid_a: String,
    pub hybrid_b: String,
    pub distinguisher: String,
    pub n: usize,
    pub kappa: usize,
    pub trials: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub advantage: f64,
    pub ci: f64,
    pub seed: u64,
}

impl GameRow {
    pub fn new(
        d: &dyn Distinguisher,
        law_a: ChallengeLaw,
        law_b: ChallengeLaw,
        params: &HybridParams,
        est: &AdvantageEstimate,
        seed: u64,
    ) -> Self {
        Self {
            hybrid_a: law_a.to_string(),
            hybrid_b: law_b.to_string(),
            distinguisher: d.name().to_string(),
            n: params.n,
            kappa: params.kappa,
            trials: est.trials,
            p_a: est.p_a,
            p_b: est.p_b,
            advantage: est.advantage,
            ci: est.ci_halfwidth,
            seed,
        }
    }
}

/// How the challenge function `h` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShiftSide {
    /// `k` uniform, `g ~ F_n | f_k`, `h = g_k · g`.
    HKappa,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedGameOutcome {
    pub h: TruthTable,
    /// `max_k |⟨+ⁿ|Φ_{(f_k, g_k·h)}⟩|`.
    pub statistic: f64,
}

/// The inefficient honest statistic `max_k |forr(f_k, g_k · h)|`.
pub fn shifted_statistic(ensemble: &KeyedEnsemble, h: &TruthTable) -> Result<f64> {
    (0..ensemble.key_count()).try_fold(0.0f64, |best, k| {
        let shifted = ensemble.g(k).product(h)?;
        Ok(best.max(forrelation_from_spectrum(ensemble.f_hat(k), &shifted).abs()))
    })
}

/// One round of the shifted-Forrelation game on a fresh oracle.
pub fn shifted_forrelation_game<R: RngCore + ?Sized>(
    params: &HybridParams,
    side: ShiftSide,
    rng: &mut R,
) -> Result<ShiftedGameOutcome> {
    let ensemble = KeyedEnsemble::new(OracleSpec::new(rng.next_u64(), params.kappa, params.n)?);
    let h = match side {
        ShiftSide::HKappa => {
            let k = rng.random_range(0..ensemble.key_count());
            let g = sample_g_from_spectrum(ensemble.f_hat(k), &params.forrelation(), rng);
            ensemble.g(k).product(&g)?
        }
        ShiftSide::Uniform => sample_uniform_fn(params.n, rng)?,
    };
    let statistic = shifted_statistic(&ensemble, &h)?;
    Ok(ShiftedGameOutcome { h, statistic })
}

/// The same statistic with `(A, h)` taken from an `H₂` sample.
pub fn shifted_statistic_from_h2<R: RngCore + ?Sized>(
    params: &HybridParams,
    rng: &mut R,
) -> Result<f64> {
    let sample = sample_hybrid(2, params, rng)?;
    let h = sample.hidden().h.clone().expect("H2 records h");
    shifted_statistic(sample.ensemble(), &h)
}

/// Statistics of `games` rounds on one side; game `i` uses stream `i`.
pub fn shifted_game_batch(
    params: &HybridParams,
    side: ShiftSide,
    games: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<f64>> {
    let label = match side {
        ShiftSide::HKappa => "shift-hkappa",
        ShiftSide::Uniform => "shift-uniform",
    };
    workers
        .map(games, |i| {
            shifted_forrelation_game(params, side, &mut stream_rng(seed, label, i as u64))
                .map(|o| o.statistic)
        })
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedGameReport {
    pub n: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub games: usize,
    pub seed: u64,
    pub mean_hkappa: f64,
    pub mean_uniform: f64,
    pub sqrt_epsilon: f64,
    /// `|mean_hkappa / √ε − 1|`.
    pub mean_rel_gap: f64,
    pub threshold: f64,
    pub classifier_error: f64,
    pub separated: bool,
    pub mean_within_20pct: bool,
}

pub fn shifted_game_report(
    params: &HybridParams,
    games: usize,
    seed: u64,
    workers: Workers,
) -> Result<ShiftedGameReport> {
    if games == 0 {
        return Err(LabError::InvalidParameter("need at least one game".into()));
    }
    let hk = shifted_game_batch(params, ShiftSide::HKappa, games, seed, workers)?;
    let un = shifted_game_batch(params, ShiftSide::Uniform, games, seed, workers)?;
    let (threshold, classifier_error) = threshold_classifier(&hk, &un);
    let mean_hkappa = crate::stats::mean(&hk);
    let sqrt_epsilon = params.epsilon.sqrt();
    let mean_rel_gap = (mean_hkappa / sqrt_epsilon - 1.0).abs();
    Ok(ShiftedGameReport {
        n: params.n,
        kappa: params.kappa,
        epsilon: params.epsilon,
        games,
        seed,
        mean_hkappa,
        mean_uniform: crate::stats::mean(&un),
        sqrt_epsilon,
        mean_rel_gap,
        threshold,
        classifier_error,
        separated: classifier_error < 0.1,
        mean_within_20pct: mean_rel_gap <= 0.2,
    })
}

/// Multilinear polynomial of degree ≤ 2 in the `2·2ⁿ` variables
/// `(f(0), …, f(N−1), g(0), …, g(N−1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticTest {
    n: usize,
    constant: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
}

impl QuadraticTest {
    pub fn new(
        n: usize,
        constant: f64,
        linear: Vec<(usize, f64)>,
        quadratic: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        crate::boolfn::check_qubits(n)?;
        let vars = 2usize << n;
        if linear.iter().any(|&(a, _)| a >= vars)
            || quadratic.iter().any(|&(a, b, _)| a >= vars || b >= vars)
        {
            return Err(LabError::InvalidParameter("coordinate out of range".into()));
        }
        if quadratic.iter().any(|&(a, b, _)| a == b) {
            return Err(LabError::InvalidParameter(
                "quadratic terms need distinct coordinates".into(),
            ));
        }
        Ok(Self {
            n,
            constant,
            linear,
            quadratic,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn quadratic_terms(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    /// Level-2 mass `Σ |c_{ab}|`.
    pub fn l12(&self) -> f64 {
        self.quadratic.iter().map(|t| t.2.abs()).sum()
    }

    fn eval_with(&self, var: impl Fn(usize) -> f64) -> f64 {
        self.constant
            + self.linear.iter().map(|&(a, c)| c * var(a)).sum::<f64>()
            + self
                .quadratic
                .iter()
                .map(|&(a, b, c)| c * var(a) * var(b))
                .sum::<f64>()
    }

    /// `C(f, g)`.
    pub fn evaluate(&self, f: &TruthTable, g: &TruthTable) -> f64 {
        let dim = 1usize << self.n;
        self.eval_with(|v| if v < dim { f.sign(v) } else { g.sign(v - dim) })
    }

    /// `E[C(f, g) | f]` when the coordinates of `g` are independent with
    /// means `g_mean`.
    pub fn expectation_given_f(&self, f: &TruthTable, g_mean: &[f64]) -> f64 {
        let dim = 1usize << self.n;
        self.eval_with(|v| if v < dim { f.sign(v) } else { g_mean[v - dim] })
    }
}

/// Random test with 1 to 4 quadratic terms on distinct random coordinate
/// pairs and Gaussian coefficients rescaled so `L_{1,2} = t` exactly.
pub fn random_quadratic_test<R: RngCore + ?Sized>(
    n: usize,
    t: f64,
    rng: &mut R,
) -> Result<QuadraticTest> {
    if t.is_nan() || t <= 0.0 {
        return Err(LabError::InvalidParameter("t must be positive".into()));
    }
    let vars = 2usize << n;
    let terms = rng.random_range(1..=4);
    let mut quadratic: Vec<(usize, usize, f64)> = Vec::with_capacity(terms);
    while quadratic.len() < terms {
        let a = rng.random_range(0..vars);
        let b = rng.random_range(0..vars);
        if a == b || quadratic.iter().any(|q| (q.0, q.1) == (a.min(b), a.max(b))) {
            continue;
        }
        let c: f64 = StandardNormal.sample(rng);
        quadratic.push((a.min(b), a.max(b), c));
    }
    let mass: f64 = quadratic.iter().map(|q| q.2.abs()).sum();
    quadratic.iter_mut().for_each(|q| q.2 *= t / mass);
    QuadraticTest::new(n, 0.0, Vec::new(), quadratic)
}

pub fn random_battery<R: RngCore + ?Sized>(
    n: usize,
    count: usize,
    t: f64,
    rng: &mut R,
) -> Result<Vec<QuadraticTest>> {
    (0..count)
        .map(|_| random_quadratic_test(n, t, rng))
        .collect()
}

/// The 64-test, `L_{1,2} = 4` battery for `n`, drawn from stream `n` of
/// `(seed, "battery-tests")`.
pub fn standard_battery(n: usize, seed: u64) -> Result<Vec<QuadraticTest>> {
    random_battery(n, 64, 4.0, &mut stream_rng(seed, "battery-tests", n as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestAdvantage {
    /// Estimate of `E_{F_n}[C] − E_uniform[C]`.
    pub gap: f64,
    pub advantage: f64,
    /// 99% normal half-width.
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub tests: usize,
    pub l12: f64,
    pub seed: u64,
    pub max_advantage: f64,
    /// `t · ln N / √N`.
    pub scale: f64,
    pub ratio: f64,
    pub per_test: Vec<TestAdvantage>,
}

const BATTERY_BLOCK: usize = 1000;

/// Estimates `|E_{F_n}[C] − E_uniform[C]|` for every test.
///
/// Both laws share the uniform marginal of `f`, so each trial draws one `f`
/// and records `E[C | f]` under `F_n` minus `E[C | f]` under the uniform law
/// (biases `trnc(√(ε2ⁿ) f̂)` versus zero). The average is unbiased for the
/// gap and has far lower variance than sampling `g` on both sides.
pub fn low_degree_advantage(
    battery: &[QuadraticTest],
    params: &ForrelationParams,
    trials: usize,
    seed: u64,
    workers: Workers,
) -> Result<BatteryReport> {
    let first = battery
        .first()
        .ok_or_else(|| LabError::InvalidParameter("empty battery".into()))?;
    if battery.iter().any(|t| t.n != params.n) {
        return Err(LabError::DimensionMismatch {
            left: first.n,
            right: params.n,
        });
    }
    if trials < 2 {
        return Err(LabError::InvalidParameter("need at least 2 trials".into()));
    }
    let zeros = vec![0.0; params.dim()];
    let blocks = trials.div_ceil(BATTERY_BLOCK);
    let partial = workers.map(blocks, |b| {
        let mut rng = stream_rng(seed, "battery", b as u64);
        let count = BATTERY_BLOCK.min(trials - b * BATTERY_BLOCK);
        let mut sums = vec![(0.0f64, 0.0f64); battery.len()];
        for _ in 0..count {
            let f = sample_uniform_fn(params.n, &mut rng).expect("validated n");
            let bias = conditional_bias(&fwht(&f), params);
            for (acc, test) in sums.iter_mut().zip(battery) {
                let d = test.expectation_given_f(&f, &bias) - test.expectation_given_f(&f, &zeros);
                acc.0 += d;
                acc.1 += d * d;
            }
        }
        sums
    });
    let mut totals = vec![(0.0f64, 0.0f64); battery.len()];
    for block in partial {
        for (t, b) in totals.iter_mut().zip(block) {
            t.0 += b.0;
            t.1 += b.1;
        }
    }
    let tn = trials as f64;
    let per_test: Vec<TestAdvantage> = totals
        .iter()
        .map(|&(s, ss)| {
            let gap = s / tn;
            let var = ((ss - tn * gap * gap) / (tn - 1.0)).max(0.0);
            TestAdvantage {
                gap,
                advantage: gap.abs(),
                ci: Z_99 * (var / tn).sqrt(),
            }
        })
        .collect();
    let max_advantage = per_test.iter().map(|t| t.advantage).fold(0.0, f64::max);
    let l12 = battery.iter().map(QuadraticTest::l12).fold(0.0, f64::max);
    let dim = params.dim() as f64;
    let scale = l12 * dim.ln() / dim.sqrt();
    Ok(BatteryReport {
        n: params.n,
        epsilon: params.epsilon,
        trials,
        tests: battery.len(),
        l12,
        seed,
        max_advantage,
        scale,
        ratio: max_advantage / scale,
        per_test,
    })
}
