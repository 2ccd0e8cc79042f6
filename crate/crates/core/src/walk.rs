//! Polarizing random walk realising `F_n` as the rounding of a continuous
//! process.
//!
//! Starting from `X = Y = 0`, each step draws `Z ~ N(0, ε)^N` and sets
//!
//! ```text
//! D = 1 − |X|
//! X ← X + D ⊙ trnc(Z)
//! Y ← trnc(Y + trnc_{1/2}(√ε · H(D ⊙ Z)))
//! ```
//!
//! with `H` the normalized Hadamard matrix. Gaussians come from
//! `rand_distr::StandardNormal` (ziggurat method) scaled by `√ε`, one draw
//! per coordinate in index order, so runs are bit-reproducible per seed.
//!
//! Once every `D_j` is exactly zero the state can no longer change, and the
//! remaining steps are skipped. In practice `D_j` tends to stall at one ulp
//! below 1 rather than reach 0, so most runs take all `m` steps.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::boolfn::{
    check_qubits, sample_biased_unchecked, trnc_unit, walsh_hadamard_in_place, TruthTable,
};
use crate::error::{LabError, Result};
use crate::fordist::{sample_forrelation_pair, ForrelationPair, ForrelationParams};
use crate::rng::{stream_rng, Workers};

/// Step-count rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkProfile {
    /// `m = ⌈200·ln N / ε⌉`.
    Paper,
    /// `m = ⌈40·ln N / ε⌉`; a smoke-test setting, not the analysed one.
    Fast,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkConfig {
    pub n: usize,
    pub epsilon: f64,
    pub m: u64,
    pub record_history: bool,
    pub profile: WalkProfile,
}

fn steps_for(n: usize, epsilon: f64, factor: f64) -> u64 {
    let ln_n = n as f64 * std::f64::consts::LN_2;
    (factor * ln_n / epsilon).ceil() as u64
}

impl WalkConfig {
    pub fn paper(params: ForrelationParams) -> Self {
        Self {
            n: params.n,
            epsilon: params.epsilon,
            m: steps_for(params.n, params.epsilon, 200.0),
            record_history: false,
            profile: WalkProfile::Paper,
        }
    }

    pub fn fast(params: ForrelationParams) -> Self {
        Self {
            m: steps_for(params.n, params.epsilon, 40.0),
            profile: WalkProfile::Fast,
            ..Self::paper(params)
        }
    }

    pub fn with_steps(params: ForrelationParams, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(LabError::InvalidParameter(
                "step count must be at least 1".into(),
            ));
        }
        Ok(Self {
            m,
            profile: WalkProfile::Custom,
            ..Self::paper(params)
        })
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    pub fn params(&self) -> ForrelationParams {
        ForrelationParams {
            n: self.n,
            epsilon: self.epsilon,
        }
    }
}

/// Number of clamps that changed a value, by location.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClampCounts {
    /// `trnc(Z_j)` on a coordinate with `D_j > 0`.
    pub x_step: u64,
    /// `trnc_{1/2}` on the `Y` increment.
    pub y_half: u64,
    /// Outer `trnc` on `Y`.
    pub y_unit: u64,
}

impl ClampCounts {
    pub fn total(&self) -> u64 {
        self.x_step + self.y_half + self.y_unit
    }

    pub fn any(&self) -> bool {
        self.total() > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    n: usize,
    epsilon: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    step: u64,
    frozen: bool,
    clamps: ClampCounts,
    history: Option<Vec<f64>>,
}

impl WalkState {
    /// `X = Y = 0` at step 0.
    pub fn initial(n: usize, epsilon: f64, record_history: bool) -> Result<Self> {
        ForrelationParams::with_epsilon(n, epsilon)?;
        let len = 1usize << n;
        Ok(Self {
            n,
            epsilon,
            x: vec![0.0; len],
            y: vec![0.0; len],
            step: 0,
            frozen: false,
            clamps: ClampCounts::default(),
            history: record_history.then(Vec::new),
        })
    }

    /// Assembles a state by hand, e.g. to exercise the claim checks.
    pub fn from_parts(
        n: usize,
        epsilon: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        step: u64,
        clamps: ClampCounts,
    ) -> Result<Self> {
        check_qubits(n)?;
        ForrelationParams::with_epsilon(n, epsilon)?;
        for v in [&x, &y] {
            if v.len() != 1 << n {
                return Err(LabError::DimensionMismatch {
                    left: v.len(),
                    right: 1 << n,
                });
            }
            if v.iter().any(|c| !(-1.0..=1.0).contains(c)) {
                return Err(LabError::InvalidParameter(
                    "walk coordinates must lie in [-1, 1]".into(),
                ));
            }
        }
        let frozen = x.iter().all(|c| c.abs() == 1.0);
        Ok(Self {
            n,
            epsilon,
            x,
            y,
            step,
            frozen,
            clamps,
            history: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn clamps(&self) -> ClampCounts {
        self.clamps
    }

    /// True once every coordinate of `X` sits exactly at `±1`.
    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// `mean(1 − X_j²)` after each step, when recording was requested.
    pub fn history(&self) -> Option<&[f64]> {
        self.history.as_deref()
    }

    /// Recorded `mean(1 − X_j²)` after `step` steps.
    pub fn deficit_at(&self, step: u64) -> Option<f64> {
        let h = self.history.as_ref()?;
        if step == 0 {
            return Some(1.0);
        }
        if step > self.step {
            return None;
        }
        // Frozen walks stop recording; the value no longer changes.
        h.get((step as usize).min(h.len()).checked_sub(1)?).copied()
    }

    /// Performs `steps` further updates.
    pub fn advance<R: RngCore + ?Sized>(&mut self, steps: u64, rng: &mut R) {
        let len = self.x.len();
        let sqrt_eps = self.epsilon.sqrt();
        let h_scale = sqrt_eps / (len as f64).sqrt();
        let mut d = vec![0.0; len];
        let mut u = vec![0.0; len];
        for done in 0..steps {
            if !self.frozen {
                let mut live = false;
                for (dj, xj) in d.iter_mut().zip(&self.x) {
                    *dj = 1.0 - xj.abs();
                    live |= *dj != 0.0;
                }
                self.frozen = !live;
            }
            if self.frozen {
                self.step += steps - done;
                break;
            }
            for j in 0..len {
                let z = sqrt_eps * gaussian(rng);
                let dz = d[j] * trnc_unit(z);
                if z.abs() > 1.0 && d[j] > 0.0 {
                    self.clamps.x_step += 1;
                }
                self.x[j] += dz;
                u[j] = d[j] * z;
            }
            walsh_hadamard_in_place(&mut u);
            for (yj, uj) in self.y.iter_mut().zip(&u) {
                let inc = h_scale * uj;
                if inc.abs() > 0.5 {
                    self.clamps.y_half += 1;
                }
                let s = *yj + inc.clamp(-0.5, 0.5);
                if s.abs() > 1.0 {
                    self.clamps.y_unit += 1;
                }
                *yj = trnc_unit(s);
            }
            assert!(
                self.x
                    .iter()
                    .chain(&self.y)
                    .all(|v| (-1.0..=1.0).contains(v)),
                "walk left the unit box at step {}",
                self.step + 1
            );
            self.step += 1;
            if let Some(h) = self.history.as_mut() {
                h.push(mean_sq_deficit(&self.x));
            }
        }
    }
}

fn gaussian<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn mean_sq_deficit(x: &[f64]) -> f64 {
    x.iter().map(|v| 1.0 - v * v).sum::<f64>() / x.len() as f64
}

/// Runs the walk for `config.m` steps.
pub fn run_walk<R: RngCore + ?Sized>(config: &WalkConfig, rng: &mut R) -> Result<WalkState> {
    let mut state = WalkState::initial(config.n, config.epsilon, config.record_history)?;
    state.advance(config.m, rng);
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    /// No clamp fired and `Y = √ε·H·X` to within `1e-9`.
    pub linear_relation_holds: bool,
    pub y_in_half_box: bool,
    /// `max_j |Y_j − √ε·(H X)_j|`.
    pub max_residual: f64,
}

/// Tolerance on the linear relation between `Y` and `X`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Recomputes `√ε·H·X` from scratch and compares it with `Y`.
pub fn check_claim_truncations(state: &WalkState) -> TruncationReport {
    let mut hx = state.x.clone();
    walsh_hadamard_in_place(&mut hx);
    let scale = state.epsilon.sqrt() / (hx.len() as f64).sqrt();
    let max_residual = hx
        .iter()
        .zip(&state.y)
        .map(|(h, y)| (y - scale * h).abs())
        .fold(0.0, f64::max);
    TruncationReport {
        linear_relation_holds: !state.clamps.any() && max_residual < RESIDUAL_TOL,
        y_in_half_box: state.y.iter().all(|v| v.abs() <= 0.5),
        max_residual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationStats {
    pub min_abs: f64,
    pub mean_sq_deficit: f64,
}

pub fn polarization_stats(state: &WalkState) -> PolarizationStats {
    PolarizationStats {
        min_abs: state
            .x
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min),
        mean_sq_deficit: mean_sq_deficit(&state.x),
    }
}

/// The polarization bound `3·exp(−mε/32)` on `mean(1 − X_j²)`.
pub fn polarization_bound(m: u64, epsilon: f64) -> f64 {
    3.0 * (-(m as f64) * epsilon / 32.0).exp()
}

/// `sign(X)` with ties broken toward `+1`.
pub fn walk_sign(state: &WalkState) -> TruthTable {
    TruthTable::from_fn(state.n, |j| state.x[j] < 0.0).expect("state n validated")
}

/// `trnc(√ε·(H·tt(f))_x)` with `H` normalized.
pub fn walk_bias(f: &TruthTable, epsilon: f64) -> Vec<f64> {
    let mut v = f.to_f64();
    walsh_hadamard_in_place(&mut v);
    let scale = epsilon.sqrt() / (v.len() as f64).sqrt();
    v.iter().map(|c| trnc_unit(scale * c)).collect()
}

/// Rounds a finished walk to a pair: `f = sign(X)`, `g` drawn with biases
/// `trnc(√ε·H·f)`.
pub fn round_walk_to_pair<R: RngCore + ?Sized>(
    state: &WalkState,
    params: &ForrelationParams,
    rng: &mut R,
) -> Result<ForrelationPair> {
    if params.n != state.n {
        return Err(LabError::DimensionMismatch {
            left: state.n,
            right: params.n,
        });
    }
    let f = walk_sign(state);
    let g = sample_biased_unchecked(params.n, &walk_bias(&f, params.epsilon), rng);
    Ok(ForrelationPair {
        f,
        g,
        params: *params,
    })
}

/// Outcome of one run inside [`walk_batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct WalkRunSummary {
    pub truncations: TruncationReport,
    pub polarization: PolarizationStats,
    /// `mean(1 − X_j²)` after `⌊m/2⌋` steps.
    pub mid_deficit: f64,
    pub clamps: ClampCounts,
    pub pair: ForrelationPair,
}

/// Runs `runs` independent walks; run `i` uses stream `i` of `seed`, so the
/// result does not depend on `workers`.
pub fn walk_batch(
    config: &WalkConfig,
    runs: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<WalkRunSummary>> {
    let params = ForrelationParams::with_epsilon(config.n, config.epsilon)?;
    Ok(workers.map(runs, |i| {
        let mut rng = stream_rng(seed, "walk", i as u64);
        let mut state =
            WalkState::initial(config.n, config.epsilon, false).expect("validated params");
        let half = config.m / 2;
        state.advance(half, &mut rng);
        let mid_deficit = mean_sq_deficit(&state.x);
        state.advance(config.m - half, &mut rng);
        let pair = round_walk_to_pair(&state, &params, &mut rng).expect("matching n");
        WalkRunSummary {
            truncations: check_claim_truncations(&state),
            polarization: polarization_stats(&state),
            mid_deficit,
            clamps: state.clamps,
            pair,
        }
    }))
}

/// Aggregate over a batch of walks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkReport {
    pub n: usize,
    pub epsilon: f64,
    pub m: u64,
    pub profile: WalkProfile,
    pub seed: u64,
    pub runs: usize,
    /// Relation held on at least 99% of runs.
    pub linear_relation_holds: bool,
    pub relation_rate: f64,
    /// Largest residual among runs without clamps.
    pub max_residual: f64,
    pub min_abs: f64,
    /// Run-averaged `mean(1 − X_j²)`.
    pub mean_sq_deficit: f64,
    pub polarization_bound: f64,
    pub polarization_holds: bool,
    pub clamps_fired: u64,
    /// Largest gap between walk-rounded and directly sampled moments.
    pub moment_max_gap: f64,
    /// Joint 99% half-width for those gaps.
    pub moment_halfwidth: f64,
    pub moments_match: bool,
}

/// Largest gap over all `E f(x)`, `E g(x)` and `E f(x)g(y)` between two
/// equally sized samples.
pub fn moment_max_gap(a: &[ForrelationPair], b: &[ForrelationPair]) -> f64 {
    let moments = |pairs: &[ForrelationPair]| {
        let dim = pairs.first().map_or(0, |p| p.f.len());
        let mut acc = vec![0.0; 2 * dim + dim * dim];
        for p in pairs {
            let (f, g): (Vec<f64>, Vec<f64>) = (0..dim).map(|x| (p.f.sign(x), p.g.sign(x))).unzip();
            acc[..dim].iter_mut().zip(&f).for_each(|(a, v)| *a += v);
            acc[dim..2 * dim]
                .iter_mut()
                .zip(&g)
                .for_each(|(a, v)| *a += v);
            for (x, fx) in f.iter().enumerate() {
                let row = &mut acc[2 * dim + x * dim..2 * dim + (x + 1) * dim];
                row.iter_mut().zip(&g).for_each(|(a, gy)| *a += fx * gy);
            }
        }
        acc.iter()
            .map(|v| v / pairs.len().max(1) as f64)
            .collect::<Vec<f64>>()
    };
    moments(a)
        .iter()
        .zip(moments(b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Hoeffding half-width for the difference of two means of `trials` signs
/// each, Bonferroni corrected over `count` moments at family level `alpha`.
pub fn moment_halfwidth(trials: usize, count: usize, alpha: f64) -> f64 {
    (4.0 * (2.0 * count as f64 / alpha).ln() / trials as f64).sqrt()
}

pub fn summarize(config: &WalkConfig, seed: u64, runs: &[WalkRunSummary]) -> WalkReport {
    let count = runs.len().max(1) as f64;
    let holding = runs
        .iter()
        .filter(|r| r.truncations.linear_relation_holds)
        .count();
    let relation_rate = holding as f64 / count;
    let mean_sq_deficit = runs
        .iter()
        .map(|r| r.polarization.mean_sq_deficit)
        .sum::<f64>()
        / count;
    let bound = polarization_bound(config.m, config.epsilon);
    // Reference pairs drawn directly from F_n, run i from stream i.
    let params = config.params();
    let walked: Vec<ForrelationPair> = runs.iter().map(|r| r.pair.clone()).collect();
    let direct: Vec<ForrelationPair> = (0..runs.len())
        .map(|i| {
            sample_forrelation_pair(&params, &mut stream_rng(seed, "walk-direct", i as u64))
                .expect("validated")
        })
        .collect();
    let moment_max_gap = moment_max_gap(&walked, &direct);
    let dim = params.dim();
    let halfwidth = moment_halfwidth(runs.len().max(1), 2 * dim + dim * dim, 0.01);
    WalkReport {
        n: config.n,
        epsilon: config.epsilon,
        m: config.m,
        profile: config.profile,
        seed,
        runs: runs.len(),
        linear_relation_holds: relation_rate >= 0.99,
        relation_rate,
        max_residual: runs
            .iter()
            .filter(|r| !r.clamps.any())
            .map(|r| r.truncations.max_residual)
            .fold(0.0, f64::max),
        min_abs: runs
            .iter()
            .map(|r| r.polarization.min_abs)
            .fold(f64::INFINITY, f64::min),
        mean_sq_deficit,
        polarization_bound: bound,
        polarization_holds: mean_sq_deficit <= bound,
        clamps_fired: runs.iter().map(|r| r.clamps.total()).sum(),
        moment_max_gap,
        moment_halfwidth: halfwidth,
        moments_match: moment_max_gap <= halfwidth,
    }
}
