//! Keyed t-Forrelation ensemble over a seeded oracle, the single-copy hybrids
//! `H₀ … H₄`, and the exact average-state formulas behind them.
//!
//! Layer `i` of key `k` is the truth table `x ↦ A(x, k, i)`. The triple is
//! encoded as one oracle string of length `n + κ + ⌈log₂ t⌉` with value
//! `((i·2^κ + k) << n) | x`, so each truth table occupies a contiguous block
//! of the oracle's output.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::boolfn::{check_qubits, fwht, sample_uniform_fn, FourierSpectrum, TruthTable};
use crate::error::{LabError, Result};
use crate::fordist::{
    conditional_bias, sample_forrelation_pair, sample_g_from_spectrum, ForrelationParams,
};
use crate::oracle::{RandomOracle, MAX_STRING_BITS};
use crate::qstate::{
    check_dense, density_from_ensemble, phase_state, sample_haar, t_forrelation_state,
    trace_distance, tvd, DensityMatrix, StateVector,
};
use crate::rng::{stream_rng, Workers};

/// Largest key length.
pub const MAX_KEY_BITS: usize = 20;

fn layer_bits(t: usize) -> usize {
    (usize::BITS - (t - 1).leading_zeros()) as usize
}

/// Parameters of the seeded oracle `A` and the ensemble read from it.
#[derive(Debug, Clone)]
pub struct OracleSpec {
    seed: u64,
    kappa: usize,
    n: usize,
    t: usize,
    oracle: RandomOracle,
}

/// Serializable description of an [`OracleSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleManifest {
    pub seed: u64,
    pub kappa: usize,
    pub n: usize,
    pub t: usize,
}

impl OracleSpec {
    /// Two-layer ensemble with `κ + 1 ≤ n`.
    pub fn new(seed: u64, kappa: usize, n: usize) -> Result<Self> {
        Self::with_layers(seed, kappa, n, 2)
    }

    pub fn with_layers(seed: u64, kappa: usize, n: usize, t: usize) -> Result<Self> {
        if kappa + 1 > n {
            return Err(LabError::InvalidParameter(format!(
                "need kappa + 1 <= n, got kappa = {kappa}, n = {n}"
            )));
        }
        Self::build(seed, kappa, n, t)
    }

    /// Drops the `κ + 1 ≤ n` requirement. Only for statistics that range over
    /// many keys at a fixed `n`; the result is not a meaningful key space.
    pub fn statistics_only(seed: u64, kappa: usize, n: usize) -> Result<Self> {
        Self::build(seed, kappa, n, 2)
    }

    fn build(seed: u64, kappa: usize, n: usize, t: usize) -> Result<Self> {
        check_qubits(n)?;
        if t == 0 {
            return Err(LabError::EmptyFunctionList);
        }
        if kappa > MAX_KEY_BITS {
            return Err(LabError::CapExceeded {
                what: format!("key length {kappa}"),
                cap: MAX_KEY_BITS,
            });
        }
        if n + kappa + layer_bits(t) > MAX_STRING_BITS {
            return Err(LabError::CapExceeded {
                what: "oracle string length".into(),
                cap: MAX_STRING_BITS,
            });
        }
        Ok(Self {
            seed,
            kappa,
            n,
            t,
            oracle: RandomOracle::new(seed),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn key_count(&self) -> usize {
        1 << self.kappa
    }

    pub fn manifest(&self) -> OracleManifest {
        OracleManifest {
            seed: self.seed,
            kappa: self.kappa,
            n: self.n,
            t: self.t,
        }
    }

    /// `x ↦ A(x, k, i)`.
    pub fn function(&self, k: usize, i: usize) -> Result<TruthTable> {
        if k >= self.key_count() || i >= self.t {
            return Err(LabError::InvalidParameter(format!(
                "key {k} / layer {i} out of range"
            )));
        }
        let len = self.n + self.kappa + layer_bits(self.t);
        let start = ((i << self.kappa) | k) as u64;
        let words = self.oracle.bit_block(len, start << self.n, 1 << self.n)?;
        TruthTable::from_words(self.n, words)
    }
}

struct KeyData {
    layers: Vec<TruthTable>,
    f_hat: FourierSpectrum,
}

/// The states `|φ_k⟩ = U_{g_k} H U_{f_k}|+ⁿ⟩` (or their t-layer analogue),
/// with optional per-key replacements and a shift `h` multiplied into the
/// last layer of every key.
pub struct KeyedEnsemble {
    spec: OracleSpec,
    overrides: BTreeMap<usize, Vec<TruthTable>>,
    shift: Option<TruthTable>,
    cache: Vec<OnceLock<KeyData>>,
}

impl std::fmt::Debug for KeyedEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyedEnsemble")
            .field("spec", &self.spec.manifest())
            .field("overrides", &self.overrides.len())
            .field("shifted", &self.shift.is_some())
            .finish()
    }
}

impl KeyedEnsemble {
    pub fn new(spec: OracleSpec) -> Self {
        Self::with_overrides(spec, BTreeMap::new(), None).expect("no overrides to validate")
    }

    /// Replaces the layers of selected keys and multiplies `shift` into the
    /// last layer of every key.
    pub fn with_overrides(
        spec: OracleSpec,
        overrides: BTreeMap<usize, Vec<TruthTable>>,
        shift: Option<TruthTable>,
    ) -> Result<Self> {
        for (&k, layers) in &overrides {
            if k >= spec.key_count()
                || layers.len() != spec.t
                || layers.iter().any(|l| l.n() != spec.n)
            {
                return Err(LabError::InvalidParameter(format!(
                    "override for key {k} does not fit the ensemble"
                )));
            }
        }
        if let Some(h) = &shift {
            if h.n() != spec.n {
                return Err(LabError::DimensionMismatch {
                    left: h.n(),
                    right: spec.n,
                });
            }
        }
        let cache = (0..spec.key_count()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            spec,
            overrides,
            shift,
            cache,
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn kappa(&self) -> usize {
        self.spec.kappa
    }

    pub fn key_count(&self) -> usize {
        self.spec.key_count()
    }

    fn data(&self, k: usize) -> &KeyData {
        self.cache[k].get_or_init(|| {
            let mut layers = match self.overrides.get(&k) {
                Some(l) => l.clone(),
                None => (0..self.spec.t)
                    .map(|i| self.spec.function(k, i).expect("key in range"))
                    .collect(),
            };
            if let Some(h) = &self.shift {
                let last = layers.last_mut().expect("t >= 1");
                *last = last.product(h).expect("same n");
            }
            let f_hat = fwht(&layers[0]);
            KeyData { layers, f_hat }
        })
    }

    /// All layers of key `k`.
    pub fn layers(&self, k: usize) -> &[TruthTable] {
        &self.data(k).layers
    }

    /// First layer, `f_k`.
    pub fn f(&self, k: usize) -> &TruthTable {
        &self.data(k).layers[0]
    }

    /// Last layer, `g_k` (for two layers).
    pub fn g(&self, k: usize) -> &TruthTable {
        self.data(k).layers.last().expect("t >= 1")
    }

    pub fn f_hat(&self, k: usize) -> &FourierSpectrum {
        &self.data(k).f_hat
    }

    /// `|φ_k⟩`.
    pub fn state(&self, k: usize) -> StateVector {
        t_forrelation_state(self.layers(k)).expect("layers share n")
    }

    /// All truth tables as concatenated binary records, key-major.
    pub fn dump_records(&self) -> Vec<u8> {
        (0..self.key_count())
            .flat_map(|k| {
                self.layers(k)
                    .iter()
                    .flat_map(TruthTable::to_bytes)
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn require_two_layers(&self) -> Result<()> {
        if self.spec.t != 2 {
            return Err(LabError::InvalidParameter(
                "average-state formulas need t = 2".into(),
            ));
        }
        Ok(())
    }

    /// `a_k = g_k ⊙ f̂_k`, the amplitudes of `|φ_k⟩`.
    pub(crate) fn amplitudes(&self, k: usize) -> Vec<f64> {
        let g = self.g(k);
        self.f_hat(k)
            .coeffs()
            .iter()
            .enumerate()
            .map(|(x, c)| g.sign(x) * c)
            .collect()
    }
}

fn mean_outer(vectors: impl Iterator<Item = Vec<f64>>, dim: usize, count: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for v in vectors {
        let v = nalgebra::DVector::from_vec(v);
        acc.ger(1.0, &v, &v, 1.0);
    }
    acc / count as f64
}

/// `⟨i|ρ_A|j⟩ = E_k[g_k(i) g_k(j) f̂_k(i) f̂_k(j)]`.
pub fn rho_a(ensemble: &KeyedEnsemble) -> Result<DensityMatrix> {
    ensemble.require_two_layers()?;
    check_dense(ensemble.n())?;
    let keys = ensemble.key_count();
    let m = mean_outer(
        (0..keys).map(|k| ensemble.amplitudes(k)),
        1 << ensemble.n(),
        keys,
    );
    DensityMatrix::from_real(&m)
}

/// `ρ_A` as the uniform mixture of the simulated states `|φ_k⟩`.
pub fn rho_a_by_simulation(ensemble: &KeyedEnsemble) -> Result<DensityMatrix> {
    check_dense(ensemble.n())?;
    let states: Vec<StateVector> = (0..ensemble.key_count())
        .map(|k| ensemble.state(k))
        .collect();
    let w = vec![1.0 / states.len() as f64; states.len()];
    density_from_ensemble(&states, &w)
}

/// `⟨i|σ_A|j⟩ = 2^{-n} E_k[g_k(i) g_k(j) b_k(i) b_k(j)]` off the diagonal,
/// with `b_k = trnc(√(ε2ⁿ) f̂_k)`, and `2^{-n}` on the diagonal.
pub fn sigma_a(ensemble: &KeyedEnsemble, params: &ForrelationParams) -> Result<DensityMatrix> {
    ensemble.require_two_layers()?;
    check_dense(ensemble.n())?;
    check_params(ensemble, params)?;
    let keys = ensemble.key_count();
    let dim = 1usize << ensemble.n();
    let vectors = (0..keys).map(|k| {
        let g = ensemble.g(k);
        conditional_bias(ensemble.f_hat(k), params)
            .into_iter()
            .enumerate()
            .map(|(x, b)| g.sign(x) * b)
            .collect::<Vec<f64>>()
    });
    let mut m = mean_outer(vectors, dim, keys) / dim as f64;
    m.fill_diagonal(1.0 / dim as f64);
    DensityMatrix::from_real(&m)
}

/// `τ_A = ε ρ_A + (1 − ε) I/2ⁿ`.
pub fn tau_a(ensemble: &KeyedEnsemble, params: &ForrelationParams) -> Result<DensityMatrix> {
    check_params(ensemble, params)?;
    let rho = rho_a(ensemble)?;
    rho.combine(
        params.epsilon,
        &DensityMatrix::maximally_mixed(ensemble.n())?,
        1.0 - params.epsilon,
    )
}

fn check_params(ensemble: &KeyedEnsemble, params: &ForrelationParams) -> Result<()> {
    if params.n != ensemble.n() {
        return Err(LabError::DimensionMismatch {
            left: params.n,
            right: ensemble.n(),
        });
    }
    Ok(())
}

/// `max_{k,x} |f̂_k(x)| ≤ 1/√(ε2ⁿ)`: no bias is clamped for any key.
pub fn threshold_condition(ensemble: &KeyedEnsemble, params: &ForrelationParams) -> bool {
    let limit = params.truncation_threshold();
    (0..ensemble.key_count()).all(|k| ensemble.f_hat(k).coeffs().iter().all(|c| c.abs() <= limit))
}

/// `Σ_i |2^{-n} − E_k f̂_k(i)²|`.
pub fn fourier_square_uniformity(ensemble: &KeyedEnsemble) -> f64 {
    let dim = 1usize << ensemble.n();
    let keys = ensemble.key_count();
    let mut acc = vec![0.0; dim];
    for k in 0..keys {
        for (a, c) in acc.iter_mut().zip(ensemble.f_hat(k).coeffs()) {
            *a += c * c;
        }
    }
    let uniform = 1.0 / dim as f64;
    acc.iter().map(|a| (uniform - a / keys as f64).abs()).sum()
}

/// Comparison of `σ_A` with `τ_A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma55Report {
    pub seed: u64,
    pub n: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub threshold_holds: bool,
    /// `max_{i≠j} |σ_ij − ε ρ_ij|`.
    pub offdiag_max_gap: f64,
    /// `max_i |σ_ii − 2^{-n}|`.
    pub diag_max_gap: f64,
    /// `TD(σ_A, τ_A)` from an eigendecomposition.
    pub td: f64,
    /// TVD between the diagonals.
    pub tvd_diag: f64,
    /// `(ε/2) Σ_i |2^{-n} − E_k f̂_k(i)²|`.
    pub tvd_formula: f64,
    pub matches: bool,
}

pub fn check_lemma_5_5(
    ensemble: &KeyedEnsemble,
    params: &ForrelationParams,
) -> Result<Lemma55Report> {
    let rho = rho_a(ensemble)?;
    let sigma = sigma_a(ensemble, params)?;
    let tau = rho.combine(
        params.epsilon,
        &DensityMatrix::maximally_mixed(ensemble.n())?,
        1.0 - params.epsilon,
    )?;
    let dim = sigma.dim();
    let mut offdiag_max_gap: f64 = 0.0;
    let mut diag_max_gap: f64 = 0.0;
    for i in 0..dim {
        diag_max_gap = diag_max_gap.max((sigma.entry(i, i).re - 1.0 / dim as f64).abs());
        for j in 0..dim {
            if i != j {
                offdiag_max_gap = offdiag_max_gap
                    .max((sigma.entry(i, j) - rho.entry(i, j) * params.epsilon).norm());
            }
        }
    }
    let td = trace_distance(&sigma, &tau)?;
    let tvd_diag = tvd(&sigma.diagonal(), &tau.diagonal())?;
    let tvd_formula = 0.5 * params.epsilon * fourier_square_uniformity(ensemble);
    let threshold_holds = threshold_condition(ensemble, params);
    let matches = threshold_holds
        && offdiag_max_gap < 1e-10
        && diag_max_gap == 0.0
        && (td - tvd_diag).abs() < 1e-8;
    Ok(Lemma55Report {
        seed: ensemble.spec.seed,
        n: ensemble.n(),
        kappa: ensemble.kappa(),
        epsilon: params.epsilon,
        threshold_holds,
        offdiag_max_gap,
        diag_max_gap,
        td,
        tvd_diag,
        tvd_formula,
        matches,
    })
}

/// Entrywise comparison of `σ_A` with a Monte Carlo average of `|Φ_h⟩⟨Φ_h|`
/// where `k` is uniform, `g ~ F_n | f_k` and `h = g_k · g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaMonteCarlo {
    pub samples: usize,
    /// Largest `|z|` over off-diagonal entries with nonzero variance.
    pub max_abs_z: f64,
    /// Fraction of those entries with `|z| > 3`.
    pub frac_beyond_3: f64,
    /// At most 1% beyond 3σ and nothing beyond 5.5σ.
    pub passes: bool,
}

pub fn sigma_a_monte_carlo<R: RngCore + ?Sized>(
    ensemble: &KeyedEnsemble,
    params: &ForrelationParams,
    samples: usize,
    rng: &mut R,
) -> Result<SigmaMonteCarlo> {
    let sigma = sigma_a(ensemble, params)?;
    let dim = sigma.dim();
    let mut agree = vec![0u64; dim * dim];
    for _ in 0..samples {
        let k = rng.random_range(0..ensemble.key_count());
        let g = sample_g_from_spectrum(ensemble.f_hat(k), params, rng);
        let h = ensemble.g(k).product(&g)?;
        let bits: Vec<bool> = (0..dim).map(|x| h.is_minus(x)).collect();
        for i in 0..dim {
            for j in i + 1..dim {
                agree[i * dim + j] += u64::from(bits[i] == bits[j]);
            }
        }
    }
    let mut max_abs_z: f64 = 0.0;
    let (mut tested, mut beyond) = (0usize, 0usize);
    for i in 0..dim {
        for j in i + 1..dim {
            let expect = sigma.entry(i, j).re * dim as f64;
            let var = 1.0 - expect * expect;
            if var <= 1e-12 {
                continue;
            }
            let mean = 2.0 * agree[i * dim + j] as f64 / samples as f64 - 1.0;
            let z = (mean - expect) / (var / samples as f64).sqrt();
            max_abs_z = max_abs_z.max(z.abs());
            tested += 1;
            beyond += usize::from(z.abs() > 3.0);
        }
    }
    let frac_beyond_3 = beyond as f64 / tested.max(1) as f64;
    Ok(SigmaMonteCarlo {
        samples,
        max_abs_z,
        frac_beyond_3,
        passes: frac_beyond_3 <= 0.01 && max_abs_z <= 5.5,
    })
}

/// Size and strength parameters of a hybrid experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridParams {
    pub n: usize,
    pub kappa: usize,
    pub epsilon: f64,
}

impl HybridParams {
    pub fn new(n: usize, kappa: usize, epsilon: Option<f64>) -> Result<Self> {
        let p = ForrelationParams::resolve(n, epsilon)?;
        OracleSpec::new(0, kappa, n)?;
        Ok(Self {
            n,
            kappa,
            epsilon: p.epsilon,
        })
    }

    pub fn forrelation(&self) -> ForrelationParams {
        ForrelationParams {
            n: self.n,
            epsilon: self.epsilon,
        }
    }
}

/// Which challenge distribution to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChallengeLaw {
    Hybrid(u8),
    /// `H₁` with probability `ε`, otherwise `H₃`.
    TauMixture,
}

impl std::fmt::Display for ChallengeLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChallengeLaw::Hybrid(i) => write!(f, "H{i}"),
            ChallengeLaw::TauMixture => f.write_str("tau"),
        }
    }
}

impl std::str::FromStr for ChallengeLaw {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "tau" {
            return Ok(ChallengeLaw::TauMixture);
        }
        let digits = t.strip_prefix('h').unwrap_or(&t);
        match digits.parse::<u8>() {
            Ok(i) if i <= 4 => Ok(ChallengeLaw::Hybrid(i)),
            Ok(i) => Err(LabError::InvalidHybrid(i)),
            Err(_) => Err(LabError::InvalidParameter(format!(
                "unknown challenge law {s:?}"
            ))),
        }
    }
}

/// Sampler-side record never shown to distinguishers.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenRecord {
    pub k_star: Option<usize>,
    pub h: Option<TruthTable>,
    pub f_prime: Option<TruthTable>,
    pub g_prime: Option<TruthTable>,
    /// For the τ-mixture: which hybrid was drawn.
    pub branch: Option<u8>,
}

/// What a distinguisher sees: one copy of the state and oracle access.
#[derive(Debug, Clone, Copy)]
pub struct Challenge<'a> {
    pub state: &'a StateVector,
    pub ensemble: &'a KeyedEnsemble,
}

#[derive(Debug)]
pub struct HybridSample {
    pub law: ChallengeLaw,
    state: StateVector,
    ensemble: KeyedEnsemble,
    hidden: HiddenRecord,
}

impl HybridSample {
    pub fn challenge(&self) -> Challenge<'_> {
        Challenge {
            state: &self.state,
            ensemble: &self.ensemble,
        }
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn ensemble(&self) -> &KeyedEnsemble {
        &self.ensemble
    }

    /// Hidden sampler choices, for test oracles only.
    pub fn hidden(&self) -> &HiddenRecord {
        &self.hidden
    }
}

/// Draws one sample of `H_{hybrid_id}`.
pub fn sample_hybrid<R: RngCore + ?Sized>(
    hybrid_id: u8,
    params: &HybridParams,
    rng: &mut R,
) -> Result<HybridSample> {
    if hybrid_id > 4 {
        return Err(LabError::InvalidHybrid(hybrid_id));
    }
    let spec = OracleSpec::new(rng.next_u64(), params.kappa, params.n)?;
    let none = HiddenRecord {
        k_star: None,
        h: None,
        f_prime: None,
        g_prime: None,
        branch: None,
    };
    let sample = match hybrid_id {
        0 => {
            let k_star = rng.random_range(0..spec.key_count());
            let ensemble = KeyedEnsemble::new(spec);
            HybridSample {
                law: ChallengeLaw::Hybrid(0),
                state: ensemble.state(k_star),
                ensemble,
                hidden: HiddenRecord {
                    k_star: Some(k_star),
                    ..none
                },
            }
        }
        1 | 2 => {
            let k_star = rng.random_range(0..spec.key_count());
            let pair = sample_forrelation_pair(&params.forrelation(), rng)?;
            let h = sample_uniform_fn(params.n, rng)?;
            let overrides = BTreeMap::from([(k_star, vec![pair.f.clone(), pair.g.clone()])]);
            let ensemble = KeyedEnsemble::with_overrides(spec, overrides, Some(h.clone()))?;
            let state = if hybrid_id == 1 {
                ensemble.state(k_star)
            } else {
                phase_state(&h)
            };
            HybridSample {
                law: ChallengeLaw::Hybrid(hybrid_id),
                state,
                ensemble,
                hidden: HiddenRecord {
                    k_star: Some(k_star),
                    h: Some(h),
                    f_prime: Some(pair.f),
                    g_prime: Some(pair.g),
                    branch: None,
                },
            }
        }
        3 => {
            let h = sample_uniform_fn(params.n, rng)?;
            let ensemble = KeyedEnsemble::with_overrides(spec, BTreeMap::new(), Some(h.clone()))?;
            HybridSample {
                law: ChallengeLaw::Hybrid(3),
                state: phase_state(&h),
                ensemble,
                hidden: HiddenRecord { h: Some(h), ..none },
            }
        }
        _ => HybridSample {
            law: ChallengeLaw::Hybrid(4),
            state: sample_haar(params.n, rng)?,
            ensemble: KeyedEnsemble::new(spec),
            hidden: none,
        },
    };
    Ok(sample)
}

/// Draws one challenge from `law`.
pub fn sample_challenge<R: RngCore + ?Sized>(
    law: ChallengeLaw,
    params: &HybridParams,
    rng: &mut R,
) -> Result<HybridSample> {
    match law {
        ChallengeLaw::Hybrid(i) => sample_hybrid(i, params, rng),
        ChallengeLaw::TauMixture => {
            let branch = if rng.random::<f64>() < params.epsilon {
                1
            } else {
                3
            };
            let mut s = sample_hybrid(branch, params, rng)?;
            s.law = ChallengeLaw::TauMixture;
            s.hidden.branch = Some(branch);
            Ok(s)
        }
    }
}

/// Seed-averaged Fourier-square uniformity for one key length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityRow {
    pub n: usize,
    pub kappa: usize,
    pub seeds: usize,
    pub mean_value: f64,
    pub sd: f64,
    pub master_seed: u64,
}

/// Averages [`fourier_square_uniformity`] over `seeds` oracles per `κ`;
/// oracle `s` for key length `κ` is seeded from stream `s` of
/// `(master_seed, "uniformity-κ")`.
pub fn fourier_uniformity_sweep(
    n: usize,
    kappas: &[usize],
    seeds: usize,
    master_seed: u64,
    workers: Workers,
) -> Result<Vec<UniformityRow>> {
    if seeds == 0 {
        return Err(LabError::InvalidParameter("need at least one seed".into()));
    }
    for &kappa in kappas {
        OracleSpec::statistics_only(0, kappa, n)?;
    }
    Ok(kappas
        .iter()
        .map(|&kappa| {
            let values = workers.map(seeds, |s| {
                let seed =
                    stream_rng(master_seed, &format!("uniformity-{kappa}"), s as u64).next_u64();
                let spec = OracleSpec::statistics_only(seed, kappa, n).expect("validated");
                fourier_square_uniformity(&KeyedEnsemble::new(spec))
            });
            let ci = crate::stats::MeanCi::from_samples(&values);
            UniformityRow {
                n,
                kappa,
                seeds,
                mean_value: ci.mean,
                sd: ci.sd,
                master_seed,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::overlap;
    use crate::rng::rng_from_seed;

    #[test]
    fn oracle_spec_bounds() {
        assert!(OracleSpec::new(1, 4, 4).is_err());
        assert!(OracleSpec::new(1, 3, 4).is_ok());
        assert!(OracleSpec::statistics_only(1, 10, 10).is_ok());
        assert!(OracleSpec::statistics_only(1, 21, 22)
            .unwrap_err()
            .is_cap_violation());
        let s = OracleSpec::new(1, 2, 4).unwrap();
        assert!(s.function(4, 0).is_err());
        assert!(s.function(0, 2).is_err());
        assert_eq!(layer_bits(1), 0);
        assert_eq!(layer_bits(2), 1);
        assert_eq!(layer_bits(3), 2);
    }

    #[test]
    fn functions_read_the_encoded_oracle_strings() {
        let spec = OracleSpec::new(9, 2, 3).unwrap();
        let a = RandomOracle::new(9);
        for k in 0..4 {
            for i in 0..2 {
                let f = spec.function(k, i).unwrap();
                for x in 0..8u64 {
                    let s =
                        crate::oracle::BitString::new(6, ((((i as u64) << 2) | k as u64) << 3) | x)
                            .unwrap();
                    assert_eq!(f.value(x as usize), a.eval(s));
                }
            }
        }
    }

    #[test]
    fn ensemble_states() {
        let e = KeyedEnsemble::new(OracleSpec::new(5, 3, 5).unwrap());
        let again = KeyedEnsemble::new(OracleSpec::new(5, 3, 5).unwrap());
        for k in 0..8 {
            let s = e.state(k);
            assert_eq!(s, again.state(k));
            assert!(s.is_real() && (s.norm() - 1.0).abs() < 1e-12);
            let expected = t_forrelation_state(&[e.f(k).clone(), e.g(k).clone()]).unwrap();
            assert_eq!(s, expected);
        }
    }

    #[test]
    fn single_key_rho_is_pure() {
        let e = KeyedEnsemble::new(OracleSpec::new(2, 0, 4).unwrap());
        let rho = rho_a(&e).unwrap();
        let pure = DensityMatrix::pure(&e.state(0)).unwrap();
        assert!(rho.max_entry_gap(&pure).unwrap() < 1e-15);
        let u = fourier_square_uniformity(&e);
        let direct: f64 = e
            .f_hat(0)
            .coeffs()
            .iter()
            .map(|c| (1.0 / 16.0 - c * c).abs())
            .sum();
        assert_eq!(u, direct);
    }

    #[test]
    fn tau_endpoints() {
        let e = KeyedEnsemble::new(OracleSpec::new(3, 2, 4).unwrap());
        let one = ForrelationParams::with_epsilon(4, 1.0).unwrap();
        assert!(
            tau_a(&e, &one)
                .unwrap()
                .max_entry_gap(&rho_a(&e).unwrap())
                .unwrap()
                < 1e-15
        );
        let tiny = ForrelationParams::with_epsilon(4, f64::MIN_POSITIVE).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(tau_a(&e, &tiny).unwrap().max_entry_gap(&mixed).unwrap() < 1e-15);
    }

    #[test]
    fn hybrid_structure() {
        let p = HybridParams::new(6, 3, None).unwrap();
        let mut rng = rng_from_seed(17);
        for id in 1..=2 {
            let s = sample_hybrid(id, &p, &mut rng).unwrap();
            let hid = s.hidden();
            let (k, h) = (hid.k_star.unwrap(), hid.h.as_ref().unwrap());
            assert_eq!(s.ensemble().f(k), hid.f_prime.as_ref().unwrap());
            assert_eq!(
                &s.ensemble().g(k).product(h).unwrap(),
                hid.g_prime.as_ref().unwrap()
            );
            // |<Φ_h|φ_k*>| equals the forrelation of the unshifted pair.
            let forr = crate::fordist::forrelation_value(
                hid.f_prime.as_ref().unwrap(),
                hid.g_prime.as_ref().unwrap(),
            )
            .unwrap();
            let ov = overlap(&phase_state(h), &s.ensemble().state(k)).unwrap();
            assert!((ov.norm() - forr.abs()).abs() < 1e-12);
        }
        let s0 = sample_hybrid(0, &p, &mut rng).unwrap();
        assert_eq!(
            s0.state(),
            &s0.ensemble().state(s0.hidden().k_star.unwrap())
        );
        assert!(matches!(
            sample_hybrid(5, &p, &mut rng),
            Err(LabError::InvalidHybrid(5))
        ));
    }

    #[test]
    fn challenge_law_parsing() {
        assert_eq!(
            "H2".parse::<ChallengeLaw>().unwrap(),
            ChallengeLaw::Hybrid(2)
        );
        assert_eq!(
            "0".parse::<ChallengeLaw>().unwrap(),
            ChallengeLaw::Hybrid(0)
        );
        assert_eq!(
            "tau".parse::<ChallengeLaw>().unwrap(),
            ChallengeLaw::TauMixture
        );
        assert!(matches!(
            "h7".parse::<ChallengeLaw>(),
            Err(LabError::InvalidHybrid(7))
        ));
        assert!("x".parse::<ChallengeLaw>().is_err());
    }
}
