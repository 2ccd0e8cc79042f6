//! The discrete Forrelation distribution `F_n`.
//!
//! A sample is a pair `(f, g)`: `f` is uniform, and given `f` each `g(x)` is
//! independently `+1` with probability `(1 + trnc(√(ε2ⁿ)·f̂(x)))/2`.

use rand::RngCore;
use serde::Serialize;

use crate::boolfn::{
    check_qubits, fwht, sample_biased_unchecked, sample_uniform_fn, trnc_unit, FourierSpectrum,
    TruthTable,
};
use crate::error::{LabError, Result};
use crate::rng::{stream_rng, Workers};
use crate::stats::MeanCi;

const PAIR_MAGIC: &[u8; 4] = b"FPAR";
const PAIR_VERSION: u8 = 1;

/// Qubit count and correlation strength `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForrelationParams {
    pub n: usize,
    pub epsilon: f64,
}

impl ForrelationParams {
    /// Default strength `ε = 1/(100n)`.
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self {
            n,
            epsilon: default_epsilon(n),
        })
    }

    pub fn with_epsilon(n: usize, epsilon: f64) -> Result<Self> {
        check_qubits(n)?;
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        Ok(Self { n, epsilon })
    }

    /// `ε` if given, else the default.
    pub fn resolve(n: usize, epsilon: Option<f64>) -> Result<Self> {
        match epsilon {
            Some(e) => Self::with_epsilon(n, e),
            None => Self::new(n),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// The multiplier `√(ε2ⁿ)` applied to Fourier coefficients.
    pub fn scale(&self) -> f64 {
        (self.epsilon * self.dim() as f64).sqrt()
    }

    /// Coefficient size `1/√(ε2ⁿ)` above which the bias is clamped.
    pub fn truncation_threshold(&self) -> f64 {
        1.0 / self.scale()
    }
}

pub fn default_epsilon(n: usize) -> f64 {
    1.0 / (100.0 * n as f64)
}

/// A sample `(f, g)` together with the parameters it was drawn under.
#[derive(Debug, Clone, PartialEq)]
pub struct ForrelationPair {
    pub f: TruthTable,
    pub g: TruthTable,
    pub params: ForrelationParams,
}

impl ForrelationPair {
    pub fn forrelation(&self) -> f64 {
        forrelation_value(&self.f, &self.g).expect("pair tables share n")
    }

    /// `"FPAR"`, version, `n`, `ε` as little-endian f64, then the two
    /// truth-table records.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(PAIR_MAGIC);
        out.push(PAIR_VERSION);
        out.push(self.params.n as u8);
        out.extend_from_slice(&self.params.epsilon.to_le_bytes());
        out.extend(self.f.to_bytes());
        out.extend(self.g.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 14 || &bytes[..4] != PAIR_MAGIC {
            return Err(LabError::Format("missing pair magic".into()));
        }
        if bytes[4] != PAIR_VERSION {
            return Err(LabError::Format(format!(
                "unsupported version {}",
                bytes[4]
            )));
        }
        let n = bytes[5] as usize;
        let epsilon = f64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes"));
        let params = ForrelationParams::with_epsilon(n, epsilon)?;
        let (f, used_f) = TruthTable::read_bytes(&bytes[14..])?;
        let (g, used_g) = TruthTable::read_bytes(&bytes[14 + used_f..])?;
        if f.n() != n || g.n() != n {
            return Err(LabError::Format("table size disagrees with header".into()));
        }
        if 14 + used_f + used_g != bytes.len() {
            return Err(LabError::Format("trailing bytes after pair".into()));
        }
        Ok(Self { f, g, params })
    }
}

/// Per-coordinate biases `trnc(√(ε2ⁿ)·f̂(x))` of `g` given `f`.
pub fn conditional_bias(spectrum: &FourierSpectrum, params: &ForrelationParams) -> Vec<f64> {
    let scale = params.scale();
    spectrum
        .coeffs()
        .iter()
        .map(|c| trnc_unit(scale * c))
        .collect()
}

/// Samples `(f, g) ~ F_n`.
pub fn sample_forrelation_pair<R: RngCore + ?Sized>(
    params: &ForrelationParams,
    rng: &mut R,
) -> Result<ForrelationPair> {
    let f = sample_uniform_fn(params.n, rng)?;
    let g = sample_conditional_g(&f, params, rng)?;
    Ok(ForrelationPair {
        f,
        g,
        params: *params,
    })
}

/// Samples `g ~ F_n | f`.
pub fn sample_conditional_g<R: RngCore + ?Sized>(
    f: &TruthTable,
    params: &ForrelationParams,
    rng: &mut R,
) -> Result<TruthTable> {
    if f.n() != params.n {
        return Err(LabError::DimensionMismatch {
            left: f.n(),
            right: params.n,
        });
    }
    Ok(sample_g_from_spectrum(&fwht(f), params, rng))
}

pub(crate) fn sample_g_from_spectrum<R: RngCore + ?Sized>(
    spectrum: &FourierSpectrum,
    params: &ForrelationParams,
    rng: &mut R,
) -> TruthTable {
    sample_biased_unchecked(params.n, &conditional_bias(spectrum, params), rng)
}

/// `⟨+ⁿ|U_g H U_f|+ⁿ⟩ = 2^{-n/2} Σ_x g(x) f̂(x)`.
pub fn forrelation_value(f: &TruthTable, g: &TruthTable) -> Result<f64> {
    if f.n() != g.n() {
        return Err(LabError::DimensionMismatch {
            left: f.n(),
            right: g.n(),
        });
    }
    Ok(forrelation_from_spectrum(&fwht(f), g))
}

/// As [`forrelation_value`] with `f̂` precomputed.
pub fn forrelation_from_spectrum(spectrum: &FourierSpectrum, g: &TruthTable) -> f64 {
    let sum: f64 = spectrum
        .coeffs()
        .iter()
        .enumerate()
        .map(|(x, c)| g.sign(x) * c)
        .sum();
    sum / (g.len() as f64).sqrt()
}

/// True when some coefficient exceeds the clamping threshold, i.e. some
/// bias is truncated.
pub fn truncation_fires(spectrum: &FourierSpectrum, params: &ForrelationParams) -> bool {
    let limit = params.truncation_threshold();
    spectrum.coeffs().iter().any(|c| c.abs() > limit)
}

/// Truncation frequencies over uniformly random `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationStats {
    /// Fraction of functions with at least one clamped coordinate.
    pub event_rate: f64,
    /// Fraction of (function, coordinate) pairs that are clamped.
    pub coordinate_rate: f64,
    pub trials: usize,
}

pub fn truncation_stats<R: RngCore + ?Sized>(
    params: &ForrelationParams,
    trials: usize,
    rng: &mut R,
) -> Result<TruncationStats> {
    if trials == 0 {
        return Err(LabError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    let limit = params.truncation_threshold();
    let mut events = 0usize;
    let mut coords = 0usize;
    for _ in 0..trials {
        let spectrum = fwht(&sample_uniform_fn(params.n, rng)?);
        let clamped = spectrum.coeffs().iter().filter(|c| c.abs() > limit).count();
        coords += clamped;
        events += usize::from(clamped > 0);
    }
    Ok(TruncationStats {
        event_rate: events as f64 / trials as f64,
        coordinate_rate: coords as f64 / (trials * params.dim()) as f64,
        trials,
    })
}

/// Fraction of sampled uniform `f` with some `|f̂(x)| > 1/√(ε2ⁿ)`.
pub fn truncation_event_rate<R: RngCore + ?Sized>(
    params: &ForrelationParams,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(truncation_stats(params, trials, rng)?.event_rate)
}

/// Summary row of a mean-forrelation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForrStatsRow {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub mean_forr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trunc_rate: f64,
    pub seed: u64,
}

/// Draws `trials` pairs (trial `i` from stream `i` of `seed`) and reports
/// the mean forrelation with a 99% interval and the fraction of trials whose
/// `f` triggered a truncation.
pub fn forrelation_stats(
    params: &ForrelationParams,
    trials: usize,
    seed: u64,
    workers: Workers,
) -> Result<ForrStatsRow> {
    if trials < 2 {
        return Err(LabError::InvalidParameter(
            "trials must be at least 2".into(),
        ));
    }
    let samples = workers.map(trials, |i| {
        let mut rng = stream_rng(seed, "forr-stats", i as u64);
        let f = sample_uniform_fn(params.n, &mut rng).expect("validated n");
        let spectrum = fwht(&f);
        let g = sample_g_from_spectrum(&spectrum, params, &mut rng);
        (
            forrelation_from_spectrum(&spectrum, &g),
            truncation_fires(&spectrum, params),
        )
    });
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let truncated = samples.iter().filter(|s| s.1).count();
    let ci = MeanCi::from_samples(&values);
    Ok(ForrStatsRow {
        n: params.n,
        epsilon: params.epsilon,
        trials,
        mean_forr: ci.mean,
        ci_low: ci.low(),
        ci_high: ci.high(),
        trunc_rate: truncated as f64 / trials as f64,
        seed,
    })
}
