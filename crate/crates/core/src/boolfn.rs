//! Boolean functions on `{±1}^n`, their truth tables and Walsh–Hadamard
//! analysis.
//!
//! # Index convention
//!
//! A point `x ∈ {±1}^n` is stored at the offset obtained by reading `x` as an
//! `n`-bit binary number, most significant bit first, with `+1 ↦ 0` and
//! `-1 ↦ 1`. Subsets `S ⊆ [n]` use the same layout through their indicator
//! point, so `f̂(x)` lives at `index(x)` with `S = {i : x_i = -1}` and the
//! character `χ_S(y)` is `(-1)^popcount(index(S) & index(y))`.

use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, RngCore};

use crate::error::{LabError, Result};

/// Largest qubit count with an in-memory truth table.
pub const MAX_QUBITS: usize = 24;

const TT_MAGIC: &[u8; 4] = b"BFTT";
const TT_VERSION: u8 = 1;

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(LabError::QubitCount {
            n,
            min: 1,
            max: MAX_QUBITS,
        })
    }
}

/// `log2(len)` when `len` is a power of two, else an error.
pub(crate) fn log2_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(LabError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Offset of a point `x ∈ {±1}^n`.
pub fn index_of(point: &[i8]) -> usize {
    point
        .iter()
        .fold(0usize, |acc, &v| (acc << 1) | usize::from(v < 0))
}

/// Inverse of [`index_of`].
pub fn point_of(index: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|i| {
            if (index >> (n - 1 - i)) & 1 == 1 {
                -1
            } else {
                1
            }
        })
        .collect()
}

/// `χ_S(y)` for the subset with offset `subset` evaluated at offset `point`.
#[inline]
pub fn character(subset: usize, point: usize) -> f64 {
    if (subset & point).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// A Boolean function `{±1}^n → {±1}` stored bit-packed; a set bit means `-1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

impl TruthTable {
    fn word_count(n: usize) -> usize {
        (1usize << n).div_ceil(64)
    }

    fn tail_mask(n: usize) -> u64 {
        let len = 1usize << n;
        if len.is_multiple_of(64) {
            u64::MAX
        } else {
            (1u64 << (len % 64)) - 1
        }
    }

    /// Constant function with value `value` (`+1` or `-1`).
    pub fn constant(n: usize, value: i8) -> Result<Self> {
        check_qubits(n)?;
        let fill = if value < 0 { u64::MAX } else { 0 };
        Ok(Self::from_words_masked(n, vec![fill; Self::word_count(n)]))
    }

    /// Builds a table from `predicate(index) == true ↦ -1`.
    pub fn from_fn(n: usize, mut is_minus: impl FnMut(usize) -> bool) -> Result<Self> {
        check_qubits(n)?;
        let mut words = vec![0u64; Self::word_count(n)];
        for x in 0..1usize << n {
            if is_minus(x) {
                words[x / 64] |= 1 << (x % 64);
            }
        }
        Ok(Self { n, words })
    }

    /// Builds a table from a `±1` vector of length `2^n`.
    pub fn from_values(values: &[i8]) -> Result<Self> {
        let n = log2_len(values.len())?;
        check_qubits(n)?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| v.abs() != 1) {
            return Err(LabError::Format(format!("entry {i} is {v}, expected ±1")));
        }
        Self::from_fn(n, |x| values[x] < 0)
    }

    /// Wraps raw words (bit `x % 64` of word `x / 64` set ⇔ `f(x) = -1`);
    /// padding bits beyond `2^n` are cleared.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self> {
        check_qubits(n)?;
        if words.len() != Self::word_count(n) {
            return Err(LabError::DimensionMismatch {
                left: words.len(),
                right: Self::word_count(n),
            });
        }
        Ok(Self::from_words_masked(n, words))
    }

    fn from_words_masked(n: usize, mut words: Vec<u64>) -> Self {
        if let Some(last) = words.last_mut() {
            *last &= Self::tail_mask(n);
        }
        Self { n, words }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of entries, `2^n`.
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// `f(x)` as `±1`.
    #[inline]
    pub fn value(&self, x: usize) -> i8 {
        if self.is_minus(x) {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn is_minus(&self, x: usize) -> bool {
        (self.words[x / 64] >> (x % 64)) & 1 == 1
    }

    /// `f(x)` as a float.
    #[inline]
    pub fn sign(&self, x: usize) -> f64 {
        if self.is_minus(x) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn values(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len()).map(|x| self.value(x))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.sign(x)).collect()
    }

    /// Pointwise product `f · g` (XOR of the bit encodings).
    pub fn product(&self, other: &TruthTable) -> Result<TruthTable> {
        if self.n != other.n {
            return Err(LabError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(TruthTable { n: self.n, words })
    }

    /// Sum of all entries.
    pub fn sum(&self) -> i64 {
        let minus: u64 = self.words.iter().map(|w| u64::from(w.count_ones())).sum();
        self.len() as i64 - 2 * minus as i64
    }

    /// Compact binary record: `"BFTT"`, version byte, `n` byte, then `2^n`
    /// bits packed most-significant-bit first (bit 1 = value `-1`), zero padded
    /// to a whole byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.len().div_ceil(8));
        out.extend_from_slice(TT_MAGIC);
        out.push(TT_VERSION);
        out.push(self.n as u8);
        let mut byte = 0u8;
        for x in 0..self.len() {
            if self.is_minus(x) {
                byte |= 0x80 >> (x % 8);
            }
            if x % 8 == 7 {
                out.push(byte);
                byte = 0;
            }
        }
        if !self.len().is_multiple_of(8) {
            out.push(byte);
        }
        out
    }

    /// Parses one record from the front of `bytes`, returning the table and
    /// the number of bytes consumed.
    pub fn read_bytes(bytes: &[u8]) -> Result<(TruthTable, usize)> {
        if bytes.len() < 6 || &bytes[..4] != TT_MAGIC {
            return Err(LabError::Format("missing truth-table magic".into()));
        }
        if bytes[4] != TT_VERSION {
            return Err(LabError::Format(format!(
                "unsupported version {}",
                bytes[4]
            )));
        }
        let n = bytes[5] as usize;
        check_qubits(n)?;
        let len = 1usize << n;
        let body_len = len.div_ceil(8);
        let body = bytes
            .get(6..6 + body_len)
            .ok_or_else(|| LabError::Format("truncated truth-table body".into()))?;
        if !len.is_multiple_of(8) && body[body_len - 1] & (0xFF >> (len % 8)) != 0 {
            return Err(LabError::Format("nonzero padding bits".into()));
        }
        let tt = TruthTable::from_fn(n, |x| body[x / 8] & (0x80 >> (x % 8)) != 0)?;
        Ok((tt, 6 + body_len))
    }

    /// Parses exactly one record.
    pub fn from_bytes(bytes: &[u8]) -> Result<TruthTable> {
        let (tt, used) = Self::read_bytes(bytes)?;
        if used != bytes.len() {
            return Err(LabError::Format(format!(
                "{} trailing bytes",
                bytes.len() - used
            )));
        }
        Ok(tt)
    }

    /// Debug text form: one `'+'` or `'-'` per entry.
    pub fn to_text(&self) -> String {
        self.values()
            .map(|v| if v > 0 { '+' } else { '-' })
            .collect()
    }

    pub fn from_text(text: &str) -> Result<TruthTable> {
        let values = text
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(LabError::Format(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::from_values(&values)
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n <= 6 {
            write!(f, "TruthTable(n={}, {})", self.n, self.to_text())
        } else {
            write!(f, "TruthTable(n={}, ..)", self.n)
        }
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// The `2^n` Fourier coefficients of a function, indexed by [`index_of`].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let n = log2_len(coeffs.len())?;
        check_qubits(n)?;
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    #[inline]
    pub fn coeff(&self, x: usize) -> f64 {
        self.coeffs[x]
    }

    /// `Σ_x f̂(x)²`; equals 1 for Boolean functions.
    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `L_{1,ℓ} = Σ_{|S| = ℓ} |f̂(S)|`.
    pub fn l1_level(&self, level: usize) -> Result<f64> {
        self.check_level(level)?;
        Ok(self.level_iter(level).map(f64::abs).sum())
    }

    /// `Σ_{|S| = ℓ} f̂(S)²`.
    pub fn level_mass(&self, level: usize) -> Result<f64> {
        self.check_level(level)?;
        Ok(self.level_iter(level).map(|c| c * c).sum())
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level > self.n {
            Err(LabError::LevelOutOfRange { level, n: self.n })
        } else {
            Ok(())
        }
    }

    fn level_iter(&self, level: usize) -> impl Iterator<Item = f64> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(move |(s, _)| s.count_ones() as usize == level)
            .map(|(_, &c)| c)
    }
}

/// In-place unnormalized Walsh–Hadamard butterfly: applying it twice
/// multiplies by `len`.
pub fn walsh_hadamard_in_place<T>(data: &mut [T])
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// Fourier coefficients `f̂(x) = 2^{-n} Σ_y f(y) χ_{S(x)}(y)` in `O(N log N)`.
pub fn fwht(f: &TruthTable) -> FourierSpectrum {
    let mut data = f.to_f64();
    walsh_hadamard_in_place(&mut data);
    let scale = 1.0 / f.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    FourierSpectrum {
        n: f.n(),
        coeffs: data,
    }
}

/// Evaluates the multilinear expansion at every point of the cube.
pub fn inverse_fwht(spectrum: &FourierSpectrum) -> Vec<f64> {
    let mut data = spectrum.coeffs.clone();
    walsh_hadamard_in_place(&mut data);
    data
}

/// `trnc_a(z) = min{a, max{-a, z}}`.
pub fn trnc(z: f64, a: f64) -> Result<f64> {
    if a.is_nan() || a <= 0.0 {
        return Err(LabError::NonPositiveBound(a));
    }
    Ok(z.clamp(-a, a))
}

/// `trnc_1`.
#[inline]
pub fn trnc_unit(z: f64) -> f64 {
    z.clamp(-1.0, 1.0)
}

/// Uniformly random Boolean function.
pub fn sample_uniform_fn<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<TruthTable> {
    check_qubits(n)?;
    let words = (0..TruthTable::word_count(n))
        .map(|_| rng.next_u64())
        .collect();
    Ok(TruthTable::from_words_masked(n, words))
}

/// Independent entries with `Pr[f(x) = +1] = (1 + bias[x]) / 2`.
pub fn sample_biased_fn<R: RngCore + ?Sized>(bias: &[f64], rng: &mut R) -> Result<TruthTable> {
    let n = log2_len(bias.len())?;
    check_qubits(n)?;
    if let Some((index, &value)) = bias
        .iter()
        .enumerate()
        .find(|(_, b)| !(-1.0..=1.0).contains(*b))
    {
        return Err(LabError::BiasOutOfRange { index, value });
    }
    Ok(sample_biased_unchecked(n, bias, rng))
}

pub(crate) fn sample_biased_unchecked<R: RngCore + ?Sized>(
    n: usize,
    bias: &[f64],
    rng: &mut R,
) -> TruthTable {
    let mut words = vec![0u64; TruthTable::word_count(n)];
    for (x, b) in bias.iter().enumerate() {
        let u: f64 = rng.random();
        if u >= 0.5 * (1.0 + b) {
            words[x / 64] |= 1 << (x % 64);
        }
    }
    TruthTable { n, words }
}
