//! Dense statevector and density-matrix simulation.
//!
//! Statevectors support `n ≤ 24`; density matrices are capped at `n ≤ 12`.

use nalgebra::{Complex, DMatrix};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::boolfn::{check_qubits, log2_len, walsh_hadamard_in_place, TruthTable};
use crate::error::{LabError, Result};

pub type C64 = Complex<f64>;

/// Largest `n` for dense density matrices.
pub const MAX_DENSE_QUBITS: usize = 12;

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

pub(crate) fn check_dense(n: usize) -> Result<()> {
    check_qubits(n)?;
    if n > MAX_DENSE_QUBITS {
        return Err(LabError::CapExceeded {
            what: format!("density matrix on {n} qubits"),
            cap: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Pure state on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes, rejecting vectors that are not unit length.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n = log2_len(amps.len())?;
        check_qubits(n)?;
        let state = Self { n, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(LabError::InvalidParameter(format!("state norm is {norm}")));
        }
        Ok(state)
    }

    /// Real amplitudes, normalized on the way in.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        let n = log2_len(values.len())?;
        check_qubits(n)?;
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LabError::InvalidParameter("zero vector".into()));
        }
        Ok(Self {
            n,
            amps: values.iter().map(|v| C64::new(v / norm, 0.0)).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, x: usize) -> C64 {
        self.amps[x]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.amps.iter().all(|a| a.im == 0.0)
    }

    /// Real parts; meaningful for states built from phases and Hadamards.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    /// `u32` little-endian `n`, then interleaved real/imaginary `f64` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 16 * self.dim());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (n, amps) = read_complex_block(bytes, |n| 1usize << n)?;
        let state = Self::new(amps)?;
        debug_assert_eq!(state.n, n);
        Ok(state)
    }
}

fn read_complex_block(bytes: &[u8], count: impl Fn(usize) -> usize) -> Result<(usize, Vec<C64>)> {
    if bytes.len() < 4 {
        return Err(LabError::Format("missing qubit count".into()));
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    check_qubits(n)?;
    let expected = 4 + 16 * count(n);
    if bytes.len() != expected {
        return Err(LabError::Format(format!(
            "expected {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let amps = bytes[4..]
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((n, amps))
}

/// `|+ⁿ⟩`.
pub fn plus_state(n: usize) -> Result<StateVector> {
    check_qubits(n)?;
    let a = 1.0 / ((1usize << n) as f64).sqrt();
    Ok(StateVector {
        n,
        amps: vec![C64::new(a, 0.0); 1 << n],
    })
}

/// Computational basis state `|x⟩`.
pub fn basis_state(n: usize, x: usize) -> Result<StateVector> {
    check_qubits(n)?;
    if x >= 1 << n {
        return Err(LabError::InvalidParameter(format!(
            "basis index {x} out of range"
        )));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[x] = C64::new(1.0, 0.0);
    Ok(StateVector { n, amps })
}

/// `U_f|ψ⟩`.
pub fn apply_phase(state: &StateVector, f: &TruthTable) -> Result<StateVector> {
    if state.n != f.n() {
        return Err(LabError::DimensionMismatch {
            left: state.n,
            right: f.n(),
        });
    }
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(x, &a)| if f.is_minus(x) { -a } else { a })
        .collect();
    Ok(StateVector { n: state.n, amps })
}

/// `H^{⊗n}|ψ⟩`.
pub fn apply_hadamard(state: &StateVector) -> StateVector {
    let mut amps = state.amps.clone();
    walsh_hadamard_in_place(&mut amps);
    let scale = 1.0 / (amps.len() as f64).sqrt();
    amps.iter_mut().for_each(|a| *a *= scale);
    StateVector { n: state.n, amps }
}

/// Phase state `U_h|+ⁿ⟩`.
pub fn phase_state(h: &TruthTable) -> StateVector {
    let a = 1.0 / (h.len() as f64).sqrt();
    let amps = (0..h.len()).map(|x| C64::new(a * h.sign(x), 0.0)).collect();
    StateVector { n: h.n(), amps }
}

/// `U_{f^t} H ⋯ H U_{f^1}|+ⁿ⟩` for `functions = [f^1, …, f^t]`.
pub fn t_forrelation_state(functions: &[TruthTable]) -> Result<StateVector> {
    let (first, rest) = functions.split_first().ok_or(LabError::EmptyFunctionList)?;
    let mut state = phase_state(first);
    for f in rest {
        state = apply_phase(&apply_hadamard(&state), f)?;
    }
    Ok(state)
}

/// Haar-random state from normalized complex Gaussians.
pub fn sample_haar<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    check_qubits(n)?;
    let mut amps: Vec<C64> = (0..1usize << n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(StateVector { n, amps })
}

/// `⟨a|b⟩`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.n != b.n {
        return Err(LabError::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// Dense mixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues above
    /// `-1e-9`).
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let dm = Self::from_matrix_unchecked(matrix)?;
        let dev = dm.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(LabError::NotHermitian(dev));
        }
        let trace = dm.trace();
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(LabError::InvalidParameter(format!("trace is {trace}")));
        }
        let min = dm.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(LabError::InvalidParameter(format!(
                "eigenvalue {min} is negative"
            )));
        }
        Ok(dm)
    }

    /// Checks only the shape; used for intermediate objects built by exact
    /// formulas.
    pub fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(LabError::DimensionMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        let n = log2_len(matrix.nrows())?;
        check_dense(n)?;
        Ok(Self { n, matrix })
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix_unchecked(matrix.map(|v| C64::new(v, 0.0)))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(state: &StateVector) -> Result<Self> {
        check_dense(state.n)?;
        let d = state.dim();
        let matrix = DMatrix::from_fn(d, d, |i, j| state.amps[i] * state.amps[j].conj());
        Ok(Self { n: state.n, matrix })
    }

    /// `I/2ⁿ`.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_dense(n)?;
        let d = 1usize << n;
        Ok(Self {
            n,
            matrix: DMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|c| c.re).collect()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|c| c.im == 0.0)
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_entry_gap(&self, other: &DensityMatrix) -> Result<f64> {
        self.check_same(other)?;
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &DensityMatrix, b: f64) -> Result<DensityMatrix> {
        self.check_same(other)?;
        let matrix = self.matrix.map(|c| c * a) + other.matrix.map(|c| c * b);
        Ok(Self { n: self.n, matrix })
    }

    /// `Tr(self · other)`.
    pub fn inner(&self, other: &DensityMatrix) -> Result<C64> {
        self.check_same(other)?;
        Ok(self.matrix.component_mul(&other.matrix.transpose()).sum())
    }

    fn check_same(&self, other: &DensityMatrix) -> Result<()> {
        if self.n != other.n {
            Err(LabError::DimensionMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }

    /// Eigenvalues, assuming a Hermitian matrix.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `u32` little-endian `n`, then row-major interleaved real/imaginary
    /// `f64` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dim();
        let mut out = Vec::with_capacity(4 + 16 * d * d);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for i in 0..d {
            for j in 0..d {
                let c = self.matrix[(i, j)];
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (n, entries) = read_complex_block(bytes, |n| 1usize << (2 * n))?;
        check_dense(n)?;
        let d = 1usize << n;
        Self::new(DMatrix::from_row_slice(d, d, &entries))
    }
}

fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let d = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if dev > HERMITIAN_TOL {
        return Err(LabError::NotHermitian(dev));
    }
    if m.iter().all(|c| c.im == 0.0) {
        let real = m.map(|c| c.re);
        let real = (&real + real.transpose()) * 0.5;
        return Ok(real.symmetric_eigenvalues().iter().copied().collect());
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(sym.symmetric_eigenvalues().iter().copied().collect())
}

/// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`.
pub fn density_from_ensemble(states: &[StateVector], weights: &[f64]) -> Result<DensityMatrix> {
    if states.is_empty() {
        return Err(LabError::InvalidWeights("empty ensemble".into()));
    }
    if states.len() != weights.len() {
        return Err(LabError::DimensionMismatch {
            left: states.len(),
            right: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
        return Err(LabError::InvalidWeights(format!("negative weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(LabError::InvalidWeights(format!("weights sum to {total}")));
    }
    let n = states[0].n;
    check_dense(n)?;
    if let Some(s) = states.iter().find(|s| s.n != n) {
        return Err(LabError::DimensionMismatch {
            left: n,
            right: s.n,
        });
    }
    let d = 1usize << n;
    if states.iter().all(StateVector::is_real) {
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for (s, &w) in states.iter().zip(weights) {
            let v = nalgebra::DVector::from_iterator(d, s.amps.iter().map(|a| a.re));
            acc.ger(w, &v, &v, 1.0);
        }
        return DensityMatrix::from_real(&acc);
    }
    let mut acc = DMatrix::<C64>::zeros(d, d);
    for (s, &w) in states.iter().zip(weights) {
        let v = nalgebra::DVector::from_column_slice(&s.amps);
        acc.gerc(C64::new(w, 0.0), &v, &v, C64::new(1.0, 0.0));
    }
    DensityMatrix::from_matrix_unchecked(acc)
}

/// `½ Σ |λᵢ(ρ − σ)|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same(sigma)?;
    let diff = &rho.matrix - &sigma.matrix;
    Ok(0.5
        * hermitian_eigenvalues(&diff)?
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

/// `½ Σ |pᵢ − qᵢ|`.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(LabError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for dist in [p, q] {
        if dist.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(LabError::InvalidDistribution(
                "negative or NaN entry".into(),
            ));
        }
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(LabError::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{fwht, sample_uniform_fn};
    use crate::fordist::forrelation_value;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn plus_state_basics() {
        let p = plus_state(1).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_eq!(p.amplitudes(), &[C64::new(r, 0.0), C64::new(r, 0.0)]);
        for n in 1..=10 {
            let p = plus_state(n).unwrap();
            assert!((p.norm() - 1.0).abs() < 1e-12);
            assert!(close(overlap(&p, &p).unwrap(), C64::new(1.0, 0.0), 1e-12));
        }
        assert!(plus_state(0).is_err());
        assert!(plus_state(25).is_err());
    }

    #[test]
    fn hadamard_of_plus_is_zero_basis_state() {
        let h = apply_hadamard(&plus_state(5).unwrap());
        assert!(close(
            overlap(&h, &basis_state(5, 0).unwrap()).unwrap(),
            C64::new(1.0, 0.0),
            1e-12
        ));
    }

    #[test]
    fn phases_and_hadamards() {
        let mut rng = rng_from_seed(10);
        for n in 1..=8 {
            let f = sample_uniform_fn(n, &mut rng).unwrap();
            let ph = apply_phase(&plus_state(n).unwrap(), &f).unwrap();
            let a = 1.0 / ((1 << n) as f64).sqrt();
            for x in 0..1 << n {
                assert_eq!(ph.amplitude(x), C64::new(a * f.sign(x), 0.0));
            }
            assert_eq!(ph, phase_state(&f));
            assert_eq!(apply_phase(&ph, &f).unwrap(), plus_state(n).unwrap());
            let one = TruthTable::constant(n, 1).unwrap();
            assert_eq!(apply_phase(&ph, &one).unwrap(), ph);

            let fourier = apply_hadamard(&ph);
            let spectrum = fwht(&f);
            for x in 0..1 << n {
                assert!((fourier.amplitude(x).re - spectrum.coeff(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn t_forrelation_layers() {
        let mut rng = rng_from_seed(11);
        let f = sample_uniform_fn(5, &mut rng).unwrap();
        let g = sample_uniform_fn(5, &mut rng).unwrap();
        assert_eq!(
            t_forrelation_state(std::slice::from_ref(&f)).unwrap(),
            phase_state(&f)
        );
        let s = t_forrelation_state(&[f.clone(), g.clone()]).unwrap();
        let v = overlap(&plus_state(5).unwrap(), &s).unwrap();
        assert!((v.re - forrelation_value(&f, &g).unwrap()).abs() < 1e-10 && v.im == 0.0);
        let ones = vec![TruthTable::constant(5, 1).unwrap(); 4];
        let s = t_forrelation_state(&ones).unwrap();
        assert!(s.is_real() && (s.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            t_forrelation_state(&[]),
            Err(LabError::EmptyFunctionList)
        ));
        let small = TruthTable::constant(3, 1).unwrap();
        assert!(t_forrelation_state(&[f, small]).is_err());
    }

    #[test]
    fn overlap_of_basis_states() {
        let a = basis_state(3, 0).unwrap();
        let b = basis_state(3, 5).unwrap();
        assert_eq!(overlap(&a, &b).unwrap(), C64::new(0.0, 0.0));
        assert!(overlap(&a, &basis_state(2, 0).unwrap()).is_err());
    }

    #[test]
    fn haar_second_moments() {
        let mut rng = rng_from_seed(12);
        let n = 3;
        let samples = 10_000;
        let mut probs = [0.0; 8];
        let mut sq = [0.0; 8];
        for _ in 0..samples {
            let s = sample_haar(n, &mut rng).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
            for (x, p) in probs.iter_mut().enumerate() {
                let v = s.amplitude(x).norm_sqr();
                *p += v;
                sq[x] += v * v;
            }
        }
        for x in 0..8 {
            let m = probs[x] / samples as f64;
            let sd = (sq[x] / samples as f64 - m * m).sqrt() / (samples as f64).sqrt();
            assert!((m - 0.125).abs() < 4.0 * sd, "x={x} mean={m}");
        }
    }

    #[test]
    fn ensemble_density() {
        let s = sample_haar(2, &mut rng_from_seed(1)).unwrap();
        let rho = density_from_ensemble(std::slice::from_ref(&s), &[1.0]).unwrap();
        assert!(
            rho.max_entry_gap(&DensityMatrix::pure(&s).unwrap())
                .unwrap()
                < 1e-15
        );
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let ev = rho.eigenvalues().unwrap();
        assert_eq!(ev.iter().filter(|l| l.abs() > 1e-10).count(), 1);

        let n = 3;
        let states: Vec<StateVector> = (0..1usize << (1 << n))
            .map(|bits| phase_state(&TruthTable::from_fn(n, |x| (bits >> x) & 1 == 1).unwrap()))
            .collect();
        let w = vec![1.0 / states.len() as f64; states.len()];
        let avg = density_from_ensemble(&states, &w).unwrap();
        assert!(
            avg.max_entry_gap(&DensityMatrix::maximally_mixed(n).unwrap())
                .unwrap()
                < 1e-12
        );

        assert!(density_from_ensemble(std::slice::from_ref(&s), &[0.5]).is_err());
        assert!(density_from_ensemble(&[s.clone(), s], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn distances() {
        let a = DensityMatrix::pure(&basis_state(2, 0).unwrap()).unwrap();
        let b = DensityMatrix::pure(&basis_state(2, 3).unwrap()).unwrap();
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-12);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(tvd(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(tvd(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tvd(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!(tvd(&[0.3, 0.3], &[0.5, 0.5]).is_err());
        assert!(tvd(&[0.5, 0.5], &[1.0]).is_err());

        let mut bad = DMatrix::<C64>::zeros(2, 2);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        bad[(0, 0)] = C64::new(1.0, 0.0);
        let bad = DensityMatrix::from_matrix_unchecked(bad).unwrap();
        assert!(matches!(
            trace_distance(&bad, &a.clone().combine(1.0, &a, 0.0).unwrap()),
            Err(LabError::DimensionMismatch { .. })
        ));
        let one_qubit = DensityMatrix::pure(&basis_state(1, 0).unwrap()).unwrap();
        assert!(matches!(
            trace_distance(&bad, &one_qubit),
            Err(LabError::NotHermitian(_))
        ));
    }

    #[test]
    fn complex_trace_distance_path() {
        let mut rng = rng_from_seed(14);
        let sa = sample_haar(2, &mut rng).unwrap();
        let sb = sample_haar(2, &mut rng).unwrap();
        let a = DensityMatrix::pure(&sa).unwrap();
        let b = DensityMatrix::pure(&sb).unwrap();
        assert!(!a.is_real());
        // Pure states: TD = sqrt(1 - |<a|b>|^2).
        let expected = (1.0 - overlap(&sa, &sb).unwrap().norm_sqr()).sqrt();
        assert!((trace_distance(&a, &b).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn serialization() {
        let s = sample_haar(3, &mut rng_from_seed(2)).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 4 + 16 * 8);
        assert_eq!(StateVector::from_bytes(&bytes).unwrap(), s);
        let rho = DensityMatrix::pure(&s).unwrap();
        assert_eq!(DensityMatrix::from_bytes(&rho.to_bytes()).unwrap(), rho);
        assert!(StateVector::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn dense_cap() {
        assert!(DensityMatrix::maximally_mixed(13)
            .unwrap_err()
            .is_cap_violation());
    }

    proptest! {
        #[test]
        fn unitarity_and_metric(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = rng_from_seed(seed);
            let s = sample_haar(n, &mut rng).unwrap();
            let f = sample_uniform_fn(n, &mut rng).unwrap();
            prop_assert!((apply_phase(&s, &f).unwrap().norm() - 1.0).abs() < 1e-12);
            let h = apply_hadamard(&s);
            prop_assert!((h.norm() - 1.0).abs() < 1e-12);
            let back = apply_hadamard(&h);
            prop_assert!(back.amplitudes().iter().zip(s.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-12));

            let states: Vec<DensityMatrix> = (0..3)
                .map(|_| {
                    let v: Vec<StateVector> = (0..2).map(|_| sample_haar(n, &mut rng).unwrap()).collect();
                    density_from_ensemble(&v, &[0.3, 0.7]).unwrap()
                })
                .collect();
            let d = |i: usize, j: usize| trace_distance(&states[i], &states[j]).unwrap();
            prop_assert_eq!(d(0, 1), d(1, 0));
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&d(0, 1)));
        }
    }
}
