//! Dense complex Hermitian linear algebra.
//!
//! Everything in this crate is carried by three small types:
//!
//! - [`HermitianMatrix`]: a square complex matrix that is exactly Hermitian
//!   (construction symmetrizes `A <- (A + A†)/2`, so `a[i][j] == conj(a[j][i])`
//!   holds bitwise afterwards),
//! - [`DensityMatrix`]: a Hermitian matrix validated to be PSD with unit trace,
//! - [`StateVector`]: a normalized amplitude vector.
//!
//! Spectral decompositions use cyclic Jacobi rotations. Entropies are in bits
//! and use the `0 log 0 = 0` convention.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|‖ψ‖² − 1|` accepted by [`StateVector::new`].
pub const STATE_NORM_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const DENSITY_PSD_TOL: f64 = 1e-9;
/// Tolerance on `|Tr ρ − 1|` accepted for a density matrix.
pub const DENSITY_TRACE_TOL: f64 = 1e-9;
/// Tolerance used when validating probability vectors.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("state vector is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("matrix does not have unit trace (trace {trace})")]
    NotUnitTrace { trace: f64 },
    #[error("non-finite entry in input")]
    NonFinite,
}

/// A `dim × dim` complex Hermitian matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from a square complex matrix, replacing it by
    /// `(A + A†)/2`.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, LinalgError> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(LinalgError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(mut m: DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Self { data: m }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim >= 1, "HermitianMatrix dimension must be at least 1");
        Self::symmetrized(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major construction from `dim * dim` entries.
    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        if entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, k: f64) -> Self {
        Self::diagonal(&vec![k; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Rank-one projector `|ψ⟩⟨ψ|` (unnormalized vectors allowed).
    pub fn outer(amplitudes: &[Complex64]) -> Self {
        Self::from_fn(amplitudes.len(), |i, j| amplitudes[i] * amplitudes[j].conj())
    }

    /// The matrix unit `|i⟩⟨j| + |j⟩⟨i|` (or `|i⟩⟨i|` on the diagonal).
    pub fn symmetric_unit(dim: usize, i: usize, j: usize) -> Self {
        Self::from_fn(dim, |r, c| {
            if (r == i && c == j) || (r == j && c == i) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// The Hermitian matrix `i(|i⟩⟨j| − |j⟩⟨i|)` for `i != j`.
    pub fn antisymmetric_unit(dim: usize, i: usize, j: usize) -> Self {
        Self::from_fn(dim, |r, c| {
            if r == i && c == j {
                Complex64::new(0.0, 1.0)
            } else if r == j && c == i {
                Complex64::new(0.0, -1.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Orthogonal basis of the real vector space of `dim × dim` Hermitian
    /// matrices: diagonal units, then symmetric and antisymmetric off-diagonal
    /// units for each `i < j`.
    pub fn hermitian_basis(dim: usize) -> Vec<HermitianMatrix> {
        let mut basis = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            basis.push(Self::symmetric_unit(dim, i, i));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                basis.push(Self::symmetric_unit(dim, i, j));
                basis.push(Self::antisymmetric_unit(dim, i, j));
            }
        }
        basis
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { data: &self.data * Complex64::new(k, 0.0) }
    }

    /// Entrywise complex conjugate, which equals the transpose for Hermitian
    /// matrices.
    pub fn transpose(&self) -> Self {
        Self { data: self.data.map(|z| z.conj()) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        Self::symmetrized(self.data.kronecker(&other.data))
    }

    /// `V A V†` for an arbitrary (possibly rectangular) `V`.
    pub fn congruence(&self, v: &DMatrix<Complex64>) -> Result<Self, LinalgError> {
        if v.ncols() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: v.ncols(),
            });
        }
        Self::new(v * &self.data * v.adjoint())
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[(i, j)].norm() <= tol))
    }

    pub fn eig(&self) -> Result<SpectralDecomposition, LinalgError> {
        eig_hermitian(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        Ok(self.eig()?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    pub fn max_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(self.eigenvalues()?[0])
    }

    fn check_dim(&self, other: &Self) -> Result<(), LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_dim(other)?;
        Ok(Self { data: &self.data + &other.data })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_dim(other)?;
        Ok(Self { data: &self.data - &other.data })
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix({}x{}) [", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.data[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        self.try_add(rhs).expect("dimension mismatch in Hermitian addition")
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        self.try_sub(rhs).expect("dimension mismatch in Hermitian subtraction")
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, k: f64) -> HermitianMatrix {
        self.scale(k)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}

/// Serialized as a row-major array of `[re, im]` pairs.
impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| [self.data[(i, j)].re, self.data[(i, j)].im])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("matrix rows must have equal length"));
        }
        let entries: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])))
            .collect();
        HermitianMatrix::from_row_slice(n, &entries).map_err(serde::de::Error::custom)
    }
}

/// A validated density matrix: PSD within [`DENSITY_PSD_TOL`], unit trace
/// within [`DENSITY_TRACE_TOL`].
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    inner: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self, LinalgError> {
        let trace = m.trace();
        if (trace - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(LinalgError::NotUnitTrace { trace });
        }
        let min_eigenvalue = m.min_eigenvalue()?;
        if min_eigenvalue < -DENSITY_PSD_TOL {
            return Err(LinalgError::NotPositive { min_eigenvalue });
        }
        Ok(Self { inner: m })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self { inner: HermitianMatrix::outer(psi.amplitudes()) }
    }

    /// `diag(p)` for a probability vector `p`.
    pub fn incoherent(p: &[f64]) -> Result<Self, LinalgError> {
        validate_distribution(p)?;
        Ok(Self { inner: HermitianMatrix::diagonal(p) })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { inner: HermitianMatrix::scaled_identity(dim, 1.0 / dim as f64) }
    }

    /// Convex combination `λ a + (1 − λ) b`.
    pub fn mix(a: &DensityMatrix, b: &DensityMatrix, lambda: f64) -> Result<Self, LinalgError> {
        let m = a.inner.scale(lambda).try_add(&b.inner.scale(1.0 - lambda))?;
        Self::new(m)
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.inner
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.inner
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianMatrix;
    fn deref(&self) -> &HermitianMatrix {
        &self.inner
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = HermitianMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// A normalized pure state.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(transparent)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, LinalgError> {
        if amplitudes.is_empty() {
            return Err(LinalgError::EmptyDimension);
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_NORM_TOL {
            return Err(LinalgError::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self, LinalgError> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(LinalgError::NotNormalized { norm_sq: norm * norm });
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self, LinalgError> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// The state with amplitudes `sqrt(p_i)`.
    pub fn from_probabilities(p: &[f64]) -> Result<Self, LinalgError> {
        validate_distribution(p)?;
        Self::normalized(p.iter().map(|&x| Complex64::new(x.max(0.0).sqrt(), 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Squared moduli `|ψ_i|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm()).collect()
    }

    /// `‖ψ‖_∞²`, the largest squared modulus.
    pub fn max_probability(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let k = Complex64::new(f(lam), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= k;
            }
        }
        HermitianMatrix::symmetrized(scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Cyclic Jacobi eigensolver for a self-adjoint matrix over `f64` or
/// `Complex64`. Returns eigenvalues in descending order and the matching
/// eigenvector columns.
pub fn jacobi_eigen<T>(a: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>), LinalgError>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    let total: f64 = a.iter().map(|z| z.modulus_squared()).sum::<f64>().sqrt();
    let mut converged = n <= 1 || total == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::ConvergenceFailure { sweeps: sweep });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)].modulus_squared();
                }
            }
        }
        converged = off.sqrt() <= 1e-14 * total;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].real()).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((eigenvalues, eigenvectors))
}

fn rotate<T>(a: &mut DMatrix<T>, v: &mut DMatrix<T>, p: usize, q: usize)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let g = a[(p, q)];
    let g_abs = g.modulus();
    let app = a[(p, p)].real();
    let aqq = a[(q, q)].real();
    if g_abs == 0.0 || g_abs <= 1e-300 {
        return;
    }
    // Skip entries that no longer affect the diagonal in floating point.
    if g_abs < 1e-18 * (app.abs() + aqq.abs()) {
        a[(p, q)] = T::zero();
        a[(q, p)] = T::zero();
        return;
    }
    let u = g.unscale(g_abs);
    let uc = u.conjugate();
    let tau = (aqq - app) / (2.0 * g_abs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.nrows();

    // A <- A U with U e_p = c e_p - s ū e_q, U e_q = s e_p + c ū e_q.
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)] * uc;
        a[(i, p)] = aip.scale(c) - aiq.scale(s);
        a[(i, q)] = aip.scale(s) + aiq.scale(c);
    }
    // A <- U† A
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)] * u;
        a[(p, j)] = apj.scale(c) - aqj.scale(s);
        a[(q, j)] = apj.scale(s) + aqj.scale(c);
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    a[(p, p)] = T::from_real(a[(p, p)].real());
    a[(q, q)] = T::from_real(a[(q, q)].real());
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)] * uc;
        v[(i, p)] = vip.scale(c) - viq.scale(s);
        v[(i, q)] = vip.scale(s) + viq.scale(c);
    }
}

pub fn eig_hermitian(a: &HermitianMatrix) -> Result<SpectralDecomposition, LinalgError> {
    let (eigenvalues, eigenvectors) = jacobi_eigen(a.as_matrix())?;
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// The fully dephasing map: keeps only the diagonal.
pub fn dephase(a: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix::diagonal(&a.diagonal_entries())
}

/// `(A₊, A₋)` with `A = A₊ − A₋`, both PSD and with orthogonal supports.
pub fn pos_neg_parts(
    a: &HermitianMatrix,
) -> Result<(HermitianMatrix, HermitianMatrix), LinalgError> {
    let eig = a.eig()?;
    let pos = eig.reconstruct_with(|x| x.max(0.0));
    let neg = eig.reconstruct_with(|x| (-x).max(0.0));
    Ok((pos, neg))
}

/// Hilbert–Schmidt inner product `Tr(AB)` (real for Hermitian arguments).
pub fn inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64, LinalgError> {
    a.check_dim(b)?;
    Ok(inner_unchecked(a.as_matrix(), b.as_matrix()))
}

pub(crate) fn inner_unchecked(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    // Tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn trace_norm(a: &HermitianMatrix) -> Result<f64, LinalgError> {
    Ok(a.eigenvalues()?.iter().map(|x| x.abs()).sum())
}

pub fn validate_distribution(p: &[f64]) -> Result<(), LinalgError> {
    if p.is_empty() {
        return Err(LinalgError::InvalidDistribution("empty vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -DISTRIBUTION_TOL) {
        return Err(LinalgError::InvalidDistribution(format!("entry {x} is negative")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(LinalgError::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

fn entropy_terms(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

/// `−Σ p_i log₂ p_i`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64, LinalgError> {
    validate_distribution(p)?;
    Ok(entropy_terms(p.iter().copied()))
}

/// `−Tr ρ log₂ ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64, LinalgError> {
    Ok(entropy_terms(rho.eigenvalues()?.into_iter()))
}

/// `|Ψ_m⟩ = Σ_i |i⟩/√m`.
pub fn max_coherent_state(m: usize) -> StateVector {
    assert!(m >= 1, "maximally coherent state needs m >= 1");
    let a = 1.0 / (m as f64).sqrt();
    StateVector { amplitudes: vec![Complex64::new(a, 0.0); m] }
}

/// Haar-random pure state: `d` i.i.d. standard complex Gaussians, normalized.
pub fn haar_random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> StateVector {
    assert!(d >= 1, "Haar sampling needs d >= 1");
    loop {
        let amplitudes: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(psi) = StateVector::normalized(amplitudes) {
            return psi;
        }
    }
}

/// Random density matrix `A A† / Tr(A A†)` with `A` a `d × rank` complex
/// Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let a = DMatrix::<Complex64>::from_fn(d, rank.max(1), |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &a * a.adjoint();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    let h = HermitianMatrix::symmetrized(m.map(|z| z / tr));
    DensityMatrix::new(h).expect("Gram matrices are valid densities")
}

/// Random incoherent state `diag(p)` with `p` uniform on the simplex.
pub fn random_incoherent<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let raw: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let sum: f64 = raw.iter().sum();
    let p: Vec<f64> = raw.iter().map(|x| x / sum).collect();
    DensityMatrix { inner: HermitianMatrix::diagonal(&p) }
}

/// Random Hermitian matrix with Gaussian entries (GUE-like scaling).
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianMatrix {
    let m = DMatrix::<Complex64>::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianMatrix::symmetrized(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn psi2() -> HermitianMatrix {
        max_coherent_state(2).projector().into_hermitian()
    }

    #[test]
    fn construction_is_exactly_hermitian() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0), Complex64::new(0.3, 0.7), Complex64::new(0.1, 0.2), Complex64::new(2.0, 0.5)],
        );
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        assert_eq!(h.get(1, 1).im, 0.0);
        assert!(matches!(
            HermitianMatrix::new(DMatrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn dephase_examples() {
        let id = HermitianMatrix::identity(3);
        assert_eq!(dephase(&id), id);
        let d2 = dephase(&psi2());
        assert!(d2.is_diagonal(0.0));
        assert!(d2.diagonal_entries().iter().all(|x| (x - 0.5).abs() < 1e-15));
        let psi4 = max_coherent_state(4).projector();
        let d4 = dephase(&psi4);
        assert!((&d4 - &HermitianMatrix::scaled_identity(4, 0.25)).max_abs_entry() < 1e-15);
    }

    #[test]
    fn eig_examples() {
        let e = HermitianMatrix::diagonal(&[3.0, 1.0, 2.0]).eig().unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
        let e = psi2().eig().unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=12 {
            let a = random_hermitian(d, &mut rng);
            let e = a.eig().unwrap();
            let err = (&e.reconstruct() - &a).frobenius_norm();
            assert!(err <= 1e-10 * a.frobenius_norm().max(1.0), "d={d} err={err}");
            let vtv = e.eigenvectors.adjoint() * &e.eigenvectors;
            for i in 0..d {
                for j in 0..d {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[(i, j)] - c(target)).norm() < 1e-10);
                }
            }
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn real_jacobi_matches_known_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let (vals, _) = jacobi_eigen(&a).unwrap();
        let s = 2f64.sqrt();
        for (v, e) in vals.iter().zip([2.0 + s, 2.0, 2.0 - s]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn pos_neg_examples() {
        let (p, n) = pos_neg_parts(&HermitianMatrix::diagonal(&[2.0, -3.0])).unwrap();
        assert!((&p - &HermitianMatrix::diagonal(&[2.0, 0.0])).max_abs_entry() < 1e-15);
        assert!((&n - &HermitianMatrix::diagonal(&[0.0, 3.0])).max_abs_entry() < 1e-15);

        let (p, n) = pos_neg_parts(&psi2()).unwrap();
        assert!((&p - &psi2()).max_abs_entry() < 1e-14);
        assert!(n.max_abs_entry() < 1e-14);
    }

    #[test]
    fn pos_neg_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=6 {
            let rho = random_density(d, d, &mut rng);
            let x = HermitianMatrix::diagonal(&(0..d).map(|i| 0.1 * i as f64).collect::<Vec<_>>());
            let a = &*rho - &x;
            let (p, n) = pos_neg_parts(&a).unwrap();
            assert!((p.trace() - n.trace() - (rho.trace() - x.trace())).abs() < 1e-10);
            assert!((p.trace() + n.trace() - trace_norm(&a).unwrap()).abs() < 1e-10);
            assert!(p.min_eigenvalue().unwrap() > -1e-12);
            assert!(n.min_eigenvalue().unwrap() > -1e-12);
            let prod = p.as_matrix() * n.as_matrix();
            assert!(prod.iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn inner_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(3, 2, &mut rng);
        assert!((inner(&HermitianMatrix::identity(3), &rho).unwrap() - 1.0).abs() < 1e-14);
        assert!((inner(&psi2(), &psi2()).unwrap() - 1.0).abs() < 1e-15);
        let e1 = HermitianMatrix::diagonal(&[1.0, 0.0]);
        assert!((inner(&psi2(), &e1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            inner(&psi2(), &HermitianMatrix::identity(3)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norms_and_entropies() {
        assert!((trace_norm(&HermitianMatrix::diagonal(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-14);
        assert!(von_neumann_entropy(&max_coherent_state(3).projector()).unwrap().abs() < 1e-12);
        // -Σ p log2 p for (0.7, 0.2, 0.1)
        let oracle = -(0.7f64 * 0.7f64.log2() + 0.2 * 0.2f64.log2() + 0.1 * 0.1f64.log2());
        let h = shannon_entropy(&[0.7, 0.2, 0.1]).unwrap();
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 1.15678).abs() < 1e-4);
        assert_eq!(shannon_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!(shannon_entropy(&[0.5, 0.6]).is_err());
        assert!(shannon_entropy(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn max_coherent_examples() {
        assert_eq!(max_coherent_state(1).amplitudes(), &[c(1.0)]);
        let s = max_coherent_state(2);
        for a in s.amplitudes() {
            assert!((a.re - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn state_vector_validation() {
        assert!(StateVector::from_real(&[0.6, 0.8]).is_ok());
        assert!(matches!(
            StateVector::from_real(&[0.6, 0.7]),
            Err(LinalgError::NotNormalized { .. })
        ));
        assert!(StateVector::new(vec![]).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityMatrix::new(HermitianMatrix::diagonal(&[1.2, -0.2])),
            Err(LinalgError::NotPositive { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(HermitianMatrix::diagonal(&[0.5, 0.6])),
            Err(LinalgError::NotUnitTrace { .. })
        ));
    }

    #[test]
    fn haar_d1_has_unit_modulus_and_seeds_reproduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = haar_random_pure(1, &mut rng);
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        let a = haar_random_pure(5, &mut ChaCha8Rng::seed_from_u64(99));
        let b = haar_random_pure(5, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_qubit_mean_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mean: f64 =
            (0..n).map(|_| haar_random_pure(2, &mut rng).probabilities()[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn haar_d4_fraction_with_small_max_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| haar_random_pure(4, &mut rng).max_probability() > 0.5)
            .count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "fraction {frac}");
    }

    fn arb_state(max_dim: usize) -> impl Strategy<Value = StateVector> {
        (1..=max_dim)
            .prop_flat_map(|d| proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d))
            .prop_filter_map("zero vector", |v| {
                StateVector::normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                    .ok()
            })
    }

    fn arb_hermitian(d: usize) -> impl Strategy<Value = HermitianMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d).prop_map(move |v| {
            let entries: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            HermitianMatrix::from_row_slice(d, &entries).unwrap()
        })
    }

    proptest! {
        #[test]
        fn dephase_is_self_adjoint_idempotent_projection(a in arb_hermitian(4), b in arb_hermitian(4)) {
            let da = dephase(&a);
            prop_assert_eq!(dephase(&da), da.clone());
            prop_assert!((da.trace() - a.trace()).abs() < 1e-12);
            let lhs = inner(&da, &b).unwrap();
            let rhs = inner(&a, &dephase(&b)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn dephased_pure_entropy_is_shannon(psi in arb_state(6)) {
            let rho = psi.projector();
            let d = DensityMatrix::new(dephase(&rho)).unwrap();
            let s1 = von_neumann_entropy(&d).unwrap();
            let s2 = shannon_entropy(&psi.probabilities()).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-10);
            prop_assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-9);
        }

        #[test]
        fn trace_norm_equals_parts(a in arb_hermitian(3)) {
            let (p, n) = pos_neg_parts(&a).unwrap();
            prop_assert!((trace_norm(&a).unwrap() - p.trace() - n.trace()).abs() < 1e-10);
            prop_assert!((&(&p - &n) - &a).max_abs_entry() < 1e-10);
        }
    }
}
