//! Channels in Choi form, DIO certification, the optimal distillation channel
//! built from a fidelity witness, and the majorization protocol for pure
//! states.
//!
//! Choi convention: `J = Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` with the input factor
//! first, so `Λ(ρ) = Tr_in[J (ρᵀ ⊗ 1)]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    max_coherent_state, validate_distribution, DensityMatrix, HermitianMatrix, LinalgError,
    StateVector,
};
use crate::pure_state::m_distillation_norm;

/// Tolerance for the Choi invariants and for witness preconditions.
pub const CHANNEL_TOL: f64 = 1e-8;
/// Slack in majorization partial sums.
pub const MAJORIZATION_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A completely positive trace-preserving map `C^{in} → C^{out}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiChannel {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Choi matrix on `in ⊗ out`, PSD, with `Tr_out J = 1_in`.
    pub choi: HermitianMatrix,
}

fn matrix_unit(d: usize, i: usize, j: usize) -> DMatrix<Complex64> {
    let mut e = DMatrix::from_element(d, d, ZERO);
    e[(i, j)] = ONE;
    e
}

impl ChoiChannel {
    /// Validates positivity and trace preservation within [`CHANNEL_TOL`].
    pub fn new(in_dim: usize, out_dim: usize, choi: HermitianMatrix) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidChannel("dimensions must be at least 1".into()));
        }
        if choi.dim() != in_dim * out_dim {
            return Err(LinalgError::DimensionMismatch { expected: in_dim * out_dim, found: choi.dim() }.into());
        }
        let ch = Self { in_dim, out_dim, choi };
        let min = ch.choi.min_eigenvalue()?;
        if min < -CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("Choi matrix has eigenvalue {min}")));
        }
        let tp = ch.trace_preservation_error();
        if tp > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("partial trace deviates from identity by {tp}")));
        }
        Ok(ch)
    }

    /// Choi matrix of a linear map given by its action on matrix units.
    pub fn from_action(
        in_dim: usize,
        out_dim: usize,
        f: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> Result<Self> {
        let n = in_dim * out_dim;
        let mut j = DMatrix::from_element(n, n, ZERO);
        for a in 0..in_dim {
            for b in 0..in_dim {
                let out = f(&matrix_unit(in_dim, a, b));
                if out.shape() != (out_dim, out_dim) {
                    return Err(LinalgError::DimensionMismatch { expected: out_dim, found: out.nrows() }.into());
                }
                j.view_mut((a * out_dim, b * out_dim), (out_dim, out_dim)).copy_from(&out);
            }
        }
        Self::new(in_dim, out_dim, HermitianMatrix::new(j)?)
    }

    /// `Λ(|i⟩⟨j|)`, the `(i, j)` block of the Choi matrix.
    pub fn image_of_unit(&self, i: usize, j: usize) -> DMatrix<Complex64> {
        let o = self.out_dim;
        self.choi.as_matrix().view((i * o, j * o), (o, o)).into_owned()
    }

    /// `Λ(X)` for an arbitrary `in_dim × in_dim` operator.
    pub fn apply_matrix(&self, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(LinalgError::DimensionMismatch { expected: self.in_dim, found: x.nrows() }.into());
        }
        let mut out = DMatrix::from_element(self.out_dim, self.out_dim, ZERO);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let c = x[(i, j)];
                if c != ZERO {
                    out += self.image_of_unit(i, j) * c;
                }
            }
        }
        Ok(out)
    }

    /// `Λ(A)` for a Hermitian `A`.
    pub fn apply_hermitian(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix::new(self.apply_matrix(a.as_matrix())?)?)
    }

    /// `max_{ij} |(Tr_out J)_{ij} − δ_ij|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let t = self.image_of_unit(i, j).trace();
                let target = if i == j { ONE } else { ZERO };
                err = err.max((t - target).norm());
            }
        }
        err
    }

    /// `Λ₂ ∘ Λ₁` with `self = Λ₁`.
    pub fn then(&self, next: &ChoiChannel) -> Result<ChoiChannel> {
        if next.in_dim != self.out_dim {
            return Err(LinalgError::DimensionMismatch { expected: self.out_dim, found: next.in_dim }.into());
        }
        Self::from_action(self.in_dim, next.out_dim, |x| {
            let mid = self.apply_matrix(x).expect("dimension checked");
            next.apply_matrix(&mid).expect("dimension checked")
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::from_action(d, d, |x| x.clone()).expect("identity is a channel")
    }

    /// `ρ ↦ Δ(ρ)`.
    pub fn dephasing(d: usize) -> Self {
        Self::partial_dephasing(d, 1.0).expect("dephasing is a channel")
    }

    /// `ρ ↦ (1 − p) ρ + p Δ(ρ)` for `p ∈ [0, 1]`.
    pub fn partial_dephasing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dephasing strength {p} outside [0, 1]")));
        }
        Self::from_action(d, d, |x| {
            DMatrix::from_fn(d, d, |i, j| if i == j { x[(i, j)] } else { x[(i, j)] * (1.0 - p) })
        })
    }

    /// `|i⟩ ↦ |π(i)⟩`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        Self::from_action(d, d, |x| DMatrix::from_fn(d, d, |a, b| x[(inverse(perm, a), inverse(perm, b))]))
    }

    /// `ρ ↦ U ρ U†` with `U = diag(e^{iφ})`.
    pub fn diagonal_unitary(phases: &[f64]) -> Result<Self> {
        let d = phases.len();
        let u: Vec<Complex64> = phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        Self::from_action(d, d, |x| DMatrix::from_fn(d, d, |i, j| u[i] * x[(i, j)] * u[j].conj()))
    }

    /// `ρ ↦ Σ_{ij} P[i][j] ρ_jj |i⟩⟨i|` for a column-stochastic `P` (`out × in`).
    pub fn classical(stochastic: &DMatrix<f64>) -> Result<Self> {
        let (out, inp) = stochastic.shape();
        for j in 0..inp {
            validate_distribution(stochastic.column(j).as_slice())?;
        }
        Self::from_action(inp, out, |x| {
            DMatrix::from_fn(out, out, |a, b| {
                if a != b {
                    return ZERO;
                }
                (0..inp).map(|j| x[(j, j)] * stochastic[(a, j)]).sum()
            })
        })
    }

    /// `Σ_k w_k Λ_k` for weights on the simplex.
    pub fn mixture(channels: &[ChoiChannel], weights: &[f64]) -> Result<Self> {
        if channels.is_empty() || channels.len() != weights.len() {
            return Err(Error::InvalidArgument("mixture needs one weight per channel".into()));
        }
        validate_distribution(weights)?;
        let (inp, out) = (channels[0].in_dim, channels[0].out_dim);
        if channels.iter().any(|c| c.in_dim != inp || c.out_dim != out) {
            return Err(Error::InvalidArgument("mixed channels must share dimensions".into()));
        }
        let mut j = DMatrix::from_element(inp * out, inp * out, ZERO);
        for (c, &w) in channels.iter().zip(weights) {
            j += c.choi.as_matrix() * Complex64::new(w, 0.0);
        }
        Self::new(inp, out, HermitianMatrix::new(j)?)
    }
}

fn inverse(perm: &[usize], target: usize) -> usize {
    perm.iter().position(|&p| p == target).expect("validated permutation")
}

/// `Λ(ρ) = Tr_in[J (ρᵀ ⊗ 1)]`.
pub fn apply_choi(ch: &ChoiChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new(ch.apply_hermitian(rho)?)?)
}

/// `Λ(ρ) = (Tr Gρ) Ψ_m + (1 − Tr Gρ)(1 − Ψ_m)/(m − 1)` as a Choi matrix
/// `J = Qᵀ ⊗ (Ψ_m − 1/m) + 1 ⊗ 1/m` with `Q = m/(m−1)·(G − 1/m)`. For `m = 1`
/// the channel is `ρ ↦ Tr ρ` on a one-dimensional output.
pub fn optimal_distillation_channel(g: &HermitianMatrix, m: u64) -> Result<ChoiChannel> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let d = g.dim();
    check_witness(g, m)?;
    if m == 1 {
        return ChoiChannel::new(d, 1, HermitianMatrix::identity(d));
    }
    let mf = m as f64;
    let q = g
        .try_sub(&HermitianMatrix::scaled_identity(d, 1.0 / mf))?
        .scale(mf / (mf - 1.0));
    let psi = max_coherent_state(m as usize).projector();
    let traceless = psi.try_sub(&HermitianMatrix::scaled_identity(m as usize, 1.0 / mf))?;
    let j = &q.transpose().kron(&traceless)
        + &HermitianMatrix::identity(d).kron(&HermitianMatrix::scaled_identity(m as usize, 1.0 / mf));
    ChoiChannel::new(d, m as usize, j)
}

fn check_witness(g: &HermitianMatrix, m: u64) -> Result<()> {
    let target = 1.0 / m as f64;
    if let Some(x) = g.diagonal_entries().iter().find(|x| (*x - target).abs() > CHANNEL_TOL) {
        return Err(Error::InvalidWitness(format!("diagonal entry {x} differs from 1/{m}")));
    }
    let ev = g.eigenvalues()?;
    let (lo, hi) = (ev[ev.len() - 1], ev[0]);
    if lo < -CHANNEL_TOL || hi > 1.0 + CHANNEL_TOL {
        return Err(Error::InvalidWitness(format!("spectrum [{lo}, {hi}] leaves [0, 1]")));
    }
    Ok(())
}

/// Dephasing covariance on matrix units: `Λ(|i⟩⟨i|)` diagonal and
/// `Δ(Λ(|i⟩⟨j|)) = 0` for `i ≠ j`. Returns membership at [`CHANNEL_TOL`]
/// and the largest offending entry.
pub fn certify_dio(ch: &ChoiChannel) -> (bool, f64) {
    let o = ch.out_dim;
    let mut violation: f64 = 0.0;
    for i in 0..ch.in_dim {
        for j in 0..ch.in_dim {
            let img = ch.image_of_unit(i, j);
            for a in 0..o {
                for b in 0..o {
                    // (i == j) must map into diagonals, (i != j) into off-diagonals
                    if (i == j) != (a == b) {
                        violation = violation.max(img[(a, b)].norm());
                    }
                }
            }
        }
    }
    (violation <= CHANNEL_TOL, violation)
}

/// A random DIO channel: a mixture of a permuted diagonal-unitary
/// conjugation, partial dephasing and a classical stochastic map, optionally
/// followed by a second such layer.
pub fn random_dio_channel<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ChoiChannel {
    let layer = |rng: &mut R| {
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let phases: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let unitary = ChoiChannel::permutation(&perm)
            .and_then(|p| ChoiChannel::diagonal_unitary(&phases)?.then(&p))
            .expect("valid unitary");
        let dephase = ChoiChannel::partial_dephasing(d, rng.random::<f64>()).expect("p in [0, 1]");
        let stochastic = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() + 1e-3);
        let sums: Vec<f64> = stochastic.column_iter().map(|c| c.sum()).collect();
        let stochastic = DMatrix::from_fn(d, d, |i, j| stochastic[(i, j)] / sums[j]);
        let classical = ChoiChannel::classical(&stochastic).expect("columns normalized");
        let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / s).collect();
        ChoiChannel::mixture(&[unitary, dephase, classical], &w).expect("same dimensions")
    };
    let first = layer(rng);
    if rng.random::<bool>() {
        let second = layer(rng);
        first.then(&second).expect("same dimensions")
    } else {
        first
    }
}

/// The target of the pure-state protocol: `ψ → η` is possible under SIO/IO
/// because `η²` majorizes `ψ²`, and `|⟨Ψ_m|η⟩|² = ‖ψ‖²_[m]/m`.
#[derive(Clone, Debug, Serialize)]
pub struct MajorizationPlan {
    pub source: StateVector,
    /// Length `m`: the `m' − k*` largest moduli of `ψ`, then `k*` copies of
    /// `L₂/√k*`, then zeros up to `m` (where `m' = min(m, d)`).
    pub target_eta: StateVector,
    pub kept: usize,
    /// `L₂²`, the squared ℓ₂ norm of the flattened tail.
    pub flattened_mass: f64,
    pub fidelity_achieved: f64,
}

pub fn sio_pure_protocol(psi: &StateVector, m: usize) -> Result<MajorizationPlan> {
    let norm = m_distillation_norm(psi, m)?;
    let kept = norm.m - norm.k_star;
    let mut eta = vec![0.0; m];
    for (rank, &i) in norm.sort_permutation.iter().take(kept).enumerate() {
        eta[rank] = psi.amplitudes()[i].norm();
    }
    let flat = norm.tail_l2 / (norm.k_star as f64).sqrt();
    for x in &mut eta[kept..norm.m] {
        *x = flat;
    }
    let target_eta = StateVector::normalized(eta.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    let fidelity_achieved = target_eta.overlap(&max_coherent_state(m)).norm_sqr();
    Ok(MajorizationPlan {
        source: psi.clone(),
        target_eta,
        kept,
        flattened_mass: norm.tail_l2 * norm.tail_l2,
        fidelity_achieved,
    })
}

/// Whether `p` majorizes `q`: every descending partial sum of `p` is at least
/// that of `q` (within [`MAJORIZATION_TOL`]). The shorter vector is padded
/// with zeros.
pub fn majorizes(p: &[f64], q: &[f64]) -> Result<bool> {
    validate_distribution(p)?;
    validate_distribution(q)?;
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.resize(p.len().max(q.len()), 0.0);
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (p, q) = (sorted(p), sorted(q));
    let (mut sp, mut sq) = (0.0, 0.0);
    for (a, b) in p.iter().zip(&q) {
        sp += a;
        sq += b;
        if sp < sq - MAJORIZATION_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
