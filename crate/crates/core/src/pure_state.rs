//! Closed forms for pure states: the m-distillation norm, Θ on pure states,
//! the distillation fidelity and the zero-error rate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::StateVector;
use crate::monotones::theta;

/// Cushion added before flooring `1/p` or `1/k`.
pub const FLOOR_GUARD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MNormResult {
    pub value: f64,
    /// Effective `m` after clamping to the dimension.
    pub m: usize,
    pub k_star: usize,
    /// ℓ₁ norm of the `m − k*` largest moduli.
    pub head_l1: f64,
    /// ℓ₂ norm of the remaining moduli.
    pub tail_l2: f64,
    /// Indices of `ψ` ordered by descending modulus (stable).
    pub sort_permutation: Vec<usize>,
}

/// Indices ordered by descending modulus; equal moduli keep input order.
pub fn descending_order(psi: &StateVector) -> Vec<usize> {
    let moduli = psi.moduli();
    let mut perm: Vec<usize> = (0..moduli.len()).collect();
    perm.sort_by(|&a, &b| moduli[b].total_cmp(&moduli[a]));
    perm
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    Ok(())
}

/// Head ℓ₁ and tail ℓ₂ of descending moduli split after `j` entries.
fn split(sorted: &[f64], j: usize) -> (f64, f64) {
    let head = sorted[..j].iter().sum();
    let tail = sorted[j..].iter().map(|x| x * x).sum::<f64>().sqrt();
    (head, tail)
}

fn sorted_moduli(psi: &StateVector) -> Vec<f64> {
    descending_order(psi).iter().map(|&i| psi.amplitudes()[i].norm()).collect()
}

/// `‖x‖₁ + √m‖y‖₂` for the decomposition `ψ = x + y` that moves
/// `c = ‖ψ↓_{m−k+1:d}‖₂/√k` of each of the `m − k` largest moduli into `y`.
/// An upper bound on `‖ψ‖_[m]` for every `k ∈ [1, m]`, tight at `k*`.
pub fn split_primal_value(psi: &StateVector, m: usize, k: usize) -> f64 {
    let sorted = sorted_moduli(psi);
    let m = m.min(sorted.len());
    assert!(k >= 1 && k <= m, "split k must lie in [1, m]");
    let (_, tail) = split(&sorted, m - k);
    let c = tail / (k as f64).sqrt();
    let x: f64 = sorted[..m - k].iter().map(|a| (a - c).abs()).sum();
    let y = ((m - k) as f64 * c * c + tail * tail).sqrt();
    x + (m as f64).sqrt() * y
}

/// `⟨ψ|x⟩` for the dual point built from split `k` (ones on the head,
/// `√k/L₂` times the tail), or `None` when that point violates `‖x‖_∞ ≤ 1`.
/// A lower bound on `‖ψ‖_[m]`, tight at `k*`.
pub fn split_dual_value(psi: &StateVector, m: usize, k: usize) -> Option<f64> {
    let sorted = sorted_moduli(psi);
    let m = m.min(sorted.len());
    assert!(k >= 1 && k <= m, "split k must lie in [1, m]");
    let (head, tail) = split(&sorted, m - k);
    if tail == 0.0 {
        return Some(head);
    }
    let scale = (k as f64).sqrt() / tail;
    if sorted[m - k] * scale > 1.0 + 1e-12 {
        return None;
    }
    Some(head + scale * tail * tail)
}

/// `‖ψ↓_{1:m−k}‖₁ + √k·‖ψ↓_{m−k+1:d}‖₂`, the closed-form expression at an
/// arbitrary split. Equals the norm when `k` attains the ratio minimum.
pub fn split_formula_value(psi: &StateVector, m: usize, k: usize) -> f64 {
    let sorted = sorted_moduli(psi);
    let m = m.min(sorted.len());
    assert!(k >= 1 && k <= m, "split k must lie in [1, m]");
    let (head, tail) = split(&sorted, m - k);
    head + (k as f64).sqrt() * tail
}

/// The m-distillation norm: `k*` minimizes `‖ψ↓_{m−k+1:d}‖₂²/k` over
/// `1 ≤ k ≤ m`, ties going to the smallest `k`.
pub fn m_distillation_norm(psi: &StateVector, m: usize) -> Result<MNormResult> {
    check_m(m)?;
    let perm = descending_order(psi);
    let sorted: Vec<f64> = perm.iter().map(|&i| psi.amplitudes()[i].norm()).collect();
    let m = m.min(sorted.len());
    // suffix[j] = Σ_{i ≥ j} |ψ↓_i|²
    let mut suffix = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix[i] = suffix[i + 1] + sorted[i] * sorted[i];
    }
    let mut k_star = 1;
    let mut best = suffix[m - 1];
    for k in 2..=m {
        let ratio = suffix[m - k] / k as f64;
        if ratio < best {
            best = ratio;
            k_star = k;
        }
    }
    let (head_l1, tail_l2) = split(&sorted, m - k_star);
    Ok(MNormResult {
        value: head_l1 + (k_star as f64).sqrt() * tail_l2,
        m,
        k_star,
        head_l1,
        tail_l2,
        sort_permutation: perm,
    })
}

/// `⟨ψ|x⟩` at the explicit dual point: unit-modulus phases of `ψ` on the
/// head, `(√k*/L₂)·ψ` on the tail. Feasible for `‖x‖_∞ ≤ 1`,
/// `‖x‖₂ ≤ √m`.
pub fn m_norm_dual_point(psi: &StateVector, m: usize) -> Result<Vec<Complex64>> {
    let r = m_distillation_norm(psi, m)?;
    let head = r.m - r.k_star;
    let mut x = vec![Complex64::new(0.0, 0.0); psi.dim()];
    for (rank, &i) in r.sort_permutation.iter().enumerate() {
        let a = psi.amplitudes()[i];
        x[i] = if rank < head {
            if a.norm() > 0.0 { a / a.norm() } else { Complex64::new(1.0, 0.0) }
        } else if r.tail_l2 > 0.0 {
            a * ((r.k_star as f64).sqrt() / r.tail_l2)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    Ok(x)
}

/// Value of the dual program `max{Re⟨ψ|x⟩ : ‖x‖_∞ ≤ 1, ‖x‖₂ ≤ √m}` at
/// [`m_norm_dual_point`].
pub fn m_norm_dual_check(psi: &StateVector, m: usize) -> Result<f64> {
    let x = m_norm_dual_point(psi, m)?;
    Ok(psi.amplitudes().iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum())
}

/// Θ_m on a pure state. Integer `m` uses `‖ψ‖²_[m+1] − 1`; other values go
/// through the SDP.
pub fn theta_pure(psi: &StateVector, m: f64) -> Result<f64> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::InvalidArgument(format!("m must be finite and nonnegative, got {m}")));
    }
    if m.fract() == 0.0 {
        let n = m_distillation_norm(psi, m as usize + 1)?;
        Ok(n.value * n.value - 1.0)
    } else {
        Ok(theta(&psi.projector(), m)?.value)
    }
}

/// `‖ψ‖²_[m] / m`, the best fidelity with `Ψ_m` under MIO, DIO, SIO or IO.
pub fn fidelity_pure(psi: &StateVector, m: usize) -> Result<f64> {
    let n = m_distillation_norm(psi, m)?;
    Ok(n.value * n.value / m as f64)
}

/// `⌊1/‖ψ‖²_∞⌋`, the largest `m` reachable exactly.
pub fn zero_error_m(psi: &StateVector) -> usize {
    (1.0 / psi.max_probability() + FLOOR_GUARD).floor() as usize
}

/// `log₂⌊1/‖ψ‖²_∞⌋` in bits.
pub fn zero_error_distillable_pure(psi: &StateVector) -> f64 {
    (zero_error_m(psi) as f64).log2()
}

/// Squared amplitudes as descending groups `(p, multiplicity)` with zeros
/// dropped. Represents tensor powers without expanding them.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMultiset {
    groups: Vec<(f64, u64)>,
    dim: u64,
    // prefix_count[g], prefix_sqrt[g], suffix_mass[g] over groups before g
    prefix_count: Vec<u64>,
    prefix_sqrt: Vec<f64>,
    suffix_mass: Vec<f64>,
}

impl ProbabilityMultiset {
    pub fn new(mut groups: Vec<(f64, u64)>, dim: u64) -> Self {
        groups.retain(|&(p, c)| p > 0.0 && c > 0);
        groups.sort_by(|a, b| b.0.total_cmp(&a.0));
        let g = groups.len();
        let mut prefix_count = vec![0; g + 1];
        let mut prefix_sqrt = vec![0.0; g + 1];
        for (i, &(p, c)) in groups.iter().enumerate() {
            prefix_count[i + 1] = prefix_count[i] + c;
            prefix_sqrt[i + 1] = prefix_sqrt[i] + c as f64 * p.sqrt();
        }
        let mut suffix_mass = vec![0.0; g + 1];
        for i in (0..g).rev() {
            suffix_mass[i] = suffix_mass[i + 1] + groups[i].1 as f64 * groups[i].0;
        }
        Self { groups, dim, prefix_count, prefix_sqrt, suffix_mass }
    }

    pub fn from_state(psi: &StateVector) -> Self {
        let groups = psi.probabilities().into_iter().map(|p| (p, 1)).collect();
        Self::new(groups, psi.dim() as u64)
    }

    /// Squared amplitudes of `ψ^{⊗n}` via the multinomial expansion.
    pub fn tensor_power(psi: &StateVector, n: u32) -> Self {
        let p = psi.probabilities();
        let d = p.len();
        let mut groups = Vec::new();
        let mut counts = vec![0u32; d];
        compositions(n, 0, &mut counts, &mut |c| {
            let prob: f64 = c.iter().zip(&p).map(|(&k, &q)| q.powi(k as i32)).product();
            groups.push((prob, multinomial(n, c)));
        });
        Self::new(groups, (d as u64).pow(n))
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn max_probability(&self) -> f64 {
        self.groups.first().map_or(0.0, |g| g.0)
    }

    /// `‖ψ‖_[m]` by water-filling the dual point `x_i = min(1, t|ψ_i|)` to
    /// `‖x‖₂² = m`.
    pub fn m_norm(&self, m: u64) -> f64 {
        let support = *self.prefix_count.last().unwrap_or(&0);
        if m >= support {
            return *self.prefix_sqrt.last().unwrap_or(&0.0);
        }
        // filled(g) = ‖x‖₂² at t² = 1/p_g, increasing in g. Groups with
        // filled(g) ≤ m are saturated at the solution.
        let filled = |g: usize| self.prefix_count[g] as f64 + self.suffix_mass[g] / self.groups[g].0;
        let s = (0..self.groups.len()).collect::<Vec<_>>().partition_point(|&g| filled(g) <= m as f64);
        let saturated = self.prefix_count[s] as f64;
        self.prefix_sqrt[s] + ((m as f64 - saturated) * self.suffix_mass[s]).sqrt()
    }

    pub fn fidelity(&self, m: u64) -> f64 {
        let n = self.m_norm(m);
        n * n / m as f64
    }

    /// Largest `m ≤ ⌊dim/(1−ε)⌋` with fidelity at least `1 − ε − 1e−9`.
    pub fn max_distillable_m(&self, epsilon: f64) -> u64 {
        let ceiling = ((self.dim as f64) / (1.0 - epsilon) + FLOOR_GUARD).floor() as u64;
        (1..=ceiling.max(1))
            .rev()
            .find(|&m| self.fidelity(m) >= 1.0 - epsilon - FLOOR_GUARD)
            .unwrap_or(1)
    }
}

fn compositions(remaining: u32, idx: usize, counts: &mut [u32], f: &mut impl FnMut(&[u32])) {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        f(counts);
        return;
    }
    for k in 0..=remaining {
        counts[idx] = k;
        compositions(remaining - k, idx + 1, counts, f);
    }
}

fn multinomial(n: u32, parts: &[u32]) -> u64 {
    let mut acc: u64 = 1;
    let mut used: u64 = 0;
    for &k in parts {
        for i in 1..=k as u64 {
            used += 1;
            acc = acc * used / i;
        }
    }
    debug_assert_eq!(used, n as u64);
    acc
}

/// Largest `m` with `F(ψ, m) ≥ 1 − ε − 1e−9`.
pub fn one_shot_pure_m(psi: &StateVector, epsilon: f64) -> u64 {
    ProbabilityMultiset::from_state(psi).max_distillable_m(epsilon)
}
