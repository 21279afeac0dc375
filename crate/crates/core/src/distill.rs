//! One-shot coherence distillation: fidelity programs, ε-error rates and the
//! hypothesis-testing relative entropy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    shannon_entropy, DensityMatrix, HermitianMatrix, StateVector, DENSITY_TRACE_TOL,
};
use crate::monotones::{check_agreement, solve_optimal, theta_hat};
use crate::pure_state::{fidelity_pure, ProbabilityMultiset, FLOOR_GUARD};
use crate::sdp::{
    build_diagonal_constraint, build_interval_constraint, DiagonalMode, HermExpr, ProgramBuilder,
    Sense, SolveSummary,
};

/// Largest tensor-power dimension accepted by [`asymptotic_rate_scan`].
pub const MAX_AMPLITUDES: u128 = 10_000_000;
/// Eigenvalues of ρ at or below this are treated as outside its support.
pub const SUPPORT_TOL: f64 = 1e-9;
/// A type-II error at or below this counts as zero (infinite D_H).
pub const ZERO_ERROR_TOL: f64 = 1e-9;
/// Substitute ε when an ε = 0 program fails numerically.
pub const RETRY_EPSILON: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperationClass {
    Mio,
    Dio,
    Sio,
    Io,
}

impl OperationClass {
    /// Whether mixed-state distillation under this class is computable here.
    pub fn supports_mixed(self) -> bool {
        matches!(self, Self::Mio | Self::Dio)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    DirectSdp,
    PureClosedForm,
    /// Diagonal input: every feasible witness gives `⟨G,ρ⟩ = 1/m`.
    IncoherentInput,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistillationReport {
    pub class: OperationClass,
    pub route: Route,
    pub m: u64,
    pub log2_m: f64,
    pub epsilon: Option<f64>,
    /// Best fidelity with Ψ_m at the reported `m`.
    pub fidelity: f64,
    /// Optimal `G` (`0 ≤ G ≤ 1`, constant diagonal); absent on the closed-form route.
    pub witness_g: Option<HermitianMatrix>,
    /// The constant diagonal of `G`: `1/m` for fidelity queries, the
    /// minimized `k` for rate queries.
    pub k_value: f64,
    /// `−log₂ k − log₂ m ≥ 0`.
    pub delta: f64,
    /// `|F − (Θ̂_{m−1} + 1)/m|` for fidelity queries; zero otherwise.
    pub route_difference: f64,
    /// Whether an ε = 0 program was retried at [`RETRY_EPSILON`].
    pub retried: bool,
    /// Largest `m` found by the exhaustive fidelity scan, when run.
    pub scan_m: Option<u64>,
    /// `F(ρ, m)` for `m = 1, 2, …` as visited by the scan.
    pub fidelity_profile: Vec<f64>,
    pub solves: Vec<SolveSummary>,
}

impl DistillationReport {
    /// Whether the scanned fidelities are non-increasing in `m` (within 1e−9).
    pub fn scan_is_monotone(&self) -> bool {
        self.fidelity_profile.windows(2).all(|w| w[1] <= w[0] + 1e-9)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisTestResult {
    /// `−log₂ min⟨M, X⟩`, `+∞` when the minimum is not positive.
    pub value_bits: f64,
    pub type_two_error: f64,
    pub optimal_m: HermitianMatrix,
    pub summary: SolveSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisOverJ {
    /// `−log₂ k_min`.
    pub value_bits: f64,
    pub k_min: f64,
    /// `⌊1/k_min⌋`.
    pub m: u64,
    /// `(−log₂ k_min) − log₂ m`.
    pub delta: f64,
    pub witness_g: HermitianMatrix,
    pub retried: bool,
    pub solves: Vec<SolveSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisOverIncoherent {
    pub value_bits: f64,
    /// Optimal incoherent state σ (from the multipliers of `M_ii ≤ t`).
    pub sigma: Vec<f64>,
    pub optimal_m: HermitianMatrix,
    pub summary: SolveSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: u32,
    pub m: u64,
    pub rate_per_copy: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

fn check_mixed_class(class: OperationClass) -> Result<()> {
    if !class.supports_mixed() {
        return Err(Error::InvalidArgument(format!(
            "{class:?} distillation is only available for pure states"
        )));
    }
    Ok(())
}

/// `log₂ m` and `δ = −log₂ k − log₂ m`, clipped at zero.
fn rate_and_delta(m: u64, k: f64) -> (f64, f64) {
    let log2_m = (m as f64).log2();
    (log2_m, (-k.log2() - log2_m).max(0.0))
}

fn floor_inverse(k: f64) -> u64 {
    (1.0 / k + FLOOR_GUARD).floor().max(1.0) as u64
}

/// A test operator `M` with `0 ≤ M ≤ 1`. For ε = 0 it is restricted to
/// `M = Π + V M' V†` where Π projects onto the support of ρ and `V` spans its
/// kernel, which is exactly the set with `⟨M,ρ⟩ = 1`.
struct TestOperator {
    expr: HermExpr,
    reduced: bool,
}

fn support_split(rho: &DensityMatrix) -> Result<(HermitianMatrix, Option<DMatrix<Complex64>>)> {
    let eig = rho.eig()?;
    let d = rho.dim();
    let rank = eig.eigenvalues.iter().filter(|&&v| v > SUPPORT_TOL).count();
    let proj = eig.reconstruct_with(|v| if v > SUPPORT_TOL { 1.0 } else { 0.0 });
    if rank == d {
        return Ok((proj, None));
    }
    let v = eig.eigenvectors.columns(rank, d - rank).into_owned();
    Ok((proj, Some(v)))
}

fn test_operator(b: &mut ProgramBuilder, rho: &DensityMatrix, epsilon: f64) -> Result<TestOperator> {
    let d = rho.dim();
    if epsilon > 0.0 {
        let m = build_interval_constraint(b, &HermitianMatrix::zeros(d), None, &HermitianMatrix::identity(d));
        b.add_constraint(&m.inner_with(rho), Sense::GreaterEq, 1.0 - epsilon);
        return Ok(TestOperator { expr: m, reduced: false });
    }
    let (proj, kernel) = support_split(rho)?;
    let expr = match kernel {
        None => HermExpr::constant(proj),
        Some(v) => {
            // 0 ≤ M' ≤ 1 on the kernel through slacks M' and 1 − M'.
            let r = v.ncols();
            let inner = b.psd_block(r);
            let complement = b.psd_block(r);
            let sum = b.var(inner).plus(&b.var(complement));
            b.equate(&sum, &HermExpr::constant(HermitianMatrix::identity(r)));
            b.congruence(inner, v).plus_constant(&proj)
        }
    };
    Ok(TestOperator { expr, reduced: true })
}

/// `F(ρ, m)` for MIO and DIO: `max ⟨G,ρ⟩` over `0 ≤ G ≤ 1`, `Δ(G) = 1/m`.
/// Cross-checked against `(Θ̂_{m−1}(ρ) + 1)/m`.
pub fn fidelity_distill(rho: &DensityMatrix, m: u64, class: OperationClass) -> Result<DistillationReport> {
    check_mixed_class(class)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let d = rho.dim();
    let incoherent = rho.is_diagonal(0.0);
    let (fidelity, g, solves, route_difference) = if m == 1 {
        // Δ(G) = 1 with G ≤ 1 forces G = 1.
        (1.0, HermitianMatrix::identity(d), Vec::new(), 0.0)
    } else if incoherent {
        (1.0 / m as f64, HermitianMatrix::scaled_identity(d, 1.0 / m as f64), Vec::new(), 0.0)
    } else {
        let mut b = ProgramBuilder::new();
        let g = build_interval_constraint(&mut b, &HermitianMatrix::zeros(d), None, &HermitianMatrix::identity(d));
        build_diagonal_constraint(&mut b, &g, DiagonalMode::EqualConstant(1.0 / m as f64));
        b.maximize(g.inner_with(rho));
        let sol = solve_optimal(&b.build(), "fidelity")?;
        let hat = theta_hat(rho, (m - 1) as f64)?;
        let diff = check_agreement("fidelity", sol.value(), (hat.value + 1.0) / m as f64)?;
        let mut solves = vec![sol.summary("fidelity")];
        solves.extend(hat.solves);
        (sol.value(), g.evaluate(&sol), solves, diff)
    };
    let (log2_m, _) = rate_and_delta(m, 1.0 / m as f64);
    Ok(DistillationReport {
        class,
        route: if incoherent && m > 1 { Route::IncoherentInput } else { Route::DirectSdp },
        m,
        log2_m,
        epsilon: None,
        fidelity,
        witness_g: Some(g),
        k_value: 1.0 / m as f64,
        delta: 0.0,
        route_difference,
        retried: false,
        scan_m: None,
        fidelity_profile: Vec::new(),
        solves,
    })
}

/// `max ⟨G,ρ⟩` at fixed `m` without the Θ̂ cross-check; used by the scan.
fn fidelity_value(rho: &DensityMatrix, m: u64) -> Result<(f64, SolveSummary)> {
    let d = rho.dim();
    let mut b = ProgramBuilder::new();
    let g = build_interval_constraint(&mut b, &HermitianMatrix::zeros(d), None, &HermitianMatrix::identity(d));
    build_diagonal_constraint(&mut b, &g, DiagonalMode::EqualConstant(1.0 / m as f64));
    b.maximize(g.inner_with(rho));
    let sol = solve_optimal(&b.build(), "fidelity-scan")?;
    Ok((sol.value(), sol.summary("fidelity-scan")))
}

/// `k_min = min{k : Δ(G) = k·1, 0 ≤ G ≤ 1, ⟨G,ρ⟩ ≥ 1 − ε}`. The optimal
/// value of `min_{X∈J} D_H^ε(ρ‖X)` is `−log₂ k_min`.
pub fn min_hypothesis_over_j(rho: &DensityMatrix, epsilon: f64) -> Result<HypothesisOverJ> {
    check_epsilon(epsilon)?;
    let (sol_value, g, summary, retried) = match min_k_program(rho, epsilon) {
        Ok(r) => (r.0, r.1, r.2, false),
        Err(Error::SolverFailure { .. }) if epsilon == 0.0 => {
            let r = min_k_program(rho, RETRY_EPSILON)?;
            (r.0, r.1, r.2, true)
        }
        Err(e) => return Err(e),
    };
    let k_min = sol_value;
    let m = floor_inverse(k_min);
    let (_, delta) = rate_and_delta(m, k_min);
    Ok(HypothesisOverJ {
        value_bits: -k_min.log2(),
        k_min,
        m,
        delta,
        witness_g: g,
        retried,
        solves: vec![summary],
    })
}

fn min_k_program(rho: &DensityMatrix, epsilon: f64) -> Result<(f64, HermitianMatrix, SolveSummary)> {
    let mut b = ProgramBuilder::new();
    let op = test_operator(&mut b, rho, epsilon)?;
    let k = b.nonneg();
    build_diagonal_constraint(&mut b, &op.expr, DiagonalMode::EqualScalar(k));
    b.maximize(b.scalar_form(k).scaled(-1.0));
    let program = b.build();
    let label = if op.reduced { "min-k (support-reduced)" } else { "min-k" };
    let sol = solve_optimal(&program, label)?;
    Ok((-sol.value(), op.expr.evaluate(&sol), sol.summary(label)))
}

/// One-shot ε-error distillable coherence under MIO or DIO. The direct
/// program gives `m = ⌊1/k_min⌋`; an exhaustive scan of `F(ρ, m)` over
/// `m ≤ ⌊d/(1−ε)⌋` must find the same `m`.
pub fn one_shot_distillable(
    rho: &DensityMatrix,
    epsilon: f64,
    class: OperationClass,
) -> Result<DistillationReport> {
    check_mixed_class(class)?;
    check_epsilon(epsilon)?;
    let direct = min_hypothesis_over_j(rho, epsilon)?;
    let d = rho.dim() as f64;
    let ceiling = (d / (1.0 - epsilon) + FLOOR_GUARD).floor() as u64;
    let mut solves = direct.solves.clone();
    let mut profile = vec![1.0];
    let mut scan_m = 1;
    for m in 2..=ceiling {
        let (f, summary) = fidelity_value(rho, m)?;
        solves.push(summary);
        profile.push(f);
        if f >= 1.0 - epsilon - FLOOR_GUARD {
            scan_m = m;
        }
    }
    if scan_m != direct.m {
        return Err(Error::RouteDisagreement {
            quantity: "one-shot m".into(),
            first: direct.m as f64,
            second: scan_m as f64,
        });
    }
    let (log2_m, delta) = rate_and_delta(direct.m, direct.k_min);
    Ok(DistillationReport {
        class,
        route: Route::DirectSdp,
        m: direct.m,
        log2_m,
        epsilon: Some(epsilon),
        fidelity: profile[direct.m as usize - 1],
        witness_g: Some(direct.witness_g),
        k_value: direct.k_min,
        delta,
        route_difference: 0.0,
        retried: direct.retried,
        scan_m: Some(scan_m),
        fidelity_profile: profile,
        solves,
    })
}

/// Closed-form one-shot rate for a pure state, valid for every class.
pub fn one_shot_distillable_pure(
    psi: &StateVector,
    epsilon: f64,
    class: OperationClass,
) -> Result<DistillationReport> {
    check_epsilon(epsilon)?;
    let ms = ProbabilityMultiset::from_state(psi);
    let m = ms.max_distillable_m(epsilon);
    let ceiling = (psi.dim() as f64 / (1.0 - epsilon) + FLOOR_GUARD).floor() as u64;
    let profile: Vec<f64> = (1..=ceiling.max(1)).map(|m| ms.fidelity(m)).collect();
    let fidelity = fidelity_pure(psi, m as usize)?;
    Ok(DistillationReport {
        class,
        route: Route::PureClosedForm,
        m,
        log2_m: (m as f64).log2(),
        epsilon: Some(epsilon),
        fidelity,
        witness_g: None,
        k_value: 1.0 / m as f64,
        delta: 0.0,
        route_difference: 0.0,
        retried: false,
        scan_m: Some(m),
        fidelity_profile: profile,
        solves: Vec::new(),
    })
}

/// `D_H^ε(ρ‖X) = −log₂ min{⟨M,X⟩ : 0 ≤ M ≤ 1, ⟨M,ρ⟩ ≥ 1 − ε}` for a
/// unit-trace Hermitian `X`.
pub fn hypothesis_test_relent(
    rho: &DensityMatrix,
    x: &HermitianMatrix,
    epsilon: f64,
) -> Result<HypothesisTestResult> {
    check_epsilon(epsilon)?;
    if x.dim() != rho.dim() {
        return Err(crate::linalg::LinalgError::DimensionMismatch { expected: rho.dim(), found: x.dim() }.into());
    }
    if (x.trace() - 1.0).abs() > DENSITY_TRACE_TOL {
        return Err(Error::InvalidArgument(format!("X must have unit trace, got {}", x.trace())));
    }
    let mut b = ProgramBuilder::new();
    let op = test_operator(&mut b, rho, epsilon)?;
    b.maximize(op.expr.inner_with(x).scaled(-1.0));
    let sol = solve_optimal(&b.build(), "hypothesis")?;
    let beta = -sol.value();
    let value_bits = if beta <= ZERO_ERROR_TOL { f64::INFINITY } else { -beta.log2() };
    Ok(HypothesisTestResult {
        value_bits,
        type_two_error: beta,
        optimal_m: op.expr.evaluate(&sol),
        summary: sol.summary("hypothesis"),
    })
}

/// `min_{σ ∈ I} D_H^ε(ρ‖σ)` via `−log₂ min{max_i M_ii : 0 ≤ M ≤ 1,
/// ⟨M,ρ⟩ ≥ 1 − ε}`. The row multipliers give the optimal σ.
pub fn min_hypothesis_over_incoherent(rho: &DensityMatrix, epsilon: f64) -> Result<HypothesisOverIncoherent> {
    check_epsilon(epsilon)?;
    let d = rho.dim();
    let mut b = ProgramBuilder::new();
    let op = test_operator(&mut b, rho, epsilon)?;
    let t = b.nonneg();
    let mut rows = Vec::with_capacity(d);
    for i in 0..d {
        let form = op
            .expr
            .inner_with(&HermitianMatrix::symmetric_unit(d, i, i))
            .plus(&b.scalar_form(t).scaled(-1.0));
        rows.push(b.add_constraint(&form, Sense::LessEq, 0.0));
    }
    b.maximize(b.scalar_form(t).scaled(-1.0));
    let sol = solve_optimal(&b.build(), "min-over-incoherent")?;
    let beta = -sol.value();
    let raw: Vec<f64> = rows.iter().map(|&r| sol.dual_vector[r].max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    let sigma = if total > 0.0 { raw.iter().map(|s| s / total).collect() } else { vec![1.0 / d as f64; d] };
    Ok(HypothesisOverIncoherent {
        value_bits: if beta <= ZERO_ERROR_TOL { f64::INFINITY } else { -beta.log2() },
        sigma,
        optimal_m: op.expr.evaluate(&sol),
        summary: sol.summary("min-over-incoherent"),
    })
}

/// `(1/n)·log₂ max{m : F(ψ^{⊗n}, m) ≥ 1 − ε}` for `n = 1..=n_max`, from the
/// grouped squared amplitudes of `ψ^{⊗n}`.
pub fn asymptotic_rate_scan(psi: &StateVector, epsilon: f64, n_max: u32) -> Result<Vec<RatePoint>> {
    check_epsilon(epsilon)?;
    let amplitudes = (psi.dim() as u128).checked_pow(n_max).unwrap_or(u128::MAX);
    if amplitudes > MAX_AMPLITUDES {
        return Err(Error::ResourceLimit { amplitudes, limit: MAX_AMPLITUDES });
    }
    Ok((1..=n_max)
        .map(|n| {
            let m = ProbabilityMultiset::tensor_power(psi, n).max_distillable_m(epsilon);
            RatePoint { n, m, rate_per_copy: (m as f64).log2() / n as f64 }
        })
        .collect())
}

/// `C_r(ψ) = H(|ψ_i|²)` for a pure state, the limit of the per-copy rate.
pub fn pure_relative_entropy(psi: &StateVector) -> Result<f64> {
    Ok(shannon_entropy(&psi.probabilities())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_random_pure, max_coherent_state, random_density, random_incoherent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example() -> StateVector {
        StateVector::from_probabilities(&[0.7, 0.2, 0.1]).unwrap()
    }

    #[test]
    fn forced_fidelities() {
        for d in [2, 3, 4] {
            let mixed = DensityMatrix::maximally_mixed(d);
            let coherent = max_coherent_state(d).projector();
            for m in 1..=d as u64 {
                let f = fidelity_distill(&mixed, m, OperationClass::Mio).unwrap().fidelity;
                assert!((f - 1.0 / m as f64).abs() < 1e-9, "d={d} m={m} f={f}");
                let f = fidelity_distill(&coherent, m, OperationClass::Dio).unwrap().fidelity;
                assert!((f - 1.0).abs() < 1e-8);
            }
        }
        let f = fidelity_distill(&example().projector(), 2, OperationClass::Mio).unwrap();
        assert!((f.fidelity - 0.958258).abs() < 1e-6);
        assert!(matches!(
            fidelity_distill(&example().projector(), 2, OperationClass::Sio),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn one_shot_examples() {
        let r = one_shot_distillable(&max_coherent_state(4).projector(), 0.0, OperationClass::Mio).unwrap();
        assert_eq!(r.m, 4);
        assert!((r.log2_m - 2.0).abs() < 1e-12);
        assert!(r.delta < 1e-6);
        let r = one_shot_distillable(&DensityMatrix::maximally_mixed(3), 0.3, OperationClass::Dio).unwrap();
        assert_eq!(r.m, 1);
        let psi = StateVector::from_probabilities(&[0.4, 0.3, 0.3]).unwrap();
        let r = one_shot_distillable(&psi.projector(), 0.0, OperationClass::Mio).unwrap();
        assert_eq!(r.m, 2);
        let p = one_shot_distillable_pure(&psi, 0.0, OperationClass::Sio).unwrap();
        assert_eq!(p.m, 2);
    }

    #[test]
    fn direct_and_scan_agree_on_mixed_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 2..=4 {
            let rho = random_density(d, 2, &mut rng);
            let mut prev = 0;
            for eps in [0.0, 0.01, 0.1, 0.3] {
                let r = one_shot_distillable(&rho, eps, OperationClass::Mio).unwrap();
                assert_eq!(Some(r.m), r.scan_m);
                assert!((0.0..1.0).contains(&r.delta));
                assert!(r.m >= prev);
                prev = r.m;
            }
        }
    }

    #[test]
    fn hypothesis_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density(3, 3, &mut rng);
        for eps in [0.0, 0.1, 0.5] {
            let r = hypothesis_test_relent(&rho, &rho, eps).unwrap();
            assert!((r.value_bits + (1.0 - eps).log2()).abs() < 1e-7, "{eps}: {}", r.value_bits);
        }
        let r = hypothesis_test_relent(
            &max_coherent_state(2).projector(),
            &HermitianMatrix::scaled_identity(2, 0.5),
            0.0,
        )
        .unwrap();
        assert!((r.value_bits - 1.0).abs() < 1e-8);

        let psi = haar_random_pure(4, &mut rng);
        let sigma = random_incoherent(4, &mut rng);
        let r = hypothesis_test_relent(&psi.projector(), &sigma, 0.0).unwrap();
        let overlap = crate::linalg::inner(&psi.projector(), &sigma).unwrap();
        assert!((r.value_bits + overlap.log2()).abs() < 1e-6);

        // orthogonal support gives an infinite value
        let e0 = StateVector::basis(2, 0).projector();
        let e1 = StateVector::basis(2, 1).projector();
        assert!(hypothesis_test_relent(&e0, &e1, 0.0).unwrap().value_bits.is_infinite());
    }

    #[test]
    fn minimum_over_j_examples() {
        let r = min_hypothesis_over_j(&max_coherent_state(4).projector(), 0.0).unwrap();
        assert!((r.value_bits - 2.0).abs() < 1e-7);
        assert_eq!(r.m, 4);
        assert!(r.delta < 1e-7);
        let r = min_hypothesis_over_j(&DensityMatrix::maximally_mixed(2), 0.0).unwrap();
        assert!(r.value_bits.abs() < 1e-8);
        assert_eq!(r.m, 1);
    }

    #[test]
    fn pure_states_minimum_over_incoherent_gives_the_same_integer() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for d in 2..=4 {
            let psi = haar_random_pure(d, &mut rng);
            for eps in [0.0, 0.1] {
                let j = min_hypothesis_over_j(&psi.projector(), eps).unwrap();
                let i = min_hypothesis_over_incoherent(&psi.projector(), eps).unwrap();
                // I ⊂ J, and both floor to the same m
                assert!(i.value_bits >= j.value_bits - 1e-6);
                assert_eq!(floor_inverse(2f64.powf(-i.value_bits)), j.m);
                let direct = hypothesis_test_relent(&psi.projector(), &HermitianMatrix::diagonal(&i.sigma), eps)
                    .unwrap();
                assert!((direct.value_bits - i.value_bits).abs() < 1e-6);
            }
        }
        // A non-flat qubit: the two values differ before flooring.
        let psi = StateVector::from_probabilities(&[0.6, 0.4]).unwrap();
        let j = min_hypothesis_over_j(&psi.projector(), 0.0).unwrap();
        let i = min_hypothesis_over_incoherent(&psi.projector(), 0.0).unwrap();
        assert!(j.value_bits.abs() < 1e-7);
        assert!((i.value_bits + 0.6f64.log2()).abs() < 1e-7);
    }

    #[test]
    fn rate_scan_examples() {
        let pts = asymptotic_rate_scan(&max_coherent_state(2), 0.0, 8).unwrap();
        assert!(pts.iter().all(|p| (p.rate_per_copy - 1.0).abs() < 1e-12));
        // With ε > 0 the fidelity 2ⁿ/m allows m = ⌊2ⁿ/(1−ε)⌋ > 2ⁿ once 2ⁿ ≥ 1/ε − 1.
        let pts = asymptotic_rate_scan(&max_coherent_state(2), 0.01, 8).unwrap();
        for p in &pts {
            assert_eq!(p.m, (2f64.powi(p.n as i32) / 0.99 + 1e-9).floor() as u64);
        }
        assert!(pts[..6].iter().all(|p| p.rate_per_copy == 1.0));
        let pts = asymptotic_rate_scan(&StateVector::basis(3, 1), 0.1, 5).unwrap();
        assert!(pts.iter().all(|p| p.rate_per_copy == 0.0));
        assert!(matches!(
            asymptotic_rate_scan(&max_coherent_state(10), 0.1, 8),
            Err(Error::ResourceLimit { .. })
        ));
    }
}
