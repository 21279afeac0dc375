//! The Θ_m family of coherence monotones and its endpoints.
//!
//! Every SDP-valued quantity is computed by two independently compiled
//! programs whose values must agree within [`ROUTE_TOL`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    dephase, pos_neg_parts, shannon_entropy, von_neumann_entropy, DensityMatrix, HermitianMatrix,
};
use crate::sdp::{
    build_diagonal_constraint, build_interval_constraint, equality_multiplier, solve, ConicProgram,
    ConicSolution, DiagonalMode, HermExpr, ProgramBuilder, SolveSummary,
};

/// Largest accepted disagreement between two routes to the same value.
pub const ROUTE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneResult {
    pub value: f64,
    /// Optimal dual witness `W` (for [`theta`]: `−1 ≤ W ≤ m`, `Δ(W) ≤ 0`).
    pub witness: HermitianMatrix,
    /// Optimal diagonal `X` of the primal (minimization) form.
    pub closest_diagonal: HermitianMatrix,
    /// Largest relative duality gap over the solves.
    pub gap: f64,
    /// Largest disagreement between the independent routes.
    pub route_difference: f64,
    pub solves: Vec<SolveSummary>,
}

pub(crate) fn solve_optimal(p: &ConicProgram, label: &str) -> Result<ConicSolution> {
    let sol = solve(p)?;
    if !sol.is_optimal() {
        return Err(Error::SolverFailure { program: label.to_string(), status: sol.status });
    }
    Ok(sol)
}

/// Returns `|first − second|` when it is within [`ROUTE_TOL`].
pub(crate) fn check_agreement(quantity: &str, first: f64, second: f64) -> Result<f64> {
    let diff = (first - second).abs();
    if diff > ROUTE_TOL || !first.is_finite() || !second.is_finite() {
        return Err(Error::RouteDisagreement { quantity: quantity.to_string(), first, second });
    }
    Ok(diff)
}

fn check_m(m: f64) -> Result<()> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::InvalidArgument(format!("m must be finite and nonnegative, got {m}")));
    }
    Ok(())
}

/// `m·Tr A₊ + Tr A₋`, the primal objective at a fixed diagonal `X` with
/// `A = ρ − X`.
pub fn gauge_objective(rho: &HermitianMatrix, x: &HermitianMatrix, m: f64) -> Result<f64> {
    let (pos, neg) = pos_neg_parts(&rho.try_sub(x)?)?;
    Ok(m * pos.trace() + neg.trace())
}

/// `max ⟨ρ,W⟩` over `−1 ≤ W ≤ m·1` with the given diagonal restriction.
/// Returns the solution, the witness expression and the diagonal row range.
fn witness_program(
    rho: &HermitianMatrix,
    m: f64,
    mode: DiagonalMode,
) -> (ConicProgram, HermExpr, std::ops::Range<usize>) {
    let d = rho.dim();
    let mut b = ProgramBuilder::new();
    let w = build_interval_constraint(
        &mut b,
        &HermitianMatrix::scaled_identity(d, -1.0),
        None,
        &HermitianMatrix::scaled_identity(d, m),
    );
    let rows = build_diagonal_constraint(&mut b, &w, mode);
    b.maximize(w.inner_with(rho));
    (b.build(), w, rows)
}

/// Diagonal variable `Σ x_i |i⟩⟨i|` with one nonnegative scalar per entry.
fn diagonal_variable(b: &mut ProgramBuilder, d: usize) -> HermExpr {
    (0..d).fold(HermExpr::constant(HermitianMatrix::zeros(d)), |acc, i| {
        let x = b.nonneg();
        acc.plus(&b.scalar_times(x, HermitianMatrix::symmetric_unit(d, i, i)))
    })
}

/// `min (m+1) Tr P − Tr(ρ − X)` over `P ⪰ 0`, `P ⪰ ρ − X`, `X` diagonal
/// `⪰ 0`. Returns the minimum and the optimal `X`.
fn theta_primal(rho: &HermitianMatrix, m: f64) -> Result<(f64, HermitianMatrix, ConicSolution)> {
    let d = rho.dim();
    let mut b = ProgramBuilder::new();
    let p = b.psd_block(d);
    let z = b.psd_block(d);
    let x = diagonal_variable(&mut b, d);
    let lhs = b.var(p).plus(&b.var(z).scaled(-1.0)).plus(&x);
    b.equate(&lhs, &HermExpr::constant(rho.clone()));
    let id = HermitianMatrix::identity(d);
    // maximize −(m+1) Tr P − Tr X; the minimum is minus this, less Tr ρ
    let objective = b
        .var(p)
        .inner_with(&id)
        .scaled(-(m + 1.0))
        .plus(&x.inner_with(&id).scaled(-1.0));
    b.maximize(objective);
    let sol = solve_optimal(&b.build(), "theta-primal")?;
    let value = -sol.value() - rho.trace();
    let closest = dephase(&x.evaluate(&sol));
    Ok((value, closest, sol))
}

/// Θ_m(ρ), computed from both the witness program and the diagonal-distance
/// program; `m` may be any nonnegative real.
pub fn theta(rho: &DensityMatrix, m: f64) -> Result<MonotoneResult> {
    check_m(m)?;
    let (program, w, _) = witness_program(rho, m, DiagonalMode::NonPositive);
    let dual = solve_optimal(&program, "theta")?;
    let (primal_value, closest, primal) = theta_primal(rho, m)?;
    let route_difference = check_agreement("theta", dual.value(), primal_value)?;
    Ok(MonotoneResult {
        value: dual.value(),
        witness: w.evaluate(&dual),
        closest_diagonal: closest,
        gap: dual.gap.max(primal.gap),
        route_difference,
        solves: vec![dual.summary("theta"), primal.summary("theta-primal")],
    })
}

/// Θ̂_m(ρ): the witness program with `Δ(W) = 0`. The diagonal multipliers
/// give the optimal `X`, whose objective value is the second route.
pub fn theta_hat(rho: &DensityMatrix, m: f64) -> Result<MonotoneResult> {
    check_m(m)?;
    let (program, w, rows) = witness_program(rho, m, DiagonalMode::EqualConstant(0.0));
    let sol = solve_optimal(&program, "theta-hat")?;
    let x: Vec<f64> = sol.dual_vector[rows].to_vec();
    let closest = HermitianMatrix::diagonal(&x);
    let route_difference = check_agreement("theta-hat", sol.value(), gauge_objective(rho, &closest, m)?)?;
    Ok(MonotoneResult {
        value: sol.value(),
        witness: w.evaluate(&sol),
        closest_diagonal: closest,
        gap: sol.gap,
        route_difference,
        solves: vec![sol.summary("theta-hat")],
    })
}

/// Robustness of coherence, equal to Θ_{d−1}. Cross-checked against
/// `min Tr Y − 1` over diagonal `Y ⪰ ρ`.
pub fn robustness(rho: &DensityMatrix) -> Result<MonotoneResult> {
    let d = rho.dim();
    let mut result = theta(rho, (d - 1) as f64)?;
    let mut b = ProgramBuilder::new();
    let z = b.psd_block(d);
    let y = diagonal_variable(&mut b, d);
    // Z = Y − ρ
    b.equate(&b.var(z).plus(&y.clone().scaled(-1.0)), &HermExpr::constant(-rho.as_hermitian()));
    b.maximize(y.inner_with(&HermitianMatrix::identity(d)).scaled(-1.0));
    let sol = solve_optimal(&b.build(), "robustness")?;
    let diff = check_agreement("robustness", result.value, -sol.value() - 1.0)?;
    result.route_difference = result.route_difference.max(diff);
    result.gap = result.gap.max(sol.gap);
    result.solves.push(sol.summary("robustness"));
    Ok(result)
}

/// `min ‖ρ − X‖₁` over diagonal `X ⪰ 0`, optionally with `Tr X = 1`.
/// Returns the value, the optimal `X`, the witness and the solution.
fn diagonal_distance(
    rho: &HermitianMatrix,
    unit_trace: bool,
) -> Result<(f64, HermitianMatrix, HermitianMatrix, ConicSolution)> {
    let d = rho.dim();
    let id = HermitianMatrix::identity(d);
    let mut b = ProgramBuilder::new();
    let p = b.psd_block(d);
    let n = b.psd_block(d);
    let x = diagonal_variable(&mut b, d);
    let lhs = b.var(p).plus(&b.var(n).scaled(-1.0)).plus(&x);
    let rows = b.equate(&lhs, &HermExpr::constant(rho.clone()));
    if unit_trace {
        b.add_constraint(&x.inner_with(&id), crate::sdp::Sense::Equal, 1.0);
    }
    b.maximize(b.var(p).inner_with(&id).plus(&b.var(n).inner_with(&id)).scaled(-1.0));
    let label = if unit_trace { "trace-distance" } else { "modified-trace-distance" };
    let sol = solve_optimal(&b.build(), label)?;
    let witness = equality_multiplier(&sol, rows, d).scale(-1.0);
    Ok((-sol.value(), dephase(&x.evaluate(&sol)), witness, sol))
}

/// Modified trace distance of coherence, equal to Θ_1. Cross-checked against
/// `min ‖ρ − X‖₁` over diagonal `X ⪰ 0`.
pub fn modified_trace_distance(rho: &DensityMatrix) -> Result<MonotoneResult> {
    let mut result = theta(rho, 1.0)?;
    let (value, _, _, sol) = diagonal_distance(rho, false)?;
    let diff = check_agreement("modified trace distance", result.value, value)?;
    result.route_difference = result.route_difference.max(diff);
    result.gap = result.gap.max(sol.gap);
    result.solves.push(sol.summary("modified-trace-distance"));
    Ok(result)
}

/// Trace distance of coherence `min ‖ρ − σ‖₁` over incoherent states σ.
pub fn trace_distance_of_coherence(rho: &DensityMatrix) -> Result<MonotoneResult> {
    let (value, closest, witness, sol) = diagonal_distance(rho, true)?;
    let direct = crate::linalg::trace_norm(&rho.try_sub(&closest)?)?;
    let route_difference = check_agreement("trace distance", value, direct)?;
    Ok(MonotoneResult {
        value,
        witness,
        closest_diagonal: closest,
        gap: sol.gap,
        route_difference,
        solves: vec![sol.summary("trace-distance")],
    })
}

/// `S(Δ(ρ)) − S(ρ)` in bits.
pub fn relative_entropy_of_coherence(rho: &DensityMatrix) -> Result<f64> {
    let diag: Vec<f64> = rho.diagonal_entries().iter().map(|p| p.max(0.0)).collect();
    let total: f64 = diag.iter().sum();
    let diag: Vec<f64> = diag.iter().map(|p| p / total).collect();
    Ok(shannon_entropy(&diag)? - von_neumann_entropy(rho)?)
}
