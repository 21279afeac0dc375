//! Block-diagonal semidefinite programs in standard conic form.
//!
//! A [`ConicProgram`] is
//!
//! ```text
//! maximize   Σ_b ⟨C_b, X_b⟩ + offset
//! subject to Σ_b ⟨A_ib, X_b⟩ = b_i      for every constraint i
//!            X_b ⪰ 0                    for every block b
//! ```
//!
//! where each block is a complex Hermitian matrix (`1×1` blocks are
//! nonnegative scalars). Programs are usually assembled with
//! [`ProgramBuilder`] and solved with [`solve`].

mod builder;
mod solver;

pub use builder::{
    build_diagonal_constraint, build_interval_constraint, BlockId, DiagonalMode, HermExpr,
    LinearForm, ProgramBuilder, Sense,
};
pub use solver::{solve, solve_with, SolverSettings};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::linalg::{inner, HermitianMatrix};

/// One linear equality `Σ_b ⟨A_b, X_b⟩ = rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, HermitianMatrix)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn evaluate(&self, blocks: &[HermitianMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|(b, a)| inner(a, &blocks[*b]).expect("coefficient dims validated"))
            .sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConicProgram {
    pub blocks: Vec<usize>,
    pub objective: Vec<HermitianMatrix>,
    pub objective_offset: f64,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProgramError {
    #[error("objective has {found} blocks, program has {expected}")]
    ObjectiveBlocks { expected: usize, found: usize },
    #[error("block {block} has dimension {expected}, coefficient has {found}")]
    BlockDim { block: usize, expected: usize, found: usize },
    #[error("constraint {row} references missing block {block}")]
    MissingBlock { row: usize, block: usize },
    #[error("block dimensions must be at least 1")]
    EmptyBlock,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.blocks.contains(&0) {
            return Err(ProgramError::EmptyBlock);
        }
        if self.objective.len() != self.blocks.len() {
            return Err(ProgramError::ObjectiveBlocks {
                expected: self.blocks.len(),
                found: self.objective.len(),
            });
        }
        for (b, c) in self.objective.iter().enumerate() {
            if c.dim() != self.blocks[b] {
                return Err(ProgramError::BlockDim {
                    block: b,
                    expected: self.blocks[b],
                    found: c.dim(),
                });
            }
        }
        for (row, con) in self.constraints.iter().enumerate() {
            for (b, a) in &con.terms {
                let Some(&n) = self.blocks.get(*b) else {
                    return Err(ProgramError::MissingBlock { row, block: *b });
                };
                if a.dim() != n {
                    return Err(ProgramError::BlockDim { block: *b, expected: n, found: a.dim() });
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, blocks: &[HermitianMatrix]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(blocks)
                .map(|(c, x)| inner(c, x).expect("objective dims validated"))
                .sum::<f64>()
    }

    /// Largest absolute constraint violation `max_i |Σ⟨A_i, X⟩ − b_i|`.
    pub fn residual(&self, blocks: &[HermitianMatrix]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.evaluate(blocks) - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of `Σ y_i A_i − C − S` over all blocks.
    pub fn dual_residual(&self, y: &[f64], slacks: &[HermitianMatrix]) -> f64 {
        let mut lhs: Vec<HermitianMatrix> =
            self.objective.iter().zip(slacks).map(|(c, s)| -&(c + s)).collect();
        for (con, &yi) in self.constraints.iter().zip(y) {
            for (b, a) in &con.terms {
                lhs[*b] = &lhs[*b] + &(a * yi);
            }
        }
        lhs.iter().map(HermitianMatrix::max_abs_entry).fold(0.0, f64::max)
    }

    /// JSON document describing the program, for bug reports.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("programs always serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_blocks: Vec<HermitianMatrix>,
    /// Multipliers `y` of the dual `min bᵀy s.t. Σ y_i A_i − C ⪰ 0`.
    pub dual_vector: Vec<f64>,
    /// Dual slack blocks `Σ y_i A_i − C`.
    pub dual_blocks: Vec<HermitianMatrix>,
    /// `|primal − dual| / max(1, |primal|)`.
    pub gap: f64,
    /// Largest absolute equality violation over all rows, pruned ones included.
    pub residual: f64,
    /// Largest absolute entry of `Σ y_i A_i − C − S` over all blocks.
    pub dual_residual: f64,
    /// Smallest eigenvalue over all primal blocks.
    pub min_eigenvalue: f64,
    pub iterations: usize,
    /// Rows dropped as linearly dependent before solving.
    pub pruned_rows: Vec<usize>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// The midpoint of the primal and dual values.
    pub fn value(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }

    pub fn summary(&self, label: &str) -> SolveSummary {
        SolveSummary {
            label: label.to_string(),
            status: self.status,
            value: self.value(),
            gap: self.gap,
            residual: self.residual,
            dual_residual: self.dual_residual,
            min_eigenvalue: self.min_eigenvalue,
            iterations: self.iterations,
        }
    }
}

/// Certificate data kept from a solve after the blocks are discarded.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveSummary {
    pub label: String,
    pub status: SolveStatus,
    pub value: f64,
    pub gap: f64,
    pub residual: f64,
    pub dual_residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

/// Reassembles `Σ_r y_r E_r` from the multipliers of the rows added by
/// [`ProgramBuilder::equate`], where `E_r` runs over
/// [`HermitianMatrix::hermitian_basis`].
pub fn equality_multiplier(sol: &ConicSolution, rows: Range<usize>, dim: usize) -> HermitianMatrix {
    let basis = HermitianMatrix::hermitian_basis(dim);
    assert_eq!(rows.len(), basis.len(), "row range does not match the basis");
    basis
        .iter()
        .zip(&sol.dual_vector[rows])
        .fold(HermitianMatrix::zeros(dim), |acc, (e, y)| &acc + &e.scale(*y))
}
