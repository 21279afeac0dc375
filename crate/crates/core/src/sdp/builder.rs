//! A small modeling layer that compiles affine Hermitian expressions into a
//! [`ConicProgram`].

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ConicProgram, ConicSolution, Constraint};
use crate::linalg::{inner, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub(crate) usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Term {
    /// `scale · X_b`
    Block { block: BlockId, scale: f64 },
    /// `scale · V X_b V†`
    Congruence { block: BlockId, map: DMatrix<Complex64>, scale: f64 },
    /// `x_b · F` for a scalar block
    Scalar { block: BlockId, coeff: HermitianMatrix },
}

/// An affine Hermitian-matrix-valued expression in the program blocks.
#[derive(Clone, Debug)]
pub struct HermExpr {
    dim: usize,
    terms: Vec<Term>,
    constant: HermitianMatrix,
}

impl HermExpr {
    pub fn constant(c: HermitianMatrix) -> Self {
        Self { dim: c.dim(), terms: Vec::new(), constant: c }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn plus_constant(mut self, c: &HermitianMatrix) -> Self {
        self.constant = &self.constant + c;
        self
    }

    pub fn plus(mut self, other: &HermExpr) -> Self {
        assert_eq!(self.dim, other.dim, "expression dimension mismatch");
        self.terms.extend(other.terms.iter().cloned());
        self.constant = &self.constant + &other.constant;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            match t {
                Term::Block { scale, .. } | Term::Congruence { scale, .. } => *scale *= k,
                Term::Scalar { coeff, .. } => *coeff = coeff.scale(k),
            }
        }
        self.constant = self.constant.scale(k);
        self
    }

    /// The linear form `X ↦ ⟨E, expr(X)⟩`.
    pub fn inner_with(&self, e: &HermitianMatrix) -> LinearForm {
        assert_eq!(e.dim(), self.dim, "inner product dimension mismatch");
        let mut form = LinearForm::default();
        for t in &self.terms {
            match t {
                Term::Block { block, scale } => form.add_term(*block, e.scale(*scale)),
                Term::Congruence { block, map, scale } => {
                    let pulled = HermitianMatrix::new(map.adjoint() * e.as_matrix() * map)
                        .expect("pullback is square");
                    form.add_term(*block, pulled.scale(*scale))
                }
                Term::Scalar { block, coeff } => {
                    let v = inner(e, coeff).expect("dims checked");
                    form.add_term(*block, HermitianMatrix::diagonal(&[v]))
                }
            }
        }
        form.constant += inner(e, &self.constant).expect("dims checked");
        form
    }

    /// Evaluates the expression at a solution.
    pub fn evaluate(&self, sol: &ConicSolution) -> HermitianMatrix {
        self.evaluate_blocks(&sol.primal_blocks)
    }

    pub fn evaluate_blocks(&self, blocks: &[HermitianMatrix]) -> HermitianMatrix {
        let mut acc = self.constant.clone();
        for t in &self.terms {
            let add = match t {
                Term::Block { block, scale } => blocks[block.0].scale(*scale),
                Term::Congruence { block, map, scale } => {
                    blocks[block.0].congruence(map).expect("map dims checked").scale(*scale)
                }
                Term::Scalar { block, coeff } => coeff.scale(blocks[block.0].get(0, 0).re),
            };
            acc = &acc + &add;
        }
        acc
    }
}

/// A real affine functional `Σ_b ⟨A_b, X_b⟩ + constant`.
#[derive(Clone, Debug, Default)]
pub struct LinearForm {
    terms: BTreeMap<BlockId, HermitianMatrix>,
    constant: f64,
}

impl LinearForm {
    pub fn add_term(&mut self, block: BlockId, coeff: HermitianMatrix) {
        match self.terms.get_mut(&block) {
            Some(existing) => *existing = &*existing + &coeff,
            None => {
                self.terms.insert(block, coeff);
            }
        }
    }

    pub fn plus(mut self, other: &LinearForm) -> Self {
        for (b, c) in &other.terms {
            self.add_term(*b, c.clone());
        }
        self.constant += other.constant;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for c in self.terms.values_mut() {
            *c = c.scale(k);
        }
        self.constant *= k;
        self
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn evaluate_blocks(&self, blocks: &[HermitianMatrix]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(b, c)| inner(c, &blocks[b.0]).expect("dims checked"))
                .sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Equal,
    GreaterEq,
    LessEq,
}

/// Diagonal restriction applied to an expression by
/// [`build_diagonal_constraint`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiagonalMode {
    /// `Δ(X) ≤ 0` entrywise.
    NonPositive,
    /// `Δ(X) = k·1` for a fixed `k` (`k = 0` gives `Δ(X) = 0`).
    EqualConstant(f64),
    /// `Δ(X) = k·1` for a shared scalar block `k ≥ 0`.
    EqualScalar(BlockId),
}

#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    blocks: Vec<usize>,
    objective: LinearForm,
    constraints: Vec<Constraint>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// A new PSD block of dimension `n`.
    pub fn psd_block(&mut self, n: usize) -> BlockId {
        assert!(n >= 1);
        self.blocks.push(n);
        BlockId(self.blocks.len() - 1)
    }

    /// A new nonnegative scalar (a `1×1` block).
    pub fn nonneg(&mut self) -> BlockId {
        self.psd_block(1)
    }

    pub fn block_dim(&self, b: BlockId) -> usize {
        self.blocks[b.0]
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// The block itself as an expression.
    pub fn var(&self, b: BlockId) -> HermExpr {
        let dim = self.blocks[b.0];
        HermExpr {
            dim,
            terms: vec![Term::Block { block: b, scale: 1.0 }],
            constant: HermitianMatrix::zeros(dim),
        }
    }

    /// `V X_b V†` as an expression of dimension `V.nrows()`.
    pub fn congruence(&self, b: BlockId, map: DMatrix<Complex64>) -> HermExpr {
        assert_eq!(map.ncols(), self.blocks[b.0], "congruence map dimension mismatch");
        let dim = map.nrows();
        HermExpr {
            dim,
            terms: vec![Term::Congruence { block: b, map, scale: 1.0 }],
            constant: HermitianMatrix::zeros(dim),
        }
    }

    /// `x_b · F` for a scalar block `b`.
    pub fn scalar_times(&self, b: BlockId, coeff: HermitianMatrix) -> HermExpr {
        assert_eq!(self.blocks[b.0], 1, "scalar_times needs a 1x1 block");
        let dim = coeff.dim();
        HermExpr {
            dim,
            terms: vec![Term::Scalar { block: b, coeff }],
            constant: HermitianMatrix::zeros(dim),
        }
    }

    /// The linear form `x_b` for a scalar block.
    pub fn scalar_form(&self, b: BlockId) -> LinearForm {
        let mut f = LinearForm::default();
        f.add_term(b, HermitianMatrix::diagonal(&[1.0]));
        f
    }

    /// Adds `form (sense) rhs`; inequalities get a fresh scalar slack. Returns
    /// the row index.
    pub fn add_constraint(&mut self, form: &LinearForm, sense: Sense, rhs: f64) -> usize {
        let mut terms: Vec<(usize, HermitianMatrix)> =
            form.terms.iter().map(|(b, c)| (b.0, c.clone())).collect();
        match sense {
            Sense::Equal => {}
            Sense::GreaterEq => {
                let t = self.nonneg();
                terms.push((t.0, HermitianMatrix::diagonal(&[-1.0])));
            }
            Sense::LessEq => {
                let t = self.nonneg();
                terms.push((t.0, HermitianMatrix::diagonal(&[1.0])));
            }
        }
        self.constraints.push(Constraint { terms, rhs: rhs - form.constant });
        self.constraints.len() - 1
    }

    /// `lhs = rhs` as `dim²` real rows over the Hermitian basis.
    pub fn equate(&mut self, lhs: &HermExpr, rhs: &HermExpr) -> Range<usize> {
        assert_eq!(lhs.dim, rhs.dim, "equated expressions differ in dimension");
        let start = self.constraints.len();
        let diff = lhs.clone().plus(&rhs.clone().scaled(-1.0));
        for e in HermitianMatrix::hermitian_basis(diff.dim) {
            let form = diff.inner_with(&e);
            self.add_constraint(&form, Sense::Equal, 0.0);
        }
        start..self.constraints.len()
    }

    pub fn maximize(&mut self, form: LinearForm) {
        self.objective = form;
    }

    pub fn build(&self) -> ConicProgram {
        let mut objective: Vec<HermitianMatrix> =
            self.blocks.iter().map(|&n| HermitianMatrix::zeros(n)).collect();
        for (b, c) in &self.objective.terms {
            objective[b.0] = c.clone();
        }
        ConicProgram {
            blocks: self.blocks.clone(),
            objective,
            objective_offset: self.objective.constant,
            constraints: self.constraints.clone(),
        }
    }
}

/// Encodes `lower ⪯ X ⪯ upper` with PSD slack blocks `X − lower` and
/// `upper − X`.
///
/// With `x = None` a new variable is created as `X = S₁ + lower` and only the
/// linking equality `S₁ + S₂ = upper − lower` is added. With an existing
/// expression both slacks are tied to it. Returns the expression for `X`.
pub fn build_interval_constraint(
    builder: &mut ProgramBuilder,
    lower: &HermitianMatrix,
    x: Option<&HermExpr>,
    upper: &HermitianMatrix,
) -> HermExpr {
    let n = lower.dim();
    assert_eq!(upper.dim(), n, "interval bounds differ in dimension");
    let s1 = builder.psd_block(n);
    let s2 = builder.psd_block(n);
    match x {
        None => {
            let lhs = builder.var(s1).plus(&builder.var(s2));
            builder.equate(&lhs, &HermExpr::constant(upper - lower));
            builder.var(s1).plus_constant(lower)
        }
        Some(expr) => {
            assert_eq!(expr.dim(), n, "interval bound dimension mismatch");
            let lo = builder.var(s1).plus_constant(lower);
            builder.equate(expr, &lo);
            let hi = builder.var(s2).scaled(-1.0).plus_constant(upper);
            builder.equate(expr, &hi);
            expr.clone()
        }
    }
}

/// Adds one row per diagonal entry of `x` according to `mode`. Returns the
/// row range, whose multipliers form the dual diagonal matrix.
pub fn build_diagonal_constraint(
    builder: &mut ProgramBuilder,
    x: &HermExpr,
    mode: DiagonalMode,
) -> Range<usize> {
    let n = x.dim();
    let start = builder.num_constraints();
    for i in 0..n {
        let unit = HermitianMatrix::symmetric_unit(n, i, i);
        let form = x.inner_with(&unit);
        match mode {
            DiagonalMode::NonPositive => {
                builder.add_constraint(&form, Sense::LessEq, 0.0);
            }
            DiagonalMode::EqualConstant(k) => {
                builder.add_constraint(&form, Sense::Equal, k);
            }
            DiagonalMode::EqualScalar(kb) => {
                let form = form.plus(&builder.scalar_form(kb).scaled(-1.0));
                builder.add_constraint(&form, Sense::Equal, 0.0);
            }
        }
    }
    start..builder.num_constraints()
}
