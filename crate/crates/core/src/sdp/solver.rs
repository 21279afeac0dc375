//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! The Hermitian program is mapped to a real symmetric one: an `n × n`
//! Hermitian block (`n ≥ 2`) becomes the `2n × 2n` block
//! `[[Re X, −Im X], [Im X, Re X]]` and coefficients are embedded with a factor
//! `1/2` so inner products are preserved. The solver works on
//!
//! ```text
//! minimize ⟨c, x⟩  s.t.  A x = b,  x ⪰ 0          (c = −C)
//! ```
//!
//! through the embedding `A x = b τ`, `Aᵀy + s = c τ`, `bᵀy − ⟨c,x⟩ = κ`, with
//! Nesterov–Todd scaling and a Mehrotra predictor-corrector. Recovering
//! `x/τ, y/τ` gives the solution; `τ → 0` with a certificate gives
//! infeasibility or unboundedness.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ConicProgram, ConicSolution, ProgramError, SolveStatus};
use crate::linalg::HermitianMatrix;

#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub step_fraction: f64,
    /// Relative gap at which iteration stops.
    pub gap_tol: f64,
    /// Absolute primal row and dual entry residual at which iteration stops.
    pub feasibility_tol: f64,
    /// Gap and primal and dual residuals a solution must meet to be
    /// reported optimal.
    pub certified_tol: f64,
    pub infeasibility_tol: f64,
    pub prune_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_fraction: 0.98,
            gap_tol: 1e-9,
            feasibility_tol: 1e-10,
            certified_tol: 1e-8,
            infeasibility_tol: 1e-8,
            prune_tol: 1e-10,
        }
    }
}

pub fn solve(p: &ConicProgram) -> Result<ConicSolution, ProgramError> {
    solve_with(p, &SolverSettings::default())
}

pub fn solve_with(p: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution, ProgramError> {
    p.validate()?;
    let (kept, pruned) = independent_rows(p, settings.prune_tol);
    let real = RealProgram::new(p, &kept);
    let mut ipm = Ipm::new(&real, p.objective_offset, settings);
    let outcome = ipm.run();
    Ok(finish(p, &real, &kept, pruned, outcome, settings))
}

/// Iterative refinement rounds on each Newton direction.
const REFINEMENT_ROUNDS: usize = 2;

/// Iterations without improvement after which a certified best iterate is
/// returned.
const STALL_ITERATIONS: usize = 4;

/// Real symmetric image of a [`ConicProgram`] restricted to the kept rows.
struct RealProgram {
    dims: Vec<usize>,
    complex_dims: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    rows: Vec<Vec<(usize, Sparse)>>,
    b: DVector<f64>,
}

/// Nonzero entries `(p, q, v)` of a real symmetric coefficient matrix, both
/// triangles listed.
struct Sparse {
    entries: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for q in 0..m.ncols() {
            for p in 0..m.nrows() {
                if m[(p, q)] != 0.0 {
                    entries.push((p, q, m[(p, q)]));
                }
            }
        }
        Self { entries }
    }

    fn dot(&self, x: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(p, q, v)| v * x[(p, q)]).sum()
    }

    fn add_scaled_to(&self, out: &mut DMatrix<f64>, k: f64) {
        for &(p, q, v) in &self.entries {
            out[(p, q)] += k * v;
        }
    }

    /// Column-major `Rᵀ A R` accumulated into `out` (length `n²`).
    fn congruence_into(&self, r: &DMatrix<f64>, out: &mut [f64]) {
        let n = r.ncols();
        for &(p, q, v) in &self.entries {
            for b in 0..n {
                let f = v * r[(q, b)];
                if f == 0.0 {
                    continue;
                }
                let col = &mut out[b * n..(b + 1) * n];
                for (a, o) in col.iter_mut().enumerate() {
                    *o += f * r[(p, a)];
                }
            }
        }
    }
}

fn embed(h: &HermitianMatrix, factor: f64) -> DMatrix<f64> {
    let n = h.dim();
    if n == 1 {
        return DMatrix::from_element(1, 1, factor * h.get(0, 0).re);
    }
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            m[(i, j)] = factor * z.re;
            m[(i + n, j + n)] = factor * z.re;
            m[(i, j + n)] = -factor * z.im;
            m[(i + n, j)] = factor * z.im;
        }
    }
    m
}

fn recover(x: &DMatrix<f64>, n: usize, factor: f64) -> HermitianMatrix {
    if n == 1 {
        return HermitianMatrix::diagonal(&[factor * x[(0, 0)]]);
    }
    HermitianMatrix::from_fn(n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        Complex64::new(factor * re, factor * im)
    })
}

impl RealProgram {
    fn new(p: &ConicProgram, kept: &[usize]) -> Self {
        let complex_dims = p.blocks.clone();
        let dims: Vec<usize> = p.blocks.iter().map(|&n| if n == 1 { 1 } else { 2 * n }).collect();
        let factor = |n: usize| if n == 1 { 1.0 } else { 0.5 };
        let c = p
            .objective
            .iter()
            .map(|cb| embed(cb, -factor(cb.dim())))
            .collect();
        let mut rows = Vec::with_capacity(kept.len());
        let mut b = DVector::zeros(kept.len());
        for (r, &i) in kept.iter().enumerate() {
            let con = &p.constraints[i];
            let mut terms: Vec<(usize, DMatrix<f64>)> = Vec::new();
            for (blk, a) in &con.terms {
                let m = embed(a, factor(a.dim()));
                if let Some(existing) = terms.iter_mut().find(|(tb, _)| tb == blk) {
                    existing.1 += m;
                } else {
                    terms.push((*blk, m));
                }
            }
            rows.push(terms.into_iter().map(|(blk, m)| (blk, Sparse::from_dense(&m))).collect());
            b[r] = con.rhs;
        }
        Self { dims, complex_dims, c, rows, b }
    }

    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn apply_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|terms| terms.iter().map(|(b, a)| a.dot(&x[*b])).sum::<f64>()),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, terms) in self.rows.iter().enumerate() {
            for (b, a) in terms {
                a.add_scaled_to(&mut out[*b], y[i]);
            }
        }
        out
    }
}

fn dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn lin_comb(pairs: &[(f64, &[DMatrix<f64>])]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = pairs[0].1.iter().map(|m| m * pairs[0].0).collect();
    for (k, v) in &pairs[1..] {
        for (o, m) in out.iter_mut().zip(v.iter()) {
            *o += m * *k;
        }
    }
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

fn chol_solve(l: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut z = rhs.clone();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = s / l[(i, i)];
        }
    }
    inv
}

/// Nesterov–Todd scaling of one block: `R⁻¹ X R⁻ᵀ = Rᵀ S R = diag(λ)`.
struct Scaling {
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: Vec<f64>,
}

impl Scaling {
    fn new(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Self> {
        let l = cholesky(x)?;
        let mut t = l.transpose() * s * &l;
        symmetrize(&mut t);
        let eig = t.symmetric_eigen();
        let (mu, q) = (eig.eigenvalues, eig.eigenvectors);
        if mu.iter().any(|&v| v.is_nan() || v <= 0.0) {
            return None;
        }
        let lambda: Vec<f64> = mu.iter().map(|v| v.sqrt()).collect();
        let n = lambda.len();
        let mut r = &l * &q;
        for j in 0..n {
            let f = 1.0 / lambda[j].sqrt();
            for i in 0..n {
                r[(i, j)] *= f;
            }
        }
        let mut r_inv = q.transpose() * lower_inverse(&l);
        for i in 0..n {
            let f = lambda[i].sqrt();
            for j in 0..n {
                r_inv[(i, j)] *= f;
            }
        }
        let mut w = &r * r.transpose();
        symmetrize(&mut w);
        Some(Self { r, r_inv, w, lambda })
    }

    fn apply_w(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = &self.w * v * &self.w;
        symmetrize(&mut out);
        out
    }

    fn scale_primal(&self, dx: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = &self.r_inv * dx * self.r_inv.transpose();
        symmetrize(&mut out);
        out
    }

    fn scale_dual(&self, ds: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.r.transpose() * ds * &self.r;
        symmetrize(&mut out);
        out
    }

    /// `Z` with `Λ ∘ Z = rc`, the scaled form of `unscale_complementarity`.
    fn solve_complementarity(&self, rc: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.lambda.len();
        DMatrix::from_fn(n, n, |i, j| 2.0 * rc[(i, j)] / (self.lambda[i] + self.lambda[j]))
    }

    /// `R Z Rᵀ`.
    fn unscale_primal(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = &self.r * z * self.r.transpose();
        symmetrize(&mut out);
        out
    }

    /// Largest `α` with `diag(λ) + α d ⪰ 0`.
    fn max_step(&self, d: &DMatrix<f64>) -> f64 {
        let n = self.lambda.len();
        let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / (self.lambda[i] * self.lambda[j]).sqrt());
        let min_eig = if n == 1 { m[(0, 0)] } else { m.symmetric_eigenvalues().min() };
        if !min_eig.is_finite() {
            return 0.0;
        }
        if min_eig >= 0.0 {
            f64::INFINITY
        } else {
            -1.0 / min_eig
        }
    }
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Outcome {
    status: SolveStatus,
    iterate: Iterate,
    iterations: usize,
}

struct Ipm<'a> {
    p: &'a RealProgram,
    settings: &'a SolverSettings,
    nu: f64,
    /// Constant term of the original objective, `value = offset − ⟨c, x⟩`.
    offset: f64,
}

struct Measures {
    pres: f64,
    dres: f64,
    gap: f64,
    score: f64,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a RealProgram, offset: f64, settings: &'a SolverSettings) -> Self {
        let nu = p.dims.iter().sum::<usize>() as f64;
        Self { p, settings, nu, offset }
    }

    /// `pres`, `dres` and `gap` are the primal row violation, the dual
    /// entry violation and the relative objective gap, exactly as certified
    /// by `finish`.
    fn measures(&self, it: &Iterate) -> Measures {
        let t = it.tau;
        let ax = self.p.apply_a(&it.x);
        let pres = (&ax / t - &self.p.b).amax();
        let aty = self.p.apply_at(&it.y);
        let mut dres = 0.0f64;
        for (((a, s), c), &n) in aty.iter().zip(&it.s).zip(&self.p.c).zip(&self.p.complex_dims) {
            // real images of complex blocks carry half of each coefficient
            let weight = if n == 1 { 1.0 } else { 2.0 };
            dres = dres.max(weight * ((a + s) / t - c).amax());
        }
        let pobj = dot(&self.p.c, &it.x) / t;
        let dobj = self.p.b.dot(&it.y) / t;
        let gap = (pobj - dobj).abs() / (self.offset - pobj).abs().max(1.0);
        Measures { pres, dres, gap, score: pres.max(dres).max(gap) }
    }

    fn run(&mut self) -> Outcome {
        let mut it = Iterate {
            x: self.p.dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
            s: self.p.dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
            y: DVector::zeros(self.p.nrows()),
            tau: 1.0,
            kappa: 1.0,
        };
        let mut best: Option<(f64, Iterate, usize)> = None;
        for k in 0..self.settings.max_iterations {
            let m = self.measures(&it);
            if m.pres <= self.settings.feasibility_tol
                && m.dres <= self.settings.feasibility_tol
                && m.gap <= self.settings.gap_tol
            {
                return Outcome { status: SolveStatus::Optimal, iterate: it, iterations: k };
            }
            if let Some(status) = self.infeasibility(&it) {
                return Outcome { status, iterate: it, iterations: k };
            }
            if best.as_ref().is_none_or(|(s, _, _)| m.score < *s) {
                best = Some((m.score, clone_iterate(&it), k));
            }
            // rounding dominates once a certified iterate stops improving
            if let Some((score, _, bk)) = &best {
                if *score <= self.settings.certified_tol && k >= bk + STALL_ITERATIONS {
                    return self.fallback(best, it, k);
                }
            }
            match self.step(&it) {
                Some(next) => it = next,
                None => return self.fallback(best, it, k),
            }
        }
        let k = self.settings.max_iterations;
        self.fallback(best, it, k)
    }

    fn fallback(&self, best: Option<(f64, Iterate, usize)>, it: Iterate, k: usize) -> Outcome {
        let m = self.measures(&it);
        let (mut score, mut iterate, iterations) = match best {
            Some((s, b, bk)) if s < m.score => (s, b, bk),
            _ => (m.score, it, k),
        };
        if score > self.settings.certified_tol {
            if let Some(polished) = self.polish(&iterate) {
                let ps = self.measures(&polished).score;
                if ps < score {
                    score = ps;
                    iterate = polished;
                }
            }
        }
        let status = if score <= self.settings.certified_tol {
            SolveStatus::Optimal
        } else {
            SolveStatus::NumericalTrouble
        };
        Outcome { status, iterate, iterations }
    }

    /// Removes the residuals of a nearly optimal iterate with W-weighted
    /// least-norm corrections: `δx = W Aᵀλ W` with `Mλ = bτ − Ax` on the
    /// primal side, and `δs = r − Aᵀδy` with `M δy = A(W r W)` for the dual
    /// residual `r = τc − Aᵀy − s`. Both corrections avoid the directions in
    /// which their block is nearly singular. Each side is kept only if its
    /// blocks stay in the cone.
    fn polish(&self, it: &Iterate) -> Option<Iterate> {
        let p = self.p;
        let scalings: Vec<Scaling> =
            it.x.iter().zip(&it.s).map(|(x, s)| Scaling::new(x, s)).collect::<Option<_>>()?;
        let normal = NormalSystem::new(p, &scalings)?;
        let mut out = clone_iterate(it);

        let lambda = normal.solve(&(&p.b * it.tau - p.apply_a(&it.x)));
        let atl = p.apply_at(&lambda);
        let x: Vec<DMatrix<f64>> =
            it.x.iter().zip(&atl).zip(&scalings).map(|((x, a), sc)| x + sc.apply_w(a)).collect();
        if let Some(x) = inside_cone(x) {
            out.x = x;
        }

        let aty = p.apply_at(&it.y);
        let r: Vec<DMatrix<f64>> = p
            .c
            .iter()
            .zip(&aty)
            .zip(&it.s)
            .map(|((c, a), s)| c * it.tau - a - s)
            .collect();
        let wrw: Vec<DMatrix<f64>> = scalings.iter().zip(&r).map(|(sc, r)| sc.apply_w(r)).collect();
        let dy = normal.solve(&p.apply_a(&wrw));
        let atdy = p.apply_at(&dy);
        let s: Vec<DMatrix<f64>> =
            it.s.iter().zip(&r).zip(&atdy).map(|((s, r), a)| s + r - a).collect();
        if let Some(s) = inside_cone(s) {
            out.s = s;
            out.y = &it.y + dy;
        }
        Some(out)
    }

    fn infeasibility(&self, it: &Iterate) -> Option<SolveStatus> {
        if it.tau > 1e-3 * it.kappa.max(1e-300) {
            return None;
        }
        let tol = self.settings.infeasibility_tol;
        let by = self.p.b.dot(&it.y);
        if by > 0.0 {
            let aty = self.p.apply_at(&it.y);
            let r: Vec<DMatrix<f64>> = aty.iter().zip(&it.s).map(|(a, s)| a + s).collect();
            if norm(&r) <= tol * by {
                return Some(SolveStatus::Infeasible);
            }
        }
        let cx = dot(&self.p.c, &it.x);
        if cx < 0.0 && self.p.apply_a(&it.x).norm() <= tol * (-cx) {
            return Some(SolveStatus::Unbounded);
        }
        None
    }

    fn step(&self, it: &Iterate) -> Option<Iterate> {
        let p = self.p;
        let scalings: Vec<Scaling> = it
            .x
            .iter()
            .zip(&it.s)
            .map(|(x, s)| Scaling::new(x, s))
            .collect::<Option<_>>()?;

        let mu = (dot(&it.x, &it.s) + it.tau * it.kappa) / (self.nu + 1.0);

        // Residuals of the embedding.
        let r_p = &p.b * it.tau - p.apply_a(&it.x);
        let aty = p.apply_at(&it.y);
        let r_d: Vec<DMatrix<f64>> = p
            .c
            .iter()
            .zip(&aty)
            .zip(&it.s)
            .map(|((c, a), s)| c * it.tau - a - s)
            .collect();
        let r_g = it.kappa + dot(&p.c, &it.x) - p.b.dot(&it.y);

        // M = BᵀB with column i of B stacking Rᵀ a_ib R over blocks, so
        // M_ij = Σ_b ⟨a_ib, W a_jb W⟩.
        let normal = NormalSystem::new(p, &scalings)?;
        let solve_m = |rhs: &DVector<f64>| normal.solve(rhs);

        let c_scaled: Vec<DMatrix<f64>> = scalings.iter().zip(&p.c).map(|(sc, c)| sc.scale_dual(c)).collect();
        let c_vec = DVector::from_iterator(
            normal.b.nrows(),
            c_scaled.iter().flat_map(|m| m.iter().copied()),
        );
        // A(WcW) = Bᵀ vec(RᵀcR)
        let ahc = normal.b.tr_mul(&c_vec);
        let v = solve_m(&(&ahc + &p.b));
        let g = &p.b - &ahc;
        // g·v + ⟨c,WcW⟩ expands to bᵀM⁻¹b plus the squared least-squares
        // residual of B z ≈ vec(RᵀcR); summing these nonnegative terms avoids
        // the cancellation of the expanded form, whose parts grow like 1/μ
        let ls_residual = &c_vec - &normal.b * solve_m(&ahc);
        let denom = p.b.dot(&solve_m(&p.b)) + ls_residual.norm_squared() + it.kappa / it.tau;

        // Solves A dx − b dτ = rp, Aᵀdy + ds − c dτ = rd, bᵀdy − ⟨c,dx⟩ − dκ = rg,
        // R⁻¹dx R⁻ᵀ + Rᵀds R = zc and κ dτ + τ dκ = rtk. dx is formed in the
        // scaled space, where rounding in ds is not amplified by W.
        let solve_raw = |rp: &DVector<f64>, rd: &[DMatrix<f64>], rg: f64, zc: &[DMatrix<f64>], rtk: f64| -> Direction {
            let rcp: Vec<DMatrix<f64>> = scalings.iter().zip(zc).map(|(sc, z)| sc.unscale_primal(z)).collect();
            let hrd: Vec<DMatrix<f64>> = scalings.iter().zip(rd).map(|(sc, r)| sc.apply_w(r)).collect();
            let rhs1 = rp - p.apply_a(&rcp) + p.apply_a(&hrd);
            let u = solve_m(&rhs1);
            let rhs2 = rg + dot(&p.c, &rcp) - dot(&p.c, &hrd) + rtk / it.tau;
            let dtau = (rhs2 - g.dot(&u)) / denom;
            let dy = &u + &v * dtau;
            let atdy = p.apply_at(&dy);
            let ds: Vec<DMatrix<f64>> = rd
                .iter()
                .zip(&atdy)
                .zip(&p.c)
                .map(|((r, a), c)| r - a + c * dtau)
                .collect();
            let scaled_atdy = normal.scaled_at(&dy, &p.dims);
            let dx: Vec<DMatrix<f64>> = scalings
                .iter()
                .zip(zc)
                .zip(rd)
                .zip(scaled_atdy.iter().zip(&c_scaled))
                .map(|(((sc, z), r), (a, c))| {
                    let ds_scaled = sc.scale_dual(r) - a + c * dtau;
                    sc.unscale_primal(&(z - ds_scaled))
                })
                .collect();
            let dkappa = (rtk - it.kappa * dtau) / it.tau;
            Direction { dx, ds, dy, dtau, dkappa }
        };

        let solve_newton = |eta: f64, rc: &[DMatrix<f64>], rhs_tk: f64| -> Direction {
            let zc: Vec<DMatrix<f64>> = scalings.iter().zip(rc).map(|(sc, r)| sc.solve_complementarity(r)).collect();
            let rd: Vec<DMatrix<f64>> = r_d.iter().map(|r| r * eta).collect();
            let rp = &r_p * eta;
            let rg = eta * r_g;
            let mut d = solve_raw(&rp, &rd, rg, &zc, rhs_tk);
            // refinement of the primal and gap rows, which absorb the error
            // of the normal solve; a round is kept only if it helps
            let defect = |d: &Direction| {
                let ep = &rp - (p.apply_a(&d.dx) - &p.b * d.dtau);
                let eg = rg - (p.b.dot(&d.dy) - dot(&p.c, &d.dx) - d.dkappa);
                let size = ep.amax().max(eg.abs());
                (ep, eg, size)
            };
            let zero: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
            for _ in 0..REFINEMENT_ROUNDS {
                let (ep, eg, before) = defect(&d);
                let c = solve_raw(&ep, &zero, eg, &zero, 0.0);
                let refined = Direction {
                    dx: lin_comb(&[(1.0, &d.dx), (1.0, &c.dx)]),
                    ds: lin_comb(&[(1.0, &d.ds), (1.0, &c.ds)]),
                    dy: &d.dy + &c.dy,
                    dtau: d.dtau + c.dtau,
                    dkappa: d.dkappa + c.dkappa,
                };
                if defect(&refined).2 >= before {
                    break;
                }
                d = refined;
            }
            d
        };

        let step_length = |d: &Direction| -> (f64, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let mut alpha = f64::INFINITY;
            let mut dxs = Vec::with_capacity(scalings.len());
            let mut dss = Vec::with_capacity(scalings.len());
            for ((sc, dx), ds) in scalings.iter().zip(&d.dx).zip(&d.ds) {
                let tx = sc.scale_primal(dx);
                let ts = sc.scale_dual(ds);
                alpha = alpha.min(sc.max_step(&tx)).min(sc.max_step(&ts));
                dxs.push(tx);
                dss.push(ts);
            }
            if d.dtau < 0.0 {
                alpha = alpha.min(-it.tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                alpha = alpha.min(-it.kappa / d.dkappa);
            }
            (alpha, dxs, dss)
        };

        // Predictor.
        let rc_aff: Vec<DMatrix<f64>> = scalings
            .iter()
            .map(|sc| {
                let n = sc.lambda.len();
                DMatrix::from_fn(n, n, |i, j| if i == j { -sc.lambda[i] * sc.lambda[i] } else { 0.0 })
            })
            .collect();
        let aff = solve_newton(1.0, &rc_aff, -it.tau * it.kappa);
        let (alpha_aff, tdx, tds) = step_length(&aff);
        let alpha_aff = alpha_aff.min(1.0);
        let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

        // Corrector with second-order term.
        let rc: Vec<DMatrix<f64>> = scalings
            .iter()
            .zip(tdx.iter().zip(&tds))
            .map(|(sc, (a, b))| {
                let n = sc.lambda.len();
                let mut prod = a * b + b * a;
                prod *= 0.5;
                DMatrix::from_fn(n, n, |i, j| {
                    let base = if i == j { -sc.lambda[i] * sc.lambda[i] + sigma * mu } else { 0.0 };
                    base - prod[(i, j)]
                })
            })
            .collect();
        let rhs_tk = -it.tau * it.kappa + sigma * mu - aff.dtau * aff.dkappa;
        let dir = solve_newton(1.0 - sigma, &rc, rhs_tk);
        let (alpha_max, _, _) = step_length(&dir);
        let alpha = (self.settings.step_fraction * alpha_max).min(1.0);
        if !alpha.is_finite() || alpha <= 1e-12 {
            return None;
        }

        let x = lin_comb(&[(1.0, &it.x), (alpha, &dir.dx)]);
        let s = lin_comb(&[(1.0, &it.s), (alpha, &dir.ds)]);
        let next = Iterate {
            x: x.into_iter().map(|mut m| { symmetrize(&mut m); m }).collect(),
            s: s.into_iter().map(|mut m| { symmetrize(&mut m); m }).collect(),
            y: &it.y + &dir.dy * alpha,
            tau: it.tau + alpha * dir.dtau,
            kappa: it.kappa + alpha * dir.dkappa,
        };
        if !(next.tau > 0.0 && next.kappa > 0.0) {
            return None;
        }
        Some(next)
    }
}

/// The Newton normal equations `BᵀB dy = r`, solved through the triangular
/// factor of `B` (QR) so the conditioning of `B`, not of `BᵀB`, governs the
/// error. Falls back to a regularized Cholesky of `BᵀB` when `B` is
/// numerically rank deficient.
struct NormalSystem {
    b: DMatrix<f64>,
    offsets: Vec<usize>,
    factor: Factor,
}

enum Factor {
    Qr(DMatrix<f64>),
    Cholesky(DMatrix<f64>),
}

impl NormalSystem {
    fn new(p: &RealProgram, scalings: &[Scaling]) -> Option<Self> {
        let offsets: Vec<usize> = p
            .dims
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n * n;
                Some(o)
            })
            .collect();
        let len: usize = p.dims.iter().map(|n| n * n).sum();
        let nrows = p.nrows();
        let mut b = DMatrix::<f64>::zeros(len, nrows);
        for (i, terms) in p.rows.iter().enumerate() {
            let col = b.column_mut(i);
            let col = col.data.into_slice_mut();
            for (blk, a) in terms {
                let n = p.dims[*blk];
                a.congruence_into(&scalings[*blk].r, &mut col[offsets[*blk]..offsets[*blk] + n * n]);
            }
        }
        if nrows == 0 {
            return Some(Self { b, offsets, factor: Factor::Cholesky(DMatrix::zeros(0, 0)) });
        }
        if len >= nrows {
            let r = b.clone().qr().r();
            let diag_max = (0..nrows).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
            if (0..nrows).all(|i| r[(i, i)].abs() > 1e-13 * diag_max) {
                return Some(Self { b, offsets, factor: Factor::Qr(r) });
            }
        }
        let mut m = b.transpose() * &b;
        symmetrize(&mut m);
        let l = factor_with_regularization(&m)?;
        Some(Self { b, offsets, factor: Factor::Cholesky(l) })
    }

    /// Scaled blocks `Σ_i y_i Rᵀ a_i R`.
    fn scaled_at(&self, y: &DVector<f64>, dims: &[usize]) -> Vec<DMatrix<f64>> {
        let v = &self.b * y;
        dims.iter()
            .zip(&self.offsets)
            .map(|(&n, &o)| {
                let mut m = DMatrix::from_column_slice(n, n, &v.as_slice()[o..o + n * n]);
                symmetrize(&mut m);
                m
            })
            .collect()
    }

    fn solve_once(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Qr(r) => {
                let z = r.tr_solve_upper_triangular(rhs).expect("nonzero diagonal checked");
                r.solve_upper_triangular(&z).expect("nonzero diagonal checked")
            }
            Factor::Cholesky(l) => chol_solve(l, rhs),
        }
    }

    /// Solution with one step of iterative refinement against `BᵀB`.
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut sol = self.solve_once(rhs);
        let residual = rhs - self.b.tr_mul(&(&self.b * &sol));
        sol += self.solve_once(&residual);
        sol
    }
}

fn factor_with_regularization(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    if let Some(l) = cholesky(m) {
        return Some(l);
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 1e-14 * scale;
    for _ in 0..6 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += reg;
        }
        if let Some(l) = cholesky(&shifted) {
            return Some(l);
        }
        reg *= 100.0;
    }
    None
}

/// Symmetrized blocks, or `None` if any has a negative eigenvalue.
fn inside_cone(blocks: Vec<DMatrix<f64>>) -> Option<Vec<DMatrix<f64>>> {
    blocks
        .into_iter()
        .map(|mut b| {
            symmetrize(&mut b);
            let min = if b.nrows() == 1 { b[(0, 0)] } else { b.symmetric_eigenvalues().min() };
            (min >= 0.0).then_some(b)
        })
        .collect()
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        x: it.x.clone(),
        s: it.s.clone(),
        y: it.y.clone(),
        tau: it.tau,
        kappa: it.kappa,
    }
}

/// Pivoted Gram–Schmidt over the constraint rows; returns kept and dropped
/// row indices.
fn independent_rows(p: &ConicProgram, tol: f64) -> (Vec<usize>, Vec<usize>) {
    let offsets: Vec<usize> = p
        .blocks
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += 2 * n * n;
            Some(o)
        })
        .collect();
    let len: usize = p.blocks.iter().map(|&n| 2 * n * n).sum();
    let mut vecs: Vec<Vec<f64>> = p
        .constraints
        .iter()
        .map(|c| {
            let mut v = vec![0.0; len];
            for (b, a) in &c.terms {
                let n = p.blocks[*b];
                for (k, z) in a.as_matrix().iter().enumerate() {
                    v[offsets[*b] + 2 * k] += z.re;
                    v[offsets[*b] + 2 * k + 1] += z.im;
                }
                let _ = n;
            }
            v
        })
        .collect();
    let norms: Vec<f64> = vecs.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut remaining: Vec<usize> = (0..vecs.len()).collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    while !remaining.is_empty() {
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                let ra = ratio(&vecs[a], norms[a]);
                let rb = ratio(&vecs[b], norms[b]);
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .expect("nonempty");
        if ratio(&vecs[best], norms[best]) <= tol {
            dropped.extend(remaining.iter().copied());
            break;
        }
        remaining.remove(pos);
        let nb = vecs[best].iter().map(|x| x * x).sum::<f64>().sqrt();
        let q: Vec<f64> = vecs[best].iter().map(|x| x / nb).collect();
        for &r in &remaining {
            let proj: f64 = vecs[r].iter().zip(&q).map(|(a, b)| a * b).sum();
            for (a, b) in vecs[r].iter_mut().zip(&q) {
                *a -= proj * b;
            }
        }
        kept.push(best);
    }
    kept.sort_unstable();
    dropped.sort_unstable();
    (kept, dropped)
}

fn ratio(v: &[f64], original: f64) -> f64 {
    if original == 0.0 {
        return 0.0;
    }
    v.iter().map(|x| x * x).sum::<f64>().sqrt() / original
}

fn finish(
    p: &ConicProgram,
    real: &RealProgram,
    kept: &[usize],
    pruned: Vec<usize>,
    outcome: Outcome,
    settings: &SolverSettings,
) -> ConicSolution {
    let Outcome { mut status, iterate, iterations } = outcome;
    let t = iterate.tau;
    let primal_blocks: Vec<HermitianMatrix> = iterate
        .x
        .iter()
        .zip(&real.complex_dims)
        .map(|(x, &n)| recover(&(x / t), n, 1.0))
        .collect();
    let dual_blocks: Vec<HermitianMatrix> = iterate
        .s
        .iter()
        .zip(&real.complex_dims)
        .map(|(s, &n)| recover(&(s / t), n, if n == 1 { 1.0 } else { 2.0 }))
        .collect();
    let mut dual_vector = vec![0.0; p.constraints.len()];
    for (r, &i) in kept.iter().enumerate() {
        dual_vector[i] = -iterate.y[r] / t;
    }
    let primal_value = p.objective_value(&primal_blocks);
    let dual_value = p.objective_offset
        + kept
            .iter()
            .map(|&i| p.constraints[i].rhs * dual_vector[i])
            .sum::<f64>();
    let residual = p.residual(&primal_blocks);
    let dual_residual = p.dual_residual(&dual_vector, &dual_blocks);
    let min_eigenvalue = primal_blocks
        .iter()
        .map(|x| x.min_eigenvalue().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let gap = (primal_value - dual_value).abs() / primal_value.abs().max(1.0);

    if status == SolveStatus::Optimal {
        let pruned_violation = pruned
            .iter()
            .map(|&i| (p.constraints[i].evaluate(&primal_blocks) - p.constraints[i].rhs).abs())
            .fold(0.0, f64::max);
        if pruned_violation > settings.certified_tol {
            status = SolveStatus::Infeasible;
        } else if gap > settings.certified_tol
            || residual > settings.certified_tol
            || dual_residual > settings.certified_tol
        {
            status = SolveStatus::NumericalTrouble;
        }
    }
    ConicSolution {
        status,
        primal_value,
        dual_value,
        primal_blocks,
        dual_vector,
        dual_blocks,
        gap,
        residual,
        dual_residual,
        min_eigenvalue,
        iterations,
        pruned_rows: pruned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, DensityMatrix};
    use crate::sdp::{build_diagonal_constraint, build_interval_constraint, Constraint, DiagonalMode, ProgramBuilder, Sense};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trace_one_program(c: HermitianMatrix) -> ConicProgram {
        let n = c.dim();
        ConicProgram {
            blocks: vec![n],
            objective: vec![c],
            objective_offset: 0.0,
            constraints: vec![Constraint { terms: vec![(0, HermitianMatrix::identity(n))], rhs: 1.0 }],
        }
    }

    #[test]
    fn embedding_round_trip_preserves_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = crate::linalg::random_hermitian(3, &mut rng);
        let x = crate::linalg::random_hermitian(3, &mut rng);
        let lhs = embed(&a, 0.5).dot(&embed(&x, 1.0));
        let rhs = crate::linalg::inner(&a, &x).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let back = recover(&embed(&x, 1.0), 3, 1.0);
        assert!((&back - &x).max_abs_entry() < 1e-15);
    }

    #[test]
    fn largest_eigenvalue_program() {
        let sol = solve(&trace_one_program(HermitianMatrix::diagonal(&[1.0, 0.0]))).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value() - 1.0).abs() < 1e-8, "{}", sol.value());
        assert!(sol.gap <= 1e-8);
        assert!(sol.residual <= 1e-8);
    }

    #[test]
    fn complex_eigenvalue_program_matches_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 2..=6 {
            let c = crate::linalg::random_hermitian(d, &mut rng);
            let sol = solve(&trace_one_program(c.clone())).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            let lmax = c.max_eigenvalue().unwrap();
            assert!((sol.value() - lmax).abs() < 1e-7, "d={d}: {} vs {lmax}", sol.value());
            assert!(sol.dual_value >= sol.primal_value - 1e-10);
            assert!(sol.min_eigenvalue >= -1e-9);
        }
    }

    #[test]
    fn detects_infeasibility() {
        // X ⪰ 0 with Tr X = -1.
        let p = ConicProgram {
            blocks: vec![2],
            objective: vec![HermitianMatrix::zeros(2)],
            objective_offset: 0.0,
            constraints: vec![Constraint { terms: vec![(0, HermitianMatrix::identity(2))], rhs: -1.0 }],
        };
        assert_eq!(solve(&p).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // maximize x_00 subject to x_11 = 1: x_00 can grow without bound.
        let p = ConicProgram {
            blocks: vec![1, 1],
            objective: vec![HermitianMatrix::diagonal(&[1.0]), HermitianMatrix::zeros(1)],
            objective_offset: 0.0,
            constraints: vec![Constraint { terms: vec![(1, HermitianMatrix::diagonal(&[1.0]))], rhs: 1.0 }],
        };
        assert_eq!(solve(&p).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn duplicate_rows_are_pruned() {
        let mut p = trace_one_program(HermitianMatrix::diagonal(&[0.3, 2.0]));
        p.constraints.push(Constraint { terms: vec![(0, HermitianMatrix::scaled_identity(2, 2.0))], rhs: 2.0 });
        let sol = solve(&p).unwrap();
        assert_eq!(sol.pruned_rows, vec![1]);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value() - 2.0).abs() < 1e-8);

        // inconsistent duplicate
        p.constraints[1].rhs = 3.0;
        assert_eq!(solve(&p).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = crate::linalg::random_hermitian(4, &mut rng);
        let a = solve(&trace_one_program(c.clone())).unwrap();
        let b = solve(&trace_one_program(c)).unwrap();
        assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn incoherent_state_robustness_style_program_is_zero() {
        // max ⟨ρ, W⟩ s.t. -1 ≤ W ≤ m1, Δ(W) ≤ 0 with ρ diagonal.
        let rho = DensityMatrix::incoherent(&[0.2, 0.5, 0.3]).unwrap();
        let mut b = ProgramBuilder::new();
        let w = build_interval_constraint(
            &mut b,
            &HermitianMatrix::scaled_identity(3, -1.0),
            None,
            &HermitianMatrix::scaled_identity(3, 2.0),
        );
        build_diagonal_constraint(&mut b, &w, DiagonalMode::NonPositive);
        b.maximize(w.inner_with(&rho));
        let sol = solve(&b.build()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.value().abs() < 1e-8);
    }

    #[test]
    fn inequality_rows_and_json_dump() {
        // maximize Tr(ρX) s.t. Tr X ≤ 2, X ⪰ 0  → 2 λ_max(ρ)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(3, 3, &mut rng);
        let mut b = ProgramBuilder::new();
        let x = b.psd_block(3);
        let e = b.var(x);
        b.add_constraint(&e.inner_with(&HermitianMatrix::identity(3)), Sense::LessEq, 2.0);
        b.maximize(e.inner_with(&rho));
        let p = b.build();
        let sol = solve(&p).unwrap();
        assert!((sol.value() - 2.0 * rho.max_eigenvalue().unwrap()).abs() < 1e-8);
        let json = p.to_json();
        let back: ConicProgram = serde_json::from_str(&json).unwrap();
        assert_eq!(back.blocks, p.blocks);
        assert_eq!(back.constraints.len(), p.constraints.len());
    }
}
