//! Primal-dual interior-point solver for the convex restrictions.
//!
//! Each constraint `Σ ℓ_k(z)² <= β(z)` is lifted to a second-order cone:
//! `(√β, ℓ) ∈ Q` when `β` is a nonnegative constant, otherwise the rotated
//! form `(β + 1, β - 1, 2ℓ) ∈ Q`. Constraints without squares become
//! nonnegativity rows. The lifted problem
//!
//! ```text
//! minimize cᵀx  subject to  s = h + A x,  s ∈ K
//! ```
//!
//! is solved with Nesterov–Todd scaling and Mehrotra predictor-corrector
//! steps. The Newton systems are reduced to the normal equations
//! `Aᵀ W⁻² A Δx = r`, which are dense of order `dim`; every cone row touches
//! at most five variables, so assembly is linear in the number of rows.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulation::{ConstraintTag, ConvexSubproblem, LinearForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    /// A single row that must be nonnegative.
    Nonnegative,
    /// `(t, w) ∈ Q` meaning `‖w‖ <= t`.
    SecondOrder,
}

#[derive(Clone, Debug)]
pub struct ConeBlock {
    pub kind: BlockKind,
    /// Affine rows; the block's value at `z` must lie in its cone.
    pub rows: Vec<LinearForm>,
    /// Number of squared forms in the source constraint.
    pub arity: usize,
    /// Right-hand side `β(z)` of the source constraint.
    pub bound: LinearForm,
    pub tag: Option<ConstraintTag>,
}

/// Maximize `objectiveᵀ z` subject to every block lying in its cone.
#[derive(Clone, Debug)]
pub struct ConeProblem {
    pub dim: usize,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub blocks: Vec<ConeBlock>,
}

impl ConeProblem {
    pub fn new(dim: usize, objective: &LinearForm) -> Self {
        let mut c = vec![0.0; dim];
        for &(i, v) in &objective.terms {
            c[i] += v;
        }
        ConeProblem {
            dim,
            objective: c,
            objective_constant: objective.constant,
            blocks: Vec::new(),
        }
    }

    /// Adds `Σ squares² <= bound`.
    pub fn push_quadratic(
        &mut self,
        squares: &[LinearForm],
        bound: &LinearForm,
        tag: Option<ConstraintTag>,
    ) {
        let block = if squares.is_empty() {
            ConeBlock {
                kind: BlockKind::Nonnegative,
                rows: vec![bound.clone()],
                arity: 0,
                bound: bound.clone(),
                tag,
            }
        } else if bound.is_constant() && bound.constant >= 0.0 {
            let mut rows = vec![LinearForm::constant(bound.constant.sqrt())];
            rows.extend(squares.iter().cloned());
            ConeBlock {
                kind: BlockKind::SecondOrder,
                rows,
                arity: squares.len(),
                bound: bound.clone(),
                tag,
            }
        } else {
            let mut rows = vec![
                bound.plus(&LinearForm::constant(1.0)),
                bound.plus(&LinearForm::constant(-1.0)),
            ];
            rows.extend(squares.iter().map(|l| l.scaled(2.0)));
            ConeBlock {
                kind: BlockKind::SecondOrder,
                rows,
                arity: squares.len(),
                bound: bound.clone(),
                tag,
            }
        };
        self.blocks.push(block);
    }

    pub fn push_nonnegative(&mut self, row: LinearForm) {
        self.push_quadratic(&[], &row, None);
    }

    pub fn count(&self, kind: BlockKind) -> usize {
        self.blocks.iter().filter(|b| b.kind == kind).count()
    }

    /// Largest violation of any block's cone membership at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let v: Vec<f64> = b.rows.iter().map(|r| r.eval(z)).collect();
                match b.kind {
                    BlockKind::Nonnegative => (-v[0]).max(0.0),
                    BlockKind::SecondOrder => (norm(&v[1..]) - v[0]).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Lifts a convex restriction to cone form.
pub fn lift(sub: &ConvexSubproblem) -> ConeProblem {
    let mut cone = ConeProblem::new(sub.dim(), &sub.objective);
    for c in &sub.constraints {
        cone.push_quadratic(&c.squares, &c.bound, Some(c.tag));
    }
    cone
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Diagonal added to the normal equations.
    pub regularization: f64,
    /// Record one [`IterationLog`] per iteration.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iterations: 200,
            step_fraction: 0.99,
            regularization: 1e-12,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(
                "solver tolerance must be positive".into(),
            ));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "step fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.regularization >= 0.0) {
            return Err(Error::InvalidConfig(
                "regularization must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Primal and dual objectives in maximization form.
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub sigma: f64,
    pub step_affine: f64,
    pub step: f64,
}

pub fn trace_csv(rows: &[IterationLog]) -> String {
    let mut out = String::from("iteration,primal_objective,dual_objective,gap,primal_residual,dual_residual,sigma,step_affine,step\n");
    for r in rows {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.iteration,
            r.primal_objective,
            r.dual_objective,
            r.gap,
            r.primal_residual,
            r.dual_residual,
            r.sigma,
            r.step_affine,
            r.step
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// Objective at `primal`, maximization form.
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<IterationLog>,
}

/// Cone layout of the stacked slack vector.
#[derive(Clone, Copy, Debug)]
struct Cone {
    offset: usize,
    len: usize,
    soc: bool,
}

impl Cone {
    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Row-compressed `A` and `h` with `s = h + A x`.
struct Rows {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
    h: Vec<f64>,
}

impl Rows {
    fn m(&self) -> usize {
        self.h.len()
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.start[r]..self.start[r + 1];
        self.idx[span.clone()]
            .iter()
            .copied()
            .zip(self.val[span].iter().copied())
    }

    /// `A x`
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|r| self.row(r).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `Aᵀ y`
    fn mul_t(&self, y: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (j, a) in self.row(r) {
                    out[j] += a * yr;
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `u0² - ‖ū‖²`, factored to limit cancellation.
fn soc_det(u: &[f64]) -> f64 {
    let r = norm(&u[1..]);
    (u[0] - r) * (u[0] + r)
}

/// Smallest eigenvalue with respect to the cone's Jordan algebra.
fn min_eig(u: &[f64], soc: bool) -> f64 {
    if soc {
        u[0] - norm(&u[1..])
    } else {
        u[0]
    }
}

/// Jordan product `u ∘ v`.
fn circ(u: &[f64], v: &[f64], soc: bool, out: &mut [f64]) {
    if soc {
        out[0] = dot(u, v);
        for k in 1..u.len() {
            out[k] = u[0] * v[k] + v[0] * u[k];
        }
    } else {
        out[0] = u[0] * v[0];
    }
}

/// Solves `lambda ∘ v = d` for `v`.
fn inv_circ(lambda: &[f64], d: &[f64], soc: bool, out: &mut [f64]) {
    if soc {
        let det = soc_det(lambda);
        let v0 = (lambda[0] * d[0] - dot(&lambda[1..], &d[1..])) / det;
        out[0] = v0;
        for k in 1..lambda.len() {
            out[k] = (d[k] - v0 * lambda[k]) / lambda[0];
        }
    } else {
        out[0] = d[0] / lambda[0];
    }
}

/// Largest `α` with `lambda + α d` in the cone, or `+∞`.
fn max_step(lambda: &[f64], d: &[f64], soc: bool) -> f64 {
    if !soc {
        return if d[0] < 0.0 {
            -lambda[0] / d[0]
        } else {
            f64::INFINITY
        };
    }
    let lnorm = soc_det(lambda).sqrt();
    let ln: Vec<f64> = lambda.iter().map(|v| v / lnorm).collect();
    let t = ln[0] * d[0] - dot(&ln[1..], &d[1..]);
    let rho0 = t / lnorm;
    let factor = (t + d[0]) / (ln[0] + 1.0);
    let rho_bar: f64 = (1..d.len())
        .map(|k| ((d[k] - factor * ln[k]) / lnorm).powi(2))
        .sum::<f64>()
        .sqrt();
    let worst = rho_bar - rho0;
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

/// Nesterov–Todd scaling `W` with `W z = W⁻¹ s = λ`. For a second-order cone
/// `W = η (2 w̄ w̄ᵀ - J)^{1/2}` with `w̄ᵀ J w̄ = 1`; for a nonnegative row
/// `W = η = √(s/z)`.
struct Scaling {
    eta: Vec<f64>,
    wbar: Vec<f64>,
}

impl Scaling {
    fn compute(cones: &[Cone], s: &[f64], z: &[f64]) -> Option<Scaling> {
        let mut eta = Vec::with_capacity(cones.len());
        let mut wbar = vec![0.0; s.len()];
        for c in cones {
            let (sk, zk) = (&s[c.range()], &z[c.range()]);
            if c.soc {
                let (sd, zd) = (soc_det(sk), soc_det(zk));
                if !(sd > 0.0 && zd > 0.0 && sk[0] > 0.0 && zk[0] > 0.0) {
                    return None;
                }
                let (sn, zn) = (sd.sqrt(), zd.sqrt());
                let sbar: Vec<f64> = sk.iter().map(|v| v / sn).collect();
                let zbar: Vec<f64> = zk.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                let w = &mut wbar[c.range()];
                for k in 1..c.len {
                    w[k] = (sbar[k] - zbar[k]) / (2.0 * gamma);
                }
                w[0] = (1.0 + dot(&w[1..], &w[1..])).sqrt();
                eta.push((sn / zn).sqrt());
            } else {
                if !(sk[0] > 0.0 && zk[0] > 0.0) {
                    return None;
                }
                eta.push((sk[0] / zk[0]).sqrt());
            }
        }
        Some(Scaling { eta, wbar })
    }

    /// `out = W v` (`inverse` selects `W⁻¹`) on cone `k`.
    fn apply(&self, k: usize, c: &Cone, v: &[f64], out: &mut [f64], inverse: bool) {
        let eta = if inverse {
            1.0 / self.eta[k]
        } else {
            self.eta[k]
        };
        if !c.soc {
            out[0] = eta * v[0];
            return;
        }
        let w = &self.wbar[c.range()];
        let sign = if inverse { -1.0 } else { 1.0 };
        let wv = sign * dot(&w[1..], &v[1..]);
        out[0] = eta * (w[0] * v[0] + wv);
        let coef = v[0] + wv / (1.0 + w[0]);
        for i in 1..c.len {
            out[i] = eta * (v[i] + sign * coef * w[i]);
        }
    }

    /// `out = W² v` or `W⁻² v`.
    fn apply_sq(&self, k: usize, c: &Cone, v: &[f64], out: &mut [f64], inverse: bool) {
        let e2 = if inverse {
            1.0 / (self.eta[k] * self.eta[k])
        } else {
            self.eta[k] * self.eta[k]
        };
        if !c.soc {
            out[0] = e2 * v[0];
            return;
        }
        // W² = η² (2 w̄ w̄ᵀ - J); W⁻² = η⁻² (2 J w̄ w̄ᵀ J - J).
        let w = &self.wbar[c.range()];
        let sign = if inverse { -1.0 } else { 1.0 };
        let q0 = w[0];
        let wv = q0 * v[0] + sign * dot(&w[1..], &v[1..]);
        out[0] = e2 * (2.0 * q0 * wv - v[0]);
        for i in 1..c.len {
            out[i] = e2 * (2.0 * sign * w[i] * wv + v[i]);
        }
    }

    fn map(&self, cones: &[Cone], v: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (k, c) in cones.iter().enumerate() {
            self.apply(k, c, &v[c.range()], &mut out[c.range()], inverse);
        }
        out
    }

    fn map_sq(&self, cones: &[Cone], v: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (k, c) in cones.iter().enumerate() {
            self.apply_sq(k, c, &v[c.range()], &mut out[c.range()], inverse);
        }
        out
    }
}

struct Workspace<'a> {
    rows: Rows,
    cones: Vec<Cone>,
    /// Variables referenced by each cone, sorted.
    cone_vars: Vec<Vec<usize>>,
    c: Vec<f64>,
    objective_constant: f64,
    dim: usize,
    cfg: &'a SolverConfig,
}

/// Refinement converges slowly once the normal matrix is badly conditioned
/// near the optimum, but each pass costs only two triangular solves.
const MAX_REFINEMENT: usize = 30;

struct Factored {
    chol: Cholesky<f64, Dyn>,
}

impl<'a> Workspace<'a> {
    fn new(problem: &ConeProblem, cfg: &'a SolverConfig) -> Self {
        let mut start = vec![0];
        let (mut idx, mut val, mut h) = (Vec::new(), Vec::new(), Vec::new());
        let mut cones = Vec::with_capacity(problem.blocks.len());
        let mut cone_vars = Vec::with_capacity(problem.blocks.len());
        for block in &problem.blocks {
            let offset = h.len();
            let mut vars = Vec::new();
            for row in &block.rows {
                let merged = row.plus(&LinearForm::default());
                for &(j, a) in &merged.terms {
                    if a != 0.0 {
                        idx.push(j);
                        val.push(a);
                        vars.push(j);
                    }
                }
                h.push(row.constant);
                start.push(idx.len());
            }
            vars.sort_unstable();
            vars.dedup();
            cone_vars.push(vars);
            cones.push(Cone {
                offset,
                len: block.rows.len(),
                soc: block.kind == BlockKind::SecondOrder,
            });
        }
        // Internally minimize -objective.
        let c = problem.objective.iter().map(|v| -v).collect();
        Workspace {
            rows: Rows { start, idx, val, h },
            cones,
            cone_vars,
            c,
            objective_constant: problem.objective_constant,
            dim: problem.dim,
            cfg,
        }
    }

    /// Factors `Aᵀ W⁻² A + δI`; `scaling = None` means `W = I`.
    fn factor(&self, scaling: Option<&Scaling>) -> Option<Factored> {
        let n = self.dim;
        let mut hmat = DMatrix::<f64>::zeros(n, n);
        let mut local = Vec::new();
        let mut weight = Vec::new();
        for (k, cone) in self.cones.iter().enumerate() {
            let vars = &self.cone_vars[k];
            let nv = vars.len();
            // Dense local block of A: len × nv.
            local.clear();
            local.resize(cone.len * nv, 0.0);
            for r in 0..cone.len {
                for (j, a) in self.rows.row(cone.offset + r) {
                    let col = vars.binary_search(&j).unwrap();
                    local[r * nv + col] += a;
                }
            }
            // Local W⁻² (len × len), column by column.
            weight.clear();
            weight.resize(cone.len * cone.len, 0.0);
            let mut unit = vec![0.0; cone.len];
            let mut col = vec![0.0; cone.len];
            for j in 0..cone.len {
                unit.iter_mut().for_each(|v| *v = 0.0);
                unit[j] = 1.0;
                match scaling {
                    Some(sc) => sc.apply_sq(k, cone, &unit, &mut col, true),
                    None => col.copy_from_slice(&unit),
                }
                for i in 0..cone.len {
                    weight[i * cone.len + j] = col[i];
                }
            }
            for a in 0..nv {
                for b in a..nv {
                    let mut acc = 0.0;
                    for i in 0..cone.len {
                        let li = local[i * nv + a];
                        if li == 0.0 {
                            continue;
                        }
                        for j in 0..cone.len {
                            acc += li * weight[i * cone.len + j] * local[j * nv + b];
                        }
                    }
                    hmat[(vars[a], vars[b])] += acc;
                    if a != b {
                        hmat[(vars[b], vars[a])] += acc;
                    }
                }
            }
        }
        let mut delta = self.cfg.regularization;
        let scale = (0..n).map(|i| hmat[(i, i)]).fold(0.0, f64::max).max(1.0);
        for _ in 0..8 {
            let mut shifted = hmat.clone();
            for i in 0..n {
                shifted[(i, i)] += delta;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Some(Factored { chol });
            }
            delta = (delta * 100.0).max(1e-14 * scale);
        }
        None
    }

    /// Solves `Aᵀ Δz = bx`, `-A Δx - W² Δz = bz` with iterative refinement.
    fn solve_reduced(
        &self,
        f: &Factored,
        scaling: Option<&Scaling>,
        bx: &[f64],
        bz: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let once = |bx: &[f64], bz: &[f64]| {
            let w2inv_bz = match scaling {
                Some(sc) => sc.map_sq(&self.cones, bz, true),
                None => bz.to_vec(),
            };
            let at = self.rows.mul_t(&w2inv_bz, self.dim);
            let rhs = DVector::from_iterator(self.dim, bx.iter().zip(&at).map(|(a, b)| -a - b));
            let dx = f.chol.solve(&rhs);
            let dx: Vec<f64> = dx.iter().copied().collect();
            let adx = self.rows.mul(&dx);
            let t: Vec<f64> = adx.iter().zip(bz).map(|(a, b)| a + b).collect();
            let dz: Vec<f64> = match scaling {
                Some(sc) => sc.map_sq(&self.cones, &t, true),
                None => t,
            }
            .into_iter()
            .map(|v| -v)
            .collect();
            (dx, dz)
        };
        let residual = |dx: &[f64], dz: &[f64]| {
            let atdz = self.rows.mul_t(dz, self.dim);
            let ex: Vec<f64> = bx.iter().zip(&atdz).map(|(b, a)| b - a).collect();
            let adx = self.rows.mul(dx);
            let w2dz = match scaling {
                Some(sc) => sc.map_sq(&self.cones, dz, false),
                None => dz.to_vec(),
            };
            let ez: Vec<f64> = (0..bz.len()).map(|i| bz[i] + adx[i] + w2dz[i]).collect();
            (ex, ez)
        };
        let (mut dx, mut dz) = once(bx, bz);
        let (mut ex, mut ez) = residual(&dx, &dz);
        let mut err = inf_norm(&ex);
        let floor = 1e-15 * (1.0 + inf_norm(bx));
        for _ in 0..MAX_REFINEMENT {
            if err <= floor {
                break;
            }
            let (cx, cz) = once(&ex, &ez);
            let tx: Vec<f64> = dx.iter().zip(&cx).map(|(a, b)| a + b).collect();
            let tz: Vec<f64> = dz.iter().zip(&cz).map(|(a, b)| a + b).collect();
            let (nx, nz) = residual(&tx, &tz);
            let next = inf_norm(&nx);
            if next >= err {
                break;
            }
            dx = tx;
            dz = tz;
            ex = nx;
            ez = nz;
            err = next;
        }
        (dx, dz)
    }

    /// Shifts `u` into the interior of the cone product if needed.
    fn push_interior(&self, u: &mut [f64]) {
        let worst = self
            .cones
            .iter()
            .map(|c| -min_eig(&u[c.range()], c.soc))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= -1e-8 {
            let shift = 1.0 + worst.max(0.0);
            for c in &self.cones {
                u[c.offset] += shift;
            }
        }
    }

    fn initial_point(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let f = self.factor(None)?;
        let m = self.rows.m();
        // x = argmin ‖h + A x‖, z = argmin ‖z‖ s.t. Aᵀz = c.
        let neg_h: Vec<f64> = self.rows.h.iter().map(|v| -v).collect();
        let (x, _) = self.solve_reduced(&f, None, &vec![0.0; self.dim], &neg_h);
        let ax = self.rows.mul(&x);
        let mut s: Vec<f64> = (0..m).map(|i| self.rows.h[i] + ax[i]).collect();
        let (_, zneg) = self.solve_reduced(&f, None, &self.c, &vec![0.0; m]);
        let mut z = zneg;
        self.push_interior(&mut s);
        self.push_interior(&mut z);
        Some((x, s, z))
    }
}

/// Solves a lifted restriction. `warm_start`, when given, replaces the
/// least-squares primal initial point.
pub fn solve(
    problem: &ConeProblem,
    cfg: &SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<SolverResult> {
    cfg.validate()?;
    if let Some(w) = warm_start {
        if w.len() != problem.dim {
            return Err(Error::DimensionMismatch {
                expected: problem.dim,
                got: w.len(),
            });
        }
    }
    let ws = Workspace::new(problem, cfg);
    Ok(ws.run(warm_start))
}

impl Workspace<'_> {
    fn run(&self, warm_start: Option<&[f64]>) -> SolverResult {
        let m = self.rows.m();
        let degree = self.cones.len() as f64;
        let failure = |status| SolverResult {
            status,
            primal: vec![0.0; self.dim],
            objective: f64::NAN,
            dual_objective: f64::NAN,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            gap: f64::INFINITY,
            iterations: 0,
            trace: Vec::new(),
        };
        let Some((mut x, mut s, mut z)) = self.initial_point() else {
            return failure(SolveStatus::NumericalFailure);
        };
        if let Some(w) = warm_start {
            x = w.to_vec();
            let ax = self.rows.mul(&x);
            s = (0..m).map(|i| self.rows.h[i] + ax[i]).collect();
            self.push_interior(&mut s);
        }

        let mut trace = Vec::new();
        let mut best: Option<(f64, SolverResult)> = None;
        let mut status = SolveStatus::IterationLimit;
        let mut iterations = 0;

        for iter in 0..=self.cfg.max_iterations {
            iterations = iter;
            let atz = self.rows.mul_t(&z, self.dim);
            let rx: Vec<f64> = (0..self.dim).map(|j| self.c[j] - atz[j]).collect();
            let ax = self.rows.mul(&x);
            let rz: Vec<f64> = (0..m).map(|i| s[i] - self.rows.h[i] - ax[i]).collect();
            let gap = dot(&s, &z);
            let pcost = dot(&self.c, &x);
            let dcost = -dot(&self.rows.h, &z);
            let (pres, dres) = (inf_norm(&rz), inf_norm(&rx));
            // cᵀx + hᵀz = sᵀz + rxᵀx - zᵀrz, so weak duality holds up to
            // the residual terms.
            debug_assert!(
                pcost - dcost
                    >= -(dot(&rx, &x).abs() + dot(&z, &rz).abs()) - 1e-9 * (1.0 + pcost.abs()),
                "weak duality violated: {pcost} < {dcost}"
            );

            let merit = pres.max(dres).max(gap);
            let snapshot = |status| SolverResult {
                status,
                primal: x.clone(),
                objective: -pcost + self.objective_constant(),
                dual_objective: -dcost + self.objective_constant(),
                primal_residual: pres,
                dual_residual: dres,
                gap,
                iterations: iter,
                trace: Vec::new(),
            };
            if best.as_ref().is_none_or(|(b, _)| merit < *b) {
                best = Some((merit, snapshot(SolveStatus::IterationLimit)));
            }
            if pres <= self.cfg.tol && dres <= self.cfg.tol && gap <= self.cfg.tol {
                status = SolveStatus::Optimal;
                best = Some((merit, snapshot(SolveStatus::Optimal)));
                break;
            }
            if iter == self.cfg.max_iterations {
                break;
            }

            let Some(scaling) = Scaling::compute(&self.cones, &s, &z) else {
                status = SolveStatus::NumericalFailure;
                break;
            };
            let Some(fact) = self.factor(Some(&scaling)) else {
                status = SolveStatus::NumericalFailure;
                break;
            };
            let lambda = scaling.map(&self.cones, &z, false);
            let mut lam_sq = vec![0.0; m];
            for c in &self.cones {
                let r = c.range();
                circ(
                    &lambda[r.clone()],
                    &lambda[r.clone()],
                    c.soc,
                    &mut lam_sq[r],
                );
            }
            let mu = gap / degree;

            // Newton direction for complementarity right-hand side `ds`,
            // residuals scaled by `keep`.
            let direction = |ds: &[f64], keep: f64| {
                let mut v = vec![0.0; m];
                for c in &self.cones {
                    let r = c.range();
                    inv_circ(&lambda[r.clone()], &ds[r.clone()], c.soc, &mut v[r]);
                }
                let wv = scaling.map(&self.cones, &v, false);
                let bx: Vec<f64> = rx.iter().map(|r| keep * r).collect();
                let bz: Vec<f64> = (0..m).map(|i| -keep * rz[i] - wv[i]).collect();
                let (dx, dz) = self.solve_reduced(&fact, Some(&scaling), &bx, &bz);
                // Δs = AΔx - rz keeps the primal residual consistent; going
                // through W⁻¹Δs = v - WΔz loses accuracy near the boundary.
                let wdz = scaling.map(&self.cones, &dz, false);
                let adx = self.rows.mul(&dx);
                let ds_full: Vec<f64> = (0..m).map(|i| adx[i] - keep * rz[i]).collect();
                let ds_scaled = scaling.map(&self.cones, &ds_full, true);
                (dx, ds_full, dz, ds_scaled, wdz)
            };
            // Ratio test on the vectors actually updated; the scaled test is
            // equivalent in exact arithmetic but W is badly conditioned late.
            let step_to_boundary = |ds: &[f64], dz: &[f64]| {
                self.cones
                    .iter()
                    .map(|c| {
                        let r = c.range();
                        max_step(&s[r.clone()], &ds[r.clone()], c.soc).min(max_step(
                            &z[r.clone()],
                            &dz[r],
                            c.soc,
                        ))
                    })
                    .fold(f64::INFINITY, f64::min)
            };

            // Predictor.
            let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let (_, dsa, dza, dsa_scaled, dza_scaled) = direction(&ds_aff, 1.0);
            let alpha_aff = step_to_boundary(&dsa, &dza).min(1.0);
            let gap_aff: f64 = (0..m)
                .map(|i| (s[i] + alpha_aff * dsa[i]) * (z[i] + alpha_aff * dza[i]))
                .sum();
            let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

            // Combined predictor-corrector.
            let mut ds_cc = vec![0.0; m];
            let mut corr = vec![0.0; m];
            for c in &self.cones {
                let r = c.range();
                circ(
                    &dsa_scaled[r.clone()],
                    &dza_scaled[r.clone()],
                    c.soc,
                    &mut corr[r],
                );
            }
            for c in &self.cones {
                for i in c.range() {
                    ds_cc[i] = -lam_sq[i] - corr[i];
                }
                ds_cc[c.offset] += sigma * mu;
            }
            let (dx, ds, dz, _, _) = direction(&ds_cc, 1.0 - sigma);
            let alpha_max = step_to_boundary(&ds, &dz);
            let alpha = (self.cfg.step_fraction * alpha_max).min(1.0);

            if self.cfg.trace {
                let log = IterationLog {
                    iteration: iter,
                    primal_objective: -pcost + self.objective_constant(),
                    dual_objective: -dcost + self.objective_constant(),
                    gap,
                    primal_residual: pres,
                    dual_residual: dres,
                    sigma,
                    step_affine: alpha_aff,
                    step: alpha,
                };
                log::trace!(
                    "ipm,{},{:e},{:e},{:e},{:e},{:e},{:e}",
                    iter,
                    log.primal_objective,
                    log.dual_objective,
                    gap,
                    pres,
                    dres,
                    alpha
                );
                trace.push(log);
            }
            if !(alpha > 1e-12) || dx.iter().chain(&dz).any(|v| !v.is_finite()) {
                status = SolveStatus::NumericalFailure;
                break;
            }
            for j in 0..self.dim {
                x[j] += alpha * dx[j];
            }
            for i in 0..m {
                s[i] += alpha * ds[i];
                z[i] += alpha * dz[i];
            }
        }

        let (_, mut result) = best.expect("at least one iterate");
        if status != SolveStatus::Optimal {
            result.status = status;
        }
        result.iterations = iterations;
        result.trace = trace;
        result
    }

    fn objective_constant(&self) -> f64 {
        self.objective_constant
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build_program, polygon_to_vector};
    use crate::geometry::build_pendant_polygon;

    fn disc(cx: f64, cy: f64, r: f64) -> (Vec<LinearForm>, LinearForm) {
        (
            vec![
                LinearForm::new(vec![(0, 1.0)], -cx),
                LinearForm::new(vec![(1, 1.0)], -cy),
            ],
            LinearForm::constant(r * r),
        )
    }

    fn maximize(
        objective: LinearForm,
        dim: usize,
        cons: &[(Vec<LinearForm>, LinearForm)],
    ) -> SolverResult {
        let mut p = ConeProblem::new(dim, &objective);
        for (sq, b) in cons {
            p.push_quadratic(sq, b, None);
        }
        solve(&p, &SolverConfig::default(), None).unwrap()
    }

    #[test]
    fn unit_disc_optima() {
        let r = maximize(LinearForm::var(0), 2, &[disc(0.0, 0.0, 1.0)]);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-9);
        assert!((r.primal[0] - 1.0).abs() < 1e-6 && r.primal[1].abs() < 1e-4);

        let r = maximize(
            LinearForm::new(vec![(0, 1.0), (1, 1.0)], 0.0),
            2,
            &[disc(0.0, 0.0, 1.0)],
        );
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn jordan_inverse_and_scaling_identities() {
        let s = [2.0, 0.3, -0.7, 0.5];
        let z = [1.5, -0.2, 0.4, 0.9];
        let cone = Cone {
            offset: 0,
            len: 4,
            soc: true,
        };
        let sc = Scaling::compute(&[cone], &s, &z).unwrap();
        let mut wz = [0.0; 4];
        let mut winv_s = [0.0; 4];
        sc.apply(0, &cone, &z, &mut wz, false);
        sc.apply(0, &cone, &s, &mut winv_s, true);
        for k in 0..4 {
            assert!((wz[k] - winv_s[k]).abs() < 1e-12, "{wz:?} vs {winv_s:?}");
        }
        let mut back = [0.0; 4];
        let mut w2 = [0.0; 4];
        sc.apply(0, &cone, &wz, &mut back, true);
        sc.apply_sq(0, &cone, &z, &mut w2, false);
        for k in 0..4 {
            assert!((back[k] - z[k]).abs() < 1e-12);
            assert!((w2[k] - s[k]).abs() < 1e-12);
        }
        let mut prod = [0.0; 4];
        let mut v = [0.0; 4];
        circ(&s, &z, true, &mut prod);
        inv_circ(&s, &prod, true, &mut v);
        for k in 0..4 {
            assert!((v[k] - z[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn max_step_matches_bisection() {
        let cases: [(&[f64], &[f64]); 4] = [
            (&[1.0, 0.2, 0.1], &[-1.0, 0.5, 0.3]),
            (&[2.0, 1.9, 0.0], &[0.0, 1.0, 1.0]),
            (&[1.0, 0.0, 0.0], &[0.1, 0.05, 0.0]),
            (&[3.0, -1.0, 2.0, 0.5], &[-0.5, -2.0, 1.0, 1.0]),
        ];
        for (u, d) in cases {
            let alpha = max_step(u, d, true);
            let inside = |a: f64| {
                let p: Vec<f64> = u.iter().zip(d).map(|(x, y)| x + a * y).collect();
                p[0] >= norm(&p[1..])
            };
            if alpha.is_finite() {
                assert!(inside(alpha * (1.0 - 1e-9)));
                assert!(!inside(alpha * (1.0 + 1e-6)));
            } else {
                assert!(inside(1e6));
            }
        }
    }

    #[test]
    fn lifted_block_counts_for_hexagon_restriction() {
        let prog = build_program(6).unwrap();
        let c = polygon_to_vector(&build_pendant_polygon(6).unwrap()).unwrap();
        let cone = lift(&prog.build_restriction(&c).unwrap());
        assert_eq!(cone.count(BlockKind::SecondOrder), 19);
        assert_eq!(cone.count(BlockKind::Nonnegative), 9);
        for b in &cone.blocks {
            match b.tag.unwrap() {
                ConstraintTag::Radius { .. } | ConstraintTag::Distance { .. } => {
                    assert_eq!(b.arity, 2);
                    assert_eq!(b.rows.len(), 3);
                    assert_eq!(b.rows[0], LinearForm::constant(1.0));
                }
                ConstraintTag::TriangleArea { .. } => {
                    assert_eq!(b.arity, 2);
                    assert_eq!(b.rows.len(), 4);
                    assert!(!b.bound.is_constant());
                }
                _ => assert_eq!(b.kind, BlockKind::Nonnegative),
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            step_fraction: 1.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
