//! Sequential convex optimization (the concave-convex procedure).
//!
//! Starting from a feasible point, each outer iteration linearizes the convex
//! parts `g_i` at the current iterate, maximizes the resulting convex
//! restriction and accepts its optimum. The restriction's feasible set lies
//! inside the original one and contains the current iterate, so every iterate
//! stays feasible and the area never decreases.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::conic::{self, SolveStatus, SolverConfig, SolverResult};
use crate::error::{Error, Result};
use crate::formulation::{
    build_program, polygon_to_vector, vector_to_polygon, DcProgram, DecisionLayout,
};
use crate::geometry::{self, Polygon, DEFAULT_TOL_FEAS};
use crate::verification::{self, StructureReport, TOL_INTERMEDIATE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepNorm {
    Euclidean,
    MaxAbs,
}

impl StepNorm {
    fn norm(self, v: impl Iterator<Item = f64>) -> f64 {
        match self {
            StepNorm::Euclidean => v.map(|x| x * x).sum::<f64>().sqrt(),
            StepNorm::MaxAbs => v.fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// `‖z_new - z_old‖ / ‖z_new‖`
    pub fn relative_step(self, old: &[f64], new: &[f64]) -> f64 {
        let diff = self.norm(old.iter().zip(new).map(|(a, b)| b - a));
        diff / self.norm(new.iter().copied())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CcpConfig {
    /// Stop once the relative step falls to or below this value.
    pub epsilon: f64,
    pub max_outer_iterations: usize,
    pub solver: SolverConfig,
    pub record_trace: bool,
    pub norm: StepNorm,
    /// Start each subproblem from the previous iterate instead of the
    /// least-squares point.
    pub warm_start: bool,
}

impl Default for CcpConfig {
    fn default() -> Self {
        CcpConfig {
            epsilon: 1e-5,
            max_outer_iterations: 1000,
            solver: SolverConfig::default(),
            record_trace: false,
            norm: StepNorm::Euclidean,
            warm_start: false,
        }
    }
}

impl CcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_outer_iterations < 1 {
            return Err(Error::InvalidConfig(
                "max_outer_iterations must be at least 1".into(),
            ));
        }
        self.solver.validate()?;
        if self.solver.tol > self.epsilon / 100.0 {
            return Err(Error::InvalidConfig(format!(
                "solver tolerance {:e} must not exceed epsilon / 100 = {:e}",
                self.solver.tol,
                self.epsilon / 100.0
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateRecord {
    pub k: usize,
    pub z: Vec<f64>,
    /// Area of the iterate polygon.
    pub area: f64,
    /// Subproblem objective `Σ u_i` (the initial point uses exact areas).
    pub objective: f64,
    /// `None` for the initial point.
    pub rel_step: Option<f64>,
    pub solver_iterations: usize,
    pub solver_status: Option<SolveStatus>,
    /// Largest constraint violation of the iterate in the original program.
    pub max_residual: f64,
    pub structure: Option<StructureReport>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CcpTrace {
    pub iterates: Vec<IterateRecord>,
}

impl CcpTrace {
    pub fn areas(&self) -> Vec<f64> {
        self.iterates.iter().map(|r| r.area).collect()
    }

    /// CSV with columns `k, area, rel_step, solver_iterations, max_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,area,rel_step,solver_iterations,max_residual\n");
        for r in &self.iterates {
            let rel = r.rel_step.map(crate::fmt::fmt_g17).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                crate::fmt::fmt_g17(r.area),
                rel,
                r.solver_iterations,
                crate::fmt::fmt_g17(r.max_residual)
            )
            .unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CcpStatus {
    Converged,
    OuterLimit,
    SubproblemFailure(SolveStatus),
}

#[derive(Clone, Debug)]
pub struct CcpResult {
    pub n: usize,
    pub polygon: Polygon,
    /// Final decision vector, `u` components as returned by the last solve.
    pub z: Vec<f64>,
    pub area: f64,
    /// Number of subproblems solved.
    pub iterations: usize,
    pub status: CcpStatus,
    pub last_rel_step: f64,
    pub trace: Option<CcpTrace>,
    /// Breaches of the ascent, feasibility or upper-bound properties.
    pub property_violations: Vec<String>,
}

impl CcpResult {
    pub fn is_converged(&self) -> bool {
        self.status == CcpStatus::Converged
    }

    /// Converts a non-converged outcome into the matching error.
    pub fn into_converged(self) -> Result<Self> {
        match self.status {
            CcpStatus::Converged => Ok(self),
            CcpStatus::OuterLimit => Err(Error::OuterLimit(self.iterations)),
            CcpStatus::SubproblemFailure(status) => Err(Error::SubproblemFailure {
                status,
                iteration: self.iterations,
            }),
        }
    }
}

/// One outer iteration: the optimum of the restriction built at `z`.
pub fn step(prog: &DcProgram, z: &[f64], cfg: &CcpConfig) -> Result<(Vec<f64>, SolverResult)> {
    let result = solve_restriction(prog, z, cfg)?;
    if result.status != SolveStatus::Optimal {
        return Err(Error::SubproblemFailure {
            status: result.status,
            iteration: 1,
        });
    }
    Ok((result.primal.clone(), result))
}

fn solve_restriction(prog: &DcProgram, z: &[f64], cfg: &CcpConfig) -> Result<SolverResult> {
    let sub = prog.build_restriction(z)?;
    let cone = conic::lift(&sub);
    let warm = cfg.warm_start.then_some(z);
    conic::solve(&cone, &cfg.solver, warm)
}

fn max_violation(prog: &DcProgram, z: &[f64]) -> Result<f64> {
    Ok((-prog.evaluate(z)?.min_residual().1).max(0.0))
}

fn structure_of(polygon: &Polygon, tol: f64) -> Option<StructureReport> {
    let n = polygon.n();
    if !n.is_multiple_of(2) || n < 6 {
        return None;
    }
    verification::structure_report(polygon, tol).ok()
}

/// Runs the outer loop for an n-gon, from `initial` or from `R⁺_{n-1}`.
pub fn maximize_area(n: usize, cfg: &CcpConfig, initial: Option<&Polygon>) -> Result<CcpResult> {
    cfg.validate()?;
    let prog = build_program(n)?;
    let layout: DecisionLayout = prog.layout;
    let start = match initial {
        Some(p) => {
            if p.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.n(),
                });
            }
            p.clone()
        }
        None => geometry::build_pendant_polygon(n)?,
    };
    let mut z = polygon_to_vector(&start)?;
    let (worst, residual) = prog.evaluate(&z)?.min_residual();
    if residual < -DEFAULT_TOL_FEAS {
        return Err(Error::InfeasibleInitial {
            constraint: worst,
            violation: -residual,
        });
    }

    let slack = 10.0 * cfg.solver.tol;
    let upper = geometry::upper_bound(n);
    let mut violations = Vec::new();
    let mut trace = cfg.record_trace.then(CcpTrace::default);
    let mut area = geometry::area(&start);
    if let Some(t) = trace.as_mut() {
        t.iterates.push(IterateRecord {
            k: 0,
            z: z.clone(),
            area,
            objective: prog.objective_value(&z),
            rel_step: None,
            solver_iterations: 0,
            solver_status: None,
            max_residual: max_violation(&prog, &z)?,
            structure: structure_of(&start, TOL_INTERMEDIATE),
        });
    }

    let mut k = 0;
    let mut rel_step = f64::INFINITY;
    let status = loop {
        if k >= cfg.max_outer_iterations {
            break CcpStatus::OuterLimit;
        }
        let result = solve_restriction(&prog, &z, cfg)?;
        k += 1;
        if result.status != SolveStatus::Optimal {
            log::warn!("n={n}: subproblem {k} ended with {:?}", result.status);
            break CcpStatus::SubproblemFailure(result.status);
        }
        let next = result.primal.clone();
        rel_step = cfg.norm.relative_step(&z, &next);
        let polygon = vector_to_polygon(&layout, &next)?;
        let next_area = geometry::area(&polygon);
        let violation = max_violation(&prog, &next)?;
        if next_area < area - slack {
            violations.push(format!("k={k}: area decreased from {area} to {next_area}"));
        }
        if violation > slack {
            violations.push(format!("k={k}: constraint violated by {violation:e}"));
        }
        if next_area >= upper {
            violations.push(format!(
                "k={k}: area {next_area} reaches the upper bound {upper}"
            ));
        }
        log::debug!(
            "n={n} k={k} area={next_area:.10} rel_step={rel_step:e} ipm={}",
            result.iterations
        );
        if let Some(t) = trace.as_mut() {
            t.iterates.push(IterateRecord {
                k,
                z: next.clone(),
                area: next_area,
                objective: result.objective,
                rel_step: Some(rel_step),
                solver_iterations: result.iterations,
                solver_status: Some(result.status),
                max_residual: violation,
                structure: structure_of(&polygon, TOL_INTERMEDIATE),
            });
        }
        z = next;
        area = next_area;
        if rel_step <= cfg.epsilon {
            break CcpStatus::Converged;
        }
    };

    let polygon = vector_to_polygon(&layout, &z)?;
    Ok(CcpResult {
        n,
        area: geometry::area(&polygon),
        polygon,
        z,
        iterations: k,
        status,
        last_rel_step: rel_step,
        trace,
        property_violations: violations,
    })
}

#[derive(Debug)]
pub struct SweepEntry {
    pub n: usize,
    pub outcome: Result<CcpResult>,
}

/// Independent runs for each `n`, in input order. Failures stay per entry.
pub fn run_sweep(n_values: &[usize], cfg: &CcpConfig) -> Vec<SweepEntry> {
    n_values
        .iter()
        .map(|&n| SweepEntry {
            n,
            outcome: sweep_one(n, cfg),
        })
        .collect()
}

/// [`run_sweep`] over a pool of `jobs` threads (`0` picks the default).
pub fn run_sweep_parallel(n_values: &[usize], cfg: &CcpConfig, jobs: usize) -> Vec<SweepEntry> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
    let run = || {
        n_values
            .par_iter()
            .map(|&n| SweepEntry {
                n,
                outcome: sweep_one(n, cfg),
            })
            .collect()
    };
    match pool {
        Ok(pool) => pool.install(run),
        Err(_) => run_sweep(n_values, cfg),
    }
}

fn sweep_one(n: usize, cfg: &CcpConfig) -> Result<CcpResult> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddN(n));
    }
    if n < 6 {
        return Err(Error::TooSmallN { n, min: 6 });
    }
    maximize_area(n, cfg, None)?.into_converged()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_step_norms() {
        let a = [1.0, 2.0, 2.0];
        let b = [1.0, 2.0, 3.0];
        let e = StepNorm::Euclidean.relative_step(&a, &b);
        assert!((e - 1.0 / 14f64.sqrt()).abs() < 1e-15);
        let m = StepNorm::MaxAbs.relative_step(&a, &b);
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn config_coupling_is_enforced() {
        let mut cfg = CcpConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.solver.tol = 1e-6;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = CcpConfig {
            epsilon: 0.0,
            ..CcpConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn infeasible_initial_polygon_is_rejected() {
        let p = Polygon::from_coords(&[
            (0.0, 0.0),
            (0.6, 0.3),
            (0.4, 0.95),
            (0.0, 1.0),
            (-0.4, 0.95),
            (-0.6, 0.3),
        ])
        .unwrap();
        assert!(matches!(
            maximize_area(6, &CcpConfig::default(), Some(&p)),
            Err(Error::InfeasibleInitial { .. })
        ));
        let wrong_n = geometry::build_pendant_polygon(8).unwrap();
        assert!(matches!(
            maximize_area(6, &CcpConfig::default(), Some(&wrong_n)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sweep_isolates_bad_entries() {
        assert!(run_sweep(&[], &CcpConfig::default()).is_empty());
        let out = run_sweep(&[7, 4], &CcpConfig::default());
        assert!(matches!(out[0].outcome, Err(Error::OddN(7))));
        assert!(matches!(out[1].outcome, Err(Error::TooSmallN { .. })));
    }

    #[test]
    fn outer_limit_is_reported() {
        let cfg = CcpConfig {
            max_outer_iterations: 2,
            ..CcpConfig::default()
        };
        let r = maximize_area(8, &cfg, None).unwrap();
        assert_eq!(r.status, CcpStatus::OuterLimit);
        assert_eq!(r.iterations, 2);
        assert!(matches!(r.into_converged(), Err(Error::OuterLimit(2))));
    }
}
