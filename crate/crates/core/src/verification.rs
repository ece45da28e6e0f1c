//! Structural checks on candidate optimal polygons: the diameter graph is an
//! `(n-1)`-cycle plus a pendant edge, the polygon is symmetric about `x = 0`,
//! and the listed pairs of vertices are at unit distance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{diameter_graph, Polygon};

/// Default tolerance for final iterates.
pub const TOL_FINAL: f64 = 1e-6;
/// Default tolerance for intermediate iterates.
pub const TOL_INTERMEDIATE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleCheck {
    pub has_pendant_cycle: bool,
    /// Length of the cycle left after removing the pendant vertex, 0 if the
    /// graph does not have the expected degree pattern.
    pub cycle_length: usize,
    pub pendant_vertex: Option<usize>,
    pub edge_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryCheck {
    /// `max_i max(|x_{n-i} + x_i|, |y_{n-i} - y_i|)`.
    pub symmetry_defect: f64,
    /// `max(|x_{n/2}|, |y_{n/2} - 1|)`.
    pub apex_defect: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitEdgeDefect {
    pub pair: (usize, usize),
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitEqualityCheck {
    pub defects: Vec<UnitEdgeDefect>,
    pub max_defect: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub tol: f64,
    pub has_pendant_cycle: bool,
    pub cycle_length: usize,
    pub pendant_vertex: Option<usize>,
    pub symmetry_defect: f64,
    pub apex_defect: f64,
    pub unit_edge_defects: Vec<UnitEdgeDefect>,
    pub max_defect: f64,
    pub symmetric: bool,
    pub unit_equalities_hold: bool,
    pub passes: bool,
}

fn require_even(p: &Polygon) -> Result<usize> {
    let n = p.n();
    if !n.is_multiple_of(2) {
        return Err(Error::OddN(n));
    }
    if n < 6 {
        return Err(Error::TooSmallN { n, min: 6 });
    }
    Ok(n)
}

/// Checks that the diameter graph is a cycle through all vertices but one,
/// plus an edge from the remaining vertex to the cycle.
pub fn check_theorem2(p: &Polygon, tol: f64) -> Result<CycleCheck> {
    let g = diameter_graph(p, tol)?;
    let n = p.n();
    let degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let pendants: Vec<usize> = (0..n).filter(|&v| degrees[v] == 1).collect();
    let fail = |pendant| CycleCheck {
        has_pendant_cycle: false,
        cycle_length: 0,
        pendant_vertex: pendant,
        edge_count: g.edge_count(),
    };
    let [pendant] = pendants[..] else {
        return Ok(fail(None));
    };
    let hub = g.neighbors(pendant)[0];
    let pattern_ok = g.edge_count() == n
        && degrees[hub] == 3
        && (0..n).all(|v| v == pendant || v == hub || degrees[v] == 2);
    if !pattern_ok {
        return Ok(fail(Some(pendant)));
    }
    // Walk the cycle from the hub, never entering the pendant vertex.
    let mut prev = hub;
    let mut cur = g
        .neighbors(hub)
        .into_iter()
        .find(|&v| v != pendant)
        .unwrap();
    let mut length = 1;
    while cur != hub {
        let next = g
            .neighbors(cur)
            .into_iter()
            .find(|&v| v != prev && v != pendant);
        let Some(next) = next else {
            return Ok(fail(Some(pendant)));
        };
        prev = cur;
        cur = next;
        length += 1;
        if length > n {
            return Ok(fail(Some(pendant)));
        }
    }
    Ok(CycleCheck {
        has_pendant_cycle: length == n - 1,
        cycle_length: length,
        pendant_vertex: Some(pendant),
        edge_count: g.edge_count(),
    })
}

/// Mirror symmetry about `x = 0` with the apex `v_{n/2}` at `(0, 1)`.
pub fn check_symmetry(p: &Polygon, tol: f64) -> Result<SymmetryCheck> {
    let n = require_even(p)?;
    let symmetry_defect = (1..n / 2)
        .map(|i| {
            let (a, b) = (p.vertex(i), p.vertex(n - i));
            (b.x + a.x).abs().max((b.y - a.y).abs())
        })
        .fold(0.0, f64::max);
    let apex = p.vertex(n / 2);
    let apex_defect = apex.x.abs().max((apex.y - 1.0).abs());
    Ok(SymmetryCheck {
        symmetry_defect,
        apex_defect,
        passes: symmetry_defect <= tol && apex_defect <= tol,
    })
}

/// The vertex pairs expected at unit distance, besides the apex edge.
pub fn unit_pairs(n: usize) -> Vec<(usize, usize)> {
    let half = n / 2;
    let mut pairs = vec![(0, half - 1), (0, half + 1)];
    for i in 1..=half.saturating_sub(2) {
        pairs.push((i, i + half));
        pairs.push((i, i + half + 1));
    }
    pairs.push((half - 1, n - 1));
    pairs
}

pub fn check_unit_equalities(p: &Polygon, tol: f64) -> Result<UnitEqualityCheck> {
    let n = require_even(p)?;
    let defects: Vec<UnitEdgeDefect> = unit_pairs(n)
        .into_iter()
        .map(|(i, j)| UnitEdgeDefect {
            pair: (i, j),
            defect: (p.vertex(i).dist(p.vertex(j)) - 1.0).abs(),
        })
        .collect();
    let max_defect = defects.iter().map(|d| d.defect).fold(0.0, f64::max);
    Ok(UnitEqualityCheck {
        passes: max_defect <= tol,
        defects,
        max_defect,
    })
}

/// All three checks at one tolerance.
pub fn structure_report(p: &Polygon, tol: f64) -> Result<StructureReport> {
    let cycle = check_theorem2(p, tol)?;
    let sym = check_symmetry(p, tol)?;
    let unit = check_unit_equalities(p, tol)?;
    let max_defect = sym
        .symmetry_defect
        .max(sym.apex_defect)
        .max(unit.max_defect);
    Ok(StructureReport {
        n: p.n(),
        tol,
        has_pendant_cycle: cycle.has_pendant_cycle,
        cycle_length: cycle.cycle_length,
        pendant_vertex: cycle.pendant_vertex,
        symmetry_defect: sym.symmetry_defect,
        apex_defect: sym.apex_defect,
        max_defect,
        symmetric: sym.passes,
        unit_equalities_hold: unit.passes,
        passes: cycle.has_pendant_cycle && sym.passes && unit.passes,
        unit_edge_defects: unit.defects,
    })
}

impl StructureReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
