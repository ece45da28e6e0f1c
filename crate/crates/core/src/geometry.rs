//! Small polygons: representation, closed-form reference areas, diameter
//! graphs and the two canonical initial polygons.
//!
//! Vertices are indexed `0..n` counterclockwise with `v_0` at the origin and
//! the polygon lying in the half-plane `y >= 0`. Lengths are measured in
//! units of the diameter.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::fmt_g17;

/// Default tolerance for deciding that a pair of vertices is at unit distance.
pub const DEFAULT_TOL_DIAM: f64 = 1e-6;
/// Default tolerance for the polygon invariant checks.
pub const DEFAULT_TOL_FEAS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// z-component of `self × other`.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// An ordered polygon. Construction only checks that coordinates are finite
/// and `n >= 3`; the geometric conventions are checked by [`Polygon::validate`]
/// so that infeasible intermediate iterates remain representable.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooSmallN {
                n: vertices.len(),
                min: 3,
            });
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() {
                return Err(Error::NonFinite { index: 2 * i });
            }
            if !v.y.is_finite() {
                return Err(Error::NonFinite { index: 2 * i + 1 });
            }
        }
        Ok(Polygon { vertices })
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point::from).collect())
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    /// Checks the placement conventions (`v_0` at the origin, `y >= 0`,
    /// counterclockwise fan around `v_0`) and, when `small` is set, that the
    /// diameter does not exceed one.
    pub fn validate(&self, tol: f64, small: bool) -> std::result::Result<(), String> {
        let v = &self.vertices;
        if v[0].x.abs() > tol || v[0].y.abs() > tol {
            return Err(format!("v_0 = ({}, {}) is not the origin", v[0].x, v[0].y));
        }
        if let Some((i, p)) = v.iter().enumerate().find(|(_, p)| p.y < -tol) {
            return Err(format!("v_{i} has negative ordinate {}", p.y));
        }
        for i in 1..v.len() - 1 {
            let turn = v[i].cross(v[i + 1]);
            if turn < -tol {
                return Err(format!(
                    "v_{i}, v_{} are not counterclockwise ({turn:e})",
                    i + 1
                ));
            }
        }
        if small {
            let d = diameter(self);
            if d > 1.0 + tol {
                return Err(format!("diameter {d} exceeds one"));
            }
        }
        Ok(())
    }

    /// Translates the polygon so that vertex `k` becomes the first vertex at
    /// the origin, keeping the cyclic order.
    pub fn reanchored(&self, k: usize) -> Polygon {
        let n = self.n();
        let base = self.vertices[k];
        let vertices = (0..n)
            .map(|i| {
                let p = self.vertices[(k + i) % n];
                Point::new(p.x - base.x, p.y - base.y)
            })
            .collect();
        Polygon { vertices }
    }

    /// `{"n": ..., "vertices": [[x, y], ...]}` with 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write!(out, "{{\"n\": {}, \"vertices\": [", self.n()).unwrap();
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write!(out, "[{}, {}]", fmt_g17(v.x), fmt_g17(v.y)).unwrap();
        }
        out.push_str("]}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct PolygonFile {
            n: usize,
            vertices: Vec<[f64; 2]>,
        }
        let file: PolygonFile = serde_json::from_str(text)?;
        if file.n != file.vertices.len() {
            return Err(Error::Format(format!(
                "n = {} but {} vertices listed",
                file.n,
                file.vertices.len()
            )));
        }
        Self::new(
            file.vertices
                .iter()
                .map(|&[x, y]| Point::new(x, y))
                .collect(),
        )
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Area as the sum of the triangles `v_0 v_i v_{i+1}`.
pub fn area(p: &Polygon) -> f64 {
    let v = p.vertices();
    let origin = v[0];
    let twice: f64 = v[1..]
        .windows(2)
        .map(|w| {
            let a = Point::new(w[0].x - origin.x, w[0].y - origin.y);
            let b = Point::new(w[1].x - origin.x, w[1].y - origin.y);
            a.cross(b)
        })
        .sum();
    twice / 2.0
}

/// Largest pairwise vertex distance, by exhaustive scan.
pub fn diameter(p: &Polygon) -> f64 {
    let v = p.vertices();
    let mut best = 0.0f64;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.max(v[i].dist(v[j]));
        }
    }
    best
}

/// Graph of vertex pairs at unit distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiameterGraph {
    pub n: usize,
    /// Edges as `(i, j)` with `i < j`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl DiameterGraph {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(i, j)| i == v || j == v)
            .count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(i, j)| {
                if i == v {
                    Some(j)
                } else if j == v {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

pub fn diameter_graph(p: &Polygon, tol_diam: f64) -> Result<DiameterGraph> {
    let d = diameter(p);
    if d > 1.0 + tol_diam {
        return Err(Error::DiameterExceeded {
            diameter: d,
            tol: tol_diam,
        });
    }
    let v = p.vertices();
    let mut edges = BTreeSet::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (v[i].dist(v[j]) - 1.0).abs() <= tol_diam {
                edges.insert((i, j));
            }
        }
    }
    Ok(DiameterGraph { n: p.n(), edges })
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::TooSmallN { n, min })
    } else {
        Ok(())
    }
}

fn check_even(n: usize, min: usize) -> Result<()> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddN(n));
    }
    check_n(n, min)
}

/// Area of the regular small n-gon `R_n`.
pub fn regular_area(n: usize) -> f64 {
    let nf = n as f64;
    if n % 2 == 1 {
        nf / 2.0 * ((PI / nf).sin() - (PI / (2.0 * nf)).tan())
    } else {
        nf / 8.0 * (2.0 * PI / nf).sin()
    }
}

/// Area of `R⁺_{n-1}`: `R_{n-1}` with one vertex added at distance one along
/// the bisector of an angle. Requires even `n >= 6`.
pub fn pendant_area(n: usize) -> Result<f64> {
    check_even(n, 6)?;
    let m = (n - 1) as f64;
    Ok(
        m / 2.0 * ((PI / m).sin() - (PI / (2.0 * m)).tan()) + (PI / (2.0 * m)).sin()
            - 0.5 * (PI / m).sin(),
    )
}

/// Reinhardt's upper bound on the area of a small n-gon.
pub fn upper_bound(n: usize) -> f64 {
    let nf = n as f64;
    nf / 2.0 * ((PI / nf).sin() - (PI / (2.0 * nf)).tan())
}

/// The regular small n-gon placed with `v_0` at the origin and the polygon
/// above it.
pub fn build_regular_polygon(n: usize) -> Result<Polygon> {
    check_n(n, 3)?;
    let nf = n as f64;
    // Circumradius of a polygon with unit diameter.
    let radius = if n.is_multiple_of(2) {
        0.5
    } else {
        0.5 / (PI / (2.0 * nf)).cos()
    };
    let vertices = (0..n)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / nf;
            Point::new(radius * theta.sin(), radius * (1.0 - theta.cos()))
        })
        .collect();
    let mut p = Polygon::new(vertices)?;
    p.vertices[0] = Point::ORIGIN;
    Ok(p)
}

/// The polygon `R⁺_{n-1}` used as the initial iterate, symmetric about `x = 0`
/// with the added vertex at `v_{n/2} = (0, 1)`.
pub fn build_pendant_polygon(n: usize) -> Result<Polygon> {
    check_even(n, 6)?;
    let m = (n - 1) as f64;
    let denom = 2.0 * (PI / (2.0 * m)).cos();
    let half = n / 2;
    let mut vertices = vec![Point::ORIGIN; n];
    for i in 1..half {
        let theta = 2.0 * i as f64 * PI / m;
        let p = Point::new(theta.sin() / denom, (1.0 - theta.cos()) / denom);
        vertices[i] = p;
        vertices[n - i] = Point::new(-p.x, p.y);
    }
    vertices[half] = Point::new(0.0, 1.0);
    Polygon::new(vertices)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRecord {
    pub n: usize,
    pub area_regular: f64,
    pub area_pendant: f64,
    pub upper_bound: f64,
    pub literature_lower_bound: Option<f64>,
}

impl BoundsRecord {
    pub fn for_n(n: usize) -> Result<Self> {
        Ok(BoundsRecord {
            n,
            area_regular: regular_area(n),
            area_pendant: pendant_area(n)?,
            upper_bound: upper_bound(n),
            literature_lower_bound: crate::reporting::literature_lower_bound(n).map(|b| b.area),
        })
    }
}
