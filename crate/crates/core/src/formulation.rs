//! The maximal-area problem as a difference-of-convex program, and its convex
//! restriction around a reference point.
//!
//! The decision vector is `z = (x_1..x_{n-1}, y_1..y_{n-1}, u_1..u_{n-2})`;
//! `v_0` is pinned at the origin and does not appear. Every constraint has the
//! form `g(z) - h(z) >= 0` with `g` and `h` convex quadratics, each stored as a
//! sum of squared affine forms plus an affine part, so convexity holds by
//! construction.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    X,
    Y,
    U,
}

/// Flat positions of the `x`, `y` and `u` variables of an n-gon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecisionLayout {
    n: usize,
}

impl DecisionLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooSmallN { n, min: 3 });
        }
        Ok(DecisionLayout { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        3 * self.n - 4
    }

    /// Position of `x_i`, `1 <= i <= n-1`.
    pub fn x(&self, i: usize) -> usize {
        debug_assert!((1..self.n).contains(&i));
        i - 1
    }

    pub fn y(&self, i: usize) -> usize {
        debug_assert!((1..self.n).contains(&i));
        self.n - 1 + i - 1
    }

    /// Position of `u_i`, `1 <= i <= n-2`.
    pub fn u(&self, i: usize) -> usize {
        debug_assert!((1..self.n - 1).contains(&i));
        2 * (self.n - 1) + i - 1
    }

    pub fn index(&self, kind: VarKind, i: usize) -> usize {
        match kind {
            VarKind::X => self.x(i),
            VarKind::Y => self.y(i),
            VarKind::U => self.u(i),
        }
    }

    /// Inverse of [`DecisionLayout::index`].
    pub fn locate(&self, pos: usize) -> (VarKind, usize) {
        let m = self.n - 1;
        if pos < m {
            (VarKind::X, pos + 1)
        } else if pos < 2 * m {
            (VarKind::Y, pos - m + 1)
        } else {
            (VarKind::U, pos - 2 * m + 1)
        }
    }

    pub fn name(&self, pos: usize) -> String {
        match self.locate(pos) {
            (VarKind::X, i) => format!("x{i}"),
            (VarKind::Y, i) => format!("y{i}"),
            (VarKind::U, i) => format!("u{i}"),
        }
    }

    fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    fn point(&self, z: &[f64], i: usize) -> Point {
        if i == 0 {
            Point::ORIGIN
        } else {
            Point::new(z[self.x(i)], z[self.y(i)])
        }
    }
}

/// Affine function `Σ coef·z[idx] + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearForm {
    pub fn new(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        LinearForm { terms, constant }
    }

    pub fn constant(c: f64) -> Self {
        LinearForm {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(idx: usize) -> Self {
        LinearForm::new(vec![(idx, 1.0)], 0.0)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(i, c)| acc + c * z[i])
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        LinearForm {
            terms: self.terms.iter().map(|&(i, c)| (i, k * c)).collect(),
            constant: k * self.constant,
        }
    }

    /// Sum of two forms with like terms merged, in index order.
    pub fn plus(&self, other: &LinearForm) -> Self {
        let mut acc = BTreeMap::new();
        for &(i, c) in self.terms.iter().chain(&other.terms) {
            *acc.entry(i).or_insert(0.0) += c;
        }
        LinearForm {
            terms: acc.into_iter().collect(),
            constant: self.constant + other.constant,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, layout: &DecisionLayout) -> fmt::Result {
        let mut first = true;
        for &(i, c) in &self.terms {
            if first {
                write!(f, "{c:+}*{}", layout.name(i))?;
                first = false;
            } else {
                write!(f, " {c:+}*{}", layout.name(i))?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0.0 {
            write!(f, " {:+}", self.constant)
        } else {
            Ok(())
        }
    }
}

/// `q(z) = Σ ℓ_k(z)² + a(z)`: a convex quadratic whose Hessian is the sum of
/// the outer products of the squared forms' coefficient vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexQuadratic {
    pub squares: Vec<LinearForm>,
    pub affine: LinearForm,
}

impl ConvexQuadratic {
    pub fn affine(affine: LinearForm) -> Self {
        ConvexQuadratic {
            squares: Vec::new(),
            affine,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.squares.iter().map(|l| l.eval(z).powi(2)).sum::<f64>() + self.affine.eval(z)
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<(usize, f64)> {
        let mut acc = BTreeMap::new();
        for &(i, c) in &self.affine.terms {
            *acc.entry(i).or_insert(0.0) += c;
        }
        for l in &self.squares {
            let v = 2.0 * l.eval(z);
            for &(i, c) in &l.terms {
                *acc.entry(i).or_insert(0.0) += v * c;
            }
        }
        acc.into_iter().collect()
    }

    /// First-order Taylor expansion at `c`, an underestimator of `self`.
    pub fn tangent(&self, c: &[f64]) -> LinearForm {
        let grad = self.gradient(c);
        let shift: f64 = grad.iter().map(|&(i, g)| g * c[i]).sum();
        LinearForm::new(grad, self.eval(c) - shift)
    }

    pub fn is_affine(&self) -> bool {
        self.squares.iter().all(LinearForm::is_constant)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintTag {
    /// `|v_j - v_i| <= 1`, `1 <= i < j <= n-1`.
    Distance { i: usize, j: usize },
    /// `|v_i| <= 1`.
    Radius { i: usize },
    /// `y_i >= 0`.
    HalfPlane { i: usize },
    /// `2 u_i <= y_{i+1} x_i - x_{i+1} y_i`.
    TriangleArea { i: usize },
    /// `u_i >= 0`.
    NonnegU { i: usize },
}

impl ConstraintTag {
    pub fn family(&self) -> &'static str {
        match self {
            ConstraintTag::Distance { .. } => "distance",
            ConstraintTag::Radius { .. } => "radius",
            ConstraintTag::HalfPlane { .. } => "half-plane",
            ConstraintTag::TriangleArea { .. } => "triangle-area",
            ConstraintTag::NonnegU { .. } => "nonneg-u",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConstraintTag::Distance { i, j } => write!(f, "distance({i},{j})"),
            ConstraintTag::Radius { i } => write!(f, "radius({i})"),
            ConstraintTag::HalfPlane { i } => write!(f, "half-plane({i})"),
            ConstraintTag::TriangleArea { i } => write!(f, "triangle-area({i})"),
            ConstraintTag::NonnegU { i } => write!(f, "nonneg-u({i})"),
        }
    }
}

/// `g(z) - h(z) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DcConstraint {
    pub tag: ConstraintTag,
    pub g: ConvexQuadratic,
    pub h: ConvexQuadratic,
}

impl DcConstraint {
    pub fn residual(&self, z: &[f64]) -> f64 {
        self.g.eval(z) - self.h.eval(z)
    }

    /// Dense gradient of `g - h`.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (i, v) in self.g.gradient(z) {
            out[i] += v;
        }
        for (i, v) in self.h.gradient(z) {
            out[i] -= v;
        }
        out
    }
}

/// Maximize `g_0 - h_0` subject to `g_i - h_i >= 0`.
#[derive(Clone, Debug)]
pub struct DcProgram {
    pub layout: DecisionLayout,
    pub objective: (ConvexQuadratic, ConvexQuadratic),
    pub constraints: Vec<DcConstraint>,
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub objective: f64,
    /// `g_i(z) - h_i(z)` per constraint, in program order.
    pub residuals: Vec<f64>,
}

impl ResidualReport {
    /// Most violated constraint as `(index, residual)`.
    pub fn min_residual(&self) -> (usize, f64) {
        self.residuals
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, r)| if r < best.1 { (i, r) } else { best },
            )
    }
}

/// Builds the maximal-area program for an n-gon (`n >= 4`).
pub fn build_program(n: usize) -> Result<DcProgram> {
    if n < 4 {
        return Err(Error::TooSmallN { n, min: 4 });
    }
    let l = DecisionLayout::new(n)?;
    let diff = |a: usize, b: usize| LinearForm::new(vec![(a, 1.0), (b, -1.0)], 0.0);
    let unit = ConvexQuadratic::affine(LinearForm::constant(1.0));
    let mut constraints = Vec::new();

    for i in 1..n {
        for j in i + 1..n {
            constraints.push(DcConstraint {
                tag: ConstraintTag::Distance { i, j },
                g: unit.clone(),
                h: ConvexQuadratic {
                    squares: vec![diff(l.x(j), l.x(i)), diff(l.y(j), l.y(i))],
                    affine: LinearForm::default(),
                },
            });
        }
    }
    for i in 1..n {
        constraints.push(DcConstraint {
            tag: ConstraintTag::Radius { i },
            g: unit.clone(),
            h: ConvexQuadratic {
                squares: vec![LinearForm::var(l.x(i)), LinearForm::var(l.y(i))],
                affine: LinearForm::default(),
            },
        });
    }
    for i in 1..n {
        constraints.push(DcConstraint {
            tag: ConstraintTag::HalfPlane { i },
            g: ConvexQuadratic::affine(LinearForm::var(l.y(i))),
            h: ConvexQuadratic::zero(),
        });
    }
    // (y_{i+1} + x_i)² + (x_{i+1} - y_i)² - (y_{i+1} - x_i)² - (x_{i+1} + y_i)²
    //   = 4 (y_{i+1} x_i - x_{i+1} y_i)
    for i in 1..n - 1 {
        let sum = |a: usize, b: usize| LinearForm::new(vec![(a, 1.0), (b, 1.0)], 0.0);
        constraints.push(DcConstraint {
            tag: ConstraintTag::TriangleArea { i },
            g: ConvexQuadratic {
                squares: vec![sum(l.y(i + 1), l.x(i)), diff(l.x(i + 1), l.y(i))],
                affine: LinearForm::default(),
            },
            h: ConvexQuadratic {
                squares: vec![diff(l.y(i + 1), l.x(i)), sum(l.x(i + 1), l.y(i))],
                affine: LinearForm::new(vec![(l.u(i), 8.0)], 0.0),
            },
        });
    }
    for i in 1..n - 1 {
        constraints.push(DcConstraint {
            tag: ConstraintTag::NonnegU { i },
            g: ConvexQuadratic::affine(LinearForm::var(l.u(i))),
            h: ConvexQuadratic::zero(),
        });
    }

    let area = LinearForm::new((1..n - 1).map(|i| (l.u(i), 1.0)).collect(), 0.0);
    Ok(DcProgram {
        layout: l,
        objective: (ConvexQuadratic::affine(area), ConvexQuadratic::zero()),
        constraints,
    })
}

impl DcProgram {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.0.eval(z) - self.objective.1.eval(z)
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<ResidualReport> {
        self.layout.check(z)?;
        Ok(ResidualReport {
            objective: self.objective_value(z),
            residuals: self.constraints.iter().map(|c| c.residual(z)).collect(),
        })
    }

    pub fn count(&self, family: &str) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.tag.family() == family)
            .count()
    }

    /// Replaces every `g_i` by its tangent at `c`. Constraints with affine `g`
    /// are carried over unchanged.
    pub fn build_restriction(&self, c: &[f64]) -> Result<ConvexSubproblem> {
        self.layout.check(c)?;
        if let Some(k) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: k });
        }
        let linearize = |q: &ConvexQuadratic| {
            if q.is_affine() {
                let constant: f64 = q.squares.iter().map(|l| l.constant.powi(2)).sum();
                LinearForm {
                    terms: q.affine.terms.clone(),
                    constant: q.affine.constant + constant,
                }
            } else {
                q.tangent(c)
            }
        };
        let constraints = self
            .constraints
            .iter()
            .map(|con| SubproblemConstraint {
                tag: con.tag,
                squares: con.h.squares.clone(),
                bound: linearize(&con.g).plus(&con.h.affine.scaled(-1.0)),
            })
            .collect();
        let (g0, h0) = &self.objective;
        if !h0.squares.is_empty() {
            return Err(Error::NonConvexConstraint { index: usize::MAX });
        }
        Ok(ConvexSubproblem {
            layout: self.layout,
            objective: linearize(g0).plus(&h0.affine.scaled(-1.0)),
            constraints,
            reference: c.to_vec(),
        })
    }
}

/// `Σ ℓ_k(z)² <= bound(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemConstraint {
    pub tag: ConstraintTag,
    pub squares: Vec<LinearForm>,
    pub bound: LinearForm,
}

impl SubproblemConstraint {
    /// `bound(z) - Σ ℓ_k(z)²`; nonnegative when satisfied.
    pub fn residual(&self, z: &[f64]) -> f64 {
        self.bound.eval(z) - self.squares.iter().map(|l| l.eval(z).powi(2)).sum::<f64>()
    }
}

/// Maximize a linear objective subject to convex quadratic inequalities.
#[derive(Clone, Debug)]
pub struct ConvexSubproblem {
    pub layout: DecisionLayout,
    pub objective: LinearForm,
    pub constraints: Vec<SubproblemConstraint>,
    /// Point at which the concave parts were linearized.
    pub reference: Vec<f64>,
}

impl ConvexSubproblem {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn residuals(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.layout.check(z)?;
        Ok(self.constraints.iter().map(|c| c.residual(z)).collect())
    }
}

impl fmt::Display for DcProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.layout;
        writeln!(f, "# dc program n={} dim={}", l.n(), l.dim())?;
        write!(f, "maximize ")?;
        self.objective.0.affine.write(f, l)?;
        writeln!(f)?;
        for c in &self.constraints {
            write!(f, "{}: g = ", c.tag)?;
            write_quadratic(f, &c.g, l)?;
            write!(f, " ; h = ")?;
            write_quadratic(f, &c.h, l)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Display for ConvexSubproblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.layout;
        writeln!(f, "# convex restriction n={} dim={}", l.n(), l.dim())?;
        write!(f, "maximize ")?;
        self.objective.write(f, l)?;
        writeln!(f)?;
        for c in &self.constraints {
            write!(f, "{}: ", c.tag)?;
            if c.squares.is_empty() {
                write!(f, "0")?;
            }
            for (k, s) in c.squares.iter().enumerate() {
                if k > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "(")?;
                s.write(f, l)?;
                write!(f, ")^2")?;
            }
            write!(f, " <= ")?;
            c.bound.write(f, l)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

fn write_quadratic(
    f: &mut fmt::Formatter<'_>,
    q: &ConvexQuadratic,
    l: &DecisionLayout,
) -> fmt::Result {
    for s in &q.squares {
        write!(f, "(")?;
        s.write(f, l)?;
        write!(f, ")^2 + ")?;
    }
    q.affine.write(f, l)
}

/// Decision vector of a polygon, with each `u_i` set to the area of the
/// triangle `v_0 v_i v_{i+1}`.
pub fn polygon_to_vector(p: &Polygon) -> Result<Vec<f64>> {
    let n = p.n();
    let l = DecisionLayout::new(n)?;
    if n < 4 {
        return Err(Error::TooSmallN { n, min: 4 });
    }
    let mut z = vec![0.0; l.dim()];
    for i in 1..n {
        let v = p.vertex(i);
        z[l.x(i)] = v.x;
        z[l.y(i)] = v.y;
    }
    for i in 1..n - 1 {
        z[l.u(i)] = p.vertex(i).cross(p.vertex(i + 1)) / 2.0;
    }
    Ok(z)
}

pub fn vector_to_polygon(layout: &DecisionLayout, z: &[f64]) -> Result<Polygon> {
    layout.check(z)?;
    Polygon::new((0..layout.n()).map(|i| layout.point(z, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_pendant_polygon, Polygon};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p6_5() -> Polygon {
        Polygon::from_coords(&[
            (0.0, 0.0),
            (0.500000, 0.402352),
            (0.343773, 0.939053),
            (0.0, 1.0),
            (-0.343773, 0.939053),
            (-0.500000, 0.402352),
        ])
        .unwrap()
    }

    #[test]
    fn layout_is_bijective() {
        let l = DecisionLayout::new(9).unwrap();
        let mut seen = vec![false; l.dim()];
        for i in 1..9 {
            for kind in [VarKind::X, VarKind::Y] {
                let p = l.index(kind, i);
                assert!(!seen[p]);
                seen[p] = true;
                assert_eq!(l.locate(p), (kind, i));
            }
        }
        for i in 1..8 {
            let p = l.u(i);
            assert!(!seen[p]);
            seen[p] = true;
            assert_eq!(l.locate(p), (VarKind::U, i));
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn family_counts() {
        let prog = build_program(6).unwrap();
        assert_eq!(prog.dim(), 14);
        assert_eq!(prog.count("distance"), 10);
        assert_eq!(prog.count("radius"), 5);
        assert_eq!(prog.count("half-plane"), 5);
        assert_eq!(prog.count("triangle-area"), 4);
        assert_eq!(prog.count("nonneg-u"), 4);
        for n in [4, 7, 10, 31] {
            let p = build_program(n).unwrap();
            assert_eq!(p.count("distance"), (n - 1) * (n - 2) / 2);
            assert_eq!(p.count("radius"), n - 1);
            assert_eq!(p.count("triangle-area"), n - 2);
        }
        assert!(matches!(build_program(3), Err(Error::TooSmallN { .. })));
    }

    #[test]
    fn linear_families_have_no_concave_part() {
        let prog = build_program(8).unwrap();
        for c in &prog.constraints {
            match c.tag {
                ConstraintTag::TriangleArea { .. } => assert!(!c.g.is_affine()),
                ConstraintTag::HalfPlane { .. } | ConstraintTag::NonnegU { .. } => {
                    assert!(c.g.is_affine() && c.h == ConvexQuadratic::zero())
                }
                _ => assert!(c.g.is_affine()),
            }
        }
    }

    #[test]
    fn pendant_start_is_feasible() {
        let prog = build_program(6).unwrap();
        let z = polygon_to_vector(&build_pendant_polygon(6).unwrap()).unwrap();
        let report = prog.evaluate(&z).unwrap();
        assert!(report.min_residual().1 >= -1e-12);
    }

    #[test]
    fn evaluate_examples() {
        let prog = build_program(6).unwrap();
        let z = polygon_to_vector(&p6_5()).unwrap();
        let report = prog.evaluate(&z).unwrap();
        // Six-decimal coordinates: objective within rounding of the table.
        assert!((report.objective - 0.6749814387).abs() < 2e-6);
        assert!(report.min_residual().1 >= -1e-5);

        let zero = vec![0.0; 14];
        let report = prog.evaluate(&zero).unwrap();
        assert_eq!(report.objective, 0.0);
        assert!(report.residuals.iter().all(|&r| r >= 0.0));

        let mut inflated = polygon_to_vector(&build_pendant_polygon(6).unwrap()).unwrap();
        let base = prog.evaluate(&inflated).unwrap();
        inflated[prog.layout.u(1)] += 1.0;
        let after = prog.evaluate(&inflated).unwrap();
        let k = prog
            .constraints
            .iter()
            .position(|c| c.tag == ConstraintTag::TriangleArea { i: 1 })
            .unwrap();
        assert!(base.residuals[k].abs() < 1e-12);
        assert!((after.residuals[k] + 8.0).abs() < 1e-12);

        assert!(matches!(
            prog.evaluate(&[0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 14,
                got: 3
            })
        ));
    }

    #[test]
    fn vector_round_trip() {
        let p = build_pendant_polygon(6).unwrap();
        let z = polygon_to_vector(&p).unwrap();
        let back = vector_to_polygon(&DecisionLayout::new(6).unwrap(), &z).unwrap();
        assert_eq!(back, p);

        let l = DecisionLayout::new(6).unwrap();
        let z = polygon_to_vector(&p6_5()).unwrap();
        let total: f64 = (1..5).map(|i| z[l.u(i)]).sum();
        assert!((total - 0.6749814387).abs() < 2e-6);

        let square =
            Polygon::from_coords(&[(0.0, 0.0), (0.5, 0.5), (0.0, 1.0), (-0.5, 0.5)]).unwrap();
        let z = polygon_to_vector(&square).unwrap();
        let l = DecisionLayout::new(4).unwrap();
        assert!((z[l.u(1)] + z[l.u(2)] - 0.5).abs() < 1e-12);
        assert!(vector_to_polygon(&l, &[0.0; 3]).is_err());
    }

    #[test]
    fn dc_identity_holds_at_random_points() {
        let prog = build_program(7).unwrap();
        let l = prog.layout;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let z: Vec<f64> = (0..l.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for c in &prog.constraints {
                if let ConstraintTag::TriangleArea { i } = c.tag {
                    let cross = z[l.y(i + 1)] * z[l.x(i)] - z[l.x(i + 1)] * z[l.y(i)];
                    let expected = 4.0 * cross - 8.0 * z[l.u(i)];
                    assert!((c.residual(&z) - expected).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn restriction_agrees_with_program_at_reference() {
        let prog = build_program(6).unwrap();
        let c = polygon_to_vector(&build_pendant_polygon(6).unwrap()).unwrap();
        let sub = prog.build_restriction(&c).unwrap();
        let lhs = sub.residuals(&c).unwrap();
        let rhs = prog.evaluate(&c).unwrap().residuals;
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(sub.objective, prog.objective.0.affine);
        assert!(prog.build_restriction(&c[..5]).is_err());
    }

    #[test]
    fn triangle_restriction_matches_displayed_inequality() {
        let prog = build_program(6).unwrap();
        let l = prog.layout;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c: Vec<f64> = (0..l.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..l.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sub = prog.build_restriction(&c).unwrap();
        for con in &sub.constraints {
            if let ConstraintTag::TriangleArea { i } = con.tag {
                let (a, b) = (|k| c[l.x(k)], |k| c[l.y(k)]);
                let (x, y) = (|k| z[l.x(k)], |k| z[l.y(k)]);
                let lhs = (y(i + 1) - x(i)).powi(2) + (x(i + 1) + y(i)).powi(2) + 8.0 * z[l.u(i)];
                let p = b(i + 1) + a(i);
                let q = a(i + 1) - b(i);
                let rhs = 2.0 * p * (y(i + 1) + x(i)) - p * p + 2.0 * q * (x(i + 1) - y(i)) - q * q;
                assert!((con.residual(&z) - (rhs - lhs)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn debug_dump_lists_every_constraint() {
        let prog = build_program(5).unwrap();
        let text = prog.to_string();
        assert_eq!(text.lines().count(), 2 + prog.constraints.len());
        let sub = prog
            .build_restriction(
                &polygon_to_vector(&crate::geometry::build_regular_polygon(5).unwrap()).unwrap(),
            )
            .unwrap();
        let text = sub.to_string();
        assert!(text.contains("triangle-area(1): (+1*y2 -1*x1)^2 + (+1*x2 +1*y1)^2 <= "));
        assert!(text.contains("distance(1,2): (+1*x2 -1*x1)^2 + (+1*y2 -1*y1)^2 <= 1"));
    }
}
