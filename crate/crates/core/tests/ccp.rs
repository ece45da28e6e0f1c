use optigon::ccp::{maximize_area, step, CcpConfig, CcpStatus, StepNorm};
use optigon::formulation::{build_program, polygon_to_vector, vector_to_polygon};
use optigon::geometry::{area, diameter, upper_bound, Point, Polygon};

fn table_hexagon() -> Polygon {
    // Six-decimal coordinates of the last hexagon iterate, rescaled to unit
    // diameter so the start is feasible.
    let p = Polygon::from_coords(&[
        (0.0, 0.0),
        (0.500000, 0.402352),
        (0.343773, 0.939053),
        (0.0, 1.0),
        (-0.343773, 0.939053),
        (-0.500000, 0.402352),
    ])
    .unwrap();
    let d = diameter(&p);
    Polygon::new(
        p.vertices()
            .iter()
            .map(|v| Point::new(v.x / d, v.y / d))
            .collect(),
    )
    .unwrap()
}

#[test]
fn step_from_rounded_critical_point_barely_moves() {
    let cfg = CcpConfig::default();
    let prog = build_program(6).unwrap();
    let start = table_hexagon();
    let z = polygon_to_vector(&start).unwrap();
    let (next, result) = step(&prog, &z, &cfg).unwrap();
    let rel = StepNorm::Euclidean.relative_step(&z, &next);
    assert!(rel <= cfg.epsilon, "relative step {rel}");
    let moved = area(&vector_to_polygon(&prog.layout, &next).unwrap());
    // Rounding to six decimals costs a few 1e-7 of area; the step recovers it.
    assert!(moved >= area(&start) - 1e-12);
    assert!(moved - area(&start) <= 1e-6);
    assert!((result.objective - 0.6749814429).abs() <= 1e-9);
}

#[test]
fn restart_from_own_output_is_a_fixed_point() {
    let cfg = CcpConfig::default();
    for n in [6, 8, 12] {
        let first = maximize_area(n, &cfg, None).unwrap();
        assert!(first.is_converged());
        let again = maximize_area(n, &cfg, Some(&first.polygon)).unwrap();
        assert_eq!(again.status, CcpStatus::Converged);
        assert_eq!(again.iterations, 1, "n = {n}");
        assert!((again.area - first.area).abs() <= 1e-8);
    }
}

#[test]
fn perturbed_start_reaches_the_same_optimum() {
    let cfg = CcpConfig::default();
    let reference = maximize_area(8, &cfg, None).unwrap();
    // Shrinking keeps every constraint satisfied.
    let shrunk = Polygon::new(
        reference
            .polygon
            .vertices()
            .iter()
            .map(|v| Point::new(0.98 * v.x, 0.98 * v.y))
            .collect(),
    )
    .unwrap();
    let r = maximize_area(8, &cfg, Some(&shrunk)).unwrap();
    assert!(r.is_converged());
    assert!(
        (r.area - reference.area).abs() <= 1e-6,
        "{} vs {}",
        r.area,
        reference.area
    );
}

#[test]
fn trace_is_monotone_feasible_and_bounded() {
    let cfg = CcpConfig {
        record_trace: true,
        ..CcpConfig::default()
    };
    let slack = 10.0 * cfg.solver.tol;
    for n in [6, 10, 14] {
        let r = maximize_area(n, &cfg, None).unwrap();
        assert!(
            r.property_violations.is_empty(),
            "{:?}",
            r.property_violations
        );
        let trace = r.trace.unwrap();
        assert_eq!(trace.iterates.len(), r.iterations + 1);
        for w in trace.areas().windows(2) {
            assert!(w[1] >= w[0] - slack);
        }
        for it in &trace.iterates {
            assert!(it.max_residual <= slack);
            assert!(it.area < upper_bound(n));
        }
        let last = trace.iterates.last().unwrap();
        assert!(last.rel_step.unwrap() <= cfg.epsilon);
        assert!(trace.iterates[..trace.iterates.len() - 1]
            .iter()
            .skip(1)
            .all(|it| it.rel_step.unwrap() > cfg.epsilon));
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), r.iterations + 2);
    }
}

#[test]
fn max_abs_norm_also_converges() {
    let cfg = CcpConfig {
        norm: StepNorm::MaxAbs,
        ..CcpConfig::default()
    };
    let r = maximize_area(6, &cfg, None).unwrap();
    assert!(r.is_converged());
    assert!((r.area - 0.6749814429).abs() <= 1e-7);
}

#[test]
fn warm_start_gives_the_same_polygon() {
    let cold = maximize_area(10, &CcpConfig::default(), None).unwrap();
    let warm_cfg = CcpConfig {
        warm_start: true,
        ..CcpConfig::default()
    };
    let warm = maximize_area(10, &warm_cfg, None).unwrap();
    assert!(warm.is_converged());
    assert!((warm.area - cold.area).abs() <= 1e-8);
}

#[test]
fn one_step_from_pendant_start() {
    let cfg = CcpConfig::default();
    let prog = build_program(6).unwrap();
    let z = polygon_to_vector(&optigon::geometry::build_pendant_polygon(6).unwrap()).unwrap();
    let (next, result) = step(&prog, &z, &cfg).unwrap();
    let p1 = vector_to_polygon(&prog.layout, &next).unwrap();
    assert!((area(&p1) - 0.6749414624).abs() <= 1e-6, "{}", area(&p1));
    // Σu underestimates the polygon area until the iterates settle.
    assert!(result.objective < area(&p1) - 1e-4);
    let table = [(0.500000, 0.397460), (0.339680, 0.940541), (0.0, 1.0)];
    for (i, (x, y)) in table.iter().enumerate() {
        let v = p1.vertex(i + 1);
        assert!(
            (v.x - x).abs() <= 1e-5 && (v.y - y).abs() <= 1e-5,
            "vertex {}: {v:?}",
            i + 1
        );
    }
}
