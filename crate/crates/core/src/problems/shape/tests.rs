use super::*;

fn coarse(grids: Vec<usize>) -> ShapeProblem {
    ShapeProblem::new(ShapeConfig {
        grids,
        ..ShapeConfig::default()
    })
    .unwrap()
}

#[test]
fn circle_spline_tracks_the_circle() {
    let r = 0.3;
    let q = quarter_boundary(&HoleSpline::circle(r), BOUNDARY_SAMPLES).unwrap();
    assert_eq!(q.len(), 64);
    assert_eq!(q[0], [r, 0.0]);
    assert_eq!(*q.last().unwrap(), [0.0, r]);
    let dev = q
        .iter()
        .map(|p| (p[0].hypot(p[1]) - r).abs())
        .fold(0.0, f64::max);
    assert!(dev < 0.02 * r, "{dev}");
}

#[test]
fn reflection_closes_with_fourfold_symmetry() {
    let poly = hole_boundary(&HoleSpline::ellipse(0.4, 0.25), BOUNDARY_SAMPLES).unwrap();
    assert_eq!(poly.len(), 4 * 63);
    let has = |p: [f64; 2]| poly.iter().any(|q| q[0] == p[0] && q[1] == p[1]);
    for p in &poly {
        assert!(has([-p[0], p[1]]) && has([p[0], -p[1]]) && has([-p[0], -p[1]]));
    }
    assert_eq!(self_intersections(&poly), 0);
}

#[test]
fn areas() {
    let r = 0.3;
    let circle =
        enclosed_area(&hole_boundary(&HoleSpline::circle(r), BOUNDARY_SAMPLES).unwrap()).unwrap();
    assert!((circle - PI * r * r).abs() <= 0.03 * PI * r * r);
    let s = HoleSpline::ellipse(0.2, 0.15);
    let big = HoleSpline {
        a: 0.4,
        node: [2.0 * s.node[0], 2.0 * s.node[1]],
        b: 0.3,
        psi: s.psi,
    };
    let a1 = enclosed_area(&hole_boundary(&s, BOUNDARY_SAMPLES).unwrap()).unwrap();
    let a2 = enclosed_area(&hole_boundary(&big, BOUNDARY_SAMPLES).unwrap()).unwrap();
    assert!((a2 - 4.0 * a1).abs() <= 1e-12 * a2);
    let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
    assert_eq!(enclosed_area(&bowtie), Err(ShapeError::SelfIntersecting));
}

#[test]
fn vanishing_hole_violates_min_area() {
    let p = coarse(vec![8]);
    let zero = HoleSpline {
        a: 0.0,
        node: [0.0, 0.0],
        b: 0.0,
        psi: 0.75 * PI,
    };
    let ev = p.evaluate_raw(&zero.to_vector(), 0).unwrap();
    assert!((ev.hard_violations[0] - p.config().min_area).abs() < 1e-12);
}

#[test]
fn validity_grading() {
    assert_eq!(validity(&HoleSpline::circle(0.3), 1.0), 0.0);
    let neg = HoleSpline {
        a: -0.1,
        ..HoleSpline::circle(0.3)
    };
    assert!((validity(&neg, 1.0) - 0.1).abs() < 1e-15);
    let out = HoleSpline {
        node: [1.25, 0.2],
        ..HoleSpline::circle(0.3)
    };
    assert!((validity(&out, 1.0) - 0.25).abs() < 1e-15);
    let angle = HoleSpline {
        psi: 0.25 * PI,
        ..HoleSpline::circle(0.3)
    };
    assert!((validity(&angle, 1.0) - 0.25 * PI).abs() < 1e-15);
    // node far outside the chord makes the reflected curve cross itself
    let loop_back = HoleSpline {
        a: 0.3,
        node: [0.6, 0.05],
        b: 0.3,
        psi: 0.9 * PI,
    };
    assert!(validity(&loop_back, 1.0) >= 1.0);
}

#[test]
fn plate_without_hole_matches_uniaxial_stress() {
    let p = 1e6;
    let cfg = ShapeConfig {
        traction: [p, 0.0],
        min_area: 0.0,
        grids: vec![16],
        ..ShapeConfig::default()
    };
    let problem = ShapeProblem::new(cfg).unwrap();
    let d = problem
        .evaluate_detail(&HoleSpline::circle(1e-4), 0)
        .unwrap();
    assert_eq!(d.void_elements, 0);
    let exact = crate::fem::material::deviatoric_norm([p, 0.0, 0.0]);
    assert!(
        (d.max_deviatoric - exact).abs() <= 1e-6 * exact,
        "{} vs {exact}",
        d.max_deviatoric
    );
}

#[test]
fn circle_beats_equal_area_ellipse() {
    let p = coarse(vec![32]);
    let r: f64 = 0.3;
    let circle = p
        .evaluate_raw(&HoleSpline::circle(r).to_vector(), 0)
        .unwrap()
        .objective;
    let ellipse = p
        .evaluate_raw(
            &HoleSpline::ellipse(r * 2f64.sqrt(), r / 2f64.sqrt()).to_vector(),
            0,
        )
        .unwrap()
        .objective;
    assert!(circle < ellipse, "{circle} vs {ellipse}");
}

#[test]
fn mirrored_design_has_same_objective() {
    let p = coarse(vec![24]);
    let s = HoleSpline::ellipse(0.4, 0.22);
    let a = p.evaluate_raw(&s.to_vector(), 0).unwrap().objective;
    let b = p
        .evaluate_raw(&s.mirrored().to_vector(), 0)
        .unwrap()
        .objective;
    assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
}

#[test]
fn critical_element_is_solid_and_fine_level_costs_more() {
    let p = coarse(vec![8, 40]);
    let s = HoleSpline::circle(0.35);
    let t0 = std::time::Instant::now();
    let d0 = p.evaluate_detail(&s, 0).unwrap();
    let c0 = t0.elapsed();
    let t1 = std::time::Instant::now();
    let d1 = p.evaluate_detail(&s, 1).unwrap();
    let c1 = t1.elapsed();
    assert!(c1 > c0);
    for (level, d) in [(0, &d0), (1, &d1)] {
        assert!(d.void_elements > 0);
        let c = p.mesh(level).centroid(d.critical_element);
        assert!(c[0].hypot(c[1]) > 0.3, "critical element at {c:?}");
    }
}

#[test]
fn ranks_agree_across_cheap_levels() {
    let p = coarse(vec![16, 32]);
    let probes = probe_designs();
    assert_eq!(probes.len(), 5);
    let score = |f: usize| -> Vec<f64> {
        probes
            .iter()
            .map(|(_, s)| p.evaluate_detail(s, f).unwrap().max_deviatoric)
            .collect()
    };
    assert!(kendall_tau(&score(0), &score(1)) >= 0.6);
}

#[test]
fn kendall_tau_values() {
    assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
    assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
    assert!((kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 4.0 / 6.0).abs() < 1e-15);
}

#[test]
fn seed_is_feasible_and_boundary_exports() {
    let p = coarse(vec![16]);
    let seed = &p.seeds()[0];
    assert!(p.bounds().contains(seed));
    assert!(p
        .evaluate_raw(seed, 0)
        .unwrap()
        .hard_violations
        .iter()
        .all(|v| *v == 0.0));
    let mut buf = Vec::new();
    ShapeProblem::write_boundary(&HoleSpline::circle(0.3), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x,y\n0.3,0\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 63);
}
