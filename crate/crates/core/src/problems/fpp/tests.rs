use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::*;
use crate::fem::material::min_eigenvalue;
use crate::rng::rng_stream;

fn close(a: &Voigt, b: &Voigt, tol: f64) -> bool {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol * scale))
}

fn problem_with(patches: usize, size: [f64; 2]) -> FppProblem {
    FppProblem::new(FppConfig {
        patches,
        patch_size: size,
        grid: [20, 10],
        ..FppConfig::default()
    })
    .unwrap()
}

#[test]
fn hashin_boundaries() {
    let l = StrengthLimits::default();
    assert_eq!(hashin_index([0.0; 3], &l), 0.0);
    assert_eq!(hashin_index([l.xt, 0.0, 0.0], &l), 1.0);
    assert_eq!(hashin_index([-l.xc, 0.0, 0.0], &l), 1.0);
    assert_eq!(hashin_index([0.0, l.yt, 0.0], &l), 1.0);
    assert!((hashin_index([0.0, -l.yc, 0.0], &l) - 1.0).abs() < 1e-12);
    assert!((hashin_index([0.0, 0.0, 0.5 * l.s], &l) - 0.25).abs() < 1e-15);
}

#[test]
fn single_full_cover_is_rotated_ply() {
    let p = problem_with(1, [0.4, 0.2]);
    let theta = 0.3;
    let patches = p.decode(&[0.2, 0.1, theta]).unwrap();
    // a rotated patch the size of the plate still covers the central region
    let f = p.stiffness_field(&patches);
    let rot = rotate_voigt(&p.config().lamina.stiffness(), theta);
    for (e, m) in f.materials.iter().enumerate() {
        if !f.cover[e].is_empty() {
            assert!(close(&m.c, &rot, 1e-14));
            assert_eq!(m.thickness, p.config().thickness);
        }
    }
    let aligned = p.stiffness_field(&p.decode(&[0.2, 0.1, 0.0]).unwrap());
    assert!(aligned.cover.iter().all(|c| c.len() == 1));
}

#[test]
fn coincident_patches_double_thickness_and_stiffen() {
    let one = problem_with(1, [0.4, 0.2]);
    let two = problem_with(2, [0.4, 0.2]);
    let f1 = one.stiffness_field(&one.decode(&[0.2, 0.1, 0.0]).unwrap());
    let f2 = two.stiffness_field(&two.decode(&[0.2, 0.1, 0.0, 0.2, 0.1, 0.0]).unwrap());
    for e in 0..f1.materials.len() {
        assert!(close(&f1.materials[e].c, &f2.materials[e].c, 1e-14));
        assert_eq!(f2.thickness[e], 2.0 * f1.thickness[e]);
    }
    let c1 = one.evaluate_design(&[0.2, 0.1, 0.0]).unwrap().objective;
    let c2 = two
        .evaluate_design(&[0.2, 0.1, 0.0, 0.2, 0.1, 0.0])
        .unwrap()
        .objective;
    assert!(c2 < c1);
    assert!((c2 - 0.5 * c1).abs() <= 1e-8 * c1);
}

#[test]
fn stacked_cover_on_load_path_beats_single() {
    // a strip along the load path, then the same strip doubled
    let one = problem_with(1, [0.4, 0.06]);
    let two = problem_with(2, [0.4, 0.06]);
    let c1 = one.evaluate_design(&[0.2, 0.1, 0.0]).unwrap().objective;
    let c2 = two
        .evaluate_design(&[0.2, 0.1, 0.0, 0.2, 0.1, 0.0])
        .unwrap()
        .objective;
    assert!(c2 < c1, "{c2} vs {c1}");
}

#[test]
fn quarter_turn_swaps_axes_and_half_turn_is_identity() {
    let c = Lamina::default().stiffness();
    let r = rotate_voigt(&c, FRAC_PI_2);
    assert!(
        (r[0][0] - c[1][1]).abs() <= 1e-6 * c[0][0] && (r[1][1] - c[0][0]).abs() <= 1e-6 * c[0][0]
    );
    for theta in [0.0, 0.4, -1.1, 2.0] {
        assert!(close(
            &rotate_voigt(&c, theta + PI),
            &rotate_voigt(&c, theta),
            1e-12
        ));
    }
}

#[test]
fn stiffness_field_is_spd() {
    let p = FppProblem::new(FppConfig {
        grid: [20, 10],
        ..FppConfig::default()
    })
    .unwrap();
    let mut rng = rng_stream(9, 0);
    let b = p.bounds().clone();
    for _ in 0..20 {
        let x: Vec<f64> = (0..b.dim())
            .map(|i| rng.uniform_in(b.lower()[i], b.upper()[i]))
            .collect();
        let f = p.stiffness_field(&p.decode(&x).unwrap());
        assert!(f
            .materials
            .iter()
            .all(|m| min_eigenvalue(&m.c) > 0.0 && m.thickness > 0.0));
    }
}

#[test]
fn position_violation_grading() {
    let p = problem_with(1, [0.1, 0.05]);
    let inside = p.decode(&[0.2, 0.1, 0.0]).unwrap();
    assert_eq!(p.position_violation(&inside), 0.0);
    let edge = p.decode(&[0.4, 0.1, 0.0]).unwrap();
    assert!((p.position_violation(&edge) - 0.5).abs() <= 0.05);
    let off = p.decode(&[0.4, 0.2, 0.0]).unwrap();
    assert!((p.position_violation(&off) - 0.75).abs() <= 0.05);
}

#[test]
fn feasible_full_cover_has_no_violations() {
    let p = problem_with(1, [0.4, 0.2]);
    let ev = p.evaluate_design(&[0.2, 0.1, 0.0]).unwrap();
    assert_eq!(ev.hard_violations, vec![0.0, 0.0]);
    assert!(ev.soft_penalties[0].abs() < 1e-15);
    assert!(ev.objective > 0.0);
}

#[test]
fn overloaded_plate_violates_strength() {
    let cfg = FppConfig {
        patches: 1,
        patch_size: [0.4, 0.2],
        grid: [20, 10],
        traction: 1e7,
        ..FppConfig::default()
    };
    let p = FppProblem::new(cfg).unwrap();
    // transverse plies under 5 GPa nominal stress
    let ev = p.evaluate_design(&[0.2, 0.1, FRAC_PI_2]).unwrap();
    assert!(ev.hard_violations[1] > 0.0);
}

#[test]
fn jump_penalty_of_half_cover() {
    let p = problem_with(1, [0.2, 0.2]);
    let t = p.config().thickness;
    let f = p.stiffness_field(&p.decode(&[0.1, 0.1, 0.0]).unwrap());
    assert!((p.thickness_jump(&f) - t * 0.2).abs() <= 1e-12);
}

#[test]
fn jump_penalty_is_translation_invariant() {
    let p = FppProblem::new(FppConfig {
        patches: 2,
        grid: [20, 10],
        ..FppConfig::default()
    })
    .unwrap();
    let pitch = 0.4 / 20.0;
    let x = [0.15, 0.09, 0.35, 0.21, 0.11, -0.6];
    let shifted = [0.15 + pitch, 0.09, 0.35, 0.21 + pitch, 0.11, -0.6];
    let a = p.thickness_jump(&p.stiffness_field(&p.decode(&x).unwrap()));
    let b = p.thickness_jump(&p.stiffness_field(&p.decode(&shifted).unwrap()));
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-12 * a);
}

#[test]
fn principal_angles() {
    assert_eq!(principal_angle([2.0, 0.0, 0.0]), 0.0);
    assert!((principal_angle([0.0, 2.0, 0.0]) - FRAC_PI_2).abs() < 1e-15);
    assert!((principal_angle([0.0, 0.0, 1.0]) - FRAC_PI_4).abs() < 1e-15);
    assert!(principal_angle([-3.0, 0.0, 0.0]).abs() < 1e-15);
}

#[test]
fn seeds_are_within_bounds() {
    let p = FppProblem::new(FppConfig {
        grid: [20, 10],
        ..FppConfig::default()
    })
    .unwrap();
    let seeds = p.seeds();
    assert_eq!(seeds.len(), 2);
    for s in &seeds {
        assert_eq!(s.dim(), 24);
        assert!(p.bounds().contains(s));
    }
    // uniaxial tension: principal directions along x
    assert!(
        seeds[0].chunks(3).all(|c| c[2].abs() < 0.2),
        "{:?}",
        seeds[0]
    );
}

#[test]
fn hole_elements_are_void_and_outside() {
    let cfg = FppConfig {
        patches: 1,
        grid: [20, 10],
        hole: Some(Hole {
            center: [0.2, 0.1],
            radius: 0.05,
        }),
        ..FppConfig::default()
    };
    let p = FppProblem::new(cfg).unwrap();
    let patches = p.decode(&[0.2, 0.1, 0.0]).unwrap();
    let f = p.stiffness_field(&patches);
    let voids = f
        .thickness
        .iter()
        .zip(p.mesh().centroids())
        .filter(|(_, c)| (c[0] - 0.2).hypot(c[1] - 0.1) <= 0.05);
    assert!(voids.clone().count() > 0);
    assert!(voids.into_iter().all(|(t, _)| *t == 0.0));
    assert!(p.position_violation(&patches) > 0.0);
}

#[test]
fn csv_exports() {
    let p = problem_with(2, [0.1, 0.05]);
    let x = [0.1, 0.1, 0.0, 0.3, 0.1, 0.5];
    let mut buf = Vec::new();
    p.write_design(&x, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("patch,x,y,theta\n0,0.1,0.1,0\n"));
    let mut buf = Vec::new();
    p.write_field(&p.stiffness_field(&p.decode(&x).unwrap()), &mut buf)
        .unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap().lines().count(),
        1 + p.mesh().element_count()
    );
    assert!(matches!(
        p.decode(&[0.1, 0.2]),
        Err(FppError::DesignLength { got: 2 })
    ));
}
