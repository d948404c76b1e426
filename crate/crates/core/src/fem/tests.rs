use super::material::{isotropic_from_engineering, orthotropic_plane_stress, rotate_voigt};
use super::*;
use nalgebra::Matrix3;

fn unit_square(n: usize) -> Mesh {
    build_mesh(MeshShape::Rectangle {
        nx: n,
        ny: n,
        w: 1.0,
        h: 1.0,
    })
    .unwrap()
}

/// Gradients from inverting `[1 x y]` rows, independent of the edge formula.
fn gradients_by_inverse(mesh: &Mesh, e: usize) -> [[f64; 2]; 3] {
    let t = mesh.triangles[e];
    let m = Matrix3::from_fn(|i, j| if j == 0 { 1.0 } else { mesh.nodes[t[i]][j - 1] });
    let inv = m.try_inverse().unwrap();
    [0, 1, 2].map(|k| [inv[(1, k)], inv[(2, k)]])
}

#[test]
fn scalar_two_triangles_by_hand() {
    let m = unit_square(1);
    let k = assemble_scalar(&m, &[1.0, 1.0]).unwrap().matrix.to_dense();
    // classical P1 Laplacian on the unit square split along (0,0)-(1,1)
    let expect = [
        [1.0, -0.5, -0.5, 0.0],
        [-0.5, 1.0, 0.0, -0.5],
        [-0.5, 0.0, 1.0, -0.5],
        [0.0, -0.5, -0.5, 1.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert!(
                (k[i][j] - expect[i][j]).abs() < 1e-14,
                "({i},{j}) {}",
                k[i][j]
            );
        }
    }
}

#[test]
fn shape_gradients_match_inverse() {
    let m = build_mesh(MeshShape::Disk {
        rings: 3,
        sectors: 8,
        radius: 2.0,
    })
    .unwrap();
    for e in 0..m.element_count() {
        let a = shape_gradients(&m, e);
        let b = gradients_by_inverse(&m, e);
        for k in 0..3 {
            assert!((a[k][0] - b[k][0]).abs() < 1e-10 && (a[k][1] - b[k][1]).abs() < 1e-10);
        }
    }
}

#[test]
fn scalar_rows_sum_to_zero_and_galerkin_energy() {
    let m = build_mesh(MeshShape::Disk {
        rings: 4,
        sectors: 4,
        radius: 1.0,
    })
    .unwrap();
    let sigma: Vec<f64> = (0..m.element_count())
        .map(|e| 0.5 + (e % 5) as f64 * 0.1)
        .collect();
    let k = assemble_scalar(&m, &sigma).unwrap().matrix;
    let ones = vec![1.0; m.node_count()];
    assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
    // linear potential V = 2x - y: v^T K v = sum sigma_e A_e |grad V|^2
    let v: Vec<f64> = m.nodes.iter().map(|p| 2.0 * p[0] - p[1]).collect();
    let kv = k.matvec(&v);
    let energy: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
    let oracle: f64 = (0..m.element_count())
        .map(|e| sigma[e] * m.element_area[e] * 5.0)
        .sum();
    assert!((energy - oracle).abs() < 1e-10 * oracle);
}

#[test]
fn conduction_reciprocity_and_scaling() {
    let m = build_mesh(MeshShape::Disk {
        rings: 4,
        sectors: 8,
        radius: 1.0,
    })
    .unwrap();
    let sigma: Vec<f64> = (0..m.element_count())
        .map(|e| 1.0 + (e % 7) as f64 * 0.3)
        .collect();
    let b = &m.boundary_nodes;
    let ground = *b.last().unwrap();
    let inject = |s: &[f64], p: usize, q: usize| {
        let sys = assemble_scalar(&m, s).unwrap().ground(ground).unwrap();
        let mut f = vec![0.0; m.node_count()];
        f[p] = 1.0;
        f[q] = -1.0;
        sys.solve(&f).unwrap()
    };
    let (a1, a2, c1, c2) = (b[0], b[4], b[10], b[17]);
    let u = inject(&sigma, a1, a2);
    let w = inject(&sigma, c1, c2);
    let lhs = u[c1] - u[c2];
    let rhs = w[a1] - w[a2];
    assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-12));
    // doubling sigma halves potentials
    let s2: Vec<f64> = sigma.iter().map(|s| 2.0 * s).collect();
    let u2 = inject(&s2, a1, a2);
    for (x, y) in u.iter().zip(&u2) {
        assert!((x - 2.0 * y).abs() <= 1e-10 * x.abs().max(1e-12));
    }
    let j = current_density(&m, &sigma, &u);
    assert_eq!(j.len(), m.element_count());
}

#[test]
fn rejects_bad_conductivity() {
    let m = unit_square(1);
    assert!(matches!(
        assemble_scalar(&m, &[1.0, 0.0]),
        Err(FemError::NonPositiveConductivity { element: 1, .. })
    ));
    assert!(matches!(
        assemble_scalar(&m, &[1.0]),
        Err(FemError::SizeMismatch { .. })
    ));
}

fn linear_field(p: [f64; 2]) -> [f64; 2] {
    [
        1e-3 * p[0] + 4e-4 * p[1] + 0.01,
        -2e-4 * p[0] + 7e-4 * p[1] - 0.02,
    ]
}

#[test]
fn patch_test_reproduces_linear_field() {
    let m = build_mesh(MeshShape::Rectangle {
        nx: 5,
        ny: 4,
        w: 2.0,
        h: 1.0,
    })
    .unwrap();
    let c = rotate_voigt(&orthotropic_plane_stress(140.0, 10.0, 0.3, 5.0), 0.4);
    let mats = vec![ElementMaterial::new(c); m.element_count()];
    let mut bc = ElasticBc::default();
    for &n in &m.boundary_nodes {
        let u = linear_field(m.nodes[n]);
        bc.dirichlet.push((n, 0, u[0]));
        bc.dirichlet.push((n, 1, u[1]));
    }
    let sol = solve_elastic(&m, &mats, &bc).unwrap();
    for (n, p) in m.nodes.iter().enumerate() {
        let u = linear_field(*p);
        assert!((sol.displacement[2 * n] - u[0]).abs() < 1e-12);
        assert!((sol.displacement[2 * n + 1] - u[1]).abs() < 1e-12);
    }
    let eps = [1e-3, 7e-4, 0.5 * (4e-4 - 2e-4)];
    let sig = material::apply(&c, [eps[0], eps[1], 2.0 * eps[2]]);
    for (e, s) in sol.stress.iter().enumerate() {
        for k in 0..3 {
            assert!((sol.strain[e][k] - eps[k]).abs() < 1e-12);
            assert!((s[k] - sig[k]).abs() < 1e-9 * sig[k].abs().max(1e-6));
        }
    }
}

#[test]
fn compliance_equals_work_and_energy() {
    let m = build_mesh(MeshShape::Rectangle {
        nx: 8,
        ny: 4,
        w: 2.0,
        h: 1.0,
    })
    .unwrap();
    let c = isotropic_from_engineering(1.0, 0.3);
    let mats: Vec<ElementMaterial> = (0..m.element_count())
        .map(|e| ElementMaterial {
            c,
            thickness: 0.5 + (e % 3) as f64 * 0.25,
        })
        .collect();
    let mut bc = ElasticBc::default();
    for j in 0..=4 {
        let n = j * 9;
        bc.dirichlet.push((n, 0, 0.0));
        bc.dirichlet.push((n, 1, 0.0));
    }
    for j in 0..4 {
        bc.neumann.push((j * 9 + 8, (j + 1) * 9 + 8, [1.0, -0.3]));
    }
    let sys = assemble_elastic(&m, &mats, &bc).unwrap();
    let u = sys.solve().unwrap();
    let sol = element_fields(&m, &u, &mats);
    let work: f64 = sys.full_load.iter().zip(&u).map(|(f, x)| f * x).sum();
    let ku = full_elastic_matrix(&m, &mats).matvec(&u);
    let energy: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
    assert!((sol.compliance - work).abs() <= 1e-8 * work.abs());
    assert!((sol.compliance - energy).abs() <= 1e-8 * energy.abs());
    assert!(sol.compliance > 0.0);
}

#[test]
fn unconstrained_elastic_is_singular() {
    let m = unit_square(2);
    let mats = vec![ElementMaterial::new(isotropic_from_engineering(1.0, 0.3)); m.element_count()];
    let bc = ElasticBc {
        dirichlet: vec![],
        neumann: vec![(2, 5, [1.0, 0.0])],
    };
    assert!(matches!(
        solve_elastic(&m, &mats, &bc),
        Err(FemError::SingularAfterBc)
    ));
    let bad = ElasticBc {
        dirichlet: vec![(99, 0, 0.0)],
        neumann: vec![],
    };
    assert!(matches!(
        assemble_elastic(&m, &mats, &bad),
        Err(FemError::InvalidBoundaryCondition(_))
    ));
}

#[test]
fn rigid_motion_has_zero_energy() {
    let m = unit_square(3);
    let mats = vec![ElementMaterial::new(isotropic_from_engineering(1.0, 0.25)); m.element_count()];
    let k = full_elastic_matrix(&m, &mats);
    // translation plus infinitesimal rotation
    let u: Vec<f64> = m
        .nodes
        .iter()
        .flat_map(|p| [0.3 - 0.1 * p[1], -0.2 + 0.1 * p[0]])
        .collect();
    assert!(k.matvec(&u).iter().all(|v| v.abs() < 1e-12));
}
