//! Plane-stress stiffness matrices in Voigt form `[s11, s22, s12] = C [e11, e22, 2 e12]`.

pub type Voigt = [[f64; 3]; 3];

/// Isotropic law `sigma = lambda tr(eps) I + 2 mu eps` under plane stress
/// (`sigma33 = 0`), which replaces lambda by `2 lambda mu / (lambda + 2 mu)`.
pub fn isotropic_plane_stress(lambda: f64, mu: f64) -> Voigt {
    let ls = 2.0 * lambda * mu / (lambda + 2.0 * mu);
    [
        [ls + 2.0 * mu, ls, 0.0],
        [ls, ls + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ]
}

/// Isotropic plane stress from Young's modulus and Poisson ratio.
pub fn isotropic_from_engineering(e: f64, nu: f64) -> Voigt {
    let c = e / (1.0 - nu * nu);
    [
        [c, c * nu, 0.0],
        [c * nu, c, 0.0],
        [0.0, 0.0, e / (2.0 * (1.0 + nu))],
    ]
}

/// Orthotropic lamina stiffness (fibre direction = axis 1).
pub fn orthotropic_plane_stress(e1: f64, e2: f64, nu12: f64, g12: f64) -> Voigt {
    let nu21 = nu12 * e2 / e1;
    let d = 1.0 - nu12 * nu21;
    [
        [e1 / d, nu12 * e2 / d, 0.0],
        [nu12 * e2 / d, e2 / d, 0.0],
        [0.0, 0.0, g12],
    ]
}

/// Engineering-strain transform from the global frame into a material frame
/// whose axis 1 is rotated by `theta` from the global x axis.
pub fn strain_to_material(theta: f64) -> Voigt {
    let (s, c) = theta.sin_cos();
    [
        [c * c, s * s, c * s],
        [s * s, c * c, -c * s],
        [-2.0 * c * s, 2.0 * c * s, c * c - s * s],
    ]
}

/// Global-frame stiffness of a material frame rotated by `theta`:
/// `C_glob = T^T C T` with `T = strain_to_material(theta)`.
pub fn rotate_voigt(c: &Voigt, theta: f64) -> Voigt {
    let t = strain_to_material(theta);
    let mut ct = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ct[i][j] = (0..3).map(|k| c[i][k] * t[k][j]).sum();
        }
    }
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| t[k][i] * ct[k][j]).sum();
        }
    }
    // symmetrize round-off
    for i in 0..3 {
        for j in i + 1..3 {
            let m = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = m;
            out[j][i] = m;
        }
    }
    out
}

/// Stress in the material frame rotated by `theta`.
pub fn stress_to_material(sigma: [f64; 3], theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let [sx, sy, txy] = sigma;
    [
        c * c * sx + s * s * sy + 2.0 * c * s * txy,
        s * s * sx + c * c * sy - 2.0 * c * s * txy,
        -c * s * sx + c * s * sy + (c * c - s * s) * txy,
    ]
}

pub fn apply(c: &Voigt, v: [f64; 3]) -> [f64; 3] {
    [
        c[0][0] * v[0] + c[0][1] * v[1] + c[0][2] * v[2],
        c[1][0] * v[0] + c[1][1] * v[1] + c[1][2] * v[2],
        c[2][0] * v[0] + c[2][1] * v[1] + c[2][2] * v[2],
    ]
}

pub fn scaled(c: &Voigt, k: f64) -> Voigt {
    c.map(|row| row.map(|v| v * k))
}

pub fn add_scaled(acc: &mut Voigt, c: &Voigt, k: f64) {
    for i in 0..3 {
        for j in 0..3 {
            acc[i][j] += k * c[i][j];
        }
    }
}

/// Smallest eigenvalue of a symmetric 3x3 matrix (closed-form trigonometric method).
pub fn min_eigenvalue(c: &Voigt) -> f64 {
    let p1 = c[0][1].powi(2) + c[0][2].powi(2) + c[1][2].powi(2);
    let q = (c[0][0] + c[1][1] + c[2][2]) / 3.0;
    if p1 == 0.0 {
        return c[0][0].min(c[1][1]).min(c[2][2]);
    }
    let p2 = (c[0][0] - q).powi(2) + (c[1][1] - q).powi(2) + (c[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (c[i][j] - if i == j { q } else { 0.0 }) / p;
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

pub fn is_spd(c: &Voigt) -> bool {
    let symmetric =
        (0..3).all(|i| (0..3).all(|j| (c[i][j] - c[j][i]).abs() <= 1e-12 * c[i][i].abs().max(1.0)));
    symmetric && min_eigenvalue(c) > 0.0
}

/// Frobenius norm of the 3D deviatoric stress for a plane-stress state
/// (`sigma33 = 0`).
pub fn deviatoric_norm(sigma: [f64; 3]) -> f64 {
    let [s11, s22, s12] = sigma;
    let mean = (s11 + s22) / 3.0;
    let (d11, d22, d33) = (s11 - mean, s22 - mean, -mean);
    (d11 * d11 + d22 * d22 + d33 * d33 + 2.0 * s12 * s12).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Classical lamination theory closed form for an orthotropic layer.
    fn qbar_oracle(q: &Voigt, theta: f64) -> Voigt {
        let (s, c) = theta.sin_cos();
        let (q11, q12, q22, q66) = (q[0][0], q[0][1], q[1][1], q[2][2]);
        let b11 = q11 * c.powi(4) + 2.0 * (q12 + 2.0 * q66) * s * s * c * c + q22 * s.powi(4);
        let b22 = q11 * s.powi(4) + 2.0 * (q12 + 2.0 * q66) * s * s * c * c + q22 * c.powi(4);
        let b12 = (q11 + q22 - 4.0 * q66) * s * s * c * c + q12 * (s.powi(4) + c.powi(4));
        let b66 =
            (q11 + q22 - 2.0 * q12 - 2.0 * q66) * s * s * c * c + q66 * (s.powi(4) + c.powi(4));
        let b16 = (q11 - q12 - 2.0 * q66) * s * c.powi(3) + (q12 - q22 + 2.0 * q66) * s.powi(3) * c;
        let b26 = (q11 - q12 - 2.0 * q66) * s.powi(3) * c + (q12 - q22 + 2.0 * q66) * s * c.powi(3);
        [[b11, b12, b16], [b12, b22, b26], [b16, b26, b66]]
    }

    fn close(a: &Voigt, b: &Voigt, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn isotropic_is_spd() {
        assert!(is_spd(&isotropic_plane_stress(1.0, 1.0)));
        assert!(is_spd(&isotropic_plane_stress(-0.5, 1.0)));
        assert!(!is_spd(&isotropic_plane_stress(1.0, -1.0)));
        // lambda, mu from E, nu reproduce the engineering form
        let (e, nu) = (210.0, 0.3);
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        assert!(close(
            &isotropic_plane_stress(lambda, mu),
            &isotropic_from_engineering(e, nu),
            1e-10
        ));
    }

    #[test]
    fn rotation_matches_lamination_theory() {
        let q = orthotropic_plane_stress(140.0, 10.0, 0.3, 5.0);
        for theta in [0.0, 0.3, -1.1, FRAC_PI_2, 2.5] {
            assert!(close(
                &rotate_voigt(&q, theta),
                &qbar_oracle(&q, theta),
                1e-9
            ));
        }
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        let q = orthotropic_plane_stress(140.0, 10.0, 0.3, 5.0);
        let r = rotate_voigt(&q, FRAC_PI_2);
        assert!((r[0][0] - q[1][1]).abs() < 1e-9);
        assert!((r[1][1] - q[0][0]).abs() < 1e-9);
        assert!((r[2][2] - q[2][2]).abs() < 1e-9);
    }

    #[test]
    fn half_turn_is_identity() {
        let q = orthotropic_plane_stress(140.0, 10.0, 0.3, 5.0);
        for theta in [0.2, 1.0, -0.7] {
            assert!(close(
                &rotate_voigt(&q, theta + PI),
                &rotate_voigt(&q, theta),
                1e-9
            ));
        }
    }

    #[test]
    fn stress_rotation_consistent_with_energy() {
        // sigma_glob . eps_glob == sigma_mat . eps_mat
        let c = orthotropic_plane_stress(140.0, 10.0, 0.3, 5.0);
        let theta = 0.6;
        let cg = rotate_voigt(&c, theta);
        let eps = [1e-3, -2e-4, 5e-4];
        let sg = apply(&cg, eps);
        let em = apply(&strain_to_material(theta), eps);
        let sm = stress_to_material(sg, theta);
        let sm2 = apply(&c, em);
        for k in 0..3 {
            assert!((sm[k] - sm2[k]).abs() < 1e-9 * sm2[k].abs().max(1e-6));
        }
    }

    #[test]
    fn deviatoric_norms() {
        let p = 3.0;
        assert!((deviatoric_norm([p, p, 0.0]) - p * (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((deviatoric_norm([p, 0.0, 0.0]) - p * (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((deviatoric_norm([0.0, 0.0, 1.0]) - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_of_diagonal_and_dense() {
        assert_eq!(
            min_eigenvalue(&[[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]),
            1.0
        );
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
    }
}
