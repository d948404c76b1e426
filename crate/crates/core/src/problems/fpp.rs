//! Fibre patch placement: rectangular orthotropic patches laid on a plate
//! define a variable-stiffness laminate whose compliance is minimized,
//! subject to strength and containment constraints and a penalty on
//! thickness jumps.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::material::{
    add_scaled, isotropic_from_engineering, orthotropic_plane_stress, rotate_voigt, scaled,
    stress_to_material, Voigt,
};
use crate::fem::{
    build_mesh, solve_elastic, ElasticBc, ElasticSolution, ElementMaterial, FemError, Mesh,
    MeshShape,
};
use crate::problem::{EvalError, Problem};
use crate::types::{Bounds, Evaluation, SolutionVector};

/// Stiffness multiplier for elements no patch covers.
pub const VOID_STIFFNESS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FppError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("design has {got} coordinates, expected a multiple of 3")]
    DesignLength { got: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Ply strengths (Pa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrengthLimits {
    pub xt: f64,
    pub xc: f64,
    pub yt: f64,
    pub yc: f64,
    /// In-plane shear strength; also used as the transverse shear strength.
    pub s: f64,
}

impl Default for StrengthLimits {
    fn default() -> Self {
        Self {
            xt: 1500e6,
            xc: 1200e6,
            yt: 50e6,
            yc: 250e6,
            s: 70e6,
        }
    }
}

impl StrengthLimits {
    pub fn validate(&self) -> Result<(), FppError> {
        if [self.xt, self.xc, self.yt, self.yc, self.s]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            Ok(())
        } else {
            Err(FppError::InvalidConfig(format!(
                "strengths must be positive: {self:?}"
            )))
        }
    }
}

/// Plane-stress Hashin index of a material-frame stress `[s11, s22, s12]`:
/// the largest active mode; failure at 1.
pub fn hashin_index(sigma: [f64; 3], lim: &StrengthLimits) -> f64 {
    let [s11, s22, s12] = sigma;
    let shear = (s12 / lim.s).powi(2);
    let fibre = if s11 >= 0.0 {
        (s11 / lim.xt).powi(2) + shear
    } else {
        (s11 / lim.xc).powi(2)
    };
    let matrix = if s22 >= 0.0 {
        (s22 / lim.yt).powi(2) + shear
    } else {
        let st = lim.s;
        (s22 / (2.0 * st)).powi(2) + ((lim.yc / (2.0 * st)).powi(2) - 1.0) * s22 / lim.yc + shear
    };
    fibre.max(matrix)
}

/// Lamina elastic constants (Pa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lamina {
    pub e1: f64,
    pub e2: f64,
    pub nu12: f64,
    pub g12: f64,
}

impl Default for Lamina {
    fn default() -> Self {
        Self {
            e1: 135e9,
            e2: 10e9,
            nu12: 0.3,
            g12: 5e9,
        }
    }
}

impl Lamina {
    pub fn stiffness(&self) -> Voigt {
        orthotropic_plane_stress(self.e1, self.e2, self.nu12, self.g12)
    }
}

/// One placed patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub center: [f64; 2],
    pub theta: f64,
    pub thickness: f64,
    /// Extent along the fibre direction.
    pub length: f64,
    /// Extent across the fibres.
    pub width: f64,
}

impl Patch {
    /// Patch-frame coordinates of a global point.
    fn local(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1]]
    }

    pub fn covers(&self, p: [f64; 2]) -> bool {
        let q = self.local(p);
        q[0].abs() <= 0.5 * self.length && q[1].abs() <= 0.5 * self.width
    }

    /// 4x4 sample points spanning the patch corner to corner.
    pub fn samples(&self) -> Vec<[f64; 2]> {
        let (s, c) = self.theta.sin_cos();
        let mut out = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                let u = (i as f64 / 3.0 - 0.5) * self.length;
                let v = (j as f64 / 3.0 - 0.5) * self.width;
                out.push([
                    self.center[0] + c * u - s * v,
                    self.center[1] + s * u + c * v,
                ]);
            }
        }
        out
    }
}

/// Circular cut-out in the plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hole {
    pub center: [f64; 2],
    pub radius: f64,
}

fn default_plate() -> [f64; 2] {
    [0.4, 0.2]
}
fn default_grid() -> [usize; 2] {
    [32, 16]
}
fn default_patches() -> usize {
    8
}
fn default_patch_size() -> [f64; 2] {
    [0.15, 0.1]
}
fn default_thickness() -> f64 {
    2e-3
}
fn default_traction() -> f64 {
    5e4
}
fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FppConfig {
    /// Plate width and height (m).
    #[serde(default = "default_plate")]
    pub plate: [f64; 2],
    /// Elements along x and y.
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_patches")]
    pub patches: usize,
    /// Patch length (along fibres) and width (m).
    #[serde(default = "default_patch_size")]
    pub patch_size: [f64; 2],
    /// Ply thickness of every patch (m).
    #[serde(default = "default_thickness")]
    pub thickness: f64,
    #[serde(default)]
    pub lamina: Lamina,
    #[serde(default)]
    pub strength: StrengthLimits,
    /// Line load on the right edge along +x (N/m); the left edge is clamped.
    #[serde(default = "default_traction")]
    pub traction: f64,
    #[serde(default)]
    pub hole: Option<Hole>,
    /// Weight of the thickness-jump penalty.
    #[serde(default = "default_weight")]
    pub jump_weight: f64,
}

impl Default for FppConfig {
    fn default() -> Self {
        Self {
            plate: default_plate(),
            grid: default_grid(),
            patches: default_patches(),
            patch_size: default_patch_size(),
            thickness: default_thickness(),
            lamina: Lamina::default(),
            strength: StrengthLimits::default(),
            traction: default_traction(),
            hole: None,
            jump_weight: default_weight(),
        }
    }
}

impl FppConfig {
    pub fn validate(&self) -> Result<(), FppError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.plate.iter().all(|v| positive(*v)) || !self.patch_size.iter().all(|v| positive(*v))
        {
            return Err(FppError::InvalidConfig(
                "plate and patch sizes must be positive".into(),
            ));
        }
        if self.patches == 0 || self.grid.contains(&0) {
            return Err(FppError::InvalidConfig(
                "need at least one patch and one element per axis".into(),
            ));
        }
        if !positive(self.thickness) || !self.traction.is_finite() || !(self.jump_weight >= 0.0) {
            return Err(FppError::InvalidConfig(
                "thickness, traction or jump weight out of range".into(),
            ));
        }
        let l = &self.lamina;
        if !positive(l.e1)
            || !positive(l.e2)
            || !positive(l.g12)
            || !(l.nu12 * l.nu12 * l.e2 / l.e1 < 1.0)
        {
            return Err(FppError::InvalidConfig(format!(
                "lamina constants {l:?} are not positive definite"
            )));
        }
        self.strength.validate()
    }
}

/// Per-element laminate stiffness and thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessField {
    pub materials: Vec<ElementMaterial>,
    /// Summed patch thickness `T` per element (0 where uncovered).
    pub thickness: Vec<f64>,
    /// Covering patch indices per element.
    pub cover: Vec<Vec<usize>>,
}

/// Plate, loads and patch material shared by every evaluation.
pub struct FppProblem {
    config: FppConfig,
    mesh: Mesh,
    bc: ElasticBc,
    ply: Voigt,
    reference: Voigt,
    in_hole: Vec<bool>,
    bounds: Bounds,
}

impl FppProblem {
    pub fn new(config: FppConfig) -> Result<Self, FppError> {
        config.validate()?;
        let [w, h] = config.plate;
        let [nx, ny] = config.grid;
        let mesh = build_mesh(MeshShape::Rectangle { nx, ny, w, h })?;
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut bc = ElasticBc::default();
        for j in 0..=ny {
            bc.dirichlet.push((id(0, j), 0, 0.0));
            bc.dirichlet.push((id(0, j), 1, 0.0));
        }
        for j in 0..ny {
            bc.neumann
                .push((id(nx, j), id(nx, j + 1), [config.traction, 0.0]));
        }
        let in_hole = mesh
            .centroids()
            .iter()
            .map(|c| config.hole.is_some_and(|hole| in_circle(&hole, *c)))
            .collect();
        let mut lower = Vec::with_capacity(3 * config.patches);
        let mut upper = Vec::with_capacity(3 * config.patches);
        for _ in 0..config.patches {
            lower.extend([0.0, 0.0, -std::f64::consts::FRAC_PI_2]);
            upper.extend([w, h, std::f64::consts::FRAC_PI_2]);
        }
        let bounds = Bounds::new(lower, upper).expect("ordered bounds");
        let ply = config.lamina.stiffness();
        let reference = isotropic_from_engineering(config.lamina.e2, 0.3);
        Ok(Self {
            config,
            mesh,
            bc,
            ply,
            reference,
            in_hole,
            bounds,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn config(&self) -> &FppConfig {
        &self.config
    }

    pub fn bc(&self) -> &ElasticBc {
        &self.bc
    }

    /// Patches encoded by `(x_1, y_1, theta_1, ..., x_N, y_N, theta_N)`.
    pub fn decode(&self, x: &[f64]) -> Result<Vec<Patch>, FppError> {
        if x.len() % 3 != 0 {
            return Err(FppError::DesignLength { got: x.len() });
        }
        let [length, width] = self.config.patch_size;
        Ok(x.chunks(3)
            .map(|c| Patch {
                center: [c[0], c[1]],
                theta: c[2],
                thickness: self.config.thickness,
                length,
                width,
            })
            .collect())
    }

    /// Equal-strain laminate `C = sum_i (t_i / T) rot(C_i, theta_i)`, `T = sum_i t_i`
    /// over the patches covering each element centroid. Uncovered and hole
    /// elements get `VOID_STIFFNESS` times an isotropic reference at ply thickness.
    pub fn stiffness_field(&self, patches: &[Patch]) -> StiffnessField {
        let void = ElementMaterial {
            c: scaled(&self.reference, VOID_STIFFNESS),
            thickness: self.config.thickness,
        };
        let rotated: Vec<Voigt> = patches
            .iter()
            .map(|p| rotate_voigt(&self.ply, p.theta))
            .collect();
        let mut field = StiffnessField {
            materials: Vec::new(),
            thickness: Vec::new(),
            cover: Vec::new(),
        };
        for (e, c) in self.mesh.centroids().into_iter().enumerate() {
            let cover: Vec<usize> = if self.in_hole[e] {
                Vec::new()
            } else {
                (0..patches.len())
                    .filter(|&i| patches[i].covers(c))
                    .collect()
            };
            let t: f64 = cover.iter().map(|&i| patches[i].thickness).sum();
            if cover.is_empty() {
                field.materials.push(void);
            } else {
                let mut acc = [[0.0; 3]; 3];
                for &i in &cover {
                    add_scaled(&mut acc, &rotated[i], patches[i].thickness / t);
                }
                field.materials.push(ElementMaterial {
                    c: acc,
                    thickness: t,
                });
            }
            field.thickness.push(t);
            field.cover.push(cover);
        }
        field
    }

    fn inside_domain(&self, p: [f64; 2]) -> bool {
        let [w, h] = self.config.plate;
        let inside = p[0] >= 0.0 && p[0] <= w && p[1] >= 0.0 && p[1] <= h;
        inside
            && !self
                .config
                .hole
                .is_some_and(|hole| in_circle(&hole, p) && !on_circle(&hole, p))
    }

    /// Sum over patches of the sampled fraction of patch area outside the plate.
    pub fn position_violation(&self, patches: &[Patch]) -> f64 {
        patches
            .iter()
            .map(|p| {
                let s = p.samples();
                s.iter().filter(|q| !self.inside_domain(**q)).count() as f64 / s.len() as f64
            })
            .sum()
    }

    /// `max(0, max_e f_e - 1)` with `f_e` the largest Hashin index over the
    /// plies covering element `e`, each ply strained like the laminate.
    pub fn strength_violation(
        &self,
        patches: &[Patch],
        field: &StiffnessField,
        sol: &ElasticSolution,
    ) -> f64 {
        max_failure_index(patches, field, sol, &self.ply, &self.config.strength)
            .map_or(0.0, |f| (f - 1.0).max(0.0))
    }

    /// `sum |T(a) - T(b)| * shared edge length` over adjacent element pairs.
    pub fn thickness_jump(&self, field: &StiffnessField) -> f64 {
        self.mesh
            .adjacent_pairs()
            .iter()
            .map(|&(a, b, len)| (field.thickness[a] - field.thickness[b]).abs() * len)
            .sum()
    }

    pub fn solve(&self, field: &StiffnessField) -> Result<ElasticSolution, FemError> {
        solve_elastic(&self.mesh, &field.materials, &self.bc)
    }

    /// Hard `[position, strength]` and soft `[thickness jump]` report.
    pub fn constraint_report(
        &self,
        patches: &[Patch],
        field: &StiffnessField,
        sol: &ElasticSolution,
    ) -> (Vec<f64>, Vec<f64>) {
        (
            vec![
                self.position_violation(patches),
                self.strength_violation(patches, field, sol),
            ],
            vec![self.thickness_jump(field)],
        )
    }

    pub fn evaluate_design(&self, x: &[f64]) -> Result<Evaluation, FppError> {
        let patches = self.decode(x)?;
        let field = self.stiffness_field(&patches);
        let sol = self.solve(&field)?;
        let (hard, soft) = self.constraint_report(&patches, &field, &sol);
        Ok(Evaluation {
            objective: sol.compliance,
            hard_violations: hard,
            soft_penalties: soft,
        })
    }

    /// Patch centres on a regular grid, inset so unrotated patches stay on
    /// the plate where they fit.
    pub fn grid_layout(&self) -> Vec<[f64; 2]> {
        let [w, h] = self.config.plate;
        let [pl, pw] = self.config.patch_size;
        let n = self.config.patches;
        let rows = ((n as f64 * h / w).sqrt().round() as usize).clamp(1, n);
        let cols = n.div_ceil(rows);
        let axis = |k: usize, count: usize, span: f64, size: f64| {
            let (lo, hi) = if size < span {
                (0.5 * size, span - 0.5 * size)
            } else {
                (0.5 * span, 0.5 * span)
            };
            if count == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            }
        };
        (0..n)
            .map(|k| [axis(k % cols, cols, w, pl), axis(k / cols, rows, h, pw)])
            .collect()
    }

    /// Fibre angles along the major principal stress direction of the
    /// homogeneous isotropic plate at each grid-layout centre.
    pub fn principal_stress_seed(&self) -> Result<SolutionVector, FppError> {
        let mats: Vec<ElementMaterial> = self
            .in_hole
            .iter()
            .map(|&hole| {
                let c = if hole {
                    scaled(&self.reference, VOID_STIFFNESS)
                } else {
                    self.reference
                };
                ElementMaterial {
                    c,
                    thickness: self.config.thickness,
                }
            })
            .collect();
        let sol = solve_elastic(&self.mesh, &mats, &self.bc)?;
        let mut x = Vec::with_capacity(3 * self.config.patches);
        for c in self.grid_layout() {
            let e = self.mesh.locate(c).unwrap_or(0);
            x.extend([c[0], c[1], principal_angle(sol.stress[e])]);
        }
        Ok(SolutionVector::from_finite(x))
    }

    pub fn write_design<W: Write>(&self, x: &[f64], out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["patch", "x", "y", "theta"])?;
        for (i, c) in x.chunks(3).enumerate() {
            w.write_record([
                i.to_string(),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
            ])?;
        }
        w.flush()
    }

    /// Per-element centroid, thickness and stiffness entries.
    pub fn write_field<W: Write>(&self, field: &StiffnessField, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "element",
            "cx",
            "cy",
            "thickness",
            "c11",
            "c22",
            "c12",
            "c66",
            "c16",
            "c26",
        ])?;
        for (e, m) in field.materials.iter().enumerate() {
            let c = self.mesh.centroid(e);
            let v = [
                c[0],
                c[1],
                field.thickness[e],
                m.c[0][0],
                m.c[1][1],
                m.c[0][1],
                m.c[2][2],
                m.c[0][2],
                m.c[1][2],
            ];
            let mut row = vec![e.to_string()];
            row.extend(v.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

fn in_circle(hole: &Hole, p: [f64; 2]) -> bool {
    (p[0] - hole.center[0]).hypot(p[1] - hole.center[1]) <= hole.radius
}

fn on_circle(hole: &Hole, p: [f64; 2]) -> bool {
    ((p[0] - hole.center[0]).hypot(p[1] - hole.center[1]) - hole.radius).abs()
        <= 1e-12 * hole.radius
}

/// Angle in `(-pi/2, pi/2]` of the principal direction with the largest
/// absolute principal stress.
pub fn principal_angle(sigma: [f64; 3]) -> f64 {
    let [sx, sy, txy] = sigma;
    let a = 0.5 * (2.0 * txy).atan2(sx - sy);
    let mean = 0.5 * (sx + sy);
    let r = (0.25 * (sx - sy).powi(2) + txy * txy).sqrt();
    // `a` points at the larger principal stress; switch if the smaller one dominates in magnitude
    let mut angle = if (mean + r).abs() >= (mean - r).abs() {
        a
    } else {
        a + std::f64::consts::FRAC_PI_2
    };
    if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    angle
}

/// Largest Hashin index over all covered elements and their plies; `None`
/// when nothing is covered.
pub fn max_failure_index(
    patches: &[Patch],
    field: &StiffnessField,
    sol: &ElasticSolution,
    ply: &Voigt,
    limits: &StrengthLimits,
) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (e, cover) in field.cover.iter().enumerate() {
        let eps = sol.strain[e];
        let eng = [eps[0], eps[1], 2.0 * eps[2]];
        for &i in cover {
            let c = rotate_voigt(ply, patches[i].theta);
            let global = crate::fem::material::apply(&c, eng);
            let f = hashin_index(stress_to_material(global, patches[i].theta), limits);
            worst = Some(worst.map_or(f, |w: f64| w.max(f)));
        }
    }
    worst
}

impl Problem for FppProblem {
    fn id(&self) -> &str {
        "fpp"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn hard_constraint_names(&self) -> Vec<String> {
        vec!["position".into(), "strength".into()]
    }

    fn soft_constraint_names(&self) -> Vec<String> {
        vec!["thickness_jump".into()]
    }

    fn soft_weights(&self) -> Vec<f64> {
        vec![self.config.jump_weight]
    }

    fn seeds(&self) -> Vec<SolutionVector> {
        let mut out = Vec::new();
        if let Ok(s) = self.principal_stress_seed() {
            out.push(s);
        }
        let aligned: Vec<f64> = self
            .grid_layout()
            .iter()
            .flat_map(|c| [c[0], c[1], 0.0])
            .collect();
        out.push(SolutionVector::from_finite(aligned));
        out
    }

    fn evaluate_raw(&self, x: &[f64], _fidelity: usize) -> Result<Evaluation, EvalError> {
        self.evaluate_design(x)
            .map_err(|e| EvalError::problem("fpp", e))
    }
}

#[cfg(test)]
mod tests;
