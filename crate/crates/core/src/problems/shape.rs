//! Hole shape optimization in a biaxially loaded plate. A five-parameter
//! two-segment quadratic Bézier describes the hole in the first quadrant;
//! quarter symmetry closes it. The objective is the peak deviatoric stress
//! outside the (voxelized) hole, evaluated on a coarse or a fine grid.
//!
//! Genotype: `[a, x2, y2, b, psi]` with `(a, 0)` and `(0, b)` the axis
//! endpoints, `(x2, y2)` the middle node and `psi` the tangent angle there.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::material::{isotropic_plane_stress, scaled, Voigt};
use crate::fem::{
    build_mesh, solve_elastic, ElasticBc, ElementMaterial, FemError, Mesh, MeshShape,
};
use crate::problem::{EvalError, Problem};
use crate::types::{Bounds, Evaluation, SolutionVector};

/// Stiffness multiplier of elements inside the hole.
pub const VOID_STIFFNESS: f64 = 1e-6;
/// Points sampled along the quarter boundary.
pub const BOUNDARY_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("spline cannot be sampled: {0}")]
    InvalidSpline(String),
    #[error("boundary polyline intersects itself")]
    SelfIntersecting,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpline {
    /// Radius along the x axis.
    pub a: f64,
    /// Middle node.
    pub node: [f64; 2],
    /// Radius along the y axis.
    pub b: f64,
    /// Tangent angle at the middle node, in `(pi/2, pi)`.
    pub psi: f64,
}

impl HoleSpline {
    pub fn from_vector(x: &[f64]) -> Self {
        Self {
            a: x[0],
            node: [x[1], x[2]],
            b: x[3],
            psi: x[4],
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        vec![self.a, self.node[0], self.node[1], self.b, self.psi]
    }

    /// Spline of the ellipse with semi-axes `a`, `b`: middle node at 45
    /// degrees of the ellipse parameter with the ellipse tangent there.
    pub fn ellipse(a: f64, b: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a,
            node: [a * s, b * s],
            b,
            psi: PI - (b / a).atan(),
        }
    }

    pub fn circle(r: f64) -> Self {
        Self::ellipse(r, r)
    }

    /// The mirror image across the diagonal `y = x`.
    pub fn mirrored(&self) -> Self {
        Self {
            a: self.b,
            node: [self.node[1], self.node[0]],
            b: self.a,
            psi: 1.5 * PI - self.psi,
        }
    }

    /// Control points: on the tangent line through the middle node and on
    /// the lines `x = a` and `y = b`, so the reflected curve is smooth at the axes.
    pub fn controls(&self) -> Result<[[f64; 2]; 2], ShapeError> {
        let (s, c) = self.psi.sin_cos();
        let [x2, y2] = self.node;
        let s1 = (x2 - self.a) / c;
        let s2 = (self.b - y2) / s;
        let c1 = [self.a, y2 - s1 * s];
        let c2 = [x2 + s2 * c, self.b];
        if c1.iter().chain(&c2).all(|v| v.is_finite()) {
            Ok([c1, c2])
        } else {
            Err(ShapeError::InvalidSpline(format!(
                "tangent angle {} leaves control points undefined",
                self.psi
            )))
        }
    }
}

fn bezier(p0: [f64; 2], c: [f64; 2], p2: [f64; 2], t: f64) -> [f64; 2] {
    let u = 1.0 - t;
    [
        u * u * p0[0] + 2.0 * t * u * c[0] + t * t * p2[0],
        u * u * p0[1] + 2.0 * t * u * c[1] + t * t * p2[1],
    ]
}

/// `samples` points from `(a, 0)` to `(0, b)`, parameters spread evenly over
/// both segments.
pub fn quarter_boundary(spline: &HoleSpline, samples: usize) -> Result<Vec<[f64; 2]>, ShapeError> {
    if samples < 3 {
        return Err(ShapeError::InvalidSpline(format!("{samples} samples")));
    }
    if ![
        spline.a,
        spline.b,
        spline.node[0],
        spline.node[1],
        spline.psi,
    ]
    .iter()
    .all(|v| v.is_finite())
    {
        return Err(ShapeError::InvalidSpline("non-finite parameter".into()));
    }
    let [c1, c2] = spline.controls()?;
    let (p0, p1, p2) = ([spline.a, 0.0], spline.node, [0.0, spline.b]);
    Ok((0..samples)
        .map(|k| {
            let u = 2.0 * k as f64 / (samples - 1) as f64;
            if k == samples - 1 {
                p2
            } else if u < 1.0 {
                bezier(p0, c1, p1, u)
            } else {
                bezier(p1, c2, p2, u - 1.0)
            }
        })
        .collect())
}

/// Closed counterclockwise hole boundary: the quarter curve reflected into
/// the other quadrants (no repeated points).
pub fn hole_boundary(spline: &HoleSpline, samples: usize) -> Result<Vec<[f64; 2]>, ShapeError> {
    let q = quarter_boundary(spline, samples)?;
    let n = q.len();
    let mut out = Vec::with_capacity(4 * (n - 1));
    out.extend(q[..n - 1].iter().copied());
    out.extend(q[1..].iter().rev().map(|p| [-p[0], p[1]]));
    out.extend(q[..n - 1].iter().map(|p| [-p[0], -p[1]]));
    out.extend(q[1..].iter().rev().map(|p| [p[0], -p[1]]));
    out.dedup();
    Ok(out)
}

fn segments_cross(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let (d1, d2) = (orient(r, s, p), orient(r, s, q));
    let (d3, d4) = (orient(p, q, r), orient(p, q, s));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Proper crossings between non-adjacent edges of a closed polyline.
pub fn self_intersections(poly: &[[f64; 2]]) -> usize {
    let n = poly.len();
    let mut count = 0;
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                count += 1;
            }
        }
    }
    count
}

/// Shoelace area of a closed polyline.
pub fn enclosed_area(poly: &[[f64; 2]]) -> Result<f64, ShapeError> {
    if self_intersections(poly) > 0 {
        return Err(ShapeError::SelfIntersecting);
    }
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    Ok(0.5 * twice.abs())
}

/// Graded validity violation: the summed bound exceedances of the radii,
/// the middle node and the tangent angle; when those are all in range, the
/// number of self-intersections of the sampled boundary instead.
pub fn validity(spline: &HoleSpline, half_width: f64) -> f64 {
    let range = |v: f64, lo: f64, hi: f64| (lo - v).max(0.0) + (v - hi).max(0.0);
    let v = range(spline.a, 0.0, half_width)
        + range(spline.b, 0.0, half_width)
        + range(spline.node[0], 0.0, half_width)
        + range(spline.node[1], 0.0, half_width)
        + range(spline.psi, FRAC_PI_2, PI);
    if v > 0.0 || v.is_nan() {
        return if v.is_nan() { 1.0 } else { v };
    }
    match hole_boundary(spline, BOUNDARY_SAMPLES) {
        Ok(poly) => self_intersections(&poly) as f64,
        Err(_) => 1.0,
    }
}

fn inside_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1])
            && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn default_lambda() -> f64 {
    51e9
}
fn default_mu() -> f64 {
    26e9
}
fn default_half_width() -> f64 {
    1.0
}
fn default_traction() -> [f64; 2] {
    [1e6, 1e6]
}
fn default_area() -> f64 {
    0.25
}
fn default_grids() -> Vec<usize> {
    vec![32, 96]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Half-width of the square plate; the model covers one quarter.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    /// Tractions on the outer edges `x = L` (along x) and `y = L` (along y), N/m.
    #[serde(default = "default_traction")]
    pub traction: [f64; 2],
    /// Smallest admissible hole area (full hole, m^2).
    #[serde(default = "default_area")]
    pub min_area: f64,
    /// Elements per side of the quarter plate, one entry per fidelity level.
    #[serde(default = "default_grids")]
    pub grids: Vec<usize>,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            mu: default_mu(),
            half_width: default_half_width(),
            traction: default_traction(),
            min_area: default_area(),
            grids: default_grids(),
        }
    }
}

struct Level {
    mesh: Mesh,
    bc: ElasticBc,
}

pub struct ShapeProblem {
    config: ShapeConfig,
    material: Voigt,
    levels: Vec<Level>,
    bounds: Bounds,
}

/// Per-level detail of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEvaluation {
    pub max_deviatoric: f64,
    pub area: f64,
    pub validity: f64,
    pub void_elements: usize,
    /// Element attaining the maximum.
    pub critical_element: usize,
}

impl ShapeProblem {
    pub fn new(config: ShapeConfig) -> Result<Self, ShapeError> {
        if !(config.mu > 0.0 && config.lambda + config.mu > 0.0) {
            return Err(ShapeError::InvalidConfig(format!(
                "lambda {} and mu {} are not admissible",
                config.lambda, config.mu
            )));
        }
        if !(config.half_width > 0.0) || config.grids.is_empty() || config.grids.contains(&0) {
            return Err(ShapeError::InvalidConfig(
                "need a positive half-width and at least one grid".into(),
            ));
        }
        if !(config.min_area >= 0.0) || !config.traction.iter().all(|t| t.is_finite()) {
            return Err(ShapeError::InvalidConfig(
                "min_area and tractions must be finite, min_area >= 0".into(),
            ));
        }
        let l = config.half_width;
        let levels = config
            .grids
            .iter()
            .map(|&n| {
                let mesh = build_mesh(MeshShape::Rectangle {
                    nx: n,
                    ny: n,
                    w: l,
                    h: l,
                })?;
                let id = |i: usize, j: usize| j * (n + 1) + i;
                let mut bc = ElasticBc::default();
                for k in 0..=n {
                    bc.dirichlet.push((id(0, k), 0, 0.0));
                    bc.dirichlet.push((id(k, 0), 1, 0.0));
                }
                for k in 0..n {
                    bc.neumann
                        .push((id(n, k), id(n, k + 1), [config.traction[0], 0.0]));
                    bc.neumann
                        .push((id(k, n), id(k + 1, n), [0.0, config.traction[1]]));
                }
                Ok(Level { mesh, bc })
            })
            .collect::<Result<Vec<_>, FemError>>()?;
        let upper = vec![l, l, l, l, PI];
        let bounds =
            Bounds::new(vec![0.0, 0.0, 0.0, 0.0, FRAC_PI_2], upper).expect("ordered bounds");
        let material = isotropic_plane_stress(config.lambda, config.mu);
        Ok(Self {
            config,
            material,
            levels,
            bounds,
        })
    }

    pub fn config(&self) -> &ShapeConfig {
        &self.config
    }

    pub fn mesh(&self, fidelity: usize) -> &Mesh {
        &self.levels[fidelity].mesh
    }

    /// Full evaluation detail at `fidelity`. An unsampleable spline is
    /// evaluated as a plate without a hole; its validity violation flags it.
    pub fn evaluate_detail(
        &self,
        spline: &HoleSpline,
        fidelity: usize,
    ) -> Result<ShapeEvaluation, ShapeError> {
        let level = &self.levels[fidelity];
        let validity = validity(spline, self.config.half_width);
        let quarter = quarter_boundary(spline, BOUNDARY_SAMPLES).ok();
        let area = match hole_boundary(spline, BOUNDARY_SAMPLES) {
            Ok(poly) => enclosed_area(&poly).unwrap_or(0.0),
            Err(_) => 0.0,
        };
        // region enclosed by the axes and the quarter curve
        let region: Option<Vec<[f64; 2]>> = quarter.map(|q| {
            let mut r = vec![[0.0, 0.0]];
            r.extend(q);
            r
        });
        let void: Vec<bool> = level
            .mesh
            .centroids()
            .iter()
            .map(|c| region.as_ref().is_some_and(|r| inside_polygon(r, *c)))
            .collect();
        let mats: Vec<ElementMaterial> = void
            .iter()
            .map(|&v| {
                ElementMaterial::new(if v {
                    scaled(&self.material, VOID_STIFFNESS)
                } else {
                    self.material
                })
            })
            .collect();
        let sol = solve_elastic(&level.mesh, &mats, &level.bc)?;
        let norms = sol.deviatoric_norms();
        let (critical_element, max_deviatoric) =
            norms.iter().enumerate().filter(|(e, _)| !void[*e]).fold(
                (0, 0.0_f64),
                |best, (e, v)| if *v > best.1 { (e, *v) } else { best },
            );
        Ok(ShapeEvaluation {
            max_deviatoric,
            area,
            validity,
            void_elements: void.iter().filter(|v| **v).count(),
            critical_element,
        })
    }

    pub fn write_boundary<W: Write>(spline: &HoleSpline, out: W) -> io::Result<()> {
        let poly = hole_boundary(spline, BOUNDARY_SAMPLES).map_err(io::Error::other)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y"])?;
        for p in poly {
            w.write_record([p[0].to_string(), p[1].to_string()])?;
        }
        w.flush()
    }
}

impl Problem for ShapeProblem {
    fn id(&self) -> &str {
        "shape"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn fidelity_levels(&self) -> usize {
        self.levels.len()
    }

    fn hard_constraint_names(&self) -> Vec<String> {
        vec!["min_area".into(), "validity".into()]
    }

    /// The circle whose area is 1.5 times the minimum.
    fn seeds(&self) -> Vec<SolutionVector> {
        let r = (1.5 * self.config.min_area / PI)
            .sqrt()
            .min(0.5 * self.config.half_width);
        vec![SolutionVector::from_finite(
            HoleSpline::circle(r).to_vector(),
        )]
    }

    fn evaluate_raw(&self, x: &[f64], fidelity: usize) -> Result<Evaluation, EvalError> {
        let d = self
            .evaluate_detail(&HoleSpline::from_vector(x), fidelity)
            .map_err(|e| EvalError::problem("shape", e))?;
        Ok(Evaluation {
            objective: d.max_deviatoric,
            hard_violations: vec![(self.config.min_area - d.area).max(0.0), d.validity],
            soft_penalties: vec![],
        })
    }
}

/// The probe designs used to compare fidelity levels, one spline per line of
/// the bundled fixture (`name,a,x2,y2,b,psi`).
pub fn probe_designs() -> Vec<(String, HoleSpline)> {
    include_str!("../../data/shape_probes.csv")
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let v: Vec<f64> = f[1..]
                .iter()
                .map(|s| s.trim().parse().expect("fixture value"))
                .collect();
            (f[0].to_string(), HoleSpline::from_vector(&v))
        })
        .collect()
}

/// Kendall rank correlation (tau-a) of two equally long score lists.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((a[i] - a[j]) * (b[i] - b[j])).signum();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests;
