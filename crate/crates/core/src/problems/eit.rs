//! Electrical impedance tomography: adjacent-drive measurement schedules,
//! point-electrode FEM forward voltages on a disk and a least-squares
//! conductivity reconstruction over a coarse inverse mesh.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{assemble_scalar, build_mesh, FemError, Mesh, MeshShape};
use crate::problem::{EvalError, Problem};
use crate::rng::rng_stream;
use crate::types::{Bounds, Evaluation, SolutionVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EitError {
    #[error("measurement strategy {0:?} is not supported")]
    UnsupportedStrategy(MeasurementStrategy),
    #[error("invalid electrode layout: {0}")]
    InvalidLayout(String),
    #[error("inclusion centred at ({x}, {y}) lies outside the domain")]
    InclusionOutsideDomain { x: f64, y: f64 },
    #[error("expected {expected} measurements, got {got}")]
    MeasurementCount { expected: usize, got: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementStrategy {
    #[default]
    Adjacent,
    Cross,
    Opposite,
    Trigonometric,
}

/// `count` electrodes equally spaced on the mesh boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeLayout {
    pub nodes: Vec<usize>,
    /// Drive current amplitude (A).
    pub current: f64,
}

impl ElectrodeLayout {
    /// Electrode `e` sits on boundary node `e * nb / count`; requires `count`
    /// even and dividing the boundary node count.
    pub fn on_boundary(mesh: &Mesh, count: usize, current: f64) -> Result<Self, EitError> {
        let nb = mesh.boundary_nodes.len();
        if count < 4 || count % 2 != 0 {
            return Err(EitError::InvalidLayout(format!(
                "electrode count {count} must be even and >= 4"
            )));
        }
        if nb % count != 0 {
            return Err(EitError::InvalidLayout(format!(
                "{count} electrodes do not divide {nb} boundary nodes"
            )));
        }
        if !(current.is_finite() && current > 0.0) {
            return Err(EitError::InvalidLayout(format!(
                "current {current} must be positive"
            )));
        }
        let nodes = (0..count)
            .map(|e| mesh.boundary_nodes[e * nb / count])
            .collect();
        Ok(Self { nodes, current })
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// Reference node (last electrode).
    pub fn ground(&self) -> usize {
        *self.nodes.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub drive: (usize, usize),
    pub measure: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule {
    pub strategy: MeasurementStrategy,
    pub entries: Vec<Measurement>,
}

impl MeasurementSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Drive `(d, d+1)` for every `d`; for each drive, measure the adjacent pairs
/// `(m, m+1)` for `m = d+2, ..., d+L-2`, skipping pairs touching a driven
/// electrode. Yields `L(L-3)` measurements, ordered so that rotating by one
/// electrode cyclically shifts whole drive blocks.
pub fn measurement_schedule(
    count: usize,
    strategy: MeasurementStrategy,
) -> Result<MeasurementSchedule, EitError> {
    if strategy != MeasurementStrategy::Adjacent {
        return Err(EitError::UnsupportedStrategy(strategy));
    }
    if count < 4 || count % 2 != 0 {
        return Err(EitError::InvalidLayout(format!(
            "electrode count {count} must be even and >= 4"
        )));
    }
    let l = count;
    let mut entries = Vec::with_capacity(l * (l - 3));
    for d in 0..l {
        let drive = (d, (d + 1) % l);
        for off in 2..l - 1 {
            let m = (d + off) % l;
            let measure = (m, (m + 1) % l);
            entries.push(Measurement { drive, measure });
        }
    }
    Ok(MeasurementSchedule { strategy, entries })
}

/// Potential differences `V(m0) - V(m1)` for every schedule entry, injecting
/// `+I` at the first and `-I` at the second drive electrode.
pub fn forward_voltages(
    mesh: &Mesh,
    layout: &ElectrodeLayout,
    schedule: &MeasurementSchedule,
    sigma: &[f64],
) -> Result<Vec<f64>, FemError> {
    let system = assemble_scalar(mesh, sigma)?.ground(layout.ground())?;
    let mut out = Vec::with_capacity(schedule.len());
    let mut current: Option<((usize, usize), Vec<f64>)> = None;
    let mut f = vec![0.0; mesh.node_count()];
    for m in &schedule.entries {
        if current.as_ref().is_none_or(|(d, _)| *d != m.drive) {
            f.iter_mut().for_each(|v| *v = 0.0);
            f[layout.nodes[m.drive.0]] += layout.current;
            f[layout.nodes[m.drive.1]] -= layout.current;
            current = Some((m.drive, system.solve(&f)?));
        }
        let v = &current.as_ref().unwrap().1;
        out.push(v[layout.nodes[m.measure.0]] - v[layout.nodes[m.measure.1]]);
    }
    Ok(out)
}

/// Circular inclusion `(center, radius, value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inclusion {
    pub center: [f64; 2],
    pub radius: f64,
    pub value: f64,
}

/// Elements whose centroid lies in an inclusion take its value (later
/// inclusions win), others the background.
pub fn phantom_sigma(
    mesh: &Mesh,
    background: f64,
    inclusions: &[Inclusion],
) -> Result<Vec<f64>, EitError> {
    for inc in inclusions {
        if mesh.locate(inc.center).is_none() {
            return Err(EitError::InclusionOutsideDomain {
                x: inc.center[0],
                y: inc.center[1],
            });
        }
    }
    Ok(mesh
        .centroids()
        .iter()
        .map(|c| {
            inclusions
                .iter()
                .rev()
                .find(|inc| {
                    (c[0] - inc.center[0]).powi(2) + (c[1] - inc.center[1]).powi(2)
                        <= inc.radius * inc.radius
                })
                .map_or(background, |inc| inc.value)
        })
        .collect())
}

/// Squared Euclidean distance between two measurement vectors.
pub fn misfit(model: &[f64], measured: &[f64]) -> f64 {
    model
        .iter()
        .zip(measured)
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

pub fn write_measurements<W: Write>(u: &[f64], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "voltage"])?;
    for (i, v) in u.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()
}

pub fn read_measurements<R: BufRead>(input: R) -> io::Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row.map_err(io::Error::other)?;
        let index: usize = row
            .get(0)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|e| bad_row(k, e))?;
        if index != k {
            return Err(bad_row(k, "indices must be consecutive from 0"));
        }
        out.push(
            row.get(1)
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|e| bad_row(k, e))?,
        );
    }
    Ok(out)
}

fn bad_row(k: usize, e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("row {k}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskMesh {
    pub rings: usize,
    pub sectors: usize,
}

impl DiskMesh {
    pub fn build(&self, radius: f64) -> Result<Mesh, FemError> {
        build_mesh(MeshShape::Disk {
            rings: self.rings,
            sectors: self.sectors,
            radius,
        })
    }
}

fn default_electrodes() -> usize {
    16
}
fn default_current() -> f64 {
    1e-3
}
fn default_radius() -> f64 {
    1.0
}
fn default_forward() -> DiskMesh {
    DiskMesh {
        rings: 6,
        sectors: 16,
    }
}
fn default_inverse() -> DiskMesh {
    DiskMesh {
        rings: 4,
        sectors: 4,
    }
}
fn default_background() -> f64 {
    0.3
}
fn default_inclusions() -> Vec<Inclusion> {
    vec![Inclusion {
        center: [0.4, 0.2],
        radius: 0.35,
        value: 1.0,
    }]
}
fn default_sigma_min() -> f64 {
    1e-3
}
fn default_sigma_max() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EitConfig {
    #[serde(default = "default_electrodes")]
    pub electrodes: usize,
    #[serde(default)]
    pub strategy: MeasurementStrategy,
    #[serde(default = "default_current")]
    pub current: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Mesh on which the synthetic data are generated.
    #[serde(default = "default_forward")]
    pub forward_mesh: DiskMesh,
    /// Mesh carrying one log-conductivity parameter per element.
    #[serde(default = "default_inverse")]
    pub inverse_mesh: DiskMesh,
    #[serde(default = "default_background")]
    pub background: f64,
    #[serde(default = "default_inclusions")]
    pub inclusions: Vec<Inclusion>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub noise_seed: u64,
    /// Tikhonov weight on `|sigma - background|^2`; 0 disables.
    #[serde(default)]
    pub regularization: f64,
    #[serde(default = "default_sigma_min")]
    pub sigma_min: f64,
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
}

impl Default for EitConfig {
    fn default() -> Self {
        Self {
            electrodes: default_electrodes(),
            strategy: MeasurementStrategy::default(),
            current: default_current(),
            radius: default_radius(),
            forward_mesh: default_forward(),
            inverse_mesh: default_inverse(),
            background: default_background(),
            inclusions: default_inclusions(),
            noise_sd: 0.0,
            noise_seed: 0,
            regularization: 0.0,
            sigma_min: default_sigma_min(),
            sigma_max: default_sigma_max(),
        }
    }
}

/// Tissue conductivities usually fall in this band (S/m).
pub const TISSUE_BAND: (f64, f64) = (0.1, 1.0);

/// Elements whose conductivity falls outside [`TISSUE_BAND`].
pub fn outside_tissue_band(sigma: &[f64]) -> Vec<usize> {
    sigma
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < TISSUE_BAND.0 || **s > TISSUE_BAND.1)
        .map(|(e, _)| e)
        .collect()
}

pub struct EitProblem {
    config: EitConfig,
    mesh: Mesh,
    layout: ElectrodeLayout,
    schedule: MeasurementSchedule,
    measured: Vec<f64>,
    bounds: Bounds,
}

impl EitProblem {
    /// Generates phantom data on the forward mesh and sets up the inverse mesh.
    pub fn new(config: EitConfig) -> Result<Self, EitError> {
        let fwd = config.forward_mesh.build(config.radius)?;
        let layout = ElectrodeLayout::on_boundary(&fwd, config.electrodes, config.current)?;
        let schedule = measurement_schedule(config.electrodes, config.strategy)?;
        let sigma = phantom_sigma(&fwd, config.background, &config.inclusions)?;
        let mut u = forward_voltages(&fwd, &layout, &schedule, &sigma)?;
        if config.noise_sd > 0.0 {
            let mut rng = rng_stream(config.noise_seed, 0);
            u.iter_mut()
                .for_each(|v| *v += config.noise_sd * rng.normal());
        }
        Self::with_measurements(config, u)
    }

    pub fn with_measurements(config: EitConfig, measured: Vec<f64>) -> Result<Self, EitError> {
        if !(config.sigma_min > 0.0 && config.sigma_max > config.sigma_min) {
            return Err(EitError::InvalidLayout(format!(
                "conductivity bounds [{}, {}] must be positive and ordered",
                config.sigma_min, config.sigma_max
            )));
        }
        let mesh = config.inverse_mesh.build(config.radius)?;
        let layout = ElectrodeLayout::on_boundary(&mesh, config.electrodes, config.current)?;
        let schedule = measurement_schedule(config.electrodes, config.strategy)?;
        if measured.len() != schedule.len() {
            return Err(EitError::MeasurementCount {
                expected: schedule.len(),
                got: measured.len(),
            });
        }
        let n = mesh.element_count();
        let bounds = Bounds::uniform(n, config.sigma_min.ln(), config.sigma_max.ln())
            .expect("ordered bounds");
        Ok(Self {
            config,
            mesh,
            layout,
            schedule,
            measured,
            bounds,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn layout(&self) -> &ElectrodeLayout {
        &self.layout
    }

    pub fn schedule(&self) -> &MeasurementSchedule {
        &self.schedule
    }

    pub fn measured(&self) -> &[f64] {
        &self.measured
    }

    pub fn config(&self) -> &EitConfig {
        &self.config
    }

    pub fn objective_sigma(&self, sigma: &[f64]) -> Result<f64, FemError> {
        let u = forward_voltages(&self.mesh, &self.layout, &self.schedule, sigma)?;
        let mut f = misfit(&u, &self.measured);
        if self.config.regularization > 0.0 {
            let b = self.config.background;
            f += self.config.regularization * sigma.iter().map(|s| (s - b).powi(2)).sum::<f64>();
        }
        Ok(f)
    }

    /// Genotype for a conductivity field on the inverse mesh.
    pub fn encode(&self, sigma: &[f64]) -> Vec<f64> {
        sigma.iter().map(|s| s.ln()).collect()
    }

    /// Homogeneous background conductivity, the reference start.
    pub fn homogeneous_start(&self) -> SolutionVector {
        let v = self
            .config
            .background
            .clamp(self.config.sigma_min, self.config.sigma_max)
            .ln();
        SolutionVector::from_finite(vec![v; self.mesh.element_count()])
    }
}

impl Problem for EitProblem {
    fn id(&self) -> &str {
        "eit"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn seeds(&self) -> Vec<SolutionVector> {
        vec![self.homogeneous_start()]
    }

    fn evaluate_raw(&self, x: &[f64], _fidelity: usize) -> Result<Evaluation, EvalError> {
        let sigma: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        self.objective_sigma(&sigma)
            .map(Evaluation::unconstrained)
            .map_err(|e| EvalError::problem("eit", e))
    }
}
