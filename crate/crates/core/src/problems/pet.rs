//! Voxel-wise tracer kinetics: compartment-model time-activity curves,
//! frame-averaged least-squares fitting and synthetic dynamic PET data.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{AlgorithmError, OptimizerConfig, Runner};
use crate::archive::EvaluationArchive;
use crate::problem::{EvalError, Problem};
use crate::rng::{rng_stream, RngStream};
use crate::types::{Bounds, Evaluation, SolutionVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PetError {
    #[error("invalid kinetic parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input function: {0}")]
    InvalidInput(String),
    #[error("invalid frame schedule: {0}")]
    InvalidFrames(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticModel {
    /// K1, k2, VB.
    OneCompartment,
    /// K1, k2, k3, VB with k4 = 0.
    #[default]
    TwoCompartmentIrreversible,
    /// K1, k2, k3, k4, VB.
    TwoCompartmentReversible,
}

impl KineticModel {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            KineticModel::OneCompartment => &["K1", "k2", "VB"],
            KineticModel::TwoCompartmentIrreversible => &["K1", "k2", "k3", "VB"],
            KineticModel::TwoCompartmentReversible => &["K1", "k2", "k3", "k4", "VB"],
        }
    }

    pub fn bounds(self) -> Bounds {
        let names = self.param_names();
        let upper = names
            .iter()
            .map(|n| if *n == "VB" { 0.5 } else { 2.0 })
            .collect();
        Bounds::new(vec![0.0; names.len()], upper).expect("static bounds")
    }

    /// Microparameters from a genotype laid out as `param_names`.
    pub fn decode(self, x: &[f64]) -> Microparams {
        match self {
            KineticModel::OneCompartment => Microparams {
                k1: x[0],
                k2: x[1],
                k3: 0.0,
                k4: 0.0,
                vb: x[2],
            },
            KineticModel::TwoCompartmentIrreversible => Microparams {
                k1: x[0],
                k2: x[1],
                k3: x[2],
                k4: 0.0,
                vb: x[3],
            },
            KineticModel::TwoCompartmentReversible => Microparams {
                k1: x[0],
                k2: x[1],
                k3: x[2],
                k4: x[3],
                vb: x[4],
            },
        }
    }

    pub fn encode(self, p: &Microparams) -> Vec<f64> {
        match self {
            KineticModel::OneCompartment => vec![p.k1, p.k2, p.vb],
            KineticModel::TwoCompartmentIrreversible => vec![p.k1, p.k2, p.k3, p.vb],
            KineticModel::TwoCompartmentReversible => vec![p.k1, p.k2, p.k3, p.k4, p.vb],
        }
    }
}

/// Rate constants (1/min) and blood volume fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Microparams {
    #[serde(rename = "K1")]
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    #[serde(default)]
    pub k4: f64,
    #[serde(rename = "VB")]
    pub vb: f64,
}

impl Default for Microparams {
    fn default() -> Self {
        Self {
            k1: 0.1,
            k2: 0.2,
            k3: 0.05,
            k4: 0.0,
            vb: 0.05,
        }
    }
}

impl Microparams {
    pub fn validate(&self) -> Result<(), PetError> {
        let all = [self.k1, self.k2, self.k3, self.k4, self.vb];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PetError::InvalidParams(format!(
                "{self:?} must be finite and non-negative"
            )));
        }
        if self.vb > 1.0 {
            return Err(PetError::InvalidParams(format!(
                "VB = {} exceeds 1",
                self.vb
            )));
        }
        Ok(())
    }

    /// Tissue impulse response `sum_m a_m exp(-b_m t)` as `(a, b)` pairs.
    pub fn impulse_response(&self) -> Vec<(f64, f64)> {
        let (k1, k2, k3, k4) = (self.k1, self.k2, self.k3, self.k4);
        if k4 > 0.0 {
            let s = k2 + k3 + k4;
            let root = (s * s - 4.0 * k2 * k4).max(0.0).sqrt();
            let (a1, a2) = ((s - root) / 2.0, (s + root) / 2.0);
            if a2 - a1 <= 1e-12 * s {
                // degenerate eigenvalues cannot occur for k2, k4 > 0; guard the k2 = 0 limit
                return vec![(k1, a1)];
            }
            let c = k1 / (a2 - a1);
            return vec![(c * (k3 + k4 - a1), a1), (c * (a2 - k3 - k4), a2)];
        }
        let kappa = k2 + k3;
        if kappa == 0.0 {
            return vec![(k1, 0.0)];
        }
        // C1 = K1 e^{-kappa t} * A, C2 = k3 int C1
        vec![(k1 * (1.0 - k3 / kappa), kappa), (k1 * k3 / kappa, 0.0)]
    }
}

/// Piecewise-linear plasma input, zero before the first sample and held
/// constant after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFunction {
    pub times: Vec<f64>,
    pub activity: Vec<f64>,
}

impl InputFunction {
    /// `A(t) = a t exp(-t / b)` sampled every `dt` on `[0, t_end]`.
    pub fn gamma_variate(a: f64, b: f64, dt: f64, t_end: f64) -> Self {
        let n = (t_end / dt).round() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let activity = times.iter().map(|t| a * t * (-t / b).exp()).collect();
        Self { times, activity }
    }

    pub fn validate(&self) -> Result<(), PetError> {
        if self.times.len() < 2 || self.times.len() != self.activity.len() {
            return Err(PetError::InvalidInput(
                "need >= 2 samples with matching activity".into(),
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PetError::InvalidInput(
                "times must be strictly increasing".into(),
            ));
        }
        if self.activity.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(PetError::InvalidInput(
                "activities must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> f64 {
        let ts = &self.times;
        if t < ts[0] {
            return 0.0;
        }
        let last = ts.len() - 1;
        if t >= ts[last] {
            return self.activity[last];
        }
        let k = ts.partition_point(|&s| s <= t) - 1;
        let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        self.activity[k] + w * (self.activity[k + 1] - self.activity[k])
    }
}

/// Contiguous frames `[start, end)` in minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSchedule {
    pub frames: Vec<(f64, f64)>,
}

impl FrameSchedule {
    /// Consecutive frames of the given `(count, duration)` groups from t = 0.
    pub fn from_groups(groups: &[(usize, f64)]) -> Self {
        let mut t = 0.0;
        let mut frames = Vec::new();
        for &(count, d) in groups {
            for _ in 0..count {
                frames.push((t, t + d));
                t += d;
            }
        }
        Self { frames }
    }

    /// 29 frames over one hour, short at the start.
    pub fn standard() -> Self {
        Self::from_groups(&[(6, 0.25), (5, 0.5), (4, 1.0), (6, 2.0), (8, 5.0)])
    }

    pub fn validate(&self) -> Result<(), PetError> {
        if self.frames.is_empty() {
            return Err(PetError::InvalidFrames("no frames".into()));
        }
        for (k, &(s, e)) in self.frames.iter().enumerate() {
            if !(e > s) || !s.is_finite() {
                return Err(PetError::InvalidFrames(format!(
                    "frame {k} [{s}, {e}] is empty"
                )));
            }
            if k > 0 && s != self.frames[k - 1].1 {
                return Err(PetError::InvalidFrames(format!(
                    "frame {k} does not start where frame {} ends",
                    k - 1
                )));
            }
        }
        Ok(())
    }

    pub fn durations(&self) -> Vec<f64> {
        self.frames.iter().map(|(s, e)| e - s).collect()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// `phi_1..phi_3` of `z`: `phi_k(z) = sum_j z^j / (j + k)!`.
fn phis(z: f64) -> [f64; 3] {
    if z.abs() < 0.5 {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            // term for j = 0 is 1/(k+1)!
            let mut term = 1.0 / [1.0, 2.0, 6.0][k];
            let mut sum = term;
            for j in 1..20 {
                term *= z / (j + k + 1) as f64;
                sum += term;
            }
            *o = sum;
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - 1.0) / z;
        let p2 = (e - 1.0 - z) / (z * z);
        let p3 = (e - 1.0 - z - 0.5 * z * z) / (z * z * z);
        [p1, p2, p3]
    }
}

fn breakpoints(input: &InputFunction, frames: &FrameSchedule) -> Vec<f64> {
    let mut t: Vec<f64> = input
        .times
        .iter()
        .copied()
        .filter(|&s| s < frames.frames.last().unwrap().1)
        .collect();
    for &(s, e) in &frames.frames {
        t.push(s);
        t.push(e);
    }
    t.push(0.0_f64.min(input.times[0]));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Frame-averaged `C_meas = (1 - VB) C_T + VB A`, where the tissue curve
/// `C_T` is the exact convolution of the piecewise-linear input with the
/// exponential impulse response.
pub fn model_tac(
    p: &Microparams,
    input: &InputFunction,
    frames: &FrameSchedule,
) -> Result<Vec<f64>, PetError> {
    p.validate()?;
    input.validate()?;
    frames.validate()?;
    let terms = p.impulse_response();
    let grid = breakpoints(input, frames);
    let mut e = vec![0.0; terms.len()];
    // cumulative integral of C_meas at each grid point
    let mut cumulative = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let a0 = input.at(t0);
        // slope over the segment; breakpoints include every input kink
        let m = if t0 < input.times[0] {
            0.0
        } else {
            (input.at(t1) - a0) / h
        };
        let mut tissue = 0.0;
        for ((amp, rate), em) in terms.iter().zip(e.iter_mut()) {
            let z = -rate * h;
            let [p1, p2, p3] = phis(z);
            tissue += amp * (h * p1 * *em + a0 * h * h * p2 + m * h * h * h * p3);
            *em = z.exp() * *em + a0 * h * p1 + m * h * h * p2;
        }
        let blood = h * (a0 + 0.5 * m * h);
        total += (1.0 - p.vb) * tissue + p.vb * blood;
        cumulative.push(total);
    }
    let at = |t: f64| {
        let k = grid.partition_point(|&s| s < t);
        cumulative[k]
    };
    Ok(frames
        .frames
        .iter()
        .map(|&(s, e)| (at(e) - at(s)) / (e - s))
        .collect())
}

/// `sum_f duration_f (model_f - measured_f)^2`.
pub fn weighted_sse(model: &[f64], measured: &[f64], frames: &FrameSchedule) -> f64 {
    model
        .iter()
        .zip(measured)
        .zip(frames.durations())
        .map(|((m, y), d)| d * (m - y).powi(2))
        .sum()
}

/// Largest decay exponent of the impulse response.
pub fn exponent_inf_norm(p: &Microparams) -> f64 {
    p.impulse_response()
        .iter()
        .map(|(_, b)| b.abs())
        .fold(0.0, f64::max)
}

/// Gaussian approximation of counting noise: `sd = sigma0 sqrt(max(v, eps) / duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma0: f64,
    pub floor: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma0: 0.0,
            floor: 1e-6,
        }
    }
}

impl NoiseModel {
    pub fn sd(&self, value: f64, duration: f64) -> f64 {
        self.sigma0 * (value.max(self.floor) / duration).sqrt()
    }
}

pub fn synthesize_frames(
    p: &Microparams,
    input: &InputFunction,
    frames: &FrameSchedule,
    noise: &NoiseModel,
    rng: &mut RngStream,
) -> Result<Vec<f64>, PetError> {
    let clean = model_tac(p, input, frames)?;
    if noise.sigma0 == 0.0 {
        return Ok(clean);
    }
    Ok(clean
        .iter()
        .zip(frames.durations())
        .map(|(v, d)| v + noise.sd(*v, d) * rng.normal())
        .collect())
}

fn default_a() -> f64 {
    50.0
}
fn default_b() -> f64 {
    2.0
}
fn default_dt() -> f64 {
    0.1
}
fn default_t_end() -> f64 {
    60.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaInput {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

impl Default for GammaInput {
    fn default() -> Self {
        Self {
            a: default_a(),
            b: default_b(),
            dt: default_dt(),
            t_end: default_t_end(),
        }
    }
}

impl GammaInput {
    pub fn build(&self) -> InputFunction {
        InputFunction::gamma_variate(self.a, self.b, self.dt, self.t_end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetConfig {
    #[serde(default)]
    pub model: KineticModel,
    /// Generating parameters of the synthetic voxel.
    #[serde(default)]
    pub truth: Microparams,
    #[serde(default)]
    pub input: GammaInput,
    /// `(count, duration)` frame groups; the standard hour protocol when absent.
    #[serde(default = "default_groups")]
    pub frame_groups: Vec<(usize, f64)>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub noise_seed: u64,
    /// Weight of the infinity-norm term on the decay exponents; 0 disables.
    #[serde(default)]
    pub regularization: f64,
}

fn default_groups() -> Vec<(usize, f64)> {
    vec![(6, 0.25), (5, 0.5), (4, 1.0), (6, 2.0), (8, 5.0)]
}

impl Default for PetConfig {
    fn default() -> Self {
        Self {
            model: KineticModel::default(),
            truth: Microparams::default(),
            input: GammaInput::default(),
            frame_groups: default_groups(),
            noise: NoiseModel::default(),
            noise_seed: 0,
            regularization: 0.0,
        }
    }
}

pub struct PetProblem {
    config: PetConfig,
    input: InputFunction,
    frames: FrameSchedule,
    measured: Vec<f64>,
    bounds: Bounds,
}

impl PetProblem {
    pub fn new(config: PetConfig) -> Result<Self, PetError> {
        let input = config.input.build();
        let frames = FrameSchedule::from_groups(&config.frame_groups);
        let measured = synthesize_frames(
            &config.truth,
            &input,
            &frames,
            &config.noise,
            &mut rng_stream(config.noise_seed, 0),
        )?;
        Self::with_measurements(config, measured)
    }

    /// A problem fitting the given frame values instead of synthetic ones.
    pub fn with_measurements(config: PetConfig, measured: Vec<f64>) -> Result<Self, PetError> {
        let input = config.input.build();
        input.validate()?;
        let frames = FrameSchedule::from_groups(&config.frame_groups);
        frames.validate()?;
        if measured.len() != frames.len() || measured.iter().any(|v| !v.is_finite()) {
            return Err(PetError::InvalidFrames(format!(
                "{} finite frame values expected, got {}",
                frames.len(),
                measured.len()
            )));
        }
        let bounds = config.model.bounds();
        Ok(Self {
            config,
            input,
            frames,
            measured,
            bounds,
        })
    }

    pub fn measured(&self) -> &[f64] {
        &self.measured
    }

    pub fn frames(&self) -> &FrameSchedule {
        &self.frames
    }

    pub fn input(&self) -> &InputFunction {
        &self.input
    }

    pub fn config(&self) -> &PetConfig {
        &self.config
    }

    pub fn objective(&self, p: &Microparams) -> Result<f64, PetError> {
        let model = model_tac(p, &self.input, &self.frames)?;
        let mut loss = weighted_sse(&model, &self.measured, &self.frames);
        if self.config.regularization > 0.0 {
            loss += self.config.regularization * exponent_inf_norm(p);
        }
        Ok(loss)
    }
}

impl Problem for PetProblem {
    fn id(&self) -> &str {
        "pet"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate_raw(&self, x: &[f64], _fidelity: usize) -> Result<Evaluation, EvalError> {
        let p = self.config.model.decode(x);
        self.objective(&p)
            .map(Evaluation::unconstrained)
            .map_err(|e| EvalError::problem("pet", e))
    }
}

/// One voxel row of a batch file.
#[derive(Debug, Clone, PartialEq)]
pub struct Voxel {
    pub id: String,
    pub frames: Vec<f64>,
}

/// Reads rows `voxel_id, f1, f2, ...` (first row is a header).
pub fn read_voxels<R: BufRead>(input: R) -> io::Result<Vec<Voxel>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(io::Error::other)?;
        let id = row.get(0).unwrap_or_default().to_string();
        let frames = row
            .iter()
            .skip(1)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{id}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        out.push(Voxel { id, frames });
    }
    Ok(out)
}

pub fn write_voxels<W: Write>(voxels: &[Voxel], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = voxels.first().map_or(0, |v| v.frames.len());
    let mut header = vec!["voxel_id".to_string()];
    header.extend((1..=n).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for v in voxels {
        let mut row = vec![v.id.clone()];
        row.extend(v.frames.iter().map(|f| f.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelFit {
    pub id: String,
    pub params: Microparams,
    pub loss: f64,
}

/// Writes `voxel_id, K1, k2, k3, VB, loss` (plus `k4` for the reversible model).
pub fn write_fits<W: Write>(fits: &[VoxelFit], model: KineticModel, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let reversible = model == KineticModel::TwoCompartmentReversible;
    let mut header = vec!["voxel_id", "K1", "k2", "k3"];
    if reversible {
        header.push("k4");
    }
    header.extend(["VB", "loss"]);
    w.write_record(&header)?;
    for f in fits {
        let p = f.params;
        let mut row = vec![
            f.id.clone(),
            p.k1.to_string(),
            p.k2.to_string(),
            p.k3.to_string(),
        ];
        if reversible {
            row.push(p.k4.to_string());
        }
        row.extend([p.vb.to_string(), f.loss.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("voxel {id}: {source}")]
    Data { id: String, source: PetError },
    #[error("voxel {id}: {source}")]
    Fit { id: String, source: AlgorithmError },
}

/// Fits every voxel independently; voxel `k` uses seed `base_seed + k`.
pub fn fit_batch(
    config: &PetConfig,
    voxels: &[Voxel],
    optimizer: &OptimizerConfig,
    base_seed: u64,
) -> Result<Vec<VoxelFit>, BatchError> {
    voxels
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            let problem = PetProblem::with_measurements(config.clone(), v.frames.clone()).map_err(
                |source| BatchError::Data {
                    id: v.id.clone(),
                    source,
                },
            )?;
            let r = Runner::new(&problem, optimizer)
                .run(
                    &mut rng_stream(base_seed + k as u64, 0),
                    &mut EvaluationArchive::new(),
                )
                .map_err(|source| BatchError::Fit {
                    id: v.id.clone(),
                    source,
                })?;
            Ok(VoxelFit {
                id: v.id.clone(),
                params: config.model.decode(&r.best_vector),
                loss: r.best_result.objective,
            })
        })
        .collect()
}

/// Convenience seed vector for the configured model (the generating parameters).
pub fn truth_vector(config: &PetConfig) -> SolutionVector {
    SolutionVector::from_finite(config.model.encode(&config.truth))
}
