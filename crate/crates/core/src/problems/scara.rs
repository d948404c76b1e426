//! Hybrid physics/ANN model of a two-axis SCARA arm fitted to measured
//! joint angles.
//!
//! State layout `[i1, a1, da1, i2, a2, da2]`: motor current, axis angle and
//! angular velocity per axis. Per axis the physical model is
//!
//! ```text
//! di/dt  = (v_ref(t) / R - i) / tau
//! da/dt  = da
//! J dda  = k_m i - d da
//! ```
//!
//! The measured data additionally contain a smooth stick-slip friction
//! torque that the physical model omits; a residual feedforward network
//! learns the correction.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ode::{integrate_fixed_rk4, OdeError, Trajectory, STEPS_PER_SAMPLE};
use crate::problem::{EvalError, Problem};
use crate::rng::{rng_stream, RngStream};
use crate::types::{Bounds, Evaluation, SolutionVector};

pub const STATE_DIM: usize = 6;
pub const ANN_INPUTS: usize = 2 * STATE_DIM;
/// Objective reported when the simulation blows up.
pub const PENALTY_CAP: f64 = 1e9;
/// Indices of the measured states (`a1`, `a2`).
pub const MEASURED: [usize; 2] = [1, 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisParams {
    pub inertia: f64,
    pub damping: f64,
    pub motor_constant: f64,
    pub resistance: f64,
    pub time_constant: f64,
}

impl Default for AxisParams {
    fn default() -> Self {
        Self {
            inertia: 0.01,
            damping: 0.05,
            motor_constant: 0.1,
            resistance: 2.0,
            time_constant: 0.01,
        }
    }
}

/// Reference voltages sampled on a time grid, linearly interpolated and held
/// constant outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageTable {
    pub times: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl VoltageTable {
    /// `v_k(t) = amp_k sin(2 pi freq_k t)` sampled every `dt` over `[0, t_end]`.
    pub fn sinusoid(t_end: f64, dt: f64, amp: [f64; 2], freq: [f64; 2]) -> Self {
        let n = (t_end / dt).round() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let wave = |a: f64, f: f64| {
            times
                .iter()
                .map(|t| a * (std::f64::consts::TAU * f * t).sin())
                .collect()
        };
        Self {
            v1: wave(amp[0], freq[0]),
            v2: wave(amp[1], freq[1]),
            times,
        }
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        let ts = &self.times;
        if t <= ts[0] {
            return [self.v1[0], self.v2[0]];
        }
        let last = ts.len() - 1;
        if t >= ts[last] {
            return [self.v1[last], self.v2[last]];
        }
        let k = ts.partition_point(|&s| s <= t) - 1;
        let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        [
            self.v1[k] + w * (self.v1[k + 1] - self.v1[k]),
            self.v2[k] + w * (self.v2[k + 1] - self.v2[k]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaraPhysParams {
    pub axis1: AxisParams,
    pub axis2: AxisParams,
    pub voltage: VoltageTable,
}

impl Default for ScaraPhysParams {
    fn default() -> Self {
        Self {
            axis1: AxisParams::default(),
            axis2: AxisParams::default(),
            voltage: VoltageTable::sinusoid(2.0, 0.01, [2.0, 1.5], [0.5, 0.75]),
        }
    }
}

/// Physical right-hand side (no friction).
pub fn physical_rhs(x: &[f64], phys: &ScaraPhysParams, t: f64, dx: &mut [f64]) {
    let v = phys.voltage.at(t);
    for (k, p) in [phys.axis1, phys.axis2].iter().enumerate() {
        let o = 3 * k;
        dx[o] = (v[k] / p.resistance - x[o]) / p.time_constant;
        dx[o + 1] = x[o + 2];
        dx[o + 2] = (p.motor_constant * x[o] - p.damping * x[o + 2]) / p.inertia;
    }
}

/// Regularized stick-slip friction used only to generate ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Friction {
    pub c_static: f64,
    pub c_drop: f64,
    pub v_eps: f64,
    /// Link lengths; the load lever is the reach `r(a2)` for axis 1 and `l2` for axis 2.
    pub l1: f64,
    pub l2: f64,
}

impl Default for Friction {
    fn default() -> Self {
        Self {
            c_static: 0.06,
            c_drop: 0.03,
            v_eps: 0.05,
            l1: 0.3,
            l2: 0.25,
        }
    }
}

impl Friction {
    pub fn none() -> Self {
        Self {
            c_static: 0.0,
            c_drop: 0.0,
            ..Self::default()
        }
    }

    /// Friction torques on both axes.
    pub fn torque(&self, x: &[f64]) -> [f64; 2] {
        let reach =
            (self.l1 * self.l1 + self.l2 * self.l2 + 2.0 * self.l1 * self.l2 * x[4].cos()).sqrt();
        let load = [reach, self.l2];
        let mut tau = [0.0; 2];
        for k in 0..2 {
            let s = (x[3 * k + 2] / self.v_eps).tanh();
            tau[k] = -(self.c_static * s - self.c_drop * s.powi(3)) * load[k];
        }
        tau
    }
}

/// Fixed input normalization of the network: state then physical derivative.
const INPUT_SCALE: [f64; ANN_INPUTS] =
    [1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 0.01, 0.5, 0.1, 0.01, 0.5, 0.1];

/// Feedforward network 12 -> H (tanh) -> 6 (linear), flattened as
/// `W1 (H x 12, row-major), b1, W2 (6 x H, row-major), b2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnShape {
    pub hidden: usize,
}

impl AnnShape {
    pub fn param_count(&self) -> usize {
        ANN_INPUTS * self.hidden + self.hidden + self.hidden * STATE_DIM + STATE_DIM
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("network expects {expected} parameters, got {got}")]
pub struct AnnDimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

/// Hybrid derivative `phys_derivative + N(state, phys_derivative)`.
pub fn ann_forward(
    shape: AnnShape,
    theta: &[f64],
    state: &[f64],
    phys_derivative: &[f64],
    out: &mut [f64],
) -> Result<(), AnnDimensionMismatch> {
    if theta.len() != shape.param_count()
        || state.len() != STATE_DIM
        || phys_derivative.len() != STATE_DIM
    {
        return Err(AnnDimensionMismatch {
            expected: shape.param_count(),
            got: theta.len(),
        });
    }
    ann_forward_unchecked(shape.hidden, theta, state, phys_derivative, out);
    Ok(())
}

fn ann_forward_unchecked(h: usize, theta: &[f64], state: &[f64], dphys: &[f64], out: &mut [f64]) {
    let mut input = [0.0; ANN_INPUTS];
    for k in 0..STATE_DIM {
        input[k] = state[k] * INPUT_SCALE[k];
        input[STATE_DIM + k] = dphys[k] * INPUT_SCALE[STATE_DIM + k];
    }
    let (w1, rest) = theta.split_at(ANN_INPUTS * h);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h * STATE_DIM);
    out.copy_from_slice(dphys);
    for (o, b) in out.iter_mut().zip(b2) {
        *o += b;
    }
    for j in 0..h {
        let row = &w1[j * ANN_INPUTS..(j + 1) * ANN_INPUTS];
        let z = b1[j] + row.iter().zip(&input).map(|(w, v)| w * v).sum::<f64>();
        let a = z.tanh();
        if a != 0.0 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += w2[k * h + j] * a;
            }
        }
    }
}

/// Simulates the hybrid model; `theta = None` gives the physical model.
pub fn simulate_hybrid(
    x0: &[f64],
    phys: &ScaraPhysParams,
    ann: Option<(AnnShape, &[f64])>,
    t0: f64,
    tf: f64,
    sample_times: &[f64],
) -> Result<Trajectory, OdeError> {
    let steps = sample_times.len().saturating_sub(1).max(1) * STEPS_PER_SAMPLE;
    let mut dphys = [0.0; STATE_DIM];
    integrate_fixed_rk4(
        |t, x, dx| {
            physical_rhs(x, phys, t, &mut dphys);
            match ann {
                Some((shape, theta)) => ann_forward_unchecked(shape.hidden, theta, x, &dphys, dx),
                None => dx.copy_from_slice(&dphys),
            }
        },
        x0,
        t0,
        tf,
        steps,
        sample_times,
    )
}

/// Measured joint angles over time.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredData {
    pub times: Vec<f64>,
    /// Rows `[a1, a2]`.
    pub angles: Vec<[f64; 2]>,
}

impl MeasuredData {
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "alpha1", "alpha2"])?;
        for (t, a) in self.times.iter().zip(&self.angles) {
            w.write_record([t.to_string(), a[0].to_string(), a[1].to_string()])?;
        }
        w.flush()
    }

    pub fn read_csv<R: BufRead>(input: R) -> io::Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut times = Vec::new();
        let mut angles = Vec::new();
        for row in r.deserialize::<(f64, f64, f64)>() {
            let (t, a1, a2) = row.map_err(io::Error::other)?;
            times.push(t);
            angles.push([a1, a2]);
        }
        Ok(Self { times, angles })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("trajectory has {got} samples, data has {expected}")]
pub struct SampleMismatch {
    pub expected: usize,
    pub got: usize,
}

/// Mean over samples of the summed squared error on the measured angles.
pub fn trajectory_loss(x: &Trajectory, data: &MeasuredData) -> Result<f64, SampleMismatch> {
    if x.len() != data.times.len() {
        return Err(SampleMismatch {
            expected: data.times.len(),
            got: x.len(),
        });
    }
    let n = data.times.len() as f64;
    let sum: f64 = x
        .states
        .iter()
        .zip(&data.angles)
        .map(|(s, y)| {
            MEASURED
                .iter()
                .zip(y)
                .map(|(&j, yj)| (s[j] - yj).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok(sum / n)
}

/// Ground truth: physical model plus friction, with Gaussian angle noise.
pub fn synthesize_measurements(
    phys: &ScaraPhysParams,
    friction: &Friction,
    x0: &[f64],
    times: &[f64],
    noise_sd: f64,
    rng: &mut RngStream,
) -> Result<MeasuredData, OdeError> {
    let steps = times.len().saturating_sub(1).max(1) * STEPS_PER_SAMPLE;
    let axes = [phys.axis1, phys.axis2];
    let traj = integrate_fixed_rk4(
        |t, x, dx| {
            physical_rhs(x, phys, t, dx);
            let tau = friction.torque(x);
            for k in 0..2 {
                dx[3 * k + 2] += tau[k] / axes[k].inertia;
            }
        },
        x0,
        times[0],
        *times.last().unwrap(),
        steps,
        times,
    )?;
    let angles = traj
        .states
        .iter()
        .map(|s| {
            let mut a = [s[1], s[4]];
            if noise_sd > 0.0 {
                for v in &mut a {
                    *v += noise_sd * rng.normal();
                }
            }
            a
        })
        .collect();
    Ok(MeasuredData {
        times: times.to_vec(),
        angles,
    })
}

fn default_hidden() -> usize {
    8
}
fn default_weight_bound() -> f64 {
    5.0
}
fn default_samples() -> usize {
    101
}
fn default_t_end() -> f64 {
    2.0
}
fn default_seed_count() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaraConfig {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_weight_bound")]
    pub weight_bound: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub phys: ScaraPhysParams,
    #[serde(default)]
    pub friction: Friction,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub data_seed: u64,
    /// Glorot-initialized seeds offered in addition to the zero network.
    #[serde(default = "default_seed_count")]
    pub glorot_seeds: usize,
}

impl Default for ScaraConfig {
    fn default() -> Self {
        Self {
            hidden: default_hidden(),
            weight_bound: default_weight_bound(),
            t_end: default_t_end(),
            samples: default_samples(),
            phys: ScaraPhysParams::default(),
            friction: Friction::default(),
            noise_sd: 0.0,
            data_seed: 0,
            glorot_seeds: default_seed_count(),
        }
    }
}

pub struct ScaraProblem {
    config: ScaraConfig,
    shape: AnnShape,
    data: MeasuredData,
    bounds: Bounds,
    x0: [f64; STATE_DIM],
}

impl ScaraProblem {
    pub fn new(config: ScaraConfig) -> Result<Self, EvalError> {
        let fail = |m: String| EvalError::problem("scara", m);
        if config.samples < 2
            || !(config.t_end > 0.0)
            || config.hidden == 0
            || !(config.weight_bound > 0.0)
        {
            return Err(fail(
                "need samples >= 2, t_end > 0, hidden >= 1, weight_bound > 0".into(),
            ));
        }
        let times: Vec<f64> = (0..config.samples)
            .map(|k| config.t_end * k as f64 / (config.samples - 1) as f64)
            .collect();
        let x0 = [0.0; STATE_DIM];
        let mut rng = rng_stream(config.data_seed, 0);
        let data = synthesize_measurements(
            &config.phys,
            &config.friction,
            &x0,
            &times,
            config.noise_sd,
            &mut rng,
        )
        .map_err(|e| fail(e.to_string()))?;
        Self::with_data(config, data)
    }

    /// Uses externally supplied measurements instead of synthesizing them.
    pub fn with_data(config: ScaraConfig, data: MeasuredData) -> Result<Self, EvalError> {
        if data.times.len() < 2 {
            return Err(EvalError::problem(
                "scara",
                "measured data need at least 2 samples",
            ));
        }
        let shape = AnnShape {
            hidden: config.hidden,
        };
        let bounds = Bounds::uniform(
            shape.param_count(),
            -config.weight_bound,
            config.weight_bound,
        )
        .map_err(|e| EvalError::problem("scara", e))?;
        Ok(Self {
            config,
            shape,
            data,
            bounds,
            x0: [0.0; STATE_DIM],
        })
    }

    pub fn shape(&self) -> AnnShape {
        self.shape
    }

    pub fn data(&self) -> &MeasuredData {
        &self.data
    }

    pub fn config(&self) -> &ScaraConfig {
        &self.config
    }

    /// Loss of the physical model alone.
    pub fn baseline_loss(&self) -> f64 {
        self.loss(None)
    }

    fn loss(&self, theta: Option<&[f64]>) -> f64 {
        let t = &self.data.times;
        let sim = simulate_hybrid(
            &self.x0,
            &self.config.phys,
            theta.map(|th| (self.shape, th)),
            t[0],
            t[t.len() - 1],
            t,
        );
        match sim {
            Ok(traj) => match trajectory_loss(&traj, &self.data) {
                Ok(l) if l.is_finite() => l.min(PENALTY_CAP),
                _ => PENALTY_CAP,
            },
            Err(_) => PENALTY_CAP,
        }
    }

    pub fn simulate(&self, theta: &[f64]) -> Result<Trajectory, OdeError> {
        let t = &self.data.times;
        simulate_hybrid(
            &self.x0,
            &self.config.phys,
            Some((self.shape, theta)),
            t[0],
            t[t.len() - 1],
            t,
        )
    }
}

/// Glorot-uniform weights, zero biases.
pub fn glorot_vector(shape: AnnShape, rng: &mut RngStream) -> Vec<f64> {
    let h = shape.hidden;
    let l1 = (6.0 / (ANN_INPUTS + h) as f64).sqrt();
    let l2 = (6.0 / (h + STATE_DIM) as f64).sqrt();
    let mut v = Vec::with_capacity(shape.param_count());
    v.extend((0..ANN_INPUTS * h).map(|_| rng.uniform_in(-l1, l1)));
    v.extend(std::iter::repeat_n(0.0, h));
    v.extend((0..h * STATE_DIM).map(|_| rng.uniform_in(-l2, l2)));
    v.extend(std::iter::repeat_n(0.0, STATE_DIM));
    v
}

impl Problem for ScaraProblem {
    fn id(&self) -> &str {
        "scara"
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn seeds(&self) -> Vec<SolutionVector> {
        let mut rng = rng_stream(self.config.data_seed, 1);
        let mut out = vec![SolutionVector::zeros(self.shape.param_count())];
        for _ in 0..self.config.glorot_seeds {
            let v = glorot_vector(self.shape, &mut rng)
                .into_iter()
                .map(|w| w.clamp(-self.config.weight_bound, self.config.weight_bound))
                .collect();
            out.push(SolutionVector::from_finite(v));
        }
        out
    }

    fn evaluate_raw(&self, x: &[f64], _fidelity: usize) -> Result<Evaluation, EvalError> {
        Ok(Evaluation::unconstrained(self.loss(Some(x))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(n: usize, tf: f64) -> Vec<f64> {
        (0..n).map(|k| tf * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn equilibrium_and_single_torque() {
        let mut phys = ScaraPhysParams::default();
        phys.voltage = VoltageTable::sinusoid(1.0, 0.1, [0.0, 0.0], [1.0, 1.0]);
        let mut dx = [1.0; 6];
        physical_rhs(&[0.0; 6], &phys, 0.3, &mut dx);
        assert_eq!(dx, [0.0; 6]);
        physical_rhs(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &phys, 0.3, &mut dx);
        assert_eq!(dx[2], phys.axis1.motor_constant / phys.axis1.inertia);
    }

    #[test]
    fn matches_fine_euler_oracle() {
        let phys = ScaraPhysParams::default();
        let ts = times(101, 2.0);
        let traj = simulate_hybrid(&[0.0; 6], &phys, None, 0.0, 2.0, &ts).unwrap();
        // explicit Euler at 10x the RK4 step density
        let steps = 100 * STEPS_PER_SAMPLE * 10;
        let h = 2.0 / steps as f64;
        let mut x = [0.0; 6];
        let mut dx = [0.0; 6];
        let mut max_diff: f64 = 0.0;
        for s in 0..steps {
            physical_rhs(&x, &phys, s as f64 * h, &mut dx);
            for k in 0..6 {
                x[k] += h * dx[k];
            }
            if (s + 1) % (STEPS_PER_SAMPLE * 10) == 0 {
                let row = &traj.states[(s + 1) / (STEPS_PER_SAMPLE * 10)];
                for k in 0..6 {
                    max_diff = max_diff.max((row[k] - x[k]).abs());
                }
            }
        }
        assert!(max_diff <= 1e-3, "{max_diff}");
    }

    #[test]
    fn zero_network_is_physical_model() {
        let shape = AnnShape { hidden: 8 };
        assert_eq!(shape.param_count(), 158);
        let phys = ScaraPhysParams::default();
        let ts = times(51, 1.0);
        let zero = vec![0.0; 158];
        let a = simulate_hybrid(&[0.0; 6], &phys, Some((shape, &zero)), 0.0, 1.0, &ts).unwrap();
        let b = simulate_hybrid(&[0.0; 6], &phys, None, 0.0, 1.0, &ts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn output_bias_on_zero_input() {
        let shape = AnnShape { hidden: 2 };
        let mut theta = vec![0.0; shape.param_count()];
        let nb = theta.len();
        for k in 0..6 {
            theta[nb - 6 + k] = k as f64;
        }
        // hidden weights are irrelevant at zero input with zero hidden bias
        theta[0] = 3.0;
        let d = [0.5; 6];
        let mut out = [0.0; 6];
        ann_forward(shape, &theta, &[0.0; 6], &[0.0; 6], &mut out).unwrap();
        assert_eq!(out, [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        ann_forward(
            shape,
            &vec![0.0; shape.param_count()],
            &[0.3; 6],
            &d,
            &mut out,
        )
        .unwrap();
        assert_eq!(out, d);
        assert!(ann_forward(shape, &theta[1..], &[0.0; 6], &d, &mut out).is_err());
    }

    #[test]
    fn output_is_bounded_by_weights() {
        let shape = AnnShape { hidden: 8 };
        let mut rng = rng_stream(3, 0);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..158).map(|_| rng.uniform_in(-5.0, 5.0)).collect();
            let state: Vec<f64> = (0..6).map(|_| rng.uniform_in(-10.0, 10.0)).collect();
            let d: Vec<f64> = (0..6).map(|_| rng.uniform_in(-10.0, 10.0)).collect();
            let mut out = [0.0; 6];
            ann_forward(shape, &theta, &state, &d, &mut out).unwrap();
            let off = 12 * 8 + 8;
            for k in 0..6 {
                let bound = theta[off + 48 + k].abs()
                    + (0..8).map(|j| theta[off + k * 8 + j].abs()).sum::<f64>();
                assert!(out[k].is_finite() && (out[k] - d[k]).abs() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn refinement_of_samples() {
        let phys = ScaraPhysParams::default();
        let a = simulate_hybrid(&[0.0; 6], &phys, None, 0.0, 2.0, &times(101, 2.0)).unwrap();
        let b = simulate_hybrid(&[0.0; 6], &phys, None, 0.0, 2.0, &times(201, 2.0)).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..101 {
            for j in 0..6 {
                worst = worst.max((a.states[k][j] - b.states[2 * k][j]).abs());
            }
        }
        assert!(worst <= 1e-6, "{worst}");
    }

    #[test]
    fn blow_up_maps_to_cap() {
        let p = ScaraProblem::new(ScaraConfig {
            samples: 21,
            ..ScaraConfig::default()
        })
        .unwrap();
        // the tanh layer bounds the correction, so even huge weights stay finite
        let ev = p.evaluate_raw(&vec![1e6; 158], 0).unwrap();
        assert!(ev.objective.is_finite() && ev.objective <= PENALTY_CAP);
        // an electrical time constant far below the step makes RK4 unstable
        let mut config = ScaraConfig {
            samples: 21,
            ..ScaraConfig::default()
        };
        let data = p.data().clone();
        config.phys.axis1.time_constant = 1e-5;
        let stiff = ScaraProblem::with_data(config, data).unwrap();
        assert!(matches!(
            stiff.simulate(&vec![0.0; 158]),
            Err(OdeError::NonFiniteState { .. })
        ));
        assert_eq!(
            stiff.evaluate_raw(&vec![0.0; 158], 0).unwrap().objective,
            PENALTY_CAP
        );
    }

    #[test]
    fn loss_examples() {
        let ts = times(11, 1.0);
        let traj = Trajectory {
            times: ts.clone(),
            states: ts
                .iter()
                .map(|t| vec![0.0, *t, 0.0, 0.0, -t, 0.0])
                .collect(),
        };
        let exact = MeasuredData {
            times: ts.clone(),
            angles: ts.iter().map(|t| [*t, -t]).collect(),
        };
        assert_eq!(trajectory_loss(&traj, &exact).unwrap(), 0.0);
        let shifted = MeasuredData {
            times: ts.clone(),
            angles: ts.iter().map(|t| [*t + 0.1, -t]).collect(),
        };
        assert!((trajectory_loss(&traj, &shifted).unwrap() - 0.01).abs() < 1e-15);
        let short = MeasuredData {
            times: ts[..3].to_vec(),
            angles: vec![[0.0; 2]; 3],
        };
        assert!(trajectory_loss(&traj, &short).is_err());
    }

    #[test]
    fn synthesized_data() {
        let phys = ScaraPhysParams::default();
        let ts = times(101, 2.0);
        let mut rng = rng_stream(0, 0);
        let clean =
            synthesize_measurements(&phys, &Friction::none(), &[0.0; 6], &ts, 0.0, &mut rng)
                .unwrap();
        let sim = simulate_hybrid(&[0.0; 6], &phys, None, 0.0, 2.0, &ts).unwrap();
        for (row, a) in sim.states.iter().zip(&clean.angles) {
            assert_eq!([row[1], row[4]], *a);
        }
        // friction makes the arm lag: smaller excursion under the same drive
        let rough =
            synthesize_measurements(&phys, &Friction::default(), &[0.0; 6], &ts, 0.0, &mut rng)
                .unwrap();
        for k in 10..40 {
            assert!(
                rough.angles[k][0].abs() < clean.angles[k][0].abs(),
                "sample {k}"
            );
        }
        let noisy = |seed| {
            synthesize_measurements(
                &phys,
                &Friction::default(),
                &[0.0; 6],
                &ts,
                0.01,
                &mut rng_stream(seed, 0),
            )
            .unwrap()
        };
        assert_eq!(noisy(4), noisy(4));
        let mut buf = Vec::new();
        rough.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"time,alpha1,alpha2\n"));
        let back = MeasuredData::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rough);
    }

    #[test]
    fn zero_seed_scores_baseline() {
        let p = ScaraProblem::new(ScaraConfig {
            samples: 41,
            ..ScaraConfig::default()
        })
        .unwrap();
        let seeds = p.seeds();
        assert_eq!(seeds.len(), 5);
        assert!(seeds.iter().all(|s| p.bounds().contains(s)));
        let zero = p.evaluate_raw(&seeds[0], 0).unwrap().objective;
        assert_eq!(zero, p.baseline_loss());
        assert!(zero > 0.0);
    }
}
