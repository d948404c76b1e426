//! Fixed-step classic Runge–Kutta integration with linear-interpolated output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("invalid time span [{t0}, {tf}]")]
    InvalidSpan { t0: f64, tf: f64 },
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("sample times must be strictly increasing and inside the time span")]
    InvalidSamples,
}

/// States over time; row `i` of `states` belongs to `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[j]).collect()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|s| s.as_slice())
    }
}

/// Default grid density: steps per output sample interval.
pub const STEPS_PER_SAMPLE: usize = 10;

/// Step count giving `STEPS_PER_SAMPLE` steps per interval between `n_samples`
/// equally spaced samples.
pub fn default_step_count(n_samples: usize) -> usize {
    n_samples.saturating_sub(1).max(1) * STEPS_PER_SAMPLE
}

/// Integrates `dx/dt = rhs(t, x)` from `t0` to `tf` with `step_count` RK4 steps
/// and returns the states at `sample_times`, linearly interpolated between
/// grid points. `rhs(t, x, dx)` writes the derivative into `dx`.
pub fn integrate_fixed_rk4<F>(
    mut rhs: F,
    x0: &[f64],
    t0: f64,
    tf: f64,
    step_count: usize,
    sample_times: &[f64],
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
        return Err(OdeError::InvalidSpan { t0, tf });
    }
    if step_count == 0 {
        return Err(OdeError::NoSteps);
    }
    let tol = 1e-12 * (tf - t0).abs().max(1.0);
    let ordered = sample_times.windows(2).all(|w| w[1] > w[0]);
    let inside = sample_times.iter().all(|&t| t >= t0 - tol && t <= tf + tol);
    if !ordered || !inside {
        return Err(OdeError::InvalidSamples);
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteState { time: t0 });
    }

    let m = x0.len();
    let h = (tf - t0) / step_count as f64;
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
    );
    let mut states = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;

    // samples at (or numerically at) t0
    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 + tol {
        states.push(x.clone());
        next_sample += 1;
    }

    for step in 0..step_count {
        if next_sample == sample_times.len() {
            break;
        }
        let t = t0 + step as f64 * h;
        let t_next = if step + 1 == step_count {
            tf
        } else {
            t0 + (step + 1) as f64 * h
        };
        let prev = x.clone();

        rhs(t, &x, &mut k1);
        for i in 0..m {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..m {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..m {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..m {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteState { time: t_next });
        }

        let last_step = step + 1 == step_count;
        while next_sample < sample_times.len()
            && (sample_times[next_sample] <= t_next + tol || last_step)
        {
            let ts = sample_times[next_sample];
            if (ts - t_next).abs() <= tol || last_step && ts >= t_next {
                states.push(x.clone());
            } else {
                let w = ((ts - t) / (t_next - t)).clamp(0.0, 1.0);
                states.push(prev.iter().zip(&x).map(|(a, b)| a + w * (b - a)).collect());
            }
            next_sample += 1;
        }
    }

    Ok(Trajectory {
        times: sample_times.to_vec(),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_endpoint(steps: usize) -> f64 {
        let tr =
            integrate_fixed_rk4(|_, x, dx| dx[0] = -x[0], &[1.0], 0.0, 1.0, steps, &[1.0]).unwrap();
        tr.states[0][0]
    }

    #[test]
    fn constant_rhs_keeps_state() {
        let samples = [0.0, 0.3, 0.7, 2.0];
        let tr = integrate_fixed_rk4(|_, _, dx| dx.fill(0.0), &[1.5, -2.0], 0.0, 2.0, 7, &samples)
            .unwrap();
        assert_eq!(tr.len(), 4);
        for s in &tr.states {
            assert_eq!(s, &vec![1.5, -2.0]);
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        assert!((decay_endpoint(1000) - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn observed_order_is_four() {
        let exact = (-1.0f64).exp();
        let e1 = (decay_endpoint(10) - exact).abs();
        let e2 = (decay_endpoint(20) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn linear_rhs_scales_with_initial_condition() {
        let samples: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let rhs = |_: f64, x: &[f64], dx: &mut [f64]| {
            dx[0] = x[1];
            dx[1] = -4.0 * x[0] - 0.3 * x[1];
        };
        let a = integrate_fixed_rk4(rhs, &[1.0, 0.5], 0.0, 2.0, 200, &samples).unwrap();
        let b = integrate_fixed_rk4(rhs, &[2.0, 1.0], 0.0, 2.0, 200, &samples).unwrap();
        for (ra, rb) in a.states.iter().zip(&b.states) {
            for (u, v) in ra.iter().zip(rb) {
                assert!((2.0 * u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interpolates_between_grid_points() {
        // dx/dt = 1 is integrated exactly; interpolation must be exact too.
        let tr = integrate_fixed_rk4(
            |_, _, dx| dx[0] = 1.0,
            &[0.0],
            0.0,
            1.0,
            4,
            &[0.1, 0.33, 0.9],
        )
        .unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s[0] - t).abs() < 1e-14);
        }
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        let err = integrate_fixed_rk4(
            |_, x, dx| dx[0] = x[0] * x[0] * 1e30,
            &[1e10],
            0.0,
            1.0,
            100,
            &[1.0],
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::NonFiniteState { time } if time > 0.0 && time <= 1.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let rhs = |_: f64, _: &[f64], dx: &mut [f64]| dx.fill(0.0);
        assert_eq!(
            integrate_fixed_rk4(rhs, &[0.0], 1.0, 0.0, 10, &[]),
            Err(OdeError::InvalidSpan { t0: 1.0, tf: 0.0 })
        );
        assert_eq!(
            integrate_fixed_rk4(rhs, &[0.0], 0.0, 1.0, 0, &[]),
            Err(OdeError::NoSteps)
        );
        assert_eq!(
            integrate_fixed_rk4(rhs, &[0.0], 0.0, 1.0, 5, &[0.5, 0.2]),
            Err(OdeError::InvalidSamples)
        );
        assert_eq!(
            integrate_fixed_rk4(rhs, &[0.0], 0.0, 1.0, 5, &[1.5]),
            Err(OdeError::InvalidSamples)
        );
    }
}
