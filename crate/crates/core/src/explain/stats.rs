use serde::Serialize;

use super::ExplainError;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianSummary {
    pub median: f64,
    /// 2.5 and 97.5 bootstrap percentiles of the median.
    pub interval: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStatistics {
    pub a: MedianSummary,
    pub b: MedianSummary,
    pub pairs: usize,
    /// Pairs won by `a`, ties counted as half.
    pub wins_a: f64,
    /// Posterior mean of P(a beats b) under a uniform Beta prior.
    pub win_probability: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Median of `values` with its bootstrap percentile interval. `values` must
/// be non-empty.
pub fn bootstrap_median(values: &[f64], resamples: usize, rng: &mut RngStream) -> MedianSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut medians: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut s: Vec<f64> = (0..values.len())
                .map(|_| values[rng.index(values.len())])
                .collect();
            s.sort_by(f64::total_cmp);
            median(&s)
        })
        .collect();
    medians.sort_by(f64::total_cmp);
    MedianSummary {
        median: median(&sorted),
        interval: [percentile(&medians, 0.025), percentile(&medians, 0.975)],
    }
}

/// Compares seed-matched best objectives of two configurations (lower wins).
pub fn multi_run_stats(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    rng: &mut RngStream,
) -> Result<RunStatistics, ExplainError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(ExplainError::UnpairedRuns {
            a: a.len(),
            b: b.len(),
        });
    }
    if resamples == 0 {
        return Err(ExplainError::InvalidArgument(
            "bootstrap needs at least one resample".into(),
        ));
    }
    let wins_a: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| match x.total_cmp(y) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 0.0,
        })
        .sum();
    let n = a.len();
    Ok(RunStatistics {
        a: bootstrap_median(a, resamples, rng),
        b: bootstrap_median(b, resamples, rng),
        pairs: n,
        wins_a,
        win_probability: (wins_a + 1.0) / (n as f64 + 2.0),
    })
}
