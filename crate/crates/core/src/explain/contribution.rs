use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ExplainError;
use crate::archive::EvaluationArchive;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub variable: usize,
    pub coefficient: f64,
    pub score: f64,
}

/// Variables ranked by `|coefficient| * std` of a linear fit of the raw
/// objective on min-max normalized coordinates. `r_squared` tells how far
/// the ranking can be trusted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContributionReport {
    pub ranking: Vec<Contribution>,
    pub r_squared: f64,
    pub rows: usize,
}

pub fn contribution_ranking(
    archive: &EvaluationArchive,
) -> Result<ContributionReport, ExplainError> {
    let records = archive.records();
    let dim = archive.dim().unwrap_or(0);
    if records.len() < dim + 1 || dim == 0 {
        return Err(ExplainError::DegenerateArchive {
            rows: records.len(),
            dim,
        });
    }
    if let Some(r) = records.iter().find(|r| r.genotype.len() != dim) {
        return Err(ExplainError::DimensionMismatch {
            expected: dim,
            got: r.genotype.len(),
        });
    }
    let n = records.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for r in records {
        for (i, v) in r.genotype.iter().enumerate() {
            lo[i] = lo[i].min(*v);
            hi[i] = hi[i].max(*v);
        }
    }
    let norm = |i: usize, v: f64| {
        if hi[i] > lo[i] {
            (v - lo[i]) / (hi[i] - lo[i])
        } else {
            0.0
        }
    };
    let x = DMatrix::from_fn(n, dim + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            norm(c - 1, records[r].genotype[c - 1])
        }
    });
    let y = DVector::from_iterator(n, records.iter().map(|r| r.objective));
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| ExplainError::InvalidArgument(e.to_string()))?;

    let mean_y = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let ss_res: f64 = (&y - &x * &beta).iter().map(|v| v * v).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    let mut ranking: Vec<Contribution> = (0..dim)
        .map(|i| {
            let col = x.column(i + 1);
            let m = col.mean();
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            let coefficient = beta[i + 1];
            Contribution {
                variable: i,
                coefficient,
                score: coefficient.abs() * sd,
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.variable.cmp(&b.variable))
    });
    Ok(ContributionReport {
        ranking,
        r_squared,
        rows: n,
    })
}

impl ContributionReport {
    /// Columns `rank,variable,coefficient,score,r_squared`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "variable", "coefficient", "score", "r_squared"])?;
        for (k, c) in self.ranking.iter().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                c.variable.to_string(),
                c.coefficient.to_string(),
                c.score.to_string(),
                self.r_squared.to_string(),
            ])?;
        }
        w.flush()
    }
}
