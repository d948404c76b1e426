use std::collections::HashSet;
use std::io::{self, Write};

use serde::Serialize;

use super::ExplainError;
use crate::archive::EvaluationArchive;
use crate::types::Bounds;

/// Largest grid stored as a dense bitmap.
pub const DEFAULT_DENSE_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOptions {
    pub grid_per_dim: u32,
    pub dense_cap: u64,
    /// Fall back to a hashed cell set above `dense_cap` instead of failing.
    pub allow_sparse: bool,
}

impl CoverageOptions {
    pub fn new(grid_per_dim: u32) -> Self {
        Self {
            grid_per_dim,
            dense_cap: DEFAULT_DENSE_CAP,
            allow_sparse: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveragePoint {
    pub run_id: u32,
    pub iteration: u32,
    pub evaluations: u64,
    pub fraction: f64,
}

/// Fraction of grid cells of the normalized box holding at least one
/// evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub grid_per_dim: u32,
    pub dim: usize,
    pub occupied: u64,
    pub total_cells: f64,
    pub fraction: f64,
    pub sparse: bool,
    /// Cumulative fraction at the end of every iteration, in archive order.
    pub curve: Vec<CoveragePoint>,
}

enum Cells {
    Dense(Vec<bool>),
    Sparse(HashSet<Vec<u32>>),
}

impl Cells {
    fn insert(&mut self, cell: Vec<u32>, grid: u64) -> bool {
        match self {
            Cells::Dense(bits) => {
                let i = cell.iter().fold(0u64, |acc, &c| acc * grid + c as u64) as usize;
                !std::mem::replace(&mut bits[i], true)
            }
            Cells::Sparse(set) => set.insert(cell),
        }
    }
}

pub fn coverage(
    archive: &EvaluationArchive,
    bounds: &Bounds,
    opts: CoverageOptions,
) -> Result<CoverageReport, ExplainError> {
    let g = opts.grid_per_dim;
    if g == 0 {
        return Err(ExplainError::InvalidArgument(
            "grid_per_dim must be positive".into(),
        ));
    }
    let dim = bounds.dim();
    let total = (g as f64).powi(dim as i32);
    let dense = total <= opts.dense_cap as f64;
    if !dense && !opts.allow_sparse {
        return Err(ExplainError::GridOverflow {
            cells: total,
            cap: opts.dense_cap,
        });
    }
    let mut cells = if dense {
        Cells::Dense(vec![false; total as usize])
    } else {
        Cells::Sparse(HashSet::new())
    };
    let mut occupied = 0u64;
    let mut curve: Vec<CoveragePoint> = Vec::new();
    for (k, r) in archive.records().iter().enumerate() {
        if r.genotype.len() != dim {
            return Err(ExplainError::DimensionMismatch {
                expected: dim,
                got: r.genotype.len(),
            });
        }
        let cell = bounds
            .normalize(&r.genotype)
            .iter()
            .map(|u| ((u * g as f64) as u32).min(g - 1))
            .collect();
        if cells.insert(cell, g as u64) {
            occupied += 1;
        }
        let point = CoveragePoint {
            run_id: r.run_id,
            iteration: r.iteration,
            evaluations: k as u64 + 1,
            fraction: occupied as f64 / total,
        };
        match curve.last_mut() {
            Some(last) if last.run_id == r.run_id && last.iteration == r.iteration => *last = point,
            _ => curve.push(point),
        }
    }
    Ok(CoverageReport {
        grid_per_dim: g,
        dim,
        occupied,
        total_cells: total,
        fraction: occupied as f64 / total,
        sparse: !dense,
        curve,
    })
}

impl CoverageReport {
    /// Columns `run_id,iteration,evaluations,fraction`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.curve {
            w.serialize(p)?;
        }
        w.flush()
    }
}
