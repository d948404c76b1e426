//! Global-best particle swarm with per-dimension velocity clamping.

use std::cmp::Ordering;

use super::{best_index, Compare, Population, Strategy};
use crate::rng::RngStream;
use crate::types::{Bounds, EvalResult, SolutionVector};

/// Maximum speed per dimension as a fraction of the box width.
pub const VELOCITY_CLAMP: f64 = 0.2;

pub struct Pso {
    positions: Population,
    velocity: Vec<Vec<f64>>,
    personal: Vec<(SolutionVector, EvalResult)>,
    global: usize,
    vmax: Vec<f64>,
    w: f64,
    c1: f64,
    c2: f64,
}

impl Pso {
    pub fn new(
        initial: Population,
        bounds: &Bounds,
        w: f64,
        c1: f64,
        c2: f64,
        cmp: Compare<'_>,
    ) -> Self {
        let dim = bounds.dim();
        let personal: Vec<_> = initial
            .members
            .iter()
            .cloned()
            .zip(initial.fitness.iter().cloned())
            .collect();
        let vmax = (0..dim).map(|i| VELOCITY_CLAMP * bounds.width(i)).collect();
        let mut s = Self {
            velocity: vec![vec![0.0; dim]; initial.len()],
            positions: initial,
            personal,
            global: 0,
            vmax,
            w,
            c1,
            c2,
        };
        s.refresh_global(cmp);
        s
    }

    fn refresh_global(&mut self, cmp: Compare<'_>) {
        let results: Vec<EvalResult> = self.personal.iter().map(|p| p.1.clone()).collect();
        self.global = best_index(&results, cmp);
    }
}

impl Strategy for Pso {
    fn propose(&mut self, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let g = self.personal[self.global].0.clone();
        let mut out = Vec::with_capacity(self.positions.len());
        for (k, x) in self.positions.members.iter().enumerate() {
            let p = &self.personal[k].0;
            let v = &mut self.velocity[k];
            let next: Vec<f64> = (0..x.dim())
                .map(|i| {
                    let (r1, r2) = (rng.uniform(), rng.uniform());
                    let vi =
                        self.w * v[i] + self.c1 * r1 * (p[i] - x[i]) + self.c2 * r2 * (g[i] - x[i]);
                    v[i] = vi.clamp(-self.vmax[i], self.vmax[i]);
                    x[i] + v[i]
                })
                .collect();
            out.push(next);
        }
        out
    }

    fn select(&mut self, batch: Vec<(SolutionVector, EvalResult)>, cmp: Compare<'_>) {
        for (k, (x, r)) in batch.into_iter().enumerate() {
            if cmp(&r, &self.personal[k].1) == Ordering::Less {
                self.personal[k] = (x.clone(), r.clone());
            }
            self.positions.members[k] = x;
            self.positions.fitness[k] = r;
        }
        self.positions.iteration += 1;
        self.refresh_global(cmp);
    }

    fn elite_vectors(&self) -> Vec<SolutionVector> {
        self.personal.iter().map(|p| p.0.clone()).collect()
    }

    fn rescore(&mut self, results: Vec<EvalResult>, cmp: Compare<'_>) {
        for (p, r) in self.personal.iter_mut().zip(results) {
            p.1 = r;
        }
        self.refresh_global(cmp);
    }

    fn population(&self) -> Population {
        self.positions.clone()
    }
}
