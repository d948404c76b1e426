//! Differential evolution, rand/1/bin with greedy one-to-one replacement.

use std::cmp::Ordering;

use super::{Compare, Population, Strategy};
use crate::rng::RngStream;
use crate::types::{EvalResult, SolutionVector};

pub struct De {
    pop: Population,
    f: f64,
    cr: f64,
}

impl De {
    pub fn new(pop: Population, f: f64, cr: f64) -> Self {
        Self { pop, f, cr }
    }
}

impl Strategy for De {
    fn propose(&mut self, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let n = self.pop.len();
        let dim = self.pop.members[0].dim();
        (0..n)
            .map(|i| {
                let r = rng.distinct_indices(n, 3, Some(i));
                let (a, b, c) = (
                    &self.pop.members[r[0]],
                    &self.pop.members[r[1]],
                    &self.pop.members[r[2]],
                );
                let jrand = rng.index(dim);
                let target = &self.pop.members[i];
                (0..dim)
                    .map(|j| {
                        if j == jrand || rng.uniform() < self.cr {
                            a[j] + self.f * (b[j] - c[j])
                        } else {
                            target[j]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn select(&mut self, batch: Vec<(SolutionVector, EvalResult)>, cmp: Compare<'_>) {
        for (i, (x, r)) in batch.into_iter().enumerate() {
            if cmp(&r, &self.pop.fitness[i]) == Ordering::Less {
                self.pop.members[i] = x;
                self.pop.fitness[i] = r;
            }
        }
        self.pop.iteration += 1;
    }

    fn elite_vectors(&self) -> Vec<SolutionVector> {
        self.pop.members.clone()
    }

    fn rescore(&mut self, results: Vec<EvalResult>, _cmp: Compare<'_>) {
        self.pop.fitness = results;
    }

    fn population(&self) -> Population {
        self.pop.clone()
    }
}
