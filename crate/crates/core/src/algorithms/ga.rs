//! Real-coded GA: binary tournament, simulated binary crossover, polynomial
//! mutation, (mu + lambda) survival.

use super::{Compare, Population, Strategy};
use crate::rng::RngStream;
use crate::types::{Bounds, EvalResult, SolutionVector};

pub struct Ga {
    pop: Population,
    width: Vec<f64>,
    pc: f64,
    eta_c: f64,
    pm: f64,
    eta_m: f64,
    /// Comparator rank of each member; tournaments compare ranks.
    rank: Vec<usize>,
}

impl Ga {
    pub fn new(
        pop: Population,
        bounds: &Bounds,
        pc: f64,
        eta_c: f64,
        pm: f64,
        eta_m: f64,
        cmp: Compare<'_>,
    ) -> Self {
        let width = (0..bounds.dim()).map(|i| bounds.width(i)).collect();
        let mut ga = Self {
            pop,
            width,
            pc,
            eta_c,
            pm,
            eta_m,
            rank: Vec::new(),
        };
        ga.rerank(cmp);
        ga
    }

    fn rerank(&mut self, cmp: Compare<'_>) {
        let mut order: Vec<usize> = (0..self.pop.len()).collect();
        order.sort_by(|&a, &b| cmp(&self.pop.fitness[a], &self.pop.fitness[b]));
        self.rank = vec![0; order.len()];
        for (r, i) in order.into_iter().enumerate() {
            self.rank[i] = r;
        }
    }

    fn tournament(&self, rng: &mut RngStream) -> usize {
        let n = self.pop.len();
        let (a, b) = (rng.index(n), rng.index(n));
        if self.rank[a] <= self.rank[b] {
            a
        } else {
            b
        }
    }

    fn sbx(&self, p1: &[f64], p2: &[f64], rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
        let (mut c1, mut c2) = (p1.to_vec(), p2.to_vec());
        if rng.uniform() >= self.pc {
            return (c1, c2);
        }
        for i in 0..p1.len() {
            if rng.uniform() > 0.5 || (p1[i] - p2[i]).abs() < 1e-14 {
                continue;
            }
            let u = rng.uniform();
            let beta = if u <= 0.5 {
                (2.0 * u).powf(1.0 / (self.eta_c + 1.0))
            } else {
                (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (self.eta_c + 1.0))
            };
            let (a, b) = (p1[i], p2[i]);
            c1[i] = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
            c2[i] = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
        }
        (c1, c2)
    }

    fn mutate(&self, x: &mut [f64], rng: &mut RngStream) {
        for (i, xi) in x.iter_mut().enumerate() {
            if rng.uniform() >= self.pm {
                continue;
            }
            let u = rng.uniform();
            let delta = if u < 0.5 {
                (2.0 * u).powf(1.0 / (self.eta_m + 1.0)) - 1.0
            } else {
                1.0 - (2.0 * (1.0 - u)).powf(1.0 / (self.eta_m + 1.0))
            };
            *xi += delta * self.width[i];
        }
    }
}

impl Strategy for Ga {
    fn propose(&mut self, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let n = self.pop.len();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let (a, b) = (self.tournament(rng), self.tournament(rng));
            let (mut c1, mut c2) = self.sbx(&self.pop.members[a], &self.pop.members[b], rng);
            self.mutate(&mut c1, rng);
            self.mutate(&mut c2, rng);
            out.push(c1);
            if out.len() < n {
                out.push(c2);
            }
        }
        out
    }

    fn select(&mut self, batch: Vec<(SolutionVector, EvalResult)>, cmp: Compare<'_>) {
        let mu = self.pop.len();
        let mut pool: Vec<(SolutionVector, EvalResult)> = self
            .pop
            .members
            .drain(..)
            .zip(self.pop.fitness.drain(..))
            .chain(batch)
            .collect();
        pool.sort_by(|a, b| cmp(&a.1, &b.1));
        pool.truncate(mu);
        let (members, fitness) = pool.into_iter().unzip();
        self.pop.members = members;
        self.pop.fitness = fitness;
        self.pop.iteration += 1;
        // sorted: rank equals position
        self.rank = (0..mu).collect();
    }

    fn elite_vectors(&self) -> Vec<SolutionVector> {
        self.pop.members.clone()
    }

    fn rescore(&mut self, results: Vec<EvalResult>, cmp: Compare<'_>) {
        self.pop.fitness = results;
        self.rerank(cmp);
    }

    fn population(&self) -> Population {
        self.pop.clone()
    }
}
