//! (mu/mu_w, lambda) evolution strategy with cumulative step-size adaptation
//! and, optionally, full covariance matrix adaptation. The search runs in
//! box-normalized coordinates so one step size fits every variable.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{best_index, Compare, Population, Strategy};
use crate::rng::RngStream;
use crate::types::{Bounds, EvalResult, SolutionVector};

struct Covariance {
    c: DMatrix<f64>,
    /// Eigenvectors of `c`.
    b: DMatrix<f64>,
    /// Square roots of the eigenvalues.
    d: DVector<f64>,
    pc: DVector<f64>,
    cc: f64,
    c1: f64,
    cmu: f64,
}

impl Covariance {
    fn new(n: usize, mueff: f64) -> Self {
        let nf = n as f64;
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        Self {
            c: DMatrix::identity(n, n),
            b: DMatrix::identity(n, n),
            d: DVector::from_element(n, 1.0),
            pc: DVector::zeros(n),
            cc: (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf),
            c1,
            cmu: (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff)),
        }
    }

    fn refresh(&mut self) {
        let sym = (&self.c + self.c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        self.b = eig.eigenvectors;
        self.d = eig.eigenvalues.map(|v| v.max(1e-20).sqrt());
    }

    /// `C^{-1/2} y`.
    fn whiten(&self, y: &DVector<f64>) -> DVector<f64> {
        let t = self.b.transpose() * y;
        &self.b * t.component_div(&self.d)
    }
}

pub struct Es {
    lo: Vec<f64>,
    width: Vec<f64>,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    mean: DVector<f64>,
    sigma: f64,
    ps: DVector<f64>,
    cs: f64,
    ds: f64,
    chi_n: f64,
    cov: Option<Covariance>,
    generation: usize,
    last: Population,
}

impl Es {
    pub fn new(
        initial: Population,
        bounds: &Bounds,
        lambda: usize,
        mu: usize,
        sigma0: f64,
        full_covariance: bool,
        cmp: Compare<'_>,
    ) -> Self {
        let n = bounds.dim();
        let nf = n as f64;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let ds = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let best = best_index(&initial.fitness, cmp);
        let mean = DVector::from_vec(bounds.normalize(&initial.members[best]));
        Self {
            lo: bounds.lower().to_vec(),
            width: (0..n).map(|i| bounds.width(i)).collect(),
            lambda,
            weights,
            mueff,
            mean,
            sigma: sigma0,
            ps: DVector::zeros(n),
            cs,
            ds,
            chi_n: nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf)),
            cov: full_covariance.then(|| Covariance::new(n, mueff)),
            generation: 0,
            last: initial,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn to_box(&self, u: &DVector<f64>) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, v)| self.lo[i] + self.width[i] * v)
            .collect()
    }

    fn to_unit(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter().enumerate().map(|(i, v)| {
                if self.width[i] > 0.0 {
                    (v - self.lo[i]) / self.width[i]
                } else {
                    0.0
                }
            }),
        )
    }
}

impl Strategy for Es {
    fn propose(&mut self, rng: &mut RngStream) -> Vec<Vec<f64>> {
        let n = self.mean.len();
        (0..self.lambda)
            .map(|_| {
                let z = DVector::from_iterator(n, (0..n).map(|_| rng.normal()));
                let y = match &self.cov {
                    Some(c) => &c.b * z.component_mul(&c.d),
                    None => z,
                };
                self.to_box(&(&self.mean + y * self.sigma))
            })
            .collect()
    }

    fn select(&mut self, batch: Vec<(SolutionVector, EvalResult)>, cmp: Compare<'_>) {
        let mu = self.weights.len();
        let mut order: Vec<usize> = (0..batch.len()).collect();
        order.sort_by(|&a, &b| cmp(&batch[a].1, &batch[b].1));
        if batch.len() >= mu {
            let n = self.mean.len();
            // steps actually taken, after bounds repair
            let ys: Vec<DVector<f64>> = order[..mu]
                .iter()
                .map(|&k| (self.to_unit(&batch[k].0) - &self.mean) / self.sigma)
                .collect();
            let mut yw = DVector::zeros(n);
            for (w, y) in self.weights.iter().zip(&ys) {
                yw += y * *w;
            }
            self.mean += &yw * self.sigma;
            let white = match &self.cov {
                Some(c) => c.whiten(&yw),
                None => yw.clone(),
            };
            self.ps = &self.ps * (1.0 - self.cs)
                + white * (self.cs * (2.0 - self.cs) * self.mueff).sqrt();
            self.generation += 1;
            let ps_norm = self.ps.norm();
            if let Some(c) = &mut self.cov {
                let denom = (1.0 - (1.0 - self.cs).powi(2 * self.generation as i32)).sqrt();
                let hs = ps_norm / denom / self.chi_n < 1.4 + 2.0 / (n as f64 + 1.0);
                let hsf = if hs { 1.0 } else { 0.0 };
                c.pc =
                    &c.pc * (1.0 - c.cc) + &yw * (hsf * (c.cc * (2.0 - c.cc) * self.mueff).sqrt());
                let mut rank_mu = DMatrix::zeros(n, n);
                for (w, y) in self.weights.iter().zip(&ys) {
                    rank_mu += y * y.transpose() * *w;
                }
                let delta = (1.0 - hsf) * c.cc * (2.0 - c.cc);
                c.c = &c.c * (1.0 - c.c1 - c.cmu + c.c1 * delta)
                    + &c.pc * c.pc.transpose() * c.c1
                    + rank_mu * c.cmu;
                c.refresh();
            }
            self.sigma *= ((self.cs / self.ds) * (ps_norm / self.chi_n - 1.0))
                .min(1.0)
                .exp();
        }
        let iteration = self.last.iteration + 1;
        let (members, fitness) = order.into_iter().map(|k| batch[k].clone()).unzip();
        self.last = Population {
            members,
            fitness,
            iteration,
        };
    }

    fn elite_vectors(&self) -> Vec<SolutionVector> {
        self.last.members.clone()
    }

    fn rescore(&mut self, results: Vec<EvalResult>, _cmp: Compare<'_>) {
        self.last.fitness = results;
    }

    fn population(&self) -> Population {
        self.last.clone()
    }
}
