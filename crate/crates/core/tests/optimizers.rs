use physevo_core::algorithms::{OptimizerConfig, Runner, Variant};
use physevo_core::archive::EvaluationArchive;
use physevo_core::rng::rng_stream;
use physevo_core::testfns::AnalyticProblem;

fn best_on_sphere(variant: Variant, pop: usize, target: f64, seed: u64) -> (f64, u64) {
    let p = AnalyticProblem::sphere(10);
    let mut cfg = OptimizerConfig::new(variant, pop, 100_000);
    cfg.target_objective = Some(target);
    let r = Runner::new(&p, &cfg)
        .run(&mut rng_stream(seed, 0), &mut EvaluationArchive::new())
        .unwrap();
    (r.best_result.objective, r.evaluations_used)
}

#[test]
fn sphere_10d_de() {
    let (f, n) = best_on_sphere(Variant::de(), 40, 1e-8, 7);
    assert!(f <= 1e-8, "DE reached {f} after {n}");
}

#[test]
fn sphere_10d_es() {
    let (f, n) = best_on_sphere(Variant::es(), 12, 1e-8, 7);
    assert!(f <= 1e-8, "ES reached {f} after {n}");
}

#[test]
fn sphere_10d_es_full_covariance() {
    let v = Variant::Es {
        mu: None,
        sigma0: 0.3,
        full_covariance: true,
    };
    let (f, n) = best_on_sphere(v, 12, 1e-8, 7);
    assert!(f <= 1e-8, "CMA reached {f} after {n}");
}

#[test]
fn sphere_10d_ga() {
    let (f, n) = best_on_sphere(Variant::ga(), 100, 1e-4, 7);
    assert!(f <= 1e-4, "GA reached {f} after {n}");
}

#[test]
fn sphere_10d_pso() {
    let (f, n) = best_on_sphere(Variant::pso(), 40, 1e-4, 7);
    assert!(f <= 1e-4, "PSO reached {f} after {n}");
}

#[test]
fn rosenbrock_and_rastrigin_make_progress() {
    let cfg = OptimizerConfig::new(Variant::de(), 40, 40_000);
    let p = AnalyticProblem::rosenbrock(5);
    let r = Runner::new(&p, &cfg)
        .run(&mut rng_stream(3, 0), &mut EvaluationArchive::new())
        .unwrap();
    assert!(r.best_result.objective < 1.0, "{}", r.best_result.objective);
    // low crossover suits the separable multimodal case
    let mut cfg = OptimizerConfig::new(Variant::De { f: 0.5, cr: 0.1 }, 40, 40_000);
    cfg.stagnation_window = 0;
    let p = AnalyticProblem::rastrigin(5);
    let r = Runner::new(&p, &cfg)
        .run(&mut rng_stream(3, 0), &mut EvaluationArchive::new())
        .unwrap();
    assert!(r.best_result.objective < 1.0, "{}", r.best_result.objective);
}
