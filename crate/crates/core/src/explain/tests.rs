use proptest::prelude::*;

use super::*;
use crate::algorithms::{OptimizerConfig, Runner, Variant};
use crate::archive::{ArchiveRecord, EvaluationArchive};
use crate::constraints::PenaltyModel;
use crate::problem::{EvalError, Problem};
use crate::rng::rng_stream;
use crate::testfns::AnalyticProblem;
use crate::types::{Bounds, Evaluation};

fn rec(
    run_id: u32,
    iteration: u32,
    eval_index: u64,
    genotype: Vec<f64>,
    objective: f64,
) -> ArchiveRecord {
    ArchiveRecord {
        run_id,
        iteration,
        eval_index,
        genotype,
        objective,
        hard_violations: vec![],
        soft_penalties: vec![],
        fidelity: 0,
        wall_time_ns: 0,
    }
}

fn unit(dim: usize) -> Bounds {
    Bounds::uniform(dim, 0.0, 1.0).unwrap()
}

#[test]
fn constant_best_run_is_a_single_node() {
    let mut recs = vec![rec(0, 0, 0, vec![0.5, 0.5], 0.0)];
    for it in 1..10 {
        recs.push(rec(
            0,
            it,
            it as u64,
            vec![0.1 * it as f64, 0.9],
            1.0 + it as f64,
        ));
    }
    let g = build_stn(
        &[EvaluationArchive::from_records(recs)],
        &unit(2),
        2,
        &PenaltyModel::default(),
    )
    .unwrap();
    assert_eq!(g.nodes.len(), 1);
    assert!(g.edges.is_empty());
    assert!(g.nodes[0].start && g.nodes[0].end);
    assert_eq!(g.nodes[0].visits, 10);
}

#[test]
fn return_to_a_cell_gives_two_edges() {
    // third point rounds into the first cell at precision 1
    let recs = vec![
        rec(0, 0, 0, vec![0.2, 0.2], 3.0),
        rec(0, 1, 1, vec![0.7, 0.7], 2.0),
        rec(0, 2, 2, vec![0.21, 0.19], 1.0),
    ];
    let g = build_stn(
        &[EvaluationArchive::from_records(recs)],
        &unit(2),
        1,
        &PenaltyModel::default(),
    )
    .unwrap();
    assert_eq!(g.nodes.len(), 2);
    assert_eq!(g.edges.len(), 2);
    assert!(
        g.edges.iter().any(|e| (e.from, e.to) == (0, 1))
            && g.edges.iter().any(|e| (e.from, e.to) == (1, 0))
    );
    assert_eq!(g.nodes[0].best_objective, 1.0);
    assert!(g.to_dot().contains("n1 -> n0"));
    let json: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
    assert_eq!(json["edges"].as_array().unwrap().len(), 2);
}

fn sphere_run(run_id: u32, seed: u64) -> EvaluationArchive {
    let p = AnalyticProblem::sphere(3);
    let cfg = OptimizerConfig::new(Variant::de(), 12, 600);
    let mut archive = EvaluationArchive::new();
    Runner::new(&p, &cfg)
        .run_id(run_id)
        .run(&mut rng_stream(seed, 0), &mut archive)
        .unwrap();
    archive
}

#[test]
fn identical_runs_share_every_node() {
    let bounds = Bounds::uniform(3, -5.0, 5.0).unwrap();
    let model = PenaltyModel::default();
    let a = sphere_run(0, 7);
    let single = build_stn(&[a.clone()], &bounds, 2, &model).unwrap();
    assert_eq!(
        single,
        build_stn(&[sphere_run(0, 7)], &bounds, 2, &model).unwrap()
    );
    let merged = build_stn(&[a, sphere_run(1, 7)], &bounds, 2, &model).unwrap();
    assert_eq!(merged.nodes.len(), single.nodes.len());
    assert!(merged.nodes.iter().all(|n| n.runs == vec![0, 1]));
    assert!(merged.edges.iter().all(|e| e.runs == vec![0, 1]));
}

#[test]
fn stn_rejects_mismatched_dimension() {
    let a = EvaluationArchive::from_records(vec![rec(0, 0, 0, vec![0.5], 1.0)]);
    assert_eq!(
        build_stn(&[a], &unit(2), 2, &PenaltyModel::default()),
        Err(ExplainError::DimensionMismatch {
            expected: 2,
            got: 1
        })
    );
}

#[test]
fn coverage_single_point_and_full_grid() {
    let one = EvaluationArchive::from_records(vec![rec(0, 0, 0, vec![0.33, 0.71], 0.0)]);
    let r = coverage(&one, &unit(2), CoverageOptions::new(10)).unwrap();
    assert_eq!(r.fraction, 0.01);

    let mut recs = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let k = 4 * i + j;
            recs.push(rec(
                0,
                k as u32,
                k as u64,
                vec![(i as f64 + 0.5) / 4.0, (j as f64 + 0.5) / 4.0],
                0.0,
            ));
        }
    }
    let full = coverage(
        &EvaluationArchive::from_records(recs),
        &unit(2),
        CoverageOptions::new(4),
    )
    .unwrap();
    assert_eq!(full.fraction, 1.0);
    assert_eq!(full.curve.len(), 16);
    assert_eq!(full.curve[3].fraction, 0.25);
    let mut csv = Vec::new();
    full.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv)
        .unwrap()
        .starts_with("run_id,iteration,evaluations,fraction\n"));
}

#[test]
fn coverage_upper_bound_lands_in_last_cell() {
    let a = EvaluationArchive::from_records(vec![
        rec(0, 0, 0, vec![1.0], 0.0),
        rec(0, 0, 1, vec![0.99], 0.0),
    ]);
    let r = coverage(&a, &unit(1), CoverageOptions::new(10)).unwrap();
    assert_eq!(r.occupied, 1);
}

#[test]
fn large_grids_go_sparse_or_overflow() {
    let a = EvaluationArchive::from_records(vec![rec(0, 0, 0, vec![0.5; 8], 0.0)]);
    let bounds = unit(8);
    let sparse = coverage(&a, &bounds, CoverageOptions::new(100)).unwrap();
    assert!(sparse.sparse);
    assert_eq!(sparse.occupied, 1);
    assert_eq!(sparse.fraction, 1e-16);
    let strict = CoverageOptions {
        allow_sparse: false,
        ..CoverageOptions::new(100)
    };
    assert!(matches!(
        coverage(&a, &bounds, strict),
        Err(ExplainError::GridOverflow { .. })
    ));
}

struct Flat(Bounds);

impl Problem for Flat {
    fn id(&self) -> &str {
        "flat"
    }
    fn bounds(&self) -> &Bounds {
        &self.0
    }
    fn evaluate_raw(&self, _: &[f64], _: usize) -> Result<Evaluation, EvalError> {
        Ok(Evaluation::unconstrained(2.0))
    }
}

#[test]
fn flat_objective_spans_the_bounds() {
    let p = Flat(Bounds::new(vec![-1.0, 0.0], vec![3.0, 2.0]).unwrap());
    let r = robustness_intervals(&p, &[0.5, 1.5], 0.01, 8, 0).unwrap();
    assert_eq!(r.intervals, vec![[-1.0, 3.0], [0.0, 2.0]]);
    assert_eq!(r.note, ROBUSTNESS_NOTE);
}

#[test]
fn sphere_interval_solves_x_squared_equals_delta() {
    let p = AnalyticProblem::sphere(3);
    let r = robustness_intervals(&p, &[0.0; 3], 0.01, 20, 0).unwrap();
    for [lo, hi] in r.intervals {
        assert!(
            (hi - 0.1).abs() < 1e-9 && (lo + 0.1).abs() < 1e-9,
            "[{lo}, {hi}]"
        );
    }
}

#[test]
fn contribution_finds_the_linear_variable() {
    let mut rng = rng_stream(3, 0);
    let recs: Vec<ArchiveRecord> = (0..200)
        .map(|k| {
            let x: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
            rec(0, k, k as u64, x.clone(), 3.0 * x[1])
        })
        .collect();
    let r = contribution_ranking(&EvaluationArchive::from_records(recs)).unwrap();
    assert_eq!(r.ranking[0].variable, 1);
    assert!(r.ranking[1].score < 1e-10 * r.ranking[0].score);
    assert!((r.r_squared - 1.0).abs() < 1e-12);
    // slope 3 over an observed range just under 1
    assert!((r.ranking[0].coefficient - 3.0).abs() < 0.1);
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv)
        .unwrap()
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1,1,"));
}

#[test]
fn contribution_constant_and_degenerate() {
    let recs: Vec<ArchiveRecord> = (0..10)
        .map(|k| rec(0, k, k as u64, vec![k as f64, (k * k) as f64 % 7.0], 4.0))
        .collect();
    let r = contribution_ranking(&EvaluationArchive::from_records(recs.clone())).unwrap();
    assert!(r.ranking.iter().all(|c| c.score.abs() < 1e-12));
    let few = EvaluationArchive::from_records(recs[..2].to_vec());
    assert_eq!(
        contribution_ranking(&few),
        Err(ExplainError::DegenerateArchive { rows: 2, dim: 2 })
    );
}

#[test]
fn sweep_and_tie_win_probabilities() {
    let mut rng = rng_stream(1, 0);
    let a: Vec<f64> = (0..10).map(|k| k as f64).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
    let s = multi_run_stats(&a, &b, 500, &mut rng).unwrap();
    assert!((s.win_probability - 11.0 / 12.0).abs() < 1e-15);
    let tie = multi_run_stats(&a, &a, 500, &mut rng).unwrap();
    assert_eq!(tie.win_probability, 0.5);
    let c = multi_run_stats(&[2.5; 7], &[2.5; 7], 200, &mut rng).unwrap();
    assert_eq!(c.a.interval, [2.5, 2.5]);
    assert_eq!(c.a.median, 2.5);
    assert_eq!(
        multi_run_stats(&a, &b[..3], 10, &mut rng),
        Err(ExplainError::UnpairedRuns { a: 10, b: 3 })
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coverage_is_bounded_and_monotone(points in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 1..60), g in 1u32..6) {
        let recs = points.into_iter().enumerate().map(|(k, x)| rec(0, k as u32 / 4, k as u64, x, 0.0)).collect();
        let r = coverage(&EvaluationArchive::from_records(recs), &unit(3), CoverageOptions::new(g)).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.fraction));
        prop_assert!(r.curve.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        prop_assert_eq!(r.curve.last().unwrap().fraction, r.fraction);
    }

    #[test]
    fn stn_edges_reference_nodes(points in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, -5.0f64..5.0), 1..40)) {
        let recs = points.into_iter().enumerate().map(|(k, (x, y, f))| rec((k % 2) as u32, k as u32, k as u64, vec![x, y], f)).collect();
        let g = build_stn(&[EvaluationArchive::from_records(recs)], &unit(2), 1, &PenaltyModel::default()).unwrap();
        for e in &g.edges {
            prop_assert!(e.from < g.nodes.len() && e.to < g.nodes.len() && e.from != e.to);
        }
        prop_assert!(g.nodes.iter().filter(|n| n.start).count() >= 1);
    }

    #[test]
    fn intervals_contain_solution_and_shrink_with_delta(x in prop::collection::vec(-4.0f64..4.0, 2), d in 0.01f64..1.0) {
        let p = AnalyticProblem::sphere(2);
        let wide = robustness_intervals(&p, &x, d, 16, 0).unwrap();
        let narrow = robustness_intervals(&p, &x, 0.5 * d, 16, 0).unwrap();
        for i in 0..2 {
            let [lo, hi] = wide.intervals[i];
            prop_assert!(-5.0 <= lo && lo <= x[i] && x[i] <= hi && hi <= 5.0);
            prop_assert!(narrow.intervals[i][0] >= lo && narrow.intervals[i][1] <= hi);
        }
    }

    #[test]
    fn ranking_ignores_units_and_follows_permutation(scale in 0.01f64..100.0, shift in -10.0f64..10.0, seed in 0u64..50) {
        let mut rng = rng_stream(seed, 0);
        let base: Vec<(Vec<f64>, f64)> = (0..40).map(|_| {
            let x: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
            let f = 3.0 * x[0] - 1.0 * x[1] + 0.2 * x[2] + 0.05 * rng.normal();
            (x, f)
        }).collect();
        let build = |f: &dyn Fn(&[f64]) -> Vec<f64>| EvaluationArchive::from_records(
            base.iter().enumerate().map(|(k, (x, o))| rec(0, k as u32, k as u64, f(x), *o)).collect());
        let order = |r: &ContributionReport| r.ranking.iter().map(|c| c.variable).collect::<Vec<_>>();
        let plain = contribution_ranking(&build(&|x| x.to_vec())).unwrap();
        let scaled = contribution_ranking(&build(&|x| vec![x[0], scale * x[1] + shift, x[2]])).unwrap();
        prop_assert_eq!(order(&plain), order(&scaled));
        let perm = contribution_ranking(&build(&|x| vec![x[2], x[0], x[1]])).unwrap();
        for c in &plain.ranking {
            let p = perm.ranking.iter().find(|q| q.variable == (c.variable + 1) % 3).unwrap();
            prop_assert!((p.score - c.score).abs() <= 1e-9 * c.score.abs().max(1e-12));
        }
    }
}
