//! Problem ids known to the harness and how to build them from config.

use physevo_core::problems::eit::{EitConfig, EitProblem};
use physevo_core::problems::fpp::{FppConfig, FppProblem};
use physevo_core::problems::pet::{PetConfig, PetProblem};
use physevo_core::problems::scara::{ScaraConfig, ScaraProblem};
use physevo_core::problems::shape::{ShapeConfig, ShapeProblem};
use physevo_core::testfns::{AnalyticKind, AnalyticProblem};
use physevo_core::{Bounds, EvalError, Evaluation, Problem, SolutionVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSpec {
    pub dim: usize,
    /// Box bounds; the function's customary box when absent.
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

/// `[problem]` table: `id` selects the problem, the optional `config`
/// table holds its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub enum ProblemSpec {
    Sphere(AnalyticSpec),
    Rosenbrock(AnalyticSpec),
    Rastrigin(AnalyticSpec),
    Scara(ScaraConfig),
    Pet(PetConfig),
    Eit(EitConfig),
    Fpp(FppConfig),
    Shape(ShapeConfig),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    id: String,
    #[serde(default)]
    config: Option<toml::Table>,
}

impl TryFrom<RawProblem> for ProblemSpec {
    type Error = String;

    fn try_from(raw: RawProblem) -> Result<Self, String> {
        fn parse<T: serde::de::DeserializeOwned>(t: toml::Table) -> Result<T, String> {
            t.try_into()
                .map_err(|e: toml::de::Error| format!("in problem config: {}", e.message()))
        }
        let t = raw.config.unwrap_or_default();
        Ok(match raw.id.as_str() {
            "sphere" => ProblemSpec::Sphere(parse(t)?),
            "rosenbrock" => ProblemSpec::Rosenbrock(parse(t)?),
            "rastrigin" => ProblemSpec::Rastrigin(parse(t)?),
            "scara" => ProblemSpec::Scara(parse(t)?),
            "pet" => ProblemSpec::Pet(parse(t)?),
            "eit" => ProblemSpec::Eit(parse(t)?),
            "fpp" => ProblemSpec::Fpp(parse(t)?),
            "shape" => ProblemSpec::Shape(parse(t)?),
            other => {
                let known: Vec<&str> = PROBLEMS.iter().map(|p| p.0).collect();
                return Err(format!(
                    "unknown problem id `{other}` (known: {})",
                    known.join(", ")
                ));
            }
        })
    }
}

impl From<ProblemSpec> for RawProblem {
    fn from(p: ProblemSpec) -> Self {
        fn table<T: Serialize>(v: &T) -> toml::Table {
            toml::Table::try_from(v).expect("problem config serializes to a TOML table")
        }
        let config = match &p {
            ProblemSpec::Sphere(c) | ProblemSpec::Rosenbrock(c) | ProblemSpec::Rastrigin(c) => {
                table(c)
            }
            ProblemSpec::Scara(c) => table(c),
            ProblemSpec::Pet(c) => table(c),
            ProblemSpec::Eit(c) => table(c),
            ProblemSpec::Fpp(c) => table(c),
            ProblemSpec::Shape(c) => table(c),
        };
        RawProblem {
            id: p.id().to_string(),
            config: Some(config),
        }
    }
}

pub const PROBLEMS: &[(&str, &str)] = &[
    ("sphere", "sum of squares, analytic sanity check"),
    ("rosenbrock", "curved valley, analytic sanity check"),
    (
        "rastrigin",
        "multimodal cosine landscape, analytic sanity check",
    ),
    (
        "scara",
        "hybrid ODE model of a two-axis arm; fits residual network weights",
    ),
    (
        "pet",
        "compartment-model fit of one voxel time-activity curve",
    ),
    (
        "eit",
        "log-conductivity reconstruction on a disk from boundary voltages",
    ),
    (
        "fpp",
        "fibre patch placement minimizing laminate compliance",
    ),
    (
        "shape",
        "hole shape in a loaded plate minimizing peak deviatoric stress",
    ),
];

fn default_box(kind: AnalyticKind) -> (f64, f64) {
    match kind {
        AnalyticKind::Sphere => (-5.0, 5.0),
        AnalyticKind::Rosenbrock => (-5.0, 10.0),
        AnalyticKind::Rastrigin => (-5.12, 5.12),
    }
}

impl ProblemSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ProblemSpec::Sphere(_) => "sphere",
            ProblemSpec::Rosenbrock(_) => "rosenbrock",
            ProblemSpec::Rastrigin(_) => "rastrigin",
            ProblemSpec::Scara(_) => "scara",
            ProblemSpec::Pet(_) => "pet",
            ProblemSpec::Eit(_) => "eit",
            ProblemSpec::Fpp(_) => "fpp",
            ProblemSpec::Shape(_) => "shape",
        }
    }

    /// Fills optional fields that have problem-dependent defaults.
    pub fn expanded(&self) -> Self {
        let fill = |s: &AnalyticSpec, kind| {
            let (lo, hi) = default_box(kind);
            AnalyticSpec {
                dim: s.dim,
                lower: Some(s.lower.unwrap_or(lo)),
                upper: Some(s.upper.unwrap_or(hi)),
            }
        };
        match self {
            ProblemSpec::Sphere(s) => ProblemSpec::Sphere(fill(s, AnalyticKind::Sphere)),
            ProblemSpec::Rosenbrock(s) => {
                ProblemSpec::Rosenbrock(fill(s, AnalyticKind::Rosenbrock))
            }
            ProblemSpec::Rastrigin(s) => ProblemSpec::Rastrigin(fill(s, AnalyticKind::Rastrigin)),
            other => other.clone(),
        }
    }
}

/// Overrides the soft-penalty weights of the wrapped problem.
struct Reweighted {
    inner: Box<dyn Problem>,
    weights: Vec<f64>,
}

impl Problem for Reweighted {
    fn id(&self) -> &str {
        self.inner.id()
    }
    fn bounds(&self) -> &Bounds {
        self.inner.bounds()
    }
    fn fidelity_levels(&self) -> usize {
        self.inner.fidelity_levels()
    }
    fn hard_constraint_names(&self) -> Vec<String> {
        self.inner.hard_constraint_names()
    }
    fn soft_constraint_names(&self) -> Vec<String> {
        self.inner.soft_constraint_names()
    }
    fn soft_weights(&self) -> Vec<f64> {
        self.weights.clone()
    }
    fn seeds(&self) -> Vec<SolutionVector> {
        self.inner.seeds()
    }
    fn evaluate_raw(&self, x: &[f64], fidelity: usize) -> Result<Evaluation, EvalError> {
        self.inner.evaluate_raw(x, fidelity)
    }
}

pub fn build_problem(
    spec: &ProblemSpec,
    soft_weights: Option<&[f64]>,
) -> Result<Box<dyn Problem>, String> {
    let analytic = |s: &AnalyticSpec, kind| -> Result<Box<dyn Problem>, String> {
        let (lo, hi) = default_box(kind);
        let (lo, hi) = (s.lower.unwrap_or(lo), s.upper.unwrap_or(hi));
        if s.dim == 0 || !(lo < hi) {
            return Err(format!(
                "analytic problem needs dim >= 1 and lower < upper, got dim {}, [{lo}, {hi}]",
                s.dim
            ));
        }
        Ok(Box::new(AnalyticProblem::new(kind, s.dim, lo, hi)))
    };
    let problem: Box<dyn Problem> = match spec {
        ProblemSpec::Sphere(s) => analytic(s, AnalyticKind::Sphere)?,
        ProblemSpec::Rosenbrock(s) => analytic(s, AnalyticKind::Rosenbrock)?,
        ProblemSpec::Rastrigin(s) => analytic(s, AnalyticKind::Rastrigin)?,
        ProblemSpec::Scara(c) => Box::new(ScaraProblem::new(c.clone()).map_err(|e| e.to_string())?),
        ProblemSpec::Pet(c) => Box::new(PetProblem::new(c.clone()).map_err(|e| e.to_string())?),
        ProblemSpec::Eit(c) => Box::new(EitProblem::new(c.clone()).map_err(|e| e.to_string())?),
        ProblemSpec::Fpp(c) => Box::new(FppProblem::new(c.clone()).map_err(|e| e.to_string())?),
        ProblemSpec::Shape(c) => Box::new(ShapeProblem::new(c.clone()).map_err(|e| e.to_string())?),
    };
    match soft_weights {
        None => Ok(problem),
        Some(w) => {
            let names = problem.soft_constraint_names();
            if w.len() != names.len() || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(format!(
                    "soft_weights needs {} finite non-negative entries ({:?}), got {:?}",
                    names.len(),
                    names,
                    w
                ));
            }
            Ok(Box::new(Reweighted {
                inner: problem,
                weights: w.to_vec(),
            }))
        }
    }
}
