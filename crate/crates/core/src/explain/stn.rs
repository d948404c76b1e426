use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::ExplainError;
use crate::archive::EvaluationArchive;
use crate::constraints::{penalized_objective, PenaltyModel};
use crate::types::Bounds;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StnNode {
    pub id: usize,
    /// Rounded normalized coordinates, scaled by `10^precision`.
    pub key: Vec<i64>,
    /// First genotype that mapped to this cell.
    pub representative: Vec<f64>,
    pub best_objective: f64,
    pub visits: u64,
    pub runs: Vec<u32>,
    pub start: bool,
    pub end: bool,
}

impl StnNode {
    pub fn shared(&self) -> bool {
        self.runs.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StnEdge {
    pub from: usize,
    pub to: usize,
    pub count: u64,
    pub runs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StnGraph {
    pub precision: u32,
    pub nodes: Vec<StnNode>,
    pub edges: Vec<StnEdge>,
}

fn push_run(runs: &mut Vec<u32>, run: u32) {
    if let Err(i) = runs.binary_search(&run) {
        runs.insert(i, run);
    }
}

/// Builds the trajectory network of the incumbent (best-so-far) solution per
/// iteration of every run. Nodes are cells of the normalized box rounded to
/// `precision` decimal digits and are merged across runs.
pub fn build_stn(
    archives: &[EvaluationArchive],
    bounds: &Bounds,
    precision: u32,
    model: &PenaltyModel,
) -> Result<StnGraph, ExplainError> {
    if precision > 12 {
        return Err(ExplainError::InvalidArgument(format!(
            "precision {precision} exceeds 12 digits"
        )));
    }
    let scale = 10f64.powi(precision as i32);
    let mut index: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut nodes: Vec<StnNode> = Vec::new();
    let mut edges: BTreeMap<(usize, usize), StnEdge> = BTreeMap::new();

    for archive in archives {
        for run in archive.run_ids() {
            let records = archive.run(run);
            let path = records.incumbents(model);
            let mut prev: Option<usize> = None;
            for r in &path {
                if r.genotype.len() != bounds.dim() {
                    return Err(ExplainError::DimensionMismatch {
                        expected: bounds.dim(),
                        got: r.genotype.len(),
                    });
                }
                let key: Vec<i64> = bounds
                    .normalize(&r.genotype)
                    .iter()
                    .map(|u| (u * scale).round() as i64)
                    .collect();
                let obj = penalized_objective(&r.result(), model);
                let id = *index.entry(key.clone()).or_insert_with(|| {
                    nodes.push(StnNode {
                        id: nodes.len(),
                        key,
                        representative: r.genotype.clone(),
                        best_objective: obj,
                        visits: 0,
                        runs: Vec::new(),
                        start: false,
                        end: false,
                    });
                    nodes.len() - 1
                });
                let node = &mut nodes[id];
                node.visits += 1;
                node.best_objective = node.best_objective.min(obj);
                push_run(&mut node.runs, run);
                match prev {
                    None => node.start = true,
                    Some(p) if p != id => {
                        let e = edges.entry((p, id)).or_insert(StnEdge {
                            from: p,
                            to: id,
                            count: 0,
                            runs: Vec::new(),
                        });
                        e.count += 1;
                        push_run(&mut e.runs, run);
                    }
                    Some(_) => {}
                }
                prev = Some(id);
            }
            if let Some(last) = prev {
                nodes[last].end = true;
            }
        }
    }
    Ok(StnGraph {
        precision,
        nodes,
        edges: edges.into_values().collect(),
    })
}

impl StnGraph {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Graphviz description; start nodes are boxes, end nodes double circles
    /// and nodes shared by several runs are filled.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph stn {\n  rankdir=LR;\n");
        for n in &self.nodes {
            let shape = match (n.start, n.end) {
                (true, _) => "box",
                (false, true) => "doublecircle",
                _ => "circle",
            };
            let fill = if n.shared() {
                ", style=filled, fillcolor=gray80"
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "  n{} [label=\"{:.4e}\\nvisits {}\", shape={shape}{fill}];",
                n.id, n.best_objective, n.visits
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  n{} -> n{} [label=\"{}\", penwidth={}];",
                e.from,
                e.to,
                e.count,
                1 + e.count.min(8)
            );
        }
        s.push_str("}\n");
        s
    }
}
