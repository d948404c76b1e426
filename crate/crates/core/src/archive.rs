//! Append-only evaluation log shared by the runner, the harness and the
//! explainability tools.

use std::cmp::Ordering;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::constraints::{lexicographic_compare, PenaltyModel};
use crate::types::EvalResult;

/// One evaluation. `wall_time_ns` is kept out of the JSONL archive so that
/// archives of identical runs are byte-identical; it goes to a timing sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub run_id: u32,
    pub iteration: u32,
    pub eval_index: u64,
    pub genotype: Vec<f64>,
    pub objective: f64,
    pub hard_violations: Vec<f64>,
    pub soft_penalties: Vec<f64>,
    pub fidelity: usize,
    #[serde(skip)]
    pub wall_time_ns: u64,
}

impl ArchiveRecord {
    pub fn result(&self) -> EvalResult {
        EvalResult {
            objective: self.objective,
            hard_violations: self.hard_violations.clone(),
            soft_penalties: self.soft_penalties.clone(),
            fidelity: self.fidelity,
            eval_index: self.eval_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub eval_index: u64,
    pub wall_time_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationArchive {
    records: Vec<ArchiveRecord>,
}

impl EvaluationArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(mut records: Vec<ArchiveRecord>) -> Self {
        records.sort_by_key(|r| (r.run_id, r.eval_index));
        Self { records }
    }

    pub fn push(&mut self, record: ArchiveRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[ArchiveRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.genotype.len())
    }

    pub fn run_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.records.iter().map(|r| r.run_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Records of one run, in eval order.
    pub fn run(&self, run_id: u32) -> EvaluationArchive {
        Self {
            records: self
                .records
                .iter()
                .filter(|r| r.run_id == run_id)
                .cloned()
                .collect(),
        }
    }

    /// Incumbent (best-so-far) record at the end of each iteration, under the
    /// given comparator. The incumbent restarts whenever the fidelity level
    /// changes, since objectives of different levels are not comparable.
    pub fn incumbents(&self, model: &PenaltyModel) -> Vec<&ArchiveRecord> {
        let mut out: Vec<&ArchiveRecord> = Vec::new();
        let mut best: Option<(&ArchiveRecord, EvalResult)> = None;
        let mut i = 0;
        while i < self.records.len() {
            let it = self.records[i].iteration;
            while i < self.records.len() && self.records[i].iteration == it {
                let r = &self.records[i];
                let res = r.result();
                let replace = match &best {
                    None => true,
                    Some((b, _)) if b.fidelity != r.fidelity => true,
                    Some((_, bres)) => lexicographic_compare(&res, bres, model) == Ordering::Less,
                };
                if replace {
                    best = Some((r, res));
                }
                i += 1;
            }
            out.push(best.as_ref().unwrap().0);
        }
        out
    }

    /// One JSON object per line, ordered by `(run_id, eval_index)`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_timing<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(
                &mut out,
                &TimingRecord {
                    eval_index: r.eval_index,
                    wall_time_ns: r.wall_time_ns,
                },
            )?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(io::Error::other)?);
        }
        Ok(Self { records })
    }

    pub fn extend(&mut self, other: EvaluationArchive) {
        self.records.extend(other.records);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iteration: u32, eval_index: u64, x: f64, objective: f64) -> ArchiveRecord {
        ArchiveRecord {
            run_id: 0,
            iteration,
            eval_index,
            genotype: vec![x],
            objective,
            hard_violations: vec![],
            soft_penalties: vec![],
            fidelity: 0,
            wall_time_ns: 5,
        }
    }

    #[test]
    fn jsonl_round_trip_drops_wall_time() {
        let a = EvaluationArchive::from_records(vec![rec(0, 0, 0.5, 1.0), rec(0, 1, 0.25, 0.5)]);
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains("wall_time"));
        let b = EvaluationArchive::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(b.records()[1].objective, 0.5);
        assert_eq!(b.records()[1].wall_time_ns, 0);
        let mut t = Vec::new();
        a.write_timing(&mut t).unwrap();
        assert!(String::from_utf8(t).unwrap().contains("\"wall_time_ns\":5"));
    }

    #[test]
    fn incumbents_are_best_so_far() {
        let a = EvaluationArchive::from_records(vec![
            rec(0, 0, 0.1, 3.0),
            rec(0, 1, 0.2, 2.0),
            rec(1, 2, 0.3, 4.0),
            rec(2, 3, 0.4, 1.0),
        ]);
        let inc = a.incumbents(&PenaltyModel::default());
        let objs: Vec<f64> = inc.iter().map(|r| r.objective).collect();
        assert_eq!(objs, vec![2.0, 2.0, 1.0]);
    }
}
