//! JSON-lines run logs, one line per evaluation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{nondominated_within, RunRecord};
use crate::space::DesignVector;
use crate::strategy::EvaluatedPoint;

/// One evaluated design. Failed outputs are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub iter: usize,
    pub eval_id: usize,
    pub x_discrete: Vec<usize>,
    pub x_continuous: Vec<f64>,
    pub active: Vec<bool>,
    pub f: Vec<Option<f64>>,
    pub g: Vec<Option<f64>>,
    pub viable: bool,
    /// Distance to the reference after the whole iteration.
    pub delta_hv: f64,
    pub t_train_s: f64,
    pub t_infill_s: f64,
}

fn finite(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&x| x.is_finite().then_some(x)).collect()
}

impl LogLine {
    pub fn new(record: &RunRecord, eval_id: usize, p: &EvaluatedPoint) -> Self {
        Self {
            iter: record.iteration,
            eval_id,
            x_discrete: p.x.discrete.clone(),
            x_continuous: p.x.continuous.clone(),
            active: p.x.active.clone(),
            f: finite(&p.f),
            g: finite(&p.g),
            viable: p.viable,
            delta_hv: record.delta_hv,
            t_train_s: record.t_train_s,
            t_infill_s: record.t_infill_s,
        }
    }

    pub fn point(&self) -> EvaluatedPoint {
        let values = |v: &[Option<f64>]| v.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
        EvaluatedPoint {
            x: DesignVector {
                discrete: self.x_discrete.clone(),
                continuous: self.x_continuous.clone(),
                active: self.active.clone(),
            },
            f: values(&self.f),
            g: values(&self.g),
            viable: self.viable,
        }
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogLine>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Regroup log lines into per-iteration records.
pub fn records_from_log(lines: &[LogLine]) -> Vec<RunRecord> {
    let mut records: Vec<RunRecord> = Vec::new();
    let mut feasible: Vec<Vec<f64>> = Vec::new();
    let mut n_evaluations = 0;
    for line in lines {
        let p = line.point();
        n_evaluations += 1;
        if p.viable && p.g.iter().all(|&g| g <= 0.0) {
            feasible.push(p.f.clone());
        }
        match records.last_mut() {
            Some(r) if r.iteration == line.iter => {
                r.batch.push(p);
                r.n_evaluations = n_evaluations;
            }
            _ => records.push(RunRecord {
                iteration: line.iter,
                n_evaluations,
                batch: vec![p],
                front: Vec::new(),
                delta_hv: line.delta_hv,
                t_train_s: line.t_train_s,
                t_infill_s: line.t_infill_s,
            }),
        }
        let r = records.last_mut().expect("just pushed");
        let n_f = line.f.len();
        r.front = nondominated_within(&feasible, &vec![f64::INFINITY; n_f]);
    }
    records
}

/// A log with the timing fields removed from every line, for comparing runs.
pub fn strip_timings(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for l in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut v: serde_json::Value = serde_json::from_str(l)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("t_train_s");
            obj.remove("t_infill_s");
        }
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}
