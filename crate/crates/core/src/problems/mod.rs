//! Benchmark problems with hidden constraints.
//!
//! Every problem exposes its design space, a deterministic evaluation that
//! reports failures as all-NaN outputs, its published characteristics and a
//! stored reference optimum or Pareto front.

pub mod analytic;
mod engineering;
mod hierarchical;
mod reference;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::hierarchical_sample;
use crate::space::{DesignSpace, DesignVector};
use crate::strategy::EvaluatedPoint;

pub use hierarchical::{jet_engine_space, SUBPROBLEM_TABLE};
pub use reference::{Reference, REFERENCE_QUANTILE};

/// Objectives and constraints of a viable evaluation, `None` when failed.
pub type Outputs = Option<(Vec<f64>, Vec<f64>)>;

/// Evaluation in terms of one real value per variable position: continuous
/// values, integer values, or category indices.
pub trait Model: Send + Sync + fmt::Debug {
    fn outputs(&self, values: &[f64]) -> Outputs;
}

/// Kind of formula behind a problem, which sets its fail-rate tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Analytic,
    Engineering,
}

/// Published problem characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub n_xc: usize,
    pub n_xd: usize,
    pub n_f: usize,
    pub n_g: usize,
    /// Imputation ratio, listed for hierarchical problems only.
    pub imputation_ratio: Option<f64>,
    /// Expected fraction of failed evaluations.
    pub fail_rate: f64,
    pub family: Family,
}

#[derive(Debug, Clone)]
pub struct ProblemDef {
    name: &'static str,
    slug: &'static str,
    space: DesignSpace,
    n_f: usize,
    n_g: usize,
    metadata: Metadata,
    reference: Option<Reference>,
    model: Arc<dyn Model>,
}

impl ProblemDef {
    fn new(
        name: &'static str,
        slug: &'static str,
        space: DesignSpace,
        (n_f, n_g): (usize, usize),
        metadata: Metadata,
        model: Arc<dyn Model>,
    ) -> Self {
        let reference = reference::stored(slug, n_f);
        Self { name, slug, space, n_f, n_g, metadata, reference, model }
    }

    /// Display name.
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Command-line identifier.
    pub fn slug(&self) -> &'static str {
        self.slug
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    /// Stored optimum or front, absent only while references are generated.
    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    /// Real value per variable position.
    pub fn values(&self, x: &DesignVector) -> Vec<f64> {
        let mut values = vec![0.0; self.space.n_vars()];
        for (j, &p) in self.space.discrete_positions().iter().enumerate() {
            values[p] = self.space.integer_value(j, x.discrete[j]) as f64;
        }
        for (i, &p) in self.space.continuous_positions().iter().enumerate() {
            values[p] = x.continuous[i];
        }
        values
    }

    /// Evaluate a repaired design vector.
    pub fn evaluate(&self, x: &DesignVector) -> Result<EvaluatedPoint> {
        if !self.space.is_canonical(x) {
            return Err(Error::InvalidVector(self.name.to_string()));
        }
        Ok(self.evaluate_repaired(x))
    }

    /// Evaluate without checking that `x` is repaired.
    pub fn evaluate_repaired(&self, x: &DesignVector) -> EvaluatedPoint {
        match self.model.outputs(&self.values(x)) {
            Some((f, g)) if f.iter().chain(&g).all(|v| v.is_finite()) => {
                debug_assert_eq!((f.len(), g.len()), (self.n_f, self.n_g));
                EvaluatedPoint { x: x.clone(), f, g, viable: true }
            }
            _ => EvaluatedPoint::failed(x.clone(), self.n_f, self.n_g),
        }
    }

    /// Distance to the reference optimum or front of the feasible viable
    /// points in `archive`, in `[0, 1]`. Without a reference this is 1.
    pub fn delta_hv(&self, archive: &[EvaluatedPoint]) -> f64 {
        let feasible: Vec<Vec<f64>> = archive
            .iter()
            .filter(|p| p.viable && p.g.iter().all(|&g| g <= 0.0))
            .map(|p| p.f.clone())
            .collect();
        match &self.reference {
            Some(r) => r.delta_hv(&feasible),
            None => 1.0,
        }
    }
}

/// Fraction of failed evaluations over `n` hierarchical samples.
pub fn fail_rate_monte_carlo(problem: &ProblemDef, n: usize, seed: u64) -> Result<f64> {
    let valid = problem.space.enumerate_valid()?;
    let xs = hierarchical_sample(&problem.space, &valid, n, seed)?;
    let failed = xs.iter().filter(|x| !problem.evaluate_repaired(x).viable).count();
    Ok(failed as f64 / n as f64)
}

/// All benchmark problems, in table order.
pub fn registry() -> Vec<ProblemDef> {
    vec![
        analytic::branin(),
        analytic::hc_branin(),
        analytic::alimo(),
        analytic::alimo_edge(),
        analytic::hc_sphere(),
        analytic::mueller1(),
        analytic::mueller2(),
        engineering::hc_cantilever(),
        engineering::hc_carside_less(),
        engineering::hc_carside(),
        engineering::md_hc_cantilever(),
        engineering::md_hc_carside(),
        hierarchical::h_alimo(),
        hierarchical::h_alimo_edge(),
        hierarchical::h_mueller2(),
        hierarchical::h_hc_rosenbrock(),
        hierarchical::mo_h_hc_rosenbrock(),
    ]
}

/// Lowercase alphanumerics only, with "müller" spelled "mueller".
fn normalize_name(name: &str) -> String {
    let lower = name.to_lowercase().replace('ü', "ue").replace("muller", "mueller");
    lower.chars().filter(|c| c.is_ascii_alphanumeric()).collect()
}

/// Look up a problem by slug or display name, ignoring case and punctuation.
pub fn by_name(name: &str) -> Result<ProblemDef> {
    let wanted = normalize_name(name);
    registry()
        .into_iter()
        .find(|p| normalize_name(p.slug) == wanted || normalize_name(p.name) == wanted)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}
