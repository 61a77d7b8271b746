//! Ensemble infill: criteria, their multi-objective optimization, batch
//! selection and continuous refinement.

pub mod criteria;
pub mod nsga2;
pub mod refine;
pub mod select;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::gp::Gp;
use crate::pov::PovModel;
use crate::space::{DesignSpace, DesignVector, ValidDiscreteSet};
use crate::strategy::{pov_constraint, pov_penalty, Integration};
use criteria::{
    expected_improvement, lower_confidence_bound, minimum_euclidean_poi, minimum_poi, probability_of_improvement,
};
pub use nsga2::{NsgaConfig, NsgaResult};
pub use refine::refine_continuous;
pub use select::{select_batch, Batch, CrowdingPick};

/// A design with its infill objective and constraint values.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: DesignVector,
    /// Criterion values oriented for minimization, before normalization.
    pub raw: Vec<f64>,
    /// Normalized (and possibly PoV-penalized) objectives.
    pub f: Vec<f64>,
    /// Infill constraints, satisfied when `<= 0`.
    pub g: Vec<f64>,
    /// Predicted probability of viability (1 without a viability model).
    pub pov: f64,
    /// Sum of positive constraint values.
    pub cv: f64,
}

impl Candidate {
    pub fn new(x: DesignVector, raw: Vec<f64>, g: Vec<f64>, pov: f64) -> Self {
        let cv = g.iter().map(|v| v.max(0.0)).sum();
        Self { x, raw, f: Vec::new(), g, pov, cv }
    }
}

/// Per-objective min-max scaling.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Normalization {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Normalization {
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut lower: Vec<f64> = Vec::new();
        let mut upper: Vec<f64> = Vec::new();
        for r in rows {
            if lower.is_empty() {
                lower = vec![f64::INFINITY; r.len()];
                upper = vec![f64::NEG_INFINITY; r.len()];
            }
            for (m, &v) in r.iter().enumerate() {
                if v.is_finite() {
                    lower[m] = lower[m].min(v);
                    upper[m] = upper[m].max(v);
                }
            }
        }
        Self { lower, upper }
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .enumerate()
            .map(|(m, &v)| {
                let range = self.upper[m] - self.lower[m];
                if range.is_nan() || range <= 0.0 || !v.is_finite() {
                    if v.is_finite() {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    (v - self.lower[m]) / range
                }
            })
            .collect()
    }

    /// Normalized objectives, PoV-penalized when requested.
    pub fn objectives(&self, c: &Candidate, penalize: bool) -> Vec<f64> {
        let f = self.apply(&c.raw);
        if penalize {
            pov_penalty(&f, c.pov)
        } else {
            f
        }
    }

    pub fn apply_all(&self, pop: &mut [Candidate], penalize: bool) {
        for c in pop {
            c.f = self.objectives(c, penalize);
        }
    }
}

/// Infill objectives and constraints as seen by the optimizer.
pub trait InfillObjectives {
    fn n_objectives(&self) -> usize;
    fn evaluate(&self, x: &DesignVector) -> Candidate;
    /// Whether normalized objectives are multiplied by PoV.
    fn penalize(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfillConfig {
    /// LCB exploration weight.
    pub beta: f64,
    pub pop_size: usize,
    pub n_generations: usize,
    pub crowding: CrowdingPick,
    /// Include the Euclidean MPoI variant in multi-objective ensembles.
    pub euclidean_mpoi: bool,
    pub refine: bool,
}

impl Default for InfillConfig {
    fn default() -> Self {
        Self {
            beta: 2.0,
            pop_size: 100,
            n_generations: 50,
            crowding: CrowdingPick::Lowest,
            euclidean_mpoi: true,
            refine: true,
        }
    }
}

impl InfillConfig {
    pub fn nsga(&self) -> NsgaConfig {
        NsgaConfig { pop_size: self.pop_size, n_generations: self.n_generations, ..NsgaConfig::default() }
    }
}

/// Fitted models used by the infill problem.
#[derive(Debug, Clone)]
pub struct Surrogates {
    pub objectives: Vec<Gp>,
    pub constraints: Vec<Gp>,
    pub pov: Option<(PovModel, Integration)>,
}

#[derive(Debug, Clone)]
enum Ensemble {
    /// LCB, EI and PoI against the incumbent.
    Single { y_min: f64, beta: f64 },
    /// MPoI (and optionally its Euclidean variant) against the normalized front.
    Multi { front: Vec<Vec<f64>>, ideal: Vec<f64>, scale: Vec<f64>, euclidean: bool },
}

/// The ensemble infill problem for one iteration.
#[derive(Debug, Clone)]
pub struct EnsembleInfill {
    encoder: Encoder,
    surrogates: Surrogates,
    ensemble: Ensemble,
}

fn pareto_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut front: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        if rows.iter().any(|o| nsga2::dominates(o, r)) || front.contains(r) {
            continue;
        }
        front.push(r.clone());
    }
    front
}

impl EnsembleInfill {
    /// `training_f` are objective rows of the surrogate training data.
    pub fn new(space: &DesignSpace, surrogates: Surrogates, training_f: &[Vec<f64>], cfg: &InfillConfig) -> Self {
        let n_f = surrogates.objectives.len();
        let ensemble = if n_f == 1 {
            let y_min = training_f.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
            Ensemble::Single { y_min, beta: cfg.beta }
        } else {
            let front = pareto_rows(training_f);
            let ideal: Vec<f64> = (0..n_f).map(|m| front.iter().map(|r| r[m]).fold(f64::INFINITY, f64::min)).collect();
            let nadir: Vec<f64> =
                (0..n_f).map(|m| front.iter().map(|r| r[m]).fold(f64::NEG_INFINITY, f64::max)).collect();
            let scale: Vec<f64> = ideal.iter().zip(&nadir).map(|(i, n)| if n > i { n - i } else { 1.0 }).collect();
            let front = front
                .iter()
                .map(|r| r.iter().enumerate().map(|(m, v)| (v - ideal[m]) / scale[m]).collect())
                .collect();
            Ensemble::Multi { front, ideal, scale, euclidean: cfg.euclidean_mpoi }
        };
        Self { encoder: Encoder::new(space), surrogates, ensemble }
    }

    pub fn surrogates(&self) -> &Surrogates {
        &self.surrogates
    }
}

impl InfillObjectives for EnsembleInfill {
    fn n_objectives(&self) -> usize {
        match &self.ensemble {
            Ensemble::Single { .. } => 3,
            Ensemble::Multi { euclidean, .. } => {
                if *euclidean {
                    2
                } else {
                    1
                }
            }
        }
    }

    fn evaluate(&self, x: &DesignVector) -> Candidate {
        let enc = self.encoder.encode(x);
        let preds: Vec<_> = self.surrogates.objectives.iter().map(|m| m.predict_features(&enc)).collect();
        let raw = match &self.ensemble {
            Ensemble::Single { y_min, beta } => {
                let p = preds[0];
                vec![
                    lower_confidence_bound(p.mean, p.std, *beta),
                    -expected_improvement(*y_min, p.mean, p.std),
                    -probability_of_improvement(*y_min, p.mean, p.std),
                ]
            }
            Ensemble::Multi { front, ideal, scale, euclidean } => {
                let mean: Vec<f64> = preds.iter().enumerate().map(|(m, p)| (p.mean - ideal[m]) / scale[m]).collect();
                let std: Vec<f64> = preds.iter().enumerate().map(|(m, p)| p.std / scale[m]).collect();
                let mut r = vec![1.0 - minimum_poi(front, &mean, &std)];
                if *euclidean {
                    r.push(-minimum_euclidean_poi(front, &mean, &std));
                }
                r
            }
        };
        let mut g: Vec<f64> = self.surrogates.constraints.iter().map(|m| m.predict_features(&enc).mean).collect();
        let mut pov = 1.0;
        if let Some((model, integration)) = &self.surrogates.pov {
            pov = model.predict_features(&enc);
            if let Integration::Constraint { pov_min } = integration {
                g.push(pov_constraint(pov, *pov_min));
            }
        }
        Candidate::new(x.clone(), raw, g, pov)
    }

    fn penalize(&self) -> bool {
        matches!(self.surrogates.pov, Some((_, Integration::Penalty)))
    }
}

/// Optimize the infill problem with NSGA-II.
pub fn optimize_infill<P: InfillObjectives + ?Sized>(
    space: &DesignSpace,
    valid: &ValidDiscreteSet,
    problem: &P,
    cfg: &InfillConfig,
    rng: &mut impl Rng,
) -> NsgaResult {
    nsga2::nsga2(space, valid, problem, &cfg.nsga(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpConfig;
    use crate::space::VariableDef;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Duplicated;

    impl InfillObjectives for Duplicated {
        fn n_objectives(&self) -> usize {
            2
        }
        fn evaluate(&self, x: &DesignVector) -> Candidate {
            let v = (x.continuous[0] - 0.3).powi(2) + (x.continuous[1] - 0.6).powi(2);
            Candidate::new(x.clone(), vec![v, v], vec![], 1.0)
        }
    }

    struct AlwaysInfeasible;

    impl InfillObjectives for AlwaysInfeasible {
        fn n_objectives(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &DesignVector) -> Candidate {
            let pov = 0.5 * x.continuous[0];
            Candidate::new(x.clone(), vec![x.continuous[1]], vec![pov_constraint(pov, 0.999)], pov)
        }
    }

    fn square() -> (DesignSpace, ValidDiscreteSet) {
        let s = DesignSpace::flat(vec![VariableDef::continuous("a", 0.0, 1.0), VariableDef::continuous("b", 0.0, 1.0)])
            .unwrap();
        let v = s.enumerate_valid().unwrap();
        (s, v)
    }

    #[test]
    fn duplicated_criterion_collapses_to_optimum() {
        let (s, v) = square();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = optimize_infill(&s, &v, &Duplicated, &InfillConfig::default(), &mut rng);
        assert!(r.feasible);
        assert_eq!(r.front.len(), 1);
        let x = &r.front[0].x.continuous;
        assert!((x[0] - 0.3).abs() < 0.02 && (x[1] - 0.6).abs() < 0.02, "{x:?}");
    }

    #[test]
    fn infeasible_problem_returns_least_violation() {
        let (s, v) = square();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = optimize_infill(&s, &v, &AlwaysInfeasible, &InfillConfig::default(), &mut rng);
        assert!(!r.feasible);
        assert!(r.front.iter().all(|c| c.x.continuous[0] > 0.95), "{:?}", r.front[0].x);
    }

    #[test]
    fn candidates_are_repaired() {
        let (s, v) = square();
        let xs: Vec<DesignVector> = crate::sampling::hierarchical_sample(&s, &v, 8, 0).unwrap();
        let y: Vec<f64> = xs.iter().map(|x| x.continuous[0] + x.continuous[1]).collect();
        let gp = Gp::fit(&s, &xs, &y, &GpConfig::default()).unwrap();
        let problem = EnsembleInfill::new(
            &s,
            Surrogates { objectives: vec![gp], constraints: vec![], pov: None },
            &y.iter().map(|&v| vec![v]).collect::<Vec<_>>(),
            &InfillConfig::default(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = optimize_infill(&s, &v, &problem, &InfillConfig { n_generations: 5, ..Default::default() }, &mut rng);
        assert!(r.front.iter().all(|c| s.is_canonical(&c.x)));
        assert!(r.front.iter().all(|c| c.f.iter().all(|v| (0.0..=1.0).contains(v))));
    }
}
