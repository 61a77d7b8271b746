//! Local improvement of the continuous part of a selected infill point.

use super::{Candidate, InfillObjectives, Normalization};
use crate::space::{DesignSpace, DesignVector};

const MAX_ITERATIONS: usize = 20;
const FD_STEP: f64 = 1e-5;
const DEVIATION_WEIGHT: f64 = 100.0;

/// Improvement measure relative to the reference objectives: the summed
/// change plus a penalty on unequal changes. Negative is better.
pub fn improvement(reference: &[f64], f: &[f64]) -> f64 {
    let deltas: Vec<f64> = f.iter().zip(reference).map(|(a, b)| a - b).collect();
    let sum: f64 = deltas.iter().sum();
    let max = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    sum + DEVIATION_WEIGHT * (max - min).powi(2)
}

/// Descend the improvement measure over the active continuous variables of
/// `selected`, keeping infill constraints satisfied. Returns the refined
/// design when it strictly improves, otherwise `selected` itself.
pub fn refine_continuous<P: InfillObjectives + ?Sized>(
    space: &DesignSpace,
    problem: &P,
    selected: &Candidate,
    normalization: &Normalization,
) -> DesignVector {
    let positions = space.continuous_positions();
    let bounds = space.continuous_bounds();
    let free: Vec<usize> = (0..bounds.len()).filter(|&i| selected.x.active[positions[i]]).collect();
    if free.is_empty() {
        return selected.x.clone();
    }
    let penalize = problem.penalize();
    let reference = normalization.objectives(selected, penalize);
    let cv_limit = selected.cv.max(0.0);

    let point = |u: &[f64]| -> DesignVector {
        let mut x = selected.x.clone();
        for (k, &i) in free.iter().enumerate() {
            let (lo, hi) = bounds[i];
            x.continuous[i] = lo + u[k].clamp(0.0, 1.0) * (hi - lo);
        }
        x
    };
    // Objective value, or None when the constraints get worse than allowed.
    let measure = |u: &[f64]| -> Option<f64> {
        let c = problem.evaluate(&point(u));
        if c.cv > cv_limit {
            return None;
        }
        Some(improvement(&reference, &normalization.objectives(&c, penalize)))
    };

    let mut u: Vec<f64> = free
        .iter()
        .map(|&i| {
            let (lo, hi) = bounds[i];
            (selected.x.continuous[i] - lo) / (hi - lo)
        })
        .collect();
    let mut value = 0.0;
    let mut step = 0.1;
    for _ in 0..MAX_ITERATIONS {
        let mut grad = vec![0.0; u.len()];
        for k in 0..u.len() {
            let mut up = u.clone();
            let mut down = u.clone();
            up[k] = (u[k] + FD_STEP).min(1.0);
            down[k] = (u[k] - FD_STEP).max(0.0);
            let (fu, fd) = (measure(&up).unwrap_or(value), measure(&down).unwrap_or(value));
            if up[k] > down[k] {
                grad[k] = (fu - fd) / (up[k] - down[k]);
            }
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-12 {
            break;
        }
        let mut improved = false;
        let mut t = step;
        while t > 1e-6 {
            let trial: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| (x - t * g / norm).clamp(0.0, 1.0)).collect();
            if let Some(v) = measure(&trial) {
                if v < value - 1e-4 * t * norm {
                    u = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
        step = (2.0 * t).min(0.25);
    }

    if value < -1e-12 {
        space.repair(&point(&u))
    } else {
        selected.x.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Condition, Rule, RuleHierarchy, VariableDef};
    use std::sync::Arc;

    struct Quadratic;

    impl InfillObjectives for Quadratic {
        fn n_objectives(&self) -> usize {
            2
        }
        fn evaluate(&self, x: &DesignVector) -> Candidate {
            let a = x.continuous[0];
            let b = x.continuous[1];
            let q = (a - 0.7).powi(2) + (b - 0.7).powi(2);
            let (f1, f2) = (q, 1.01 * q + 0.3);
            Candidate::new(x.clone(), vec![f1, f2], vec![], 1.0)
        }
    }

    fn with_f(c: Candidate) -> Candidate {
        let mut c = c;
        c.f = c.raw.clone();
        c
    }

    fn space() -> DesignSpace {
        let vars = vec![
            VariableDef::categorical("on", 2),
            VariableDef::continuous("a", 0.0, 1.0),
            VariableDef::continuous("b", 0.0, 1.0),
        ];
        let rules =
            RuleHierarchy::new(vec![Rule::ActiveIf { target: 2, when: Condition::Equals(0, 1) }], vec![true, false, false]);
        DesignSpace::new(vars, Arc::new(rules)).unwrap()
    }

    fn identity() -> Normalization {
        Normalization { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] }
    }

    #[test]
    fn common_descent_improves_both() {
        let s = space();
        let x = DesignVector { discrete: vec![1], continuous: vec![0.5, 0.6], active: vec![true; 3] };
        let sel = with_f(Quadratic.evaluate(&x));
        let out = refine_continuous(&s, &Quadratic, &sel, &identity());
        let after = Quadratic.evaluate(&out);
        assert!(after.raw[0] < sel.raw[0] && after.raw[1] < sel.raw[1]);
        assert!(after.raw[0] < 1e-3, "{:?}", out.continuous);
        let d: Vec<f64> = after.raw.iter().zip(&sel.raw).map(|(a, b)| a - b).collect();
        assert!(100.0 * (d[0] - d[1]).powi(2) <= 1e-4);
        assert!(improvement(&sel.raw, &after.raw) < 0.0);
        assert_eq!(out.discrete, x.discrete);
    }

    #[test]
    fn optimum_is_left_unchanged() {
        let s = space();
        let x = DesignVector { discrete: vec![1], continuous: vec![0.7, 0.7], active: vec![true; 3] };
        let sel = with_f(Quadratic.evaluate(&x));
        assert_eq!(refine_continuous(&s, &Quadratic, &sel, &identity()), x);
    }

    #[test]
    fn inactive_values_are_untouched() {
        let s = space();
        let x = DesignVector { discrete: vec![0], continuous: vec![0.2, 0.5], active: vec![true, true, false] };
        assert!(s.is_canonical(&x));
        let sel = with_f(Quadratic.evaluate(&x));
        let out = refine_continuous(&s, &Quadratic, &sel, &identity());
        assert_eq!(out.continuous[1], 0.5);
        assert!(out.continuous[0] > 0.2);
    }
}
