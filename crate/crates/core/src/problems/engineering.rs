//! Structural and crash-safety problems where some constraints act as hidden
//! constraints: an evaluation fails whenever any of them is negative.

use std::sync::Arc;

use super::{Family, Metadata, Model, Outputs, ProblemDef};
use crate::space::{DesignSpace, VariableDef};

type Formula = fn(&[f64]) -> (Vec<f64>, Vec<f64>);

const CANTILEVER_LOWER: [f64; 4] = [2.0, 0.1, 0.1, 3.0];
const CANTILEVER_UPPER: [f64; 4] = [12.0, 1.0, 2.0, 7.0];

/// I-beam volume with normalized stress and tip-deflection constraints.
fn cantilever(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (e, l, p) = (1e7, 36.0, 1000.0);
    let (b1, h1, b2, h) = (x[0], x[1], x[2], x[3]);
    let inertia = b2 * (h - 2.0 * h1).powi(3) / 12.0 + 2.0 * (b1 * h1.powi(3) / 12.0 + b1 * h1 * (h - h1).powi(2) / 4.0);
    let volume = (2.0 * h1 * b1 + (h - 2.0 * h1) * b2) * l;
    let stress = p * l * h / (2.0 * inertia);
    let deflection = p * l.powi(3) / (3.0 * e * inertia);
    (vec![volume], vec![(stress - 5000.0) / 5000.0, (deflection - 0.1) / 0.1])
}

const CARSIDE_LOWER: [f64; 7] = [0.5, 0.45, 0.5, 0.5, 0.875, 0.4, 0.4];
const CARSIDE_UPPER: [f64; 7] = [1.5, 1.35, 1.5, 1.5, 2.625, 1.2, 1.2];

/// Car side-impact problem: weight, pubic force and mean door velocity,
/// with ten normalized safety constraints.
fn carside(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g1 = 1.16 - 0.3717 * x[1] * x[3] - 0.0092928 * x[2];
    let g2 = 0.261 - 0.0159 * x[0] * x[1] - 0.188 * x[0] * 0.345 - 0.019 * x[1] * x[6]
        + 0.0144 * x[2] * x[4]
        + 0.08045 * x[5] * 0.192;
    let g3 = 0.214 + 0.00817 * x[4] - 0.131 * x[0] * 0.345 - 0.0704 * x[0] * 0.192 + 0.03099 * x[1] * x[5]
        - 0.018 * x[1] * x[6]
        + 0.0208 * x[2] * 0.345
        + 0.121 * x[2] * 0.192
        - 0.00364 * x[4] * x[5]
        - 0.018 * x[1] * x[1];
    let g4 = 0.74 - 0.61 * x[1] - 0.031296 * x[2] - 0.166 * x[6] * 0.192 + 0.227 * x[1] * x[1];
    let g5 = 28.98 + 3.818 * x[2] - 4.2 * x[0] * x[1] + 6.63 * x[5] * 0.192 - 7.77 * x[6] * 0.345;
    let g6 = 33.86 + 2.95 * x[2] - 5.057 * x[0] * x[1] - 11.0 * x[1] * 0.345 - 9.98 * x[6] * 0.345
        + 22.0 * 0.345 * 0.192;
    let g7 = 46.36 - 9.9 * x[1] - 12.9 * x[0] * 0.345;
    let g8 = 4.72 - 0.5 * x[3] - 0.19 * x[1] * x[2];
    let g9 = 10.58 - 0.674 * x[0] * x[1] - 1.95 * x[1] * 0.345;
    let g10 = 16.45 - 0.489 * x[2] * x[6] - 0.843 * x[4] * x[5];

    let f1 = 1.98 + 4.9 * x[0] + 6.67 * x[1] + 6.98 * x[2] + 4.01 * x[3] + 1.78 * x[4] + 0.00001 * x[5] + 2.73 * x[6];
    let f = vec![f1, g8, (g9 + g10) / 2.0];
    let g = vec![
        g1 - 1.0,
        g2 / 0.32 - 1.0,
        g3 / 0.32 - 1.0,
        g4 / 0.32 - 1.0,
        g5 / 32.0 - 1.0,
        g6 / 32.0 - 1.0,
        g7 / 32.0 - 1.0,
        g8 / 4.0 - 1.0,
        g9 / 9.9 - 1.0,
        g10 / 15.7 - 1.0,
    ];
    (f, g)
}

/// Number of levels of a discretized variable.
const LEVELS: usize = 10;

/// Underlying formula with some constraints turned into hidden constraints
/// and optionally its leading variables given as integer levels.
#[derive(Debug, Clone)]
pub(super) struct ConstraintHider {
    formula: Formula,
    lower: &'static [f64],
    upper: &'static [f64],
    hidden: &'static [usize],
    n_f: usize,
    n_levelled: usize,
}

impl Model for ConstraintHider {
    fn outputs(&self, values: &[f64]) -> Outputs {
        let x: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i < self.n_levelled {
                    self.lower[i] + v / (LEVELS - 1) as f64 * (self.upper[i] - self.lower[i])
                } else {
                    v
                }
            })
            .collect();
        let (mut f, g) = (self.formula)(&x);
        if self.hidden.iter().any(|&i| g[i] < 0.0) {
            return None;
        }
        f.truncate(self.n_f);
        let kept = g.iter().enumerate().filter(|(i, _)| !self.hidden.contains(i)).map(|(_, &v)| v).collect();
        Some((f, kept))
    }
}

impl ConstraintHider {
    fn space(&self) -> DesignSpace {
        let vars = (0..self.lower.len())
            .map(|i| {
                if i < self.n_levelled {
                    VariableDef::integer(format!("x{i}"), 0, LEVELS as i64 - 1)
                } else {
                    VariableDef::continuous(format!("x{i}"), self.lower[i], self.upper[i])
                }
            })
            .collect();
        DesignSpace::flat(vars).expect("valid bounds")
    }
}

fn problem(name: &'static str, slug: &'static str, model: ConstraintHider, n_g: usize, fail_rate: f64) -> ProblemDef {
    let space = model.space();
    let metadata = Metadata {
        n_xc: space.n_continuous(),
        n_xd: space.n_discrete(),
        n_f: model.n_f,
        n_g,
        imputation_ratio: None,
        fail_rate,
        family: Family::Engineering,
    };
    ProblemDef::new(name, slug, space, (model.n_f, n_g), metadata, Arc::new(model))
}

fn cantilever_model(n_levelled: usize) -> ConstraintHider {
    ConstraintHider {
        formula: cantilever,
        lower: &CANTILEVER_LOWER,
        upper: &CANTILEVER_UPPER,
        hidden: &[1],
        n_f: 1,
        n_levelled,
    }
}

fn carside_model(hidden: &'static [usize], n_f: usize, n_levelled: usize) -> ConstraintHider {
    ConstraintHider { formula: carside, lower: &CARSIDE_LOWER, upper: &CARSIDE_UPPER, hidden, n_f, n_levelled }
}

pub(super) fn hc_cantilever() -> ProblemDef {
    problem("HC CantBeam", "hc-cantbeam", cantilever_model(0), 1, 0.83)
}

pub(super) fn md_hc_cantilever() -> ProblemDef {
    problem("MD/HC CantBeam", "md-hc-cantbeam", cantilever_model(2), 1, 0.81)
}

pub(super) fn hc_carside_less() -> ProblemDef {
    problem("HC Carside Less", "hc-carside-less", carside_model(&[6], 1, 0), 9, 0.39)
}

pub(super) fn hc_carside() -> ProblemDef {
    problem("HC Carside", "hc-carside", carside_model(&[3, 7], 3, 0), 8, 0.66)
}

pub(super) fn md_hc_carside() -> ProblemDef {
    problem("MD/HC Carside", "md-hc-carside", carside_model(&[3, 7], 3, 4), 8, 0.66)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantilever_reference_design() {
        let (f, g) = cantilever(&[9.4846, 0.1, 0.1, 7.0]);
        assert!((f[0] - 92.7693).abs() < 1e-2, "{}", f[0]);
        assert!(g[0] <= 1e-3 && g[1] <= 1e-3);
    }

    #[test]
    fn carside_center_values() {
        let x: Vec<f64> = CARSIDE_LOWER.iter().zip(&CARSIDE_UPPER).map(|(l, u)| 0.5 * (l + u)).collect();
        let (f, g) = carside(&x);
        let f1 = 1.98 + 4.9 + 6.67 * 0.9 + 6.98 + 4.01 + 1.78 * 1.75 + 0.00001 * 0.8 + 2.73 * 0.8;
        assert!((f[0] - f1).abs() < 1e-12);
        assert!((f[1] - (4.72 - 0.5 - 0.19 * 0.9)).abs() < 1e-12);
        assert_eq!(g.len(), 10);
    }

    #[test]
    fn levels_span_bounds() {
        let m = cantilever_model(2);
        let lo = m.outputs(&[0.0, 0.0, 2.0, 7.0]);
        let direct = {
            let (f, g) = cantilever(&[2.0, 0.1, 2.0, 7.0]);
            if g[1] < 0.0 {
                None
            } else {
                Some((f, vec![g[0]]))
            }
        };
        assert_eq!(lo, direct);
    }
}
