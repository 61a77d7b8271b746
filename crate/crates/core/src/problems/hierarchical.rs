//! Problems with hierarchical design spaces.

use std::f64::consts::PI;
use std::sync::Arc;

use super::analytic::{mueller2_space, Branin, BraninRegion, Mueller2, BRANIN_OPTIMUM, MUELLER2_UNCONSTRAINED_OPTIMUM};
use super::{Family, Metadata, Model, Outputs, ProblemDef};
use crate::space::{Condition, DesignSpace, Rule, RuleHierarchy, TableHierarchy, VariableDef};

/// Valid selection-variable combinations of the subproblem meta problems,
/// one row per subproblem; `-` marks an inactive variable.
pub const SUBPROBLEM_TABLE: &str = "\
0 0 0 - 0
0 0 0 - 1
0 0 1 - -
0 0 2 0 -
0 0 2 1 -
0 1 0 0 -
0 1 0 1 -
0 1 1 - -
0 1 2 - -
0 2 0 0 -
0 2 0 1 -
0 2 1 - -
0 2 2 - -
1 0 0 - -
1 0 1 - -
1 1 - - -
1 2 - - -
2 0 - - -
2 1 - - -
2 2 - - -";

fn parse_table() -> (Vec<Vec<usize>>, Vec<Vec<bool>>) {
    SUBPROBLEM_TABLE
        .lines()
        .map(|line| {
            line.split_whitespace()
                .map(|tok| match tok {
                    "-" => (0, false),
                    v => (v.parse().expect("table digit"), true),
                })
                .unzip()
        })
        .unzip()
}

/// Underlying problem whose objective is shifted and scaled differently in
/// each subproblem picked by the selection variables.
#[derive(Debug)]
struct SubproblemSelection {
    rows: Vec<Vec<usize>>,
    row_active: Vec<Vec<bool>>,
    /// `(translate, scale)` per subproblem.
    transforms: Vec<(f64, f64)>,
    /// Objective value the transform is anchored at.
    anchor: f64,
    inner: Arc<dyn Model>,
}

impl SubproblemSelection {
    fn new(inner: Arc<dyn Model>, anchor: f64) -> Self {
        let (rows, row_active) = parse_table();
        let n = rows.len() as f64;
        let transforms = (0..rows.len())
            .map(|i| {
                let t = i as f64 / n;
                (((t + 0.25) * 2.0 * PI).sin(), ((t + 0.125) * 4.0 * PI).cos())
            })
            .collect();
        Self { rows, row_active, transforms, anchor, inner }
    }

    fn subproblem(&self, selection: &[f64]) -> Option<usize> {
        (0..self.rows.len()).find(|&r| {
            selection.iter().enumerate().all(|(c, &v)| {
                let expected = if self.row_active[r][c] { self.rows[r][c] } else { 0 };
                v as usize == expected
            })
        })
    }

    fn transform(&self, row: usize, f: f64) -> f64 {
        let (translate, scale) = self.transforms[row];
        let shifted = f - self.anchor + 0.2 * translate;
        (shifted - 0.5) * (0.5 + 0.4 * scale) + 0.5 + self.anchor
    }

    fn n_selection(&self) -> usize {
        self.rows[0].len()
    }
}

impl Model for SubproblemSelection {
    fn outputs(&self, values: &[f64]) -> Outputs {
        let n_sel = self.n_selection();
        let row = self.subproblem(&values[..n_sel]);
        debug_assert!(row.is_some(), "selection values are not a repaired table row");
        let row = row?;
        let (f, g) = self.inner.outputs(&values[n_sel..])?;
        Some((f.into_iter().map(|v| self.transform(row, v)).collect(), g))
    }
}

fn subproblem_problem(
    name: &'static str,
    slug: &'static str,
    continuous: Vec<VariableDef>,
    inner: Arc<dyn Model>,
    anchor: f64,
    fail_rate: f64,
    listed_n_xd: usize,
) -> ProblemDef {
    let model = SubproblemSelection::new(inner, anchor);
    let n_sel = model.n_selection();
    let options: Vec<usize> = (0..n_sel).map(|c| model.rows.iter().map(|r| r[c]).max().unwrap_or(0) + 1).collect();
    let mut vars: Vec<VariableDef> =
        options.iter().enumerate().map(|(c, &n)| VariableDef::categorical(format!("s{c}"), n)).collect();
    let n_xc = continuous.len();
    vars.extend(continuous);
    let hierarchy = TableHierarchy::new((0..n_sel).collect(), model.rows.clone(), model.row_active.clone());
    let space = DesignSpace::new(vars, Arc::new(hierarchy)).expect("valid bounds");
    let metadata = Metadata {
        n_xc,
        n_xd: listed_n_xd,
        n_f: 1,
        n_g: 0,
        imputation_ratio: Some(5.4),
        fail_rate,
        family: Family::Analytic,
    };
    ProblemDef::new(name, slug, space, (1, 0), metadata, Arc::new(model))
}

fn unit_pair() -> Vec<VariableDef> {
    vec![VariableDef::continuous("x0", 0.0, 1.0), VariableDef::continuous("x1", 0.0, 1.0)]
}

pub(super) fn h_alimo() -> ProblemDef {
    let inner = Arc::new(Branin { region: BraninRegion::Alimo });
    subproblem_problem("H Alimo", "h-alimo", unit_pair(), inner, BRANIN_OPTIMUM, 0.51, 5)
}

pub(super) fn h_alimo_edge() -> ProblemDef {
    let inner = Arc::new(Branin { region: BraninRegion::AlimoEdge });
    subproblem_problem("H Alimo Edge", "h-alimo-edge", unit_pair(), inner, BRANIN_OPTIMUM, 0.53, 5)
}

pub(super) fn h_mueller2() -> ProblemDef {
    subproblem_problem(
        "H Müller 2",
        "h-mueller2",
        mueller2_space(),
        Arc::new(Mueller2),
        MUELLER2_UNCONSTRAINED_OPTIMUM,
        0.37,
        4,
    )
}

/// Variable-size Rosenbrock: two selection variables pick one of four
/// subproblems over different subsets of eight continuous variables.
#[derive(Debug, Clone, Copy)]
struct Rosenbrock {
    multi_objective: bool,
}

const X_IDX: [&[usize]; 4] = [&[0, 1, 2, 3], &[0, 1, 4, 5], &[0, 1, 2, 3, 6, 7], &[0, 1, 4, 5, 6, 7]];
const X_IDX_G2: [&[usize]; 2] = [&[0, 1, 2, 3], &[0, 1, 2, 3, 6, 7]];

impl Rosenbrock {
    fn objective(x: &[f64], z: [f64; 3], idx: usize) -> f64 {
        let a1 = [7.0, 7.0, 10.0, 10.0][idx];
        let a2 = [9.0, 6.0, 9.0, 6.0][idx];
        let (sign, pre) = if z[1] == 0.0 { (1.0, 1.0) } else { (-1.0, 0.7) };
        let sum: f64 = x
            .windows(2)
            .map(|w| pre * a1 * a2 * (w[1] - w[0]).powi(2) + (a1 + sign * a2) / 10.0 * (1.0 - w[0]).powi(2))
            .sum();
        let mut f = 100.0 * z[0] + sum;
        if idx % 2 == 1 {
            f -= 35.0 * z[2];
        }
        f
    }

    fn g1(x: &[f64]) -> f64 {
        x.windows(2).map(|w| -(w[0] - 1.0).powi(3) + w[1] - 2.6).sum()
    }

    fn g2(x: &[f64]) -> f64 {
        x.windows(2).map(|w| -w[0] - w[1] + 0.4).sum()
    }

    /// Distance of `v / period` from the middle of its unit cell exceeds 0.35.
    fn off_band(v: f64, period: f64) -> bool {
        (0.5 - (v / period).rem_euclid(1.0)).abs() > 0.35
    }
}

impl Model for Rosenbrock {
    fn outputs(&self, values: &[f64]) -> Outputs {
        let x = &values[..8];
        let z = [values[8], values[9], values[10]];
        let idx = 2 * values[11] as usize + values[12] as usize;
        let pick = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| x[i]).collect() };
        let xs = pick(X_IDX[idx]);
        let f1 = Self::objective(&xs, z, idx);
        let g2 = if idx < 2 { Self::g2(&pick(X_IDX_G2[idx])) } else { 0.0 };
        let mut failed = g2 > 0.0;
        let mut f = vec![f1];
        if self.multi_objective {
            let f2 = ((400.0 - f1) / 40.0).abs().powi(2) + xs[..4].iter().map(|v| 200.0 * (v + 1.0).powi(2)).sum::<f64>();
            failed |= Self::off_band(f1, 20.0) || (f2 > 1000.0 && Self::off_band(f2, 100.0));
            f.push(f2);
        }
        if failed {
            return None;
        }
        Some((f, vec![Self::g1(&xs)]))
    }
}

fn rosenbrock_space() -> DesignSpace {
    let mut vars: Vec<VariableDef> = (0..8)
        .map(|i| {
            if i % 2 == 0 {
                VariableDef::continuous(format!("x{i}"), -1.0, 0.5)
            } else {
                VariableDef::continuous(format!("x{i}"), 0.0, 1.5)
            }
        })
        .collect();
    vars.push(VariableDef::integer("z1", 0, 1));
    vars.push(VariableDef::integer("z2", 0, 1));
    vars.push(VariableDef::integer("z3", 0, 2));
    vars.push(VariableDef::categorical("w1", 2));
    vars.push(VariableDef::categorical("w2", 2));

    let (w1, w2) = (11, 12);
    let both = Condition::All(vec![Condition::Equals(w1, 1), Condition::Equals(w2, 1)]);
    let either = Condition::Any(vec![Condition::Equals(w1, 1), Condition::Equals(w2, 1)]);
    let mut rules = Vec::new();
    for t in [2, 3] {
        rules.push(Rule::ActiveIf { target: t, when: Condition::Not(Box::new(both.clone())) });
    }
    for t in [4, 5, 10] {
        rules.push(Rule::ActiveIf { target: t, when: Condition::Equals(w2, 1) });
    }
    for t in [6, 7] {
        rules.push(Rule::ActiveIf { target: t, when: either.clone() });
    }
    let discrete = (0..vars.len()).map(|i| i >= 8).collect();
    DesignSpace::new(vars, Arc::new(RuleHierarchy::new(rules, discrete))).expect("valid bounds")
}

fn rosenbrock_problem(name: &'static str, slug: &'static str, multi_objective: bool, fail_rate: f64) -> ProblemDef {
    let n_f = if multi_objective { 2 } else { 1 };
    let metadata = Metadata {
        n_xc: 8,
        n_xd: 5,
        n_f,
        n_g: 1,
        imputation_ratio: Some(1.5),
        fail_rate,
        family: Family::Analytic,
    };
    ProblemDef::new(name, slug, rosenbrock_space(), (n_f, 1), metadata, Arc::new(Rosenbrock { multi_objective }))
}

pub(super) fn h_hc_rosenbrock() -> ProblemDef {
    rosenbrock_problem("H/HC Rosenbrock", "h-hc-rosenbrock", false, 0.21)
}

pub(super) fn mo_h_hc_rosenbrock() -> ProblemDef {
    rosenbrock_problem("MO/H/HC Rosenbrock", "mo-h-hc-rosenbrock", true, 0.60)
}

/// Discrete architecture choices of a simple jet engine: fan inclusion,
/// shaft count, gearbox and mixed nozzle (only with a fan), and the shaft
/// indices of power and bleed offtakes (bounded by the shaft count).
pub fn jet_engine_space() -> DesignSpace {
    let vars = vec![
        VariableDef::categorical("fan", 2),
        VariableDef::integer("shafts", 1, 3),
        VariableDef::categorical("gearbox", 2),
        VariableDef::categorical("mixed_nozzle", 2),
        VariableDef::integer("power_offtake", 0, 2),
        VariableDef::integer("bleed_offtake", 0, 2),
    ];
    let rules = vec![
        Rule::ActiveIf { target: 2, when: Condition::Equals(0, 1) },
        Rule::ActiveIf { target: 3, when: Condition::Equals(0, 1) },
        Rule::AtMost { target: 4, source: 1, offset: 0 },
        Rule::AtMost { target: 5, source: 1, offset: 0 },
    ];
    DesignSpace::new(vars, Arc::new(RuleHierarchy::new(rules, vec![true; 6]))).expect("valid bounds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_twenty_distinct_rows() {
        let (rows, active) = parse_table();
        assert_eq!(rows.len(), 20);
        let mut keys: Vec<Vec<usize>> =
            rows.iter().zip(&active).map(|(r, a)| r.iter().zip(a).map(|(&v, &on)| if on { v } else { 9 }).collect()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 20);
    }

    #[test]
    fn first_transform_values() {
        let m = SubproblemSelection::new(Arc::new(Mueller2), 0.0);
        let (t, s) = m.transforms[0];
        assert!((t - 1.0).abs() < 1e-12 && s.abs() < 1e-12);
        // f' = (f + 0.2 - 0.5) * 0.5 + 0.5 at the first subproblem.
        assert!((m.transform(0, 1.0) - 0.85).abs() < 1e-12);
    }

    #[test]
    fn rosenbrock_activeness() {
        let space = rosenbrock_space();
        let valid = space.enumerate_valid().unwrap();
        assert_eq!(valid.len(), 32);
        assert_eq!(space.declared_discrete_size(), 48);
    }

    #[test]
    fn jet_engine_counts() {
        let space = jet_engine_space();
        assert_eq!(space.declared_discrete_size(), 216);
        assert_eq!(space.enumerate_valid().unwrap().len(), 70);
    }
}
