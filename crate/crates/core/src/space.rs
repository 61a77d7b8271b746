//! Hierarchical mixed-discrete design spaces.
//!
//! Discrete values are stored as zero-based option indices. For an integer
//! variable with bounds `[lower, upper]` option `k` stands for `lower + k`.
//! Inactive discrete variables hold option 0 and inactive continuous
//! variables hold the midpoint of their bounds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the declared discrete product for enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous { lower: f64, upper: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { n_options: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDef {
    pub name: String,
    pub kind: VarKind,
}

impl VariableDef {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), kind: VarKind::Continuous { lower, upper } }
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64) -> Self {
        Self { name: name.into(), kind: VarKind::Integer { lower, upper } }
    }

    pub fn categorical(name: impl Into<String>, n_options: usize) -> Self {
        Self { name: name.into(), kind: VarKind::Categorical { n_options } }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VarKind::Continuous { .. })
    }

    /// Number of options of a discrete variable, `None` for continuous ones.
    pub fn n_options(&self) -> Option<usize> {
        match self.kind {
            VarKind::Continuous { .. } => None,
            VarKind::Integer { lower, upper } => Some((upper - lower + 1) as usize),
            VarKind::Categorical { n_options } => Some(n_options),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            VarKind::Continuous { lower, upper } => lower.is_finite() && upper.is_finite() && lower < upper,
            VarKind::Integer { lower, upper } => lower <= upper,
            VarKind::Categorical { n_options } => n_options >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid bounds for variable {}", self.name)))
        }
    }
}

/// Deterministic correction of discrete values and activeness.
///
/// `values` and `active` are indexed by variable position. Entries at
/// continuous positions of `values` are ignored. `active` arrives all true.
/// Implementations must be idempotent on their own output once inactive
/// discrete values are reset to option 0.
pub trait Hierarchy: Send + Sync + fmt::Debug {
    fn correct(&self, values: &mut [usize], active: &mut [bool]);
}

/// No hierarchy: every variable is always active and every combination valid.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flat;

impl Hierarchy for Flat {
    fn correct(&self, _values: &mut [usize], _active: &mut [bool]) {}
}

/// Predicate over discrete option indices, referring to variables by position.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Always,
    Equals(usize, usize),
    OneOf(usize, Vec<usize>),
    AtLeast(usize, usize),
    ActiveVar(usize),
    Not(Box<Condition>),
    All(Vec<Condition>),
    Any(Vec<Condition>),
}

impl Condition {
    fn holds(&self, values: &[usize], active: &[bool]) -> bool {
        match self {
            Condition::Always => true,
            Condition::Equals(var, opt) => values[*var] == *opt,
            Condition::OneOf(var, opts) => opts.contains(&values[*var]),
            Condition::AtLeast(var, opt) => values[*var] >= *opt,
            Condition::ActiveVar(var) => active[*var],
            Condition::Not(c) => !c.holds(values, active),
            Condition::All(cs) => cs.iter().all(|c| c.holds(values, active)),
            Condition::Any(cs) => cs.iter().any(|c| c.holds(values, active)),
        }
    }
}

/// One step of a declarative correction.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// The target variable is active only when the condition holds.
    ActiveIf { target: usize, when: Condition },
    /// Option index of a discrete target is clamped to `values[source] + offset`.
    AtMost { target: usize, source: usize, offset: i64 },
}

/// Rules applied in order; each inactive discrete variable is reset to
/// option 0 as soon as it is deactivated, so later rules see canonical values.
#[derive(Debug, Clone, Default)]
pub struct RuleHierarchy {
    rules: Vec<Rule>,
    discrete: Vec<bool>,
}

impl RuleHierarchy {
    /// `discrete[i]` tells whether the variable at position `i` is discrete.
    pub fn new(rules: Vec<Rule>, discrete: Vec<bool>) -> Self {
        Self { rules, discrete }
    }
}

impl Hierarchy for RuleHierarchy {
    fn correct(&self, values: &mut [usize], active: &mut [bool]) {
        for rule in &self.rules {
            match rule {
                Rule::ActiveIf { target, when } => {
                    if !when.holds(values, active) {
                        active[*target] = false;
                        if self.discrete[*target] {
                            values[*target] = 0;
                        }
                    }
                }
                Rule::AtMost { target, source, offset } => {
                    if active[*target] {
                        let limit = (values[*source] as i64 + offset).max(0) as usize;
                        if values[*target] > limit {
                            values[*target] = limit;
                        }
                    }
                }
            }
        }
    }
}

/// Correction by matching against an explicit table of valid rows.
///
/// Discrete variables are matched one at a time in order. A row survives a
/// variable if it is inactive there or active with the same value. When no
/// row survives, the rows closest in value are kept instead. The first row
/// remaining at the end is used.
#[derive(Debug, Clone)]
pub struct TableHierarchy {
    positions: Vec<usize>,
    rows: Vec<Vec<usize>>,
    row_active: Vec<Vec<bool>>,
}

impl TableHierarchy {
    /// `positions` are the variable positions covered by the table columns.
    pub fn new(positions: Vec<usize>, rows: Vec<Vec<usize>>, row_active: Vec<Vec<bool>>) -> Self {
        assert_eq!(rows.len(), row_active.len());
        Self { positions, rows, row_active }
    }

    fn select(&self, values: &[usize]) -> usize {
        let mut candidates: Vec<usize> = (0..self.rows.len()).collect();
        for (col, &pos) in self.positions.iter().enumerate() {
            let v = values[pos];
            let kept: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&r| !self.row_active[r][col] || self.rows[r][col] == v)
                .collect();
            candidates = if kept.is_empty() {
                let dist = |r: usize| (self.rows[r][col] as i64 - v as i64).abs();
                let best = candidates.iter().map(|&r| dist(r)).min().unwrap_or(0);
                candidates.into_iter().filter(|&r| dist(r) == best).collect()
            } else {
                kept
            };
            if candidates.len() == 1 {
                break;
            }
        }
        candidates[0]
    }
}

impl Hierarchy for TableHierarchy {
    fn correct(&self, values: &mut [usize], active: &mut [bool]) {
        let row = self.select(values);
        for (col, &pos) in self.positions.iter().enumerate() {
            values[pos] = self.rows[row][col];
            active[pos] = self.row_active[row][col];
        }
    }
}

/// A point in a design space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    /// Option index per discrete variable, in declaration order.
    pub discrete: Vec<usize>,
    /// Value per continuous variable, in declaration order.
    pub continuous: Vec<f64>,
    /// Activeness per variable, indexed by variable position.
    pub active: Vec<bool>,
}

/// Variables plus the correction rule that makes vectors valid.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    variables: Vec<VariableDef>,
    hierarchy: Arc<dyn Hierarchy>,
    discrete_pos: Vec<usize>,
    continuous_pos: Vec<usize>,
}

impl DesignSpace {
    pub fn new(variables: Vec<VariableDef>, hierarchy: Arc<dyn Hierarchy>) -> Result<Self> {
        for v in &variables {
            v.validate()?;
        }
        let discrete_pos = (0..variables.len()).filter(|&i| !variables[i].is_continuous()).collect();
        let continuous_pos = (0..variables.len()).filter(|&i| variables[i].is_continuous()).collect();
        Ok(Self { variables, hierarchy, discrete_pos, continuous_pos })
    }

    pub fn flat(variables: Vec<VariableDef>) -> Result<Self> {
        Self::new(variables, Arc::new(Flat))
    }

    pub fn variables(&self) -> &[VariableDef] {
        &self.variables
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_discrete(&self) -> usize {
        self.discrete_pos.len()
    }

    pub fn n_continuous(&self) -> usize {
        self.continuous_pos.len()
    }

    /// Variable positions of the discrete variables.
    pub fn discrete_positions(&self) -> &[usize] {
        &self.discrete_pos
    }

    /// Variable positions of the continuous variables.
    pub fn continuous_positions(&self) -> &[usize] {
        &self.continuous_pos
    }

    /// Option count per discrete variable.
    pub fn discrete_options(&self) -> Vec<usize> {
        self.discrete_pos.iter().map(|&p| self.variables[p].n_options().unwrap_or(1)).collect()
    }

    /// Bounds per continuous variable.
    pub fn continuous_bounds(&self) -> Vec<(f64, f64)> {
        self.continuous_pos
            .iter()
            .map(|&p| match self.variables[p].kind {
                VarKind::Continuous { lower, upper } => (lower, upper),
                _ => unreachable!(),
            })
            .collect()
    }

    /// Whether the `j`-th discrete variable is categorical (as opposed to integer).
    pub fn is_categorical(&self, j: usize) -> bool {
        matches!(self.variables[self.discrete_pos[j]].kind, VarKind::Categorical { .. })
    }

    /// Integer value represented by option `k` of the `j`-th discrete variable.
    pub fn integer_value(&self, j: usize, k: usize) -> i64 {
        match self.variables[self.discrete_pos[j]].kind {
            VarKind::Integer { lower, .. } => lower + k as i64,
            _ => k as i64,
        }
    }

    /// Product of all discrete option counts.
    pub fn declared_discrete_size(&self) -> u128 {
        self.discrete_options().iter().map(|&n| n as u128).product()
    }

    /// Corrected discrete part and activeness for raw discrete option indices.
    pub fn correct_discrete(&self, discrete: &[usize]) -> (Vec<usize>, Vec<bool>) {
        let options = self.discrete_options();
        let mut values = vec![0usize; self.n_vars()];
        for (j, &p) in self.discrete_pos.iter().enumerate() {
            values[p] = discrete[j].min(options[j] - 1);
        }
        let mut active = vec![true; self.n_vars()];
        self.hierarchy.correct(&mut values, &mut active);
        let out = self
            .discrete_pos
            .iter()
            .map(|&p| if active[p] { values[p] } else { 0 })
            .collect();
        (out, active)
    }

    /// Map any vector to its valid canonical form.
    pub fn repair(&self, raw: &DesignVector) -> DesignVector {
        let (discrete, active) = self.correct_discrete(&raw.discrete);
        let continuous = self
            .continuous_bounds()
            .iter()
            .zip(&self.continuous_pos)
            .enumerate()
            .map(|(i, (&(lo, hi), &p))| {
                let v = raw.continuous.get(i).copied().unwrap_or(f64::NAN);
                if !active[p] || v.is_nan() {
                    0.5 * (lo + hi)
                } else {
                    v.clamp(lo, hi)
                }
            })
            .collect();
        DesignVector { discrete, continuous, active }
    }

    /// Whether `x` equals its own repair.
    pub fn is_canonical(&self, x: &DesignVector) -> bool {
        x.discrete.len() == self.n_discrete()
            && x.continuous.len() == self.n_continuous()
            && &self.repair(x) == x
    }

    /// All valid discrete vectors, with the default enumeration cap.
    pub fn enumerate_valid(&self) -> Result<ValidDiscreteSet> {
        self.enumerate_valid_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_valid_with_cap(&self, cap: u128) -> Result<ValidDiscreteSet> {
        let declared = self.declared_discrete_size();
        if declared > cap {
            return Err(Error::CapExceeded { declared, cap });
        }
        let options = self.discrete_options();
        let mut seen: BTreeMap<Vec<usize>, Vec<bool>> = BTreeMap::new();
        let mut current = vec![0usize; options.len()];
        loop {
            let (values, active) = self.correct_discrete(&current);
            seen.entry(values).or_insert(active);
            // Mixed-radix increment, last variable fastest.
            let mut k = options.len();
            loop {
                if k == 0 {
                    let (vectors, activeness) = seen.into_iter().unzip();
                    return Ok(ValidDiscreteSet::new(vectors, activeness));
                }
                k -= 1;
                current[k] += 1;
                if current[k] < options[k] {
                    break;
                }
                current[k] = 0;
            }
        }
    }

    /// Discrete and continuous imputation ratios; the continuous ratio is 1
    /// when there are no continuous variables.
    pub fn imputation_ratio(&self, valid: &ValidDiscreteSet) -> ImputationRatio {
        let discrete = self.declared_discrete_size() as f64 / valid.len() as f64;
        let continuous = self.continuous_imputation_ratio(valid).unwrap_or(1.0);
        ImputationRatio { discrete, continuous, total: discrete * continuous }
    }

    /// Continuous imputation ratio, failing when it is undefined.
    pub fn continuous_imputation_ratio(&self, valid: &ValidDiscreteSet) -> Result<f64> {
        let n_xc = self.n_continuous();
        let active_sum: usize = valid
            .activeness
            .iter()
            .map(|row| self.continuous_pos.iter().filter(|&&p| row[p]).count())
            .sum();
        if n_xc == 0 || active_sum == 0 {
            return Err(Error::DivisionDegenerate);
        }
        Ok((valid.len() * n_xc) as f64 / active_sum as f64)
    }

    /// Occurrence-rate spread of every discrete variable over the valid set.
    pub fn rate_diversity(&self, valid: &ValidDiscreteSet) -> RateDiversity {
        let n = valid.len() as f64;
        let per_variable: Vec<f64> = self
            .discrete_options()
            .iter()
            .enumerate()
            .map(|(j, &n_opt)| {
                let pos = self.discrete_pos[j];
                let mut counts = vec![0usize; n_opt + 1];
                for (row, act) in valid.vectors.iter().zip(&valid.activeness) {
                    if act[pos] {
                        counts[row[j] + 1] += 1;
                    } else {
                        counts[0] += 1;
                    }
                }
                let rates = counts.iter().map(|&c| c as f64 / n);
                let (lo, hi) = rates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
                hi - lo
            })
            .collect();
        let max = per_variable.iter().copied().fold(0.0, f64::max);
        RateDiversity { per_variable, max }
    }

    /// Midpoint-imputed canonical vector with all discrete options at 0, before correction.
    pub fn zero_vector(&self) -> DesignVector {
        DesignVector {
            discrete: vec![0; self.n_discrete()],
            continuous: self.continuous_bounds().iter().map(|&(l, u)| 0.5 * (l + u)).collect(),
            active: vec![true; self.n_vars()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputationRatio {
    pub discrete: f64,
    pub continuous: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDiversity {
    pub per_variable: Vec<f64>,
    pub max: f64,
}

/// All valid discrete vectors of a space with their activeness masks.
#[derive(Debug, Clone)]
pub struct ValidDiscreteSet {
    pub vectors: Vec<Vec<usize>>,
    /// Activeness per vector, indexed by variable position.
    pub activeness: Vec<Vec<bool>>,
    index: HashMap<Vec<usize>, usize>,
}

impl ValidDiscreteSet {
    pub fn new(vectors: Vec<Vec<usize>>, activeness: Vec<Vec<bool>>) -> Self {
        let index = vectors.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        Self { vectors, activeness, index }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn position(&self, discrete: &[usize]) -> Option<usize> {
        self.index.get(discrete).copied()
    }

    pub fn contains(&self, discrete: &[usize]) -> bool {
        self.index.contains_key(discrete)
    }

    /// Indices of vectors grouped by identical activeness masks, groups in
    /// order of first appearance.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<Vec<bool>> = Vec::new();
        let mut members: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
        for (i, act) in self.activeness.iter().enumerate() {
            members
                .entry(act.clone())
                .or_insert_with(|| {
                    order.push(act.clone());
                    Vec::new()
                })
                .push(i);
        }
        order.into_iter().map(|k| members.remove(&k).unwrap_or_default()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> DesignSpace {
        // x0: categorical(2); x1: categorical(3) active only if x0 == 1; x2 continuous active if x1 >= 1.
        let vars = vec![
            VariableDef::categorical("a", 2),
            VariableDef::categorical("b", 3),
            VariableDef::continuous("c", 0.0, 2.0),
        ];
        let rules = RuleHierarchy::new(
            vec![
                Rule::ActiveIf { target: 1, when: Condition::Equals(0, 1) },
                Rule::ActiveIf { target: 2, when: Condition::AtLeast(1, 1) },
            ],
            vec![true, true, false],
        );
        DesignSpace::new(vars, Arc::new(rules)).unwrap()
    }

    #[test]
    fn flat_space_enumerates_everything() {
        let s = DesignSpace::flat(vec![VariableDef::categorical("a", 3), VariableDef::categorical("b", 2)]).unwrap();
        let v = s.enumerate_valid().unwrap();
        assert_eq!(v.len(), 6);
        assert!(v.activeness.iter().all(|a| a.iter().all(|&x| x)));
        let ir = s.imputation_ratio(&v);
        assert_eq!((ir.discrete, ir.continuous, ir.total), (1.0, 1.0, 1.0));
        assert_eq!(s.continuous_imputation_ratio(&v), Err(Error::DivisionDegenerate));
    }

    #[test]
    fn hierarchy_enumeration_and_repair() {
        let s = two_level();
        let v = s.enumerate_valid().unwrap();
        assert_eq!(v.vectors, vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![1, 2]]);
        let raw = DesignVector { discrete: vec![0, 2], continuous: vec![1.8], active: vec![true; 3] };
        let fixed = s.repair(&raw);
        assert_eq!(fixed.discrete, vec![0, 0]);
        assert_eq!(fixed.continuous, vec![1.0]);
        assert_eq!(fixed.active, vec![true, false, false]);
        assert_eq!(s.repair(&fixed), fixed);
    }

    #[test]
    fn canonical_vector_is_unchanged() {
        let s = two_level();
        let x = DesignVector { discrete: vec![1, 2], continuous: vec![0.3], active: vec![true; 3] };
        assert_eq!(s.repair(&x), x);
    }

    #[test]
    fn value_limit_rule_clamps_dependent_choice() {
        // Total crew size (1..3) limits the crew of a module to at most the total.
        let vars = vec![VariableDef::integer("total", 1, 3), VariableDef::integer("module", 1, 3)];
        let rules = RuleHierarchy::new(vec![Rule::AtMost { target: 1, source: 0, offset: 0 }], vec![true, true]);
        let s = DesignSpace::new(vars, Arc::new(rules)).unwrap();
        let raw = DesignVector { discrete: vec![1, 2], continuous: vec![], active: vec![true; 2] };
        let fixed = s.repair(&raw);
        assert_eq!(s.integer_value(0, fixed.discrete[0]), 2);
        assert!((1..=2).contains(&s.integer_value(1, fixed.discrete[1])));
        assert_eq!(s.enumerate_valid().unwrap().len(), 6);
    }

    #[test]
    fn cap_is_enforced() {
        let vars = (0..8).map(|i| VariableDef::categorical(format!("v{i}"), 10)).collect();
        let s = DesignSpace::flat(vars).unwrap();
        assert!(matches!(s.enumerate_valid(), Err(Error::CapExceeded { .. })));
        let small = DesignSpace::flat((0..4).map(|i| VariableDef::categorical(format!("v{i}"), 10)).collect()).unwrap();
        assert!(small.enumerate_valid_with_cap(9_999).is_err());
        assert_eq!(small.enumerate_valid_with_cap(10_000).unwrap().len(), 10_000);
    }

    #[test]
    fn invalid_variables_are_rejected() {
        assert!(DesignSpace::flat(vec![VariableDef::continuous("x", 1.0, 1.0)]).is_err());
        assert!(DesignSpace::flat(vec![VariableDef::categorical("c", 1)]).is_err());
        assert!(DesignSpace::flat(vec![VariableDef::integer("i", 2, 1)]).is_err());
    }

    #[test]
    fn groups_follow_activeness() {
        let s = two_level();
        let v = s.enumerate_valid().unwrap();
        let g = v.groups();
        assert_eq!(g, vec![vec![0], vec![1], vec![2, 3]]);
    }
}
