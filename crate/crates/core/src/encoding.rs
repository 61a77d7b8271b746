//! Numeric encoding of design vectors for models and distances.

use serde::{Deserialize, Serialize};

use crate::space::{DesignSpace, DesignVector, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    /// Continuous value scaled to `[0, 1]`.
    Continuous,
    /// Integer level scaled to `[0, 1]`.
    Integer,
    /// Option index, compared by equality only.
    Categorical,
}

/// Maps design vectors to fixed-length feature rows in variable order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    kinds: Vec<FeatureKind>,
    /// Per variable: (index into the discrete or continuous part, offset, scale).
    slots: Vec<(usize, f64, f64)>,
}

impl Encoder {
    pub fn new(space: &DesignSpace) -> Self {
        let mut kinds = Vec::with_capacity(space.n_vars());
        let mut slots = Vec::with_capacity(space.n_vars());
        let (mut jd, mut jc) = (0, 0);
        for v in space.variables() {
            match v.kind {
                VarKind::Continuous { lower, upper } => {
                    kinds.push(FeatureKind::Continuous);
                    slots.push((jc, lower, upper - lower));
                    jc += 1;
                }
                VarKind::Integer { lower, upper } => {
                    kinds.push(FeatureKind::Integer);
                    slots.push((jd, 0.0, ((upper - lower) as f64).max(1.0)));
                    jd += 1;
                }
                VarKind::Categorical { .. } => {
                    kinds.push(FeatureKind::Categorical);
                    slots.push((jd, 0.0, 1.0));
                    jd += 1;
                }
            }
        }
        Self { kinds, slots }
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn encode(&self, x: &DesignVector) -> Vec<f64> {
        self.kinds
            .iter()
            .zip(&self.slots)
            .map(|(kind, &(j, offset, scale))| match kind {
                FeatureKind::Continuous => (x.continuous[j] - offset) / scale,
                FeatureKind::Integer => x.discrete[j] as f64 / scale,
                FeatureKind::Categorical => x.discrete[j] as f64,
            })
            .collect()
    }

    pub fn encode_all(&self, xs: &[DesignVector]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| self.encode(x)).collect()
    }

    /// Euclidean distance over continuous features plus Hamming count over
    /// discrete ones.
    pub fn mixed_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut sq = 0.0;
        let mut hamming = 0.0;
        for (k, kind) in self.kinds.iter().enumerate() {
            match kind {
                FeatureKind::Continuous => sq += (a[k] - b[k]).powi(2),
                _ => {
                    if a[k] != b[k] {
                        hamming += 1.0
                    }
                }
            }
        }
        sq.sqrt() + hamming
    }

    /// Squared distance with discrete mismatches counted as 1; a metric whose
    /// Gaussian kernel stays positive definite.
    pub fn squared_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.kinds
            .iter()
            .enumerate()
            .map(|(k, kind)| match kind {
                FeatureKind::Continuous => (a[k] - b[k]).powi(2),
                _ => {
                    if a[k] != b[k] {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .sum()
    }
}
