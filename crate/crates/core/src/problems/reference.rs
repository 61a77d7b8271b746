//! Stored reference optima and Pareto fronts.
//!
//! Each problem has a plain-text table under `data/references/`. A
//! single-objective table holds one line `optimum <f_opt> <scale>`. A
//! multi-objective table holds `ref_point <r_1> .. <r_m>` followed by one
//! front point per line. Lines starting with `#` are comments.

use serde::{Deserialize, Serialize};

use crate::metrics::{delta_hv, delta_optimum, hypervolume};

/// Quantile of viable sampled objective values defining the single-objective
/// normalization scale `f_q - f_opt`.
pub const REFERENCE_QUANTILE: f64 = 0.9;

/// Known optimum or Pareto front of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    Optimum { f_opt: f64, scale: f64 },
    Front { points: Vec<Vec<f64>>, ref_point: Vec<f64>, hypervolume: f64 },
}

impl Reference {
    pub fn front(points: Vec<Vec<f64>>, ref_point: Vec<f64>) -> Self {
        let hypervolume = hypervolume(&points, &ref_point);
        Reference::Front { points, ref_point, hypervolume }
    }

    /// Reference point at the nadir pushed out by a tenth of the front's extent.
    pub fn offset_nadir(points: &[Vec<f64>]) -> Vec<f64> {
        let m = points[0].len();
        (0..m)
            .map(|k| {
                let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                let extent = if hi > lo { hi - lo } else { hi.abs().max(1.0) };
                hi + 0.1 * extent
            })
            .collect()
    }

    /// Distance of the given feasible objective vectors to this reference.
    pub fn delta_hv(&self, feasible: &[Vec<f64>]) -> f64 {
        match self {
            Reference::Optimum { f_opt, scale } => {
                let values: Vec<f64> = feasible.iter().map(|f| f[0]).collect();
                delta_optimum(&values, *f_opt, *scale)
            }
            Reference::Front { ref_point, hypervolume, .. } => delta_hv(feasible, *hypervolume, ref_point),
        }
    }

    /// Serialize to the plain-text table format.
    pub fn to_table(&self) -> String {
        match self {
            Reference::Optimum { f_opt, scale } => format!("optimum {f_opt:e} {scale:e}\n"),
            Reference::Front { points, ref_point, .. } => {
                let row = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
                let mut out = format!("ref_point {}\n", row(ref_point));
                for p in points {
                    out.push_str(&row(p));
                    out.push('\n');
                }
                out
            }
        }
    }

    /// Parse the plain-text table format; `None` for an empty table.
    pub fn parse(text: &str, n_f: usize) -> Option<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let head = lines.next()?;
        let mut fields = head.split_whitespace();
        let tag = fields.next()?;
        let nums: Vec<f64> = fields.map(|t| t.parse().expect("numeric reference value")).collect();
        match tag {
            "optimum" => Some(Reference::Optimum { f_opt: nums[0], scale: nums[1] }),
            "ref_point" => {
                assert_eq!(nums.len(), n_f, "reference point dimension");
                let points = lines
                    .map(|l| l.split_whitespace().map(|t| t.parse().expect("numeric front value")).collect())
                    .collect();
                Some(Reference::front(points, nums))
            }
            other => panic!("unknown reference table tag {other}"),
        }
    }
}

macro_rules! tables {
    ($($slug:literal),* $(,)?) => {
        fn table(slug: &str) -> Option<&'static str> {
            match slug {
                $($slug => Some(include_str!(concat!("../../data/references/", $slug, ".txt"))),)*
                _ => None,
            }
        }
    };
}

tables!(
    "branin",
    "hc-branin",
    "alimo",
    "alimo-edge",
    "hc-sphere",
    "mueller1",
    "mueller2",
    "hc-cantbeam",
    "hc-carside-less",
    "hc-carside",
    "md-hc-cantbeam",
    "md-hc-carside",
    "h-alimo",
    "h-alimo-edge",
    "h-mueller2",
    "h-hc-rosenbrock",
    "mo-h-hc-rosenbrock",
);

/// Stored reference of a problem, if its table is filled in.
pub(super) fn stored(slug: &str, n_f: usize) -> Option<Reference> {
    table(slug).and_then(|t| Reference::parse(t, n_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = Reference::front(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.1, 1.1]);
        assert_eq!(Reference::parse(&r.to_table(), 2), Some(r));
        let o = Reference::Optimum { f_opt: 0.397887, scale: 12.5 };
        assert_eq!(Reference::parse(&o.to_table(), 1), Some(o));
        assert_eq!(Reference::parse("# nothing yet\n", 1), None);
    }

    #[test]
    fn nadir_offset() {
        let r = Reference::offset_nadir(&[vec![0.0, 2.0], vec![1.0, 0.0]]);
        assert_eq!(r, vec![1.1, 2.2]);
    }
}
