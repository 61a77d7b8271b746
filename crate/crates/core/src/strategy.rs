//! Hidden-constraint strategies: how failed evaluations shape the training
//! data and the infill problem.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::error::{Error, Result};
use crate::gp::{Gp, GpConfig};
use crate::pov::PovVariant;
use crate::space::{DesignSpace, DesignVector};

/// One evaluated design with its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub x: DesignVector,
    /// Objective values, all NaN when failed.
    pub f: Vec<f64>,
    /// Constraint values (`<= 0` satisfied), all NaN when failed.
    pub g: Vec<f64>,
    pub viable: bool,
}

impl EvaluatedPoint {
    pub fn failed(x: DesignVector, n_f: usize, n_g: usize) -> Self {
        Self { x, f: vec![f64::NAN; n_f], g: vec![f64::NAN; n_g], viable: false }
    }

    /// Objectives followed by constraints.
    pub fn outputs(&self) -> Vec<f64> {
        self.f.iter().chain(&self.g).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Neighborhood {
    /// Value of the closest viable point.
    Closest,
    /// Mean over the `n` closest viable points.
    NearestMean(usize),
    /// Max over the `n` closest viable points.
    NearestMax(usize),
    /// Max over all viable points.
    GlobalMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Integration {
    /// Infill constraint `pov_min - PoV(x) <= 0`.
    Constraint { pov_min: f64 },
    /// Infill objectives scaled by PoV.
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    Rejection,
    Replace(Neighborhood),
    ReplacePredictedWorst { alpha: f64 },
    Predict { model: PovVariant, integration: Integration },
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Predict { model: PovVariant::Mdgp, integration: Integration::Constraint { pov_min: 0.25 } }
    }
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::InvalidStrategy { text: self.to_string(), reason: reason.into() });
        match *self {
            Strategy::Replace(Neighborhood::NearestMean(0)) | Strategy::Replace(Neighborhood::NearestMax(0)) => {
                bad("n must be at least 1")
            }
            Strategy::ReplacePredictedWorst { alpha } if alpha.is_nan() || alpha < 0.0 => bad("alpha must be >= 0"),
            Strategy::Predict { integration: Integration::Constraint { pov_min }, .. }
                if !(0.0..1.0).contains(&pov_min) =>
            {
                bad("pov_min must lie in [0, 1)")
            }
            _ => Ok(()),
        }
    }

    pub fn pov_variant(&self) -> Option<PovVariant> {
        match self {
            Strategy::Predict { model, .. } => Some(*model),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Rejection => write!(f, "rejection"),
            Strategy::Replace(Neighborhood::Closest) => write!(f, "replace:closest"),
            Strategy::Replace(Neighborhood::GlobalMax) => write!(f, "replace:global-max"),
            Strategy::Replace(Neighborhood::NearestMean(n)) => write!(f, "replace:nearest-mean:{n}"),
            Strategy::Replace(Neighborhood::NearestMax(n)) => write!(f, "replace:nearest-max:{n}"),
            Strategy::ReplacePredictedWorst { alpha } => write!(f, "replace:predicted-worst:a={alpha}"),
            Strategy::Predict { model, integration } => match integration {
                Integration::Constraint { pov_min } => write!(f, "predict:{}:pov={pov_min}", model.name()),
                Integration::Penalty => write!(f, "predict:{}:penalty", model.name()),
            },
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = |reason: &str| Error::InvalidStrategy { text: text.to_string(), reason: reason.to_string() };
        let parts: Vec<&str> = text.trim().split(':').collect();
        let number = |s: &str| s.parse::<f64>().map_err(|_| err("expected a number"));
        let count = |s: Option<&&str>, default: usize| match s {
            None => Ok(default),
            Some(s) => s.parse::<usize>().map_err(|_| err("expected an integer")),
        };
        let strategy = match parts.as_slice() {
            ["rejection"] => Strategy::Rejection,
            ["replace", "closest"] => Strategy::Replace(Neighborhood::Closest),
            ["replace", "global-max"] => Strategy::Replace(Neighborhood::GlobalMax),
            ["replace", "nearest-mean", rest @ ..] if rest.len() <= 1 => {
                Strategy::Replace(Neighborhood::NearestMean(count(rest.first(), 5)?))
            }
            ["replace", "nearest-max", rest @ ..] if rest.len() <= 1 => {
                Strategy::Replace(Neighborhood::NearestMax(count(rest.first(), 5)?))
            }
            ["replace", "predicted-worst", rest @ ..] if rest.len() <= 1 => {
                let alpha = match rest.first() {
                    None => 1.0,
                    Some(a) => number(a.strip_prefix("a=").ok_or_else(|| err("expected a=<alpha>"))?)?,
                };
                Strategy::ReplacePredictedWorst { alpha }
            }
            ["predict", model, mode] => {
                let model = match *model {
                    "mdgp" => PovVariant::Mdgp,
                    "rfc" => PovVariant::rfc(),
                    "knn" => PovVariant::knn(),
                    "rbf" => PovVariant::Rbf,
                    _ => return Err(err("unknown model, expected mdgp|rfc|knn|rbf")),
                };
                let integration = if *mode == "penalty" {
                    Integration::Penalty
                } else {
                    let v = mode.strip_prefix("pov=").ok_or_else(|| err("expected pov=<min> or penalty"))?;
                    Integration::Constraint { pov_min: number(v)? }
                };
                Strategy::Predict { model, integration }
            }
            _ => return Err(err("unrecognized strategy")),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

/// Surrogate training data derived from the archive.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub x: Vec<DesignVector>,
    /// One target column per output: objectives first, then constraints.
    pub outputs: Vec<Vec<f64>>,
    /// Viability labels over the whole archive, for prediction strategies.
    pub labels: Option<(Vec<DesignVector>, Vec<bool>)>,
}

/// `pov_min - pov`; the infill point is acceptable when `<= 0`.
pub fn pov_constraint(pov: f64, pov_min: f64) -> f64 {
    pov_min - pov
}

/// `1 - (1 - f) * pov` per normalized minimization objective.
pub fn pov_penalty(f_infill: &[f64], pov: f64) -> Vec<f64> {
    f_infill.iter().map(|&f| 1.0 - (1.0 - f) * pov).collect()
}

/// Build per-output training targets according to the strategy.
pub fn build_training_sets(
    space: &DesignSpace,
    archive: &[EvaluatedPoint],
    strategy: &Strategy,
    gp_cfg: &GpConfig,
) -> Result<TrainingSet> {
    let viable: Vec<&EvaluatedPoint> = archive.iter().filter(|p| p.viable).collect();
    if viable.is_empty() {
        return Err(Error::NoViablePoints);
    }
    let n_out = viable[0].f.len() + viable[0].g.len();
    let viable_outputs: Vec<Vec<f64>> = viable.iter().map(|p| p.outputs()).collect();
    let column = |k: usize| -> Vec<f64> { viable_outputs.iter().map(|o| o[k]).collect() };

    let viable_only = || TrainingSet {
        x: viable.iter().map(|p| p.x.clone()).collect(),
        outputs: (0..n_out).map(column).collect(),
        labels: None,
    };

    match strategy {
        Strategy::Rejection => Ok(viable_only()),
        Strategy::Predict { .. } => {
            let mut set = viable_only();
            set.labels = Some((archive.iter().map(|p| p.x.clone()).collect(), archive.iter().map(|p| p.viable).collect()));
            Ok(set)
        }
        Strategy::Replace(mode) => {
            let encoder = Encoder::new(space);
            let viable_enc: Vec<Vec<f64>> = viable.iter().map(|p| encoder.encode(&p.x)).collect();
            let global_max: Vec<f64> =
                (0..n_out).map(|k| column(k).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect();
            let outputs = archive
                .iter()
                .map(|p| {
                    if p.viable {
                        return p.outputs();
                    }
                    if let Neighborhood::GlobalMax = mode {
                        return global_max.clone();
                    }
                    let q = encoder.encode(&p.x);
                    let mut order: Vec<(f64, usize)> =
                        viable_enc.iter().enumerate().map(|(i, v)| (encoder.mixed_distance(&q, v), i)).collect();
                    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let take = |n: usize| order.iter().take(n.max(1)).map(|&(_, i)| &viable_outputs[i]).collect::<Vec<_>>();
                    match mode {
                        Neighborhood::Closest => viable_outputs[order[0].1].clone(),
                        Neighborhood::NearestMean(n) => {
                            let nb = take(*n);
                            (0..n_out).map(|k| nb.iter().map(|o| o[k]).sum::<f64>() / nb.len() as f64).collect()
                        }
                        Neighborhood::NearestMax(n) => {
                            let nb = take(*n);
                            (0..n_out).map(|k| nb.iter().map(|o| o[k]).fold(f64::NEG_INFINITY, f64::max)).collect()
                        }
                        Neighborhood::GlobalMax => unreachable!(),
                    }
                })
                .collect::<Vec<Vec<f64>>>();
            Ok(TrainingSet {
                x: archive.iter().map(|p| p.x.clone()).collect(),
                outputs: transpose(&outputs, n_out),
                labels: None,
            })
        }
        Strategy::ReplacePredictedWorst { alpha } => {
            let xs: Vec<DesignVector> = viable.iter().map(|p| p.x.clone()).collect();
            let models: Vec<Option<Gp>> = (0..n_out)
                .map(|k| if xs.len() >= 2 { Gp::fit(space, &xs, &column(k), gp_cfg).ok() } else { None })
                .collect();
            let global_max: Vec<f64> =
                (0..n_out).map(|k| column(k).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect();
            let outputs = archive
                .iter()
                .map(|p| {
                    if p.viable {
                        return p.outputs();
                    }
                    models
                        .iter()
                        .enumerate()
                        .map(|(k, m)| match m {
                            Some(gp) => {
                                let pr = gp.predict(&p.x);
                                pr.mean + alpha * pr.std
                            }
                            None => global_max[k],
                        })
                        .collect()
                })
                .collect::<Vec<Vec<f64>>>();
            Ok(TrainingSet {
                x: archive.iter().map(|p| p.x.clone()).collect(),
                outputs: transpose(&outputs, n_out),
                labels: None,
            })
        }
    }
}

fn transpose(rows: &[Vec<f64>], n_out: usize) -> Vec<Vec<f64>> {
    (0..n_out).map(|k| rows.iter().map(|r| r[k]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::VariableDef;

    fn line() -> DesignSpace {
        DesignSpace::flat(vec![VariableDef::continuous("x", 0.0, 1.0)]).unwrap()
    }

    fn ev(x: f64, y: Option<f64>) -> EvaluatedPoint {
        let x = DesignVector { discrete: vec![], continuous: vec![x], active: vec![true] };
        match y {
            Some(v) => EvaluatedPoint { x, f: vec![v], g: vec![], viable: true },
            None => EvaluatedPoint::failed(x, 1, 0),
        }
    }

    #[test]
    fn strategy_strings_round_trip() {
        for s in [
            "rejection",
            "replace:global-max",
            "replace:closest",
            "replace:nearest-mean:5",
            "replace:nearest-max:5",
            "replace:predicted-worst:a=1",
            "predict:mdgp:pov=0.25",
            "predict:rfc:pov=0.25",
            "predict:knn:pov=0.5",
            "predict:rbf:pov=0.5",
            "predict:mdgp:penalty",
        ] {
            let parsed: Strategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert_eq!("replace:predicted-worst:a=1.0".parse::<Strategy>().unwrap(), Strategy::ReplacePredictedWorst { alpha: 1.0 });
        assert!("predict:svm:pov=0.2".parse::<Strategy>().is_err());
        assert!("predict:mdgp:pov=1.5".parse::<Strategy>().is_err());
        assert!("replace:nearest-max:0".parse::<Strategy>().is_err());
        assert!("bogus".parse::<Strategy>().is_err());
    }

    #[test]
    fn global_max_replacement() {
        let archive = vec![ev(0.1, Some(1.0)), ev(0.5, None), ev(0.9, Some(3.0))];
        let t = build_training_sets(&line(), &archive, &Strategy::Replace(Neighborhood::GlobalMax), &GpConfig::default())
            .unwrap();
        assert_eq!(t.outputs, vec![vec![1.0, 3.0, 3.0]]);
    }

    #[test]
    fn closest_tie_goes_to_lower_index() {
        let archive = vec![ev(0.2, Some(5.0)), ev(0.8, Some(7.0)), ev(0.5, None)];
        let t = build_training_sets(&line(), &archive, &Strategy::Replace(Neighborhood::Closest), &GpConfig::default())
            .unwrap();
        assert_eq!(t.outputs[0][2], 5.0);
    }

    #[test]
    fn nearest_mean_and_max() {
        let archive = vec![ev(0.0, Some(1.0)), ev(0.1, Some(2.0)), ev(0.9, Some(9.0)), ev(0.05, None)];
        let cfg = GpConfig::default();
        let mean = build_training_sets(&line(), &archive, &Strategy::Replace(Neighborhood::NearestMean(2)), &cfg).unwrap();
        assert_eq!(mean.outputs[0][3], 1.5);
        let max = build_training_sets(&line(), &archive, &Strategy::Replace(Neighborhood::NearestMax(2)), &cfg).unwrap();
        assert_eq!(max.outputs[0][3], 2.0);
    }

    #[test]
    fn predicted_worst_with_zero_alpha_is_the_mean() {
        let archive = vec![ev(0.0, Some(0.0)), ev(0.3, Some(1.0)), ev(1.0, Some(0.5)), ev(0.6, None)];
        let cfg = GpConfig::default();
        let t = build_training_sets(&line(), &archive, &Strategy::ReplacePredictedWorst { alpha: 0.0 }, &cfg).unwrap();
        let xs: Vec<_> = archive[..3].iter().map(|p| p.x.clone()).collect();
        let gp = Gp::fit(&line(), &xs, &[0.0, 1.0, 0.5], &cfg).unwrap();
        assert_eq!(t.outputs[0][3], gp.predict(&archive[3].x).mean);
        let worst = build_training_sets(&line(), &archive, &Strategy::ReplacePredictedWorst { alpha: 1.0 }, &cfg).unwrap();
        assert!(worst.outputs[0][3] >= t.outputs[0][3]);
    }

    #[test]
    fn rejection_and_prediction_sets() {
        let archive = vec![ev(0.0, Some(0.0)), ev(0.3, None), ev(1.0, Some(0.5))];
        let cfg = GpConfig::default();
        let r = build_training_sets(&line(), &archive, &Strategy::Rejection, &cfg).unwrap();
        assert_eq!(r.x.len(), 2);
        assert!(r.labels.is_none());
        let p = build_training_sets(&line(), &archive, &Strategy::default(), &cfg).unwrap();
        assert_eq!(p.x.len(), 2);
        assert_eq!(p.labels.unwrap().1, vec![true, false, true]);
        let none = vec![ev(0.3, None)];
        assert!(matches!(build_training_sets(&line(), &none, &Strategy::Rejection, &cfg), Err(Error::NoViablePoints)));
    }

    #[test]
    fn pov_integration() {
        assert_eq!(pov_constraint(0.5, 0.25), -0.25);
        assert!((pov_constraint(0.1, 0.25) - 0.15).abs() < 1e-15);
        assert!(pov_constraint(0.0, 0.0) <= 0.0);
        assert!(pov_penalty(&[0.2, 0.7], 1.0).iter().zip([0.2, 0.7]).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(pov_penalty(&[0.2], 0.0), vec![1.0]);
        assert!((pov_penalty(&[0.2], 0.5)[0] - 0.6).abs() < 1e-15);
    }
}
