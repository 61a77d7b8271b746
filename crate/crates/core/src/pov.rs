//! Probability-of-viability models trained on viable/failed labels.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::encoding::Encoder;
use crate::error::{Error, Result};
use crate::forest::RandomForest;
use crate::gp::{Gp, GpConfig, Kernel};
use crate::space::{DesignSpace, DesignVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PovVariant {
    /// Random forest classifier; PoV is the fraction of trees voting viable.
    Rfc { n_trees: usize, seed: u64 },
    /// Fraction of viable points among the `k` nearest neighbours.
    Knn { k: usize },
    /// Gaussian radial-basis interpolation of the labels.
    Rbf,
    /// Mixed-discrete GP regression on the labels.
    Mdgp,
}

impl PovVariant {
    pub fn rfc() -> Self {
        PovVariant::Rfc { n_trees: 100, seed: 0 }
    }

    pub fn knn() -> Self {
        PovVariant::Knn { k: 5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PovVariant::Rfc { .. } => "rfc",
            PovVariant::Knn { .. } => "knn",
            PovVariant::Rbf => "rbf",
            PovVariant::Mdgp => "mdgp",
        }
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Constant(f64),
    Rfc(RandomForest),
    Knn { k: usize, x: Vec<Vec<f64>>, labels: Vec<bool> },
    Rbf { x: Vec<Vec<f64>>, coef: DVector<f64>, inv_width2: f64 },
    Mdgp(Gp),
}

/// A fitted viability model.
#[derive(Debug, Clone)]
pub struct PovModel {
    variant: PovVariant,
    encoder: Encoder,
    fitted: Fitted,
    degenerate: bool,
}

/// Gaussian RBF weights, regularized with the smallest diagonal shift that factors.
fn rbf_fit(encoder: &Encoder, x: &[Vec<f64>], targets: &[f64]) -> Result<(DVector<f64>, f64)> {
    let n = x.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    let mut sq = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let d2 = encoder.squared_distance(&x[i], &x[j]);
            sq[(i, j)] = d2;
            sq[(j, i)] = d2;
            dists.push(d2.sqrt());
        }
    }
    let width = crate::stats::median(&dists);
    let inv_width2 = if width > 0.0 { 1.0 / (width * width) } else { 1.0 };
    let y = DVector::from_column_slice(targets);
    let mut shift = 1e-10;
    loop {
        let mut phi = sq.map(|d2| (-d2 * inv_width2).exp());
        for i in 0..n {
            phi[(i, i)] += shift;
        }
        if let Some(ch) = Cholesky::<f64, Dyn>::new(phi) {
            return Ok((ch.solve(&y), inv_width2));
        }
        shift *= 10.0;
        if shift > 1e-2 {
            return Err(Error::SingularKernel { jitter: shift });
        }
    }
}

impl PovModel {
    /// Fit a model on labelled points (`true` = viable).
    pub fn fit(
        space: &DesignSpace,
        points: &[DesignVector],
        labels: &[bool],
        variant: PovVariant,
        gp_cfg: &GpConfig,
    ) -> Result<Self> {
        let encoder = Encoder::new(space);
        let x = encoder.encode_all(points);
        Self::fit_features(encoder, x, labels, variant, gp_cfg)
    }

    pub fn fit_features(
        encoder: Encoder,
        x: Vec<Vec<f64>>,
        labels: &[bool],
        variant: PovVariant,
        gp_cfg: &GpConfig,
    ) -> Result<Self> {
        if x.len() < 2 || labels.len() != x.len() {
            return Err(Error::TooFewPoints { needed: 2, got: x.len().min(labels.len()) });
        }
        let n_viable = labels.iter().filter(|&&l| l).count();
        if n_viable == 0 || n_viable == labels.len() {
            let value = if n_viable == 0 { 0.0 } else { 1.0 };
            warn!("viability labels contain a single class; using constant PoV {value}");
            return Ok(Self { variant, encoder, fitted: Fitted::Constant(value), degenerate: true });
        }
        let targets: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let fitted = match variant {
            PovVariant::Rfc { n_trees, seed } => Fitted::Rfc(RandomForest::fit(&x, labels, n_trees, seed)),
            PovVariant::Knn { k } => Fitted::Knn { k: k.max(1), x, labels: labels.to_vec() },
            PovVariant::Rbf => {
                let (coef, inv_width2) = rbf_fit(&encoder, &x, &targets)?;
                Fitted::Rbf { x, coef, inv_width2 }
            }
            PovVariant::Mdgp => {
                let cfg = GpConfig { kernel: Kernel::Exponential, ..*gp_cfg };
                Fitted::Mdgp(Gp::fit_features(encoder.kinds().to_vec(), x, &targets, &cfg)?)
            }
        };
        Ok(Self { variant, encoder, fitted, degenerate: false })
    }

    pub fn variant(&self) -> PovVariant {
        self.variant
    }

    /// True when the training labels had a single class.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn predict(&self, x: &DesignVector) -> f64 {
        self.predict_features(&self.encoder.encode(x))
    }

    /// PoV in `[0, 1]` for an encoded point.
    pub fn predict_features(&self, f: &[f64]) -> f64 {
        let raw = match &self.fitted {
            Fitted::Constant(v) => *v,
            Fitted::Rfc(rf) => rf.predict(f),
            Fitted::Knn { k, x, labels } => {
                let mut d: Vec<(f64, usize)> =
                    x.iter().enumerate().map(|(i, xi)| (self.encoder.mixed_distance(f, xi), i)).collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let k = (*k).min(d.len());
                d[..k].iter().filter(|(_, i)| labels[*i]).count() as f64 / k as f64
            }
            Fitted::Rbf { x, coef, inv_width2 } => x
                .iter()
                .zip(coef.iter())
                .map(|(xi, c)| c * (-self.encoder.squared_distance(f, xi) * inv_width2).exp())
                .sum(),
            Fitted::Mdgp(gp) => gp.predict_features(f).mean,
        };
        if raw.is_nan() {
            0.0
        } else {
            raw.clamp(0.0, 1.0)
        }
    }
}
