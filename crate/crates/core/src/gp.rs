//! Mixed-discrete Gaussian-process regression.
//!
//! Continuous and integer features use a squared-exponential kernel and
//! categorical features an exponential of the per-variable mismatch.
//! Inactive variables enter at their canonical values. Outputs are
//! standardized; the process variance is profiled out of the likelihood, so
//! only length-scales are searched.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::encoding::{Encoder, FeatureKind};
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::sobol::sobol_fill;
use crate::space::{DesignSpace, DesignVector};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;
const REFINE_STEPS: usize = 8;

/// Correlation family of continuous and integer features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// `exp(-d^2 / (2 l^2))`.
    SquaredExponential,
    /// `exp(-|d| / l)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: Kernel,
    pub n_starts: usize,
    /// Length-scale bounds on normalized inputs.
    pub length_scale_bounds: (f64, f64),
    /// Likelihood evaluations per start.
    pub max_evals_per_start: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self { kernel: Kernel::SquaredExponential, n_starts: 8, length_scale_bounds: (1e-2, 1e2), max_evals_per_start: 80 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

/// Precomputed per-dimension pairwise distances of the training inputs.
struct PairTerms {
    n: usize,
    /// `terms[d][i * n + j]`: squared difference or mismatch indicator.
    terms: Vec<Vec<f64>>,
}

impl PairTerms {
    fn new(kernel: Kernel, kinds: &[FeatureKind], x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let terms = kinds
            .iter()
            .enumerate()
            .map(|(d, &kind)| {
                let mut t = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..i {
                        let v = feature_term(kernel, kind, x[i][d], x[j][d]);
                        t[i * n + j] = v;
                        t[j * n + i] = v;
                    }
                }
                t
            })
            .collect();
        Self { n, terms }
    }

    fn correlation(&self, weights: &[f64], jitter: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 1.0 + jitter;
            for j in 0..i {
                let idx = i * n + j;
                let s: f64 = weights.iter().zip(&self.terms).map(|(w, t)| w * t[idx]).sum();
                let v = (-s).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

fn feature_term(kernel: Kernel, kind: FeatureKind, a: f64, b: f64) -> f64 {
    match (kind, kernel) {
        (FeatureKind::Categorical, _) => {
            if a == b {
                0.0
            } else {
                1.0
            }
        }
        (_, Kernel::SquaredExponential) => (a - b).powi(2),
        (_, Kernel::Exponential) => (a - b).abs(),
    }
}

/// Exponent weight for a length-scale.
fn weight(kernel: Kernel, kind: FeatureKind, length_scale: f64) -> f64 {
    match (kind, kernel) {
        (FeatureKind::Categorical, _) | (_, Kernel::Exponential) => 1.0 / length_scale,
        (_, Kernel::SquaredExponential) => 0.5 / (length_scale * length_scale),
    }
}

/// Cholesky of `R + jitter I`, escalating jitter by decades.
fn factor(pairs: &PairTerms, weights: &[f64]) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut jitter = JITTER_START;
    loop {
        if let Some(ch) = Cholesky::new(pairs.correlation(weights, jitter)) {
            return Ok((ch, jitter));
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX * 1.000001 {
            return Err(Error::SingularKernel { jitter: JITTER_MAX });
        }
    }
}

/// Negative concentrated log-likelihood up to constants.
fn neg_log_likelihood(pairs: &PairTerms, weights: &[f64], y: &DVector<f64>) -> f64 {
    match factor(pairs, weights) {
        Ok((ch, _)) => {
            let alpha = ch.solve(y);
            let n = y.len() as f64;
            let sigma2 = (y.dot(&alpha) / n).max(1e-300);
            let log_det: f64 = 2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            n * sigma2.ln() + log_det
        }
        Err(_) => f64::INFINITY,
    }
}

/// Fitted Gaussian-process regression model.
#[derive(Debug, Clone)]
pub struct Gp {
    kernel: Kernel,
    kinds: Vec<FeatureKind>,
    encoder: Option<Encoder>,
    x: Vec<Vec<f64>>,
    length_scales: Vec<f64>,
    weights: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    /// Process variance of the standardized outputs.
    sigma2: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl Gp {
    /// Fit on design vectors of `space`.
    pub fn fit(space: &DesignSpace, xs: &[DesignVector], y: &[f64], cfg: &GpConfig) -> Result<Self> {
        let encoder = Encoder::new(space);
        let x = encoder.encode_all(xs);
        let mut gp = Self::fit_features(encoder.kinds().to_vec(), x, y, cfg)?;
        gp.encoder = Some(encoder);
        Ok(gp)
    }

    /// Fit on pre-encoded feature rows.
    pub fn fit_features(kinds: Vec<FeatureKind>, x: Vec<Vec<f64>>, y: &[f64], cfg: &GpConfig) -> Result<Self> {
        Self::check(&x, y)?;
        let (y_mean, y_std) = standardization(y);
        if y_std == 0.0 {
            return Ok(Self::constant(cfg.kernel, kinds, x, y_mean));
        }
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_std));
        let pairs = PairTerms::new(cfg.kernel, &kinds, &x);
        let dims = kinds.len();
        let (lo, hi) = (cfg.length_scale_bounds.0.log10(), cfg.length_scale_bounds.1.log10());
        let to_weights = |theta: &[f64]| -> Vec<f64> {
            kinds.iter().zip(theta).map(|(&k, &t)| weight(cfg.kernel, k, 10f64.powf(t))).collect()
        };

        let mut best: Option<(f64, Vec<f64>)> = None;
        if dims > 0 {
            // Deterministic starts: the center of the log box, then Sobol' points.
            let mut starts = vec![vec![0.5 * (lo + hi); dims]];
            if cfg.n_starts > 1 {
                let rows = sobol_fill(cfg.n_starts - 1, dims.min(crate::sobol::MAX_DIM), 2)?;
                for r in rows {
                    starts.push((0..dims).map(|d| lo + r[d % r.len()] * (hi - lo)).collect());
                }
            }
            let nm = NelderMead { max_evals: cfg.max_evals_per_start, f_tol: 1e-6, initial_step: 0.15 };
            let lower = vec![lo; dims];
            let upper = vec![hi; dims];
            for s in starts.iter().take(cfg.n_starts.max(1)) {
                let m = nm.minimize(|t| neg_log_likelihood(&pairs, &to_weights(t), &ys), s, &lower, &upper);
                if best.as_ref().is_none_or(|(v, _)| m.value < *v) {
                    best = Some((m.value, m.x));
                }
            }
        }
        let theta = best.map(|(_, t)| t).unwrap_or_default();
        let length_scales: Vec<f64> = theta.iter().map(|t| 10f64.powf(*t)).collect();
        Self::assemble(cfg.kernel, kinds, x, length_scales, &pairs, ys, y_mean, y_std)
    }

    /// Refit on new targets keeping this model's inputs and length-scales.
    pub fn refit_targets(&self, y: &[f64]) -> Result<Self> {
        Self::check(&self.x, y)?;
        let (y_mean, y_std) = standardization(y);
        if y_std == 0.0 {
            return Ok(Self::constant(self.kernel, self.kinds.clone(), self.x.clone(), y_mean));
        }
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_std));
        let pairs = PairTerms::new(self.kernel, &self.kinds, &self.x);
        let mut gp =
            Self::assemble(self.kernel, self.kinds.clone(), self.x.clone(), self.length_scales.clone(), &pairs, ys, y_mean, y_std)?;
        gp.encoder = self.encoder.clone();
        Ok(gp)
    }

    fn check(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
        if x.len() < 2 || y.len() != x.len() {
            return Err(Error::TooFewPoints { needed: 2, got: x.len().min(y.len()) });
        }
        Ok(())
    }

    fn constant(kernel: Kernel, kinds: Vec<FeatureKind>, x: Vec<Vec<f64>>, y_mean: f64) -> Self {
        let dims = kinds.len();
        Self {
            kernel,
            kinds,
            encoder: None,
            x,
            length_scales: vec![1.0; dims],
            weights: vec![0.0; dims],
            y_mean,
            y_std: 0.0,
            sigma2: 0.0,
            chol: None,
            alpha: DVector::zeros(0),
            jitter: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kernel: Kernel,
        kinds: Vec<FeatureKind>,
        x: Vec<Vec<f64>>,
        length_scales: Vec<f64>,
        pairs: &PairTerms,
        ys: DVector<f64>,
        y_mean: f64,
        y_std: f64,
    ) -> Result<Self> {
        let weights: Vec<f64> = kinds.iter().zip(&length_scales).map(|(&k, &l)| weight(kernel, k, l)).collect();
        let (chol, jitter) = factor(pairs, &weights)?;
        let mut alpha = chol.solve(&ys);
        let sigma2 = ys.dot(&alpha) / ys.len() as f64;
        // Iterative refinement towards the jitter-free interpolant.
        let exact = pairs.correlation(&weights, 0.0);
        for _ in 0..REFINE_STEPS {
            let residual = &ys - &exact * &alpha;
            alpha += chol.solve(&residual);
        }
        Ok(Self {
            kernel,
            kinds,
            encoder: None,
            x,
            length_scales,
            weights,
            y_mean,
            y_std,
            sigma2,
            chol: Some(chol),
            alpha,
            jitter,
        })
    }

    pub fn length_scales(&self) -> &[f64] {
        &self.length_scales
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n_train(&self) -> usize {
        self.x.len()
    }

    pub fn training_mean(&self) -> f64 {
        self.y_mean
    }

    /// Prior standard deviation of the process in output units.
    pub fn signal_std(&self) -> f64 {
        self.sigma2.sqrt() * self.y_std
    }

    pub fn is_constant(&self) -> bool {
        self.chol.is_none()
    }

    /// Prediction for a design vector; requires a model fitted with [`Gp::fit`].
    pub fn predict(&self, x: &DesignVector) -> Prediction {
        let enc = self.encoder.as_ref().expect("model was fitted on raw features; use predict_features");
        self.predict_features(&enc.encode(x))
    }

    pub fn predict_features(&self, f: &[f64]) -> Prediction {
        let Some(chol) = &self.chol else {
            return Prediction { mean: self.y_mean, std: 0.0 };
        };
        let n = self.x.len();
        let mut r = DVector::zeros(n);
        for (i, xi) in self.x.iter().enumerate() {
            let mut s = 0.0;
            for d in 0..self.kinds.len() {
                s += self.weights[d] * feature_term(self.kernel, self.kinds[d], f[d], xi[d]);
            }
            r[i] = (-s).exp();
        }
        let mean_s = r.dot(&self.alpha);
        let v = chol.l_dirty().solve_lower_triangular(&r).unwrap_or_else(|| DVector::zeros(n));
        let var_s = self.sigma2 * (1.0 - v.norm_squared()).max(0.0);
        Prediction { mean: self.y_mean + self.y_std * mean_s, std: self.y_std * var_s.sqrt() }
    }

    /// Smallest eigenvalue of the factored correlation matrix (with jitter).
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.chol {
            Some(ch) => {
                let l = ch.l();
                let k = &l * l.transpose();
                k.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            }
            None => 0.0,
        }
    }
}

fn standardization(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let std = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = mean.abs().max(1.0);
    if std <= 1e-12 * scale {
        (mean, 0.0)
    } else {
        (mean, std)
    }
}
