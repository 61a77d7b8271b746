//! Two- to five-dimensional continuous problems with closed-form failed regions.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Family, Metadata, Model, Outputs, ProblemDef};
use crate::sampling::hierarchical_sample;
use crate::space::{DesignSpace, VariableDef};

/// Known minimum of the Branin function.
pub const BRANIN_OPTIMUM: f64 = 0.397887357729739;

/// Branin function on the unit square, mapped to `[-5, 10] x [0, 15]`.
pub fn branin_unit(u: f64, v: f64) -> f64 {
    let x1 = 15.0 * u - 5.0;
    let x2 = 15.0 * v;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// Failed region of a Branin-based problem, in unit coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum BraninRegion {
    None,
    /// Outside a disk around the center.
    Disk,
    /// Rastrigin-like blobs, mirrored vertically and shifted right.
    Alimo,
    /// The same blobs shifted so the optimum sits on their edge.
    AlimoEdge,
}

impl BraninRegion {
    fn fails(self, u: f64, v: f64) -> bool {
        let blobs = |a: f64, b: f64| {
            let term = |x: f64| 4.0 * (x - 0.7).powi(2) - 2.0 * (4.0 * PI * (x - 0.7)).cos();
            2.0 / 12.0 + 0.1 * (term(a) + term(b)) - 0.25 >= 0.0
        };
        match self {
            BraninRegion::None => false,
            BraninRegion::Disk => (u - 0.5).powi(2) + (v - 0.5).powi(2) > 0.22,
            BraninRegion::Alimo => blobs(u + 0.15, 1.0 - v),
            BraninRegion::AlimoEdge => blobs(u - 0.05, v + 0.05),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(super) struct Branin {
    pub region: BraninRegion,
}

impl Model for Branin {
    fn outputs(&self, x: &[f64]) -> Outputs {
        if self.region.fails(x[0], x[1]) {
            return None;
        }
        Some((vec![branin_unit(x[0], x[1])], vec![]))
    }
}

fn unit_square() -> DesignSpace {
    DesignSpace::flat(vec![VariableDef::continuous("x0", 0.0, 1.0), VariableDef::continuous("x1", 0.0, 1.0)])
        .expect("valid bounds")
}

fn analytic_meta(n_xc: usize, fail_rate: f64) -> Metadata {
    Metadata { n_xc, n_xd: 0, n_f: 1, n_g: 0, imputation_ratio: None, fail_rate, family: Family::Analytic }
}

fn branin_problem(name: &'static str, slug: &'static str, region: BraninRegion, fail_rate: f64) -> ProblemDef {
    ProblemDef::new(name, slug, unit_square(), (1, 0), analytic_meta(2, fail_rate), Arc::new(Branin { region }))
}

pub(super) fn branin() -> ProblemDef {
    branin_problem("Branin", "branin", BraninRegion::None, 0.0)
}

pub(super) fn hc_branin() -> ProblemDef {
    branin_problem("HC Branin", "hc-branin", BraninRegion::Disk, 0.33)
}

pub(super) fn alimo() -> ProblemDef {
    branin_problem("Alimo", "alimo", BraninRegion::Alimo, 0.51)
}

pub(super) fn alimo_edge() -> ProblemDef {
    branin_problem("Alimo Edge", "alimo-edge", BraninRegion::AlimoEdge, 0.53)
}

/// Seed of the failure-center draw, chosen so the failed share of the unit
/// square matches the published fail rate.
pub const SPHERE_CENTER_SEED: u64 = 347;
const SPHERE_N_CANDIDATES: usize = 100;
const SPHERE_DENSITY: f64 = 0.25;
const SPHERE_RADIUS: f64 = 0.1;

/// Sphere function failing within a fixed radius of randomly placed centers.
#[derive(Debug, Clone)]
pub struct HcSphere {
    centers: Vec<[f64; 2]>,
}

impl HcSphere {
    pub fn with_seed(seed: u64) -> Self {
        let space = unit_square();
        let valid = space.enumerate_valid().expect("flat space");
        let candidates = hierarchical_sample(&space, &valid, SPHERE_N_CANDIDATES, seed).expect("nonempty");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_centers = (SPHERE_DENSITY * SPHERE_N_CANDIDATES as f64) as usize;
        let centers = sample(&mut rng, SPHERE_N_CANDIDATES, n_centers)
            .into_iter()
            .map(|i| [candidates[i].continuous[0], candidates[i].continuous[1]])
            .collect();
        Self { centers }
    }
}

impl Model for HcSphere {
    fn outputs(&self, x: &[f64]) -> Outputs {
        let near = self.centers.iter().any(|c| (x[0] - c[0]).hypot(x[1] - c[1]) < SPHERE_RADIUS);
        if near {
            return None;
        }
        Some((vec![(x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)], vec![]))
    }
}

pub(super) fn hc_sphere() -> ProblemDef {
    ProblemDef::new(
        "HC Sphere",
        "hc-sphere",
        unit_square(),
        (1, 0),
        analytic_meta(2, 0.51),
        Arc::new(HcSphere::with_seed(SPHERE_CENTER_SEED)),
    )
}

/// Ackley function failing near the axes and where `sum x (sin x + 0.1) > 0`.
#[derive(Debug, Clone, Copy)]
pub(super) struct Mueller1;

impl Model for Mueller1 {
    fn outputs(&self, x: &[f64]) -> Outputs {
        if x.iter().any(|v| v.abs() <= 0.2) || x.iter().map(|v| v * (v.sin() + 0.1)).sum::<f64>() > 0.0 {
            return None;
        }
        let n = x.len() as f64;
        let sq = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        let cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
        Some((vec![-20.0 * (-0.2 * sq).exp() - cos.exp() + 20.0 + 1f64.exp()], vec![]))
    }
}

pub(super) fn mueller1() -> ProblemDef {
    let vars = (0..5).map(|i| VariableDef::continuous(format!("x{i}"), -10.0, 10.0)).collect();
    let space = DesignSpace::flat(vars).expect("valid bounds");
    ProblemDef::new("Müller 1", "mueller1", space, (1, 0), analytic_meta(5, 0.67), Arc::new(Mueller1))
}

/// Known minimum of the Müller 2 objective without the failed region.
pub const MUELLER2_UNCONSTRAINED_OPTIMUM: f64 = -106.764537;

/// Two-variable trigonometric objective over four variables, with one
/// failed region defined over all of them.
#[derive(Debug, Clone, Copy)]
pub(super) struct Mueller2;

impl Model for Mueller2 {
    fn outputs(&self, x: &[f64]) -> Outputs {
        let x0 = x[0];
        let c: f64 = x
            .iter()
            .map(|&xi| {
                let minus = (x0 - xi + 1.0).abs().sqrt();
                let plus = (x0 + xi + 1.0).abs().sqrt();
                xi * minus.sin() * plus.cos() + (x0 + 1.0) * plus.sin() * minus.cos()
            })
            .sum::<f64>()
            - 5.0;
        if c > 0.0 {
            return None;
        }
        let x1 = x[1];
        let f = (x0 - x1).powi(2)
            + (1.0 - x0.sin()).powi(2).exp() * x1.cos()
            + (1.0 - x1.cos()).powi(2).exp() * x0.sin();
        Some((vec![f], vec![]))
    }
}

pub(super) fn mueller2_space() -> Vec<VariableDef> {
    (0..4).map(|i| VariableDef::continuous(format!("x{i}"), -3.0 * PI, 3.0 * PI)).collect()
}

pub(super) fn mueller2() -> ProblemDef {
    let space = DesignSpace::flat(mueller2_space()).expect("valid bounds");
    ProblemDef::new("Müller 2", "mueller2", space, (1, 0), analytic_meta(4, 0.40), Arc::new(Mueller2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branin_minima() {
        // (pi, 2.275), (-pi, 12.275), (9.42478, 2.475) in the original domain.
        for (x1, x2) in [(PI, 2.275), (-PI, 12.275), (9.42478, 2.475)] {
            let f = branin_unit((x1 + 5.0) / 15.0, x2 / 15.0);
            assert!((f - BRANIN_OPTIMUM).abs() < 1e-5, "{f}");
        }
    }

    #[test]
    fn disk_region() {
        let m = Branin { region: BraninRegion::Disk };
        assert!(m.outputs(&[0.5, 0.5]).is_some());
        assert!(m.outputs(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn mueller2_unconstrained_minimum() {
        let x: [f64; 2] = [4.70104313, 3.1529385];
        let f = (x[0] - x[1]).powi(2)
            + (1.0 - x[0].sin()).powi(2).exp() * x[1].cos()
            + (1.0 - x[1].cos()).powi(2).exp() * x[0].sin();
        assert!((f - MUELLER2_UNCONSTRAINED_OPTIMUM).abs() < 1e-5);
    }

    #[test]
    fn sphere_centers_are_seeded() {
        let a = HcSphere::with_seed(3);
        let b = HcSphere::with_seed(3);
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.centers.len(), 25);
        assert_ne!(a.centers, HcSphere::with_seed(4).centers);
    }
}
