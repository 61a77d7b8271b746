//! Initial design of experiments over hierarchical spaces.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sobol::sobol_fill;
use crate::space::{DesignSpace, DesignVector, ValidDiscreteSet};

/// Number of leading Sobol' points dropped, so the first point is the center.
pub const SOBOL_SKIP: usize = 1;

/// Number of distinct Sobol' blocks seeds are mapped onto.
const SOBOL_BLOCKS: u64 = 4096;

/// Points skipped for a DoE of `n` points: seed 0 starts at the center, other
/// seeds start at a seed-chosen block of `2^m >= n + 1` points further on.
pub fn sobol_skip(seed: u64, n: usize) -> usize {
    let block = (n + 1).next_power_of_two();
    SOBOL_SKIP + (seed % SOBOL_BLOCKS) as usize * block
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoeConfig {
    /// Multiplier on the number of design variables.
    pub k_doe: f64,
    /// Expected fraction of failed evaluations.
    pub fr_expected: f64,
    pub seed: u64,
}

impl Default for DoeConfig {
    fn default() -> Self {
        Self { k_doe: 2.0, fr_expected: 0.6, seed: 0 }
    }
}

/// `ceil(k_doe * n_x / (1 - fr_expected))`.
pub fn doe_size(cfg: &DoeConfig, n_x: usize) -> usize {
    assert!(cfg.fr_expected < 1.0, "expected fail rate must be below 1");
    let raw = cfg.k_doe * n_x as f64 / (1.0 - cfg.fr_expected);
    // Guard against 2*10/0.4 landing a hair above an integer.
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Sizes allotted to `n_groups` groups: an even split, with the remainder
/// handed out one by one in seed-shuffled group order.
pub fn allocate(n: usize, n_groups: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut sizes = vec![n / n_groups; n_groups];
    let mut order: Vec<usize> = (0..n_groups).collect();
    order.shuffle(rng);
    for &g in order.iter().take(n % n_groups) {
        sizes[g] += 1;
    }
    sizes
}

/// Hierarchical sample of `n` repaired design vectors.
///
/// Valid discrete vectors are grouped by activeness pattern, the sample
/// count is spread evenly over the groups, members of a group are drawn
/// without replacement until exhausted and with replacement afterwards, and
/// active continuous variables are filled from one Sobol' stream whose
/// starting block depends on the seed.
pub fn hierarchical_sample(
    space: &DesignSpace,
    valid: &ValidDiscreteSet,
    n: usize,
    seed: u64,
) -> Result<Vec<DesignVector>> {
    if valid.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = valid.groups();
    let sizes = allocate(n, groups.len(), &mut rng);

    let mut picks: Vec<usize> = Vec::with_capacity(n);
    for (members, &size) in groups.iter().zip(&sizes) {
        let mut pool = members.clone();
        pool.shuffle(&mut rng);
        for k in 0..size {
            if k < pool.len() {
                picks.push(pool[k]);
            } else {
                picks.push(members[rng.gen_range(0..members.len())]);
            }
        }
    }
    picks.shuffle(&mut rng);

    let n_xc = space.n_continuous();
    let rows = if n_xc > 0 { sobol_fill(n, n_xc, sobol_skip(seed, n))? } else { vec![Vec::new(); n] };
    let bounds = space.continuous_bounds();
    let cont_pos = space.continuous_positions();

    Ok(picks
        .into_iter()
        .zip(rows)
        .map(|(i, row)| {
            let active = valid.activeness[i].clone();
            let continuous = bounds
                .iter()
                .enumerate()
                .map(|(c, &(lo, hi))| if active[cont_pos[c]] { lo + row[c] * (hi - lo) } else { 0.5 * (lo + hi) })
                .collect();
            DesignVector { discrete: valid.vectors[i].clone(), continuous, active }
        })
        .collect())
}

/// Plain pseudo-random hierarchical sample: one valid discrete vector drawn
/// uniformly per point and uniform active continuous values.
pub fn random_sample(space: &DesignSpace, valid: &ValidDiscreteSet, n: usize, rng: &mut impl Rng) -> Vec<DesignVector> {
    let bounds = space.continuous_bounds();
    let cont_pos = space.continuous_positions();
    (0..n)
        .map(|_| {
            let i = rng.gen_range(0..valid.len());
            let active = valid.activeness[i].clone();
            let continuous = bounds
                .iter()
                .enumerate()
                .map(|(c, &(lo, hi))| if active[cont_pos[c]] { rng.gen_range(lo..=hi) } else { 0.5 * (lo + hi) })
                .collect();
            DesignVector { discrete: valid.vectors[i].clone(), continuous, active }
        })
        .collect()
}
