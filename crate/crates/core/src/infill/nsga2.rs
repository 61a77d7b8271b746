//! NSGA-II over hierarchical mixed-discrete spaces with repair.

use std::collections::HashSet;

use rand::Rng;

use super::{Candidate, InfillObjectives, Normalization};
use crate::sampling::random_sample;
use crate::space::{DesignSpace, DesignVector, ValidDiscreteSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsgaConfig {
    pub pop_size: usize,
    pub n_generations: usize,
    pub crossover_prob: f64,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
}

impl Default for NsgaConfig {
    fn default() -> Self {
        Self { pop_size: 100, n_generations: 50, crossover_prob: 0.9, sbx_eta: 15.0, mutation_eta: 20.0 }
    }
}

#[derive(Debug, Clone)]
pub struct NsgaResult {
    /// Nondominated feasible set, or the least-violating set when nothing is feasible.
    pub front: Vec<Candidate>,
    /// False when no feasible candidate was found.
    pub feasible: bool,
    /// Objective scaling of the final population.
    pub normalization: Normalization,
    pub n_evaluations: usize,
}

pub(crate) type Key = (Vec<usize>, Vec<u64>);

pub(crate) fn key(x: &DesignVector) -> Key {
    (x.discrete.clone(), x.continuous.iter().map(|v| v.to_bits()).collect())
}

/// `a` dominates `b` (minimization).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fronts of indices under constraint domination: feasible points by Pareto
/// rank first, then infeasible points grouped by equal violation.
pub fn constrained_fronts(f: &[Vec<f64>], cv: &[f64]) -> Vec<Vec<usize>> {
    let feasible: Vec<usize> = (0..f.len()).filter(|&i| cv[i] <= 0.0).collect();
    let mut fronts = nondominated_fronts(f, &feasible);
    let mut infeasible: Vec<usize> = (0..f.len()).filter(|&i| cv[i] > 0.0).collect();
    infeasible.sort_by(|&a, &b| cv[a].total_cmp(&cv[b]).then(a.cmp(&b)));
    let mut k = 0;
    while k < infeasible.len() {
        let mut group = vec![infeasible[k]];
        while k + group.len() < infeasible.len() && cv[infeasible[k + group.len()]] == cv[infeasible[k]] {
            group.push(infeasible[k + group.len()]);
        }
        k += group.len();
        fronts.push(group);
    }
    fronts
}

/// Fast nondominated sorting of the subset `idx`.
pub fn nondominated_fronts(f: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<usize>> {
    let n = idx.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in (a + 1)..n {
            if dominates(&f[idx[a]], &f[idx[b]]) {
                dominates_list[a].push(b);
                dominated_by_count[b] += 1;
            } else if dominates(&f[idx[b]], &f[idx[a]]) {
                dominates_list[b].push(a);
                dominated_by_count[a] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &a in &current {
            for &b in &dominates_list[a] {
                dominated_by_count[b] -= 1;
                if dominated_by_count[b] == 0 {
                    next.push(b);
                }
            }
        }
        next.sort();
        fronts.push(current.iter().map(|&i| idx[i]).collect());
        current = next;
    }
    fronts
}

/// Crowding distance of each member of a front (boundary points get infinity).
#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(f: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let n_obj = f[front[0]].len();
    for m in 0..n_obj {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| f[front[a]][m].total_cmp(&f[front[b]][m]).then(a.cmp(&b)));
        let lo = f[front[order[0]]][m];
        let hi = f[front[order[n - 1]]][m];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            dist[order[k]] += (f[front[order[k + 1]]][m] - f[front[order[k - 1]]][m]) / (hi - lo);
        }
    }
    dist
}

/// Rank (front index) and crowding distance of each individual.
fn rank_and_crowd(f: &[Vec<f64>], cv: &[f64]) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
    let fronts = constrained_fronts(f, cv);
    let mut rank = vec![0; f.len()];
    let mut crowd = vec![0.0; f.len()];
    for (r, front) in fronts.iter().enumerate() {
        let d = crowding_distance(f, front);
        for (k, &i) in front.iter().enumerate() {
            rank[i] = r;
            crowd[i] = d[k];
        }
    }
    (rank, crowd, fronts)
}

fn sbx_pair(a: f64, b: f64, eta: f64, rng: &mut impl Rng) -> (f64, f64) {
    if (a - b).abs() < 1e-14 {
        return (a, b);
    }
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    let u: f64 = rng.gen();
    let spread = |beta: f64| {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let d = y2 - y1;
    let beta_lo = 1.0 + 2.0 * y1 / d;
    let beta_hi = 1.0 + 2.0 * (1.0 - y2) / d;
    let c1 = (0.5 * (y1 + y2 - spread(beta_lo) * d)).clamp(0.0, 1.0);
    let c2 = (0.5 * (y1 + y2 + spread(beta_hi) * d)).clamp(0.0, 1.0);
    if rng.gen_bool(0.5) {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

fn polynomial_mutation(y: f64, eta: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    let power = 1.0 / (eta + 1.0);
    let delta = if u < 0.5 {
        let xy = 1.0 - y;
        (2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0)).powf(power) - 1.0
    } else {
        let xy = y;
        1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0)).powf(power)
    };
    (y + delta).clamp(0.0, 1.0)
}

/// Crossover and mutation of two parents; children are not yet repaired.
fn mate(
    space: &DesignSpace,
    a: &DesignVector,
    b: &DesignVector,
    cfg: &NsgaConfig,
    rng: &mut impl Rng,
) -> (DesignVector, DesignVector) {
    let bounds = space.continuous_bounds();
    let options = space.discrete_options();
    let n_x = space.n_vars().max(1) as f64;
    let (mut c1, mut c2) = (a.clone(), b.clone());
    if rng.gen_bool(cfg.crossover_prob) {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if rng.gen_bool(0.5) {
                let ya = (a.continuous[i] - lo) / (hi - lo);
                let yb = (b.continuous[i] - lo) / (hi - lo);
                let (u, v) = sbx_pair(ya, yb, cfg.sbx_eta, rng);
                c1.continuous[i] = lo + u * (hi - lo);
                c2.continuous[i] = lo + v * (hi - lo);
            }
        }
        for j in 0..options.len() {
            if rng.gen_bool(0.5) {
                c1.discrete[j] = b.discrete[j];
                c2.discrete[j] = a.discrete[j];
            }
        }
    }
    for c in [&mut c1, &mut c2] {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if rng.gen::<f64>() < 1.0 / n_x {
                let y = (c.continuous[i] - lo) / (hi - lo);
                c.continuous[i] = lo + polynomial_mutation(y, cfg.mutation_eta, rng) * (hi - lo);
            }
        }
        for (j, &n_opt) in options.iter().enumerate() {
            if n_opt > 1 && rng.gen::<f64>() < 1.0 / n_x {
                let shift = rng.gen_range(1..n_opt);
                c.discrete[j] = (c.discrete[j] + shift) % n_opt;
            }
        }
    }
    (c1, c2)
}

fn tournament(rank: &[usize], crowd: &[f64], cv: &[f64], rng: &mut impl Rng) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    let better = |i: usize, j: usize| {
        if cv[i] != cv[j] {
            return cv[i] < cv[j];
        }
        if rank[i] != rank[j] {
            return rank[i] < rank[j];
        }
        crowd[i] > crowd[j]
    };
    if better(b, a) {
        b
    } else {
        a
    }
}

/// Run NSGA-II and return the final nondominated set.
pub fn nsga2<P: InfillObjectives + ?Sized>(
    space: &DesignSpace,
    valid: &ValidDiscreteSet,
    problem: &P,
    cfg: &NsgaConfig,
    rng: &mut impl Rng,
) -> NsgaResult {
    let mut seen: HashSet<Key> = HashSet::new();
    let mut pop: Vec<Candidate> = Vec::with_capacity(2 * cfg.pop_size);
    let mut n_evaluations = 0;
    let mut attempts = 0;
    while pop.len() < cfg.pop_size && attempts < 20 {
        attempts += 1;
        for x in random_sample(space, valid, cfg.pop_size - pop.len(), rng) {
            if seen.insert(key(&x)) {
                pop.push(problem.evaluate(&x));
                n_evaluations += 1;
            }
        }
    }

    let mut normalization = Normalization::fit(pop.iter().map(|c| c.raw.as_slice()));
    normalization.apply_all(&mut pop, problem.penalize());

    for _ in 0..cfg.n_generations {
        let f: Vec<Vec<f64>> = pop.iter().map(|c| c.f.clone()).collect();
        let cv: Vec<f64> = pop.iter().map(|c| c.cv).collect();
        let (rank, crowd, _) = rank_and_crowd(&f, &cv);

        let mut offspring = Vec::with_capacity(cfg.pop_size);
        let mut tries = 0;
        while offspring.len() < cfg.pop_size && tries < 4 * cfg.pop_size {
            tries += 1;
            let p1 = tournament(&rank, &crowd, &cv, rng);
            let p2 = tournament(&rank, &crowd, &cv, rng);
            let (c1, c2) = mate(space, &pop[p1].x, &pop[p2].x, cfg, rng);
            for c in [c1, c2] {
                let c = space.repair(&c);
                if offspring.len() < cfg.pop_size && seen.insert(key(&c)) {
                    offspring.push(problem.evaluate(&c));
                    n_evaluations += 1;
                }
            }
        }

        pop.extend(offspring);
        normalization = Normalization::fit(pop.iter().map(|c| c.raw.as_slice()));
        normalization.apply_all(&mut pop, problem.penalize());

        let f: Vec<Vec<f64>> = pop.iter().map(|c| c.f.clone()).collect();
        let cv: Vec<f64> = pop.iter().map(|c| c.cv).collect();
        let fronts = constrained_fronts(&f, &cv);
        let mut survivors: Vec<usize> = Vec::with_capacity(cfg.pop_size);
        for front in fronts {
            if survivors.len() + front.len() <= cfg.pop_size {
                survivors.extend(front);
            } else {
                let d = crowding_distance(&f, &front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(front[a].cmp(&front[b])));
                let room = cfg.pop_size - survivors.len();
                survivors.extend(order.into_iter().take(room).map(|k| front[k]));
            }
            if survivors.len() >= cfg.pop_size {
                break;
            }
        }
        let mut keep = vec![false; pop.len()];
        for &i in &survivors {
            keep[i] = true;
        }
        let mut k = 0;
        pop.retain(|_| {
            k += 1;
            keep[k - 1]
        });
    }

    normalization = Normalization::fit(pop.iter().map(|c| c.raw.as_slice()));
    normalization.apply_all(&mut pop, problem.penalize());
    let f: Vec<Vec<f64>> = pop.iter().map(|c| c.f.clone()).collect();
    let cv: Vec<f64> = pop.iter().map(|c| c.cv).collect();
    let fronts = constrained_fronts(&f, &cv);
    let first = fronts.into_iter().next().unwrap_or_default();
    let feasible = first.first().is_some_and(|&i| cv[i] <= 0.0);
    NsgaResult { front: first.into_iter().map(|i| pop[i].clone()).collect(), feasible, normalization, n_evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crowding_of_collinear_front() {
        let f = vec![vec![0.0, 3.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 0.0]];
        let d = crowding_distance(&f, &[0, 1, 2, 3]);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert!((d[1] - 4.0 / 3.0).abs() < 1e-12 && (d[2] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sorting_respects_feasibility() {
        let f = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, 2.0], vec![2.0, 0.5]];
        let cv = vec![0.3, 0.0, 0.0, 0.1];
        let fronts = constrained_fronts(&f, &cv);
        assert_eq!(fronts, vec![vec![1, 2], vec![3], vec![0]]);
    }

    #[test]
    fn sbx_stays_in_unit_box() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let (a, b) = sbx_pair(rng.gen(), rng.gen(), 15.0, &mut rng);
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            let m = polynomial_mutation(rng.gen(), 20.0, &mut rng);
            assert!((0.0..=1.0).contains(&m));
        }
    }
}
