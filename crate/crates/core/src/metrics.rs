//! Hypervolume, distance to the reference optimum, regret and the
//! cross-problem ranking of strategies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::infill::nsga2::dominates;
use crate::stats::{median, norm_cdf};
use crate::strategy::EvaluatedPoint;

/// Significance level below which two strategies get different ranks.
pub const RANK_ALPHA: f64 = 0.05;

/// Largest combined sample size for the exact rank-sum distribution.
const EXACT_RANK_SUM_LIMIT: usize = 60;

/// Points that strictly dominate `ref_point` and are not dominated by each other.
pub fn nondominated_within(points: &[Vec<f64>], ref_point: &[f64]) -> Vec<Vec<f64>> {
    let inside: Vec<&Vec<f64>> =
        points.iter().filter(|p| p.iter().zip(ref_point).all(|(a, r)| a < r)).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, p) in inside.iter().enumerate() {
        let dominated = inside.iter().any(|q| dominates(q, p));
        let duplicate = inside[..i].iter().any(|q| q == p);
        if !dominated && !duplicate {
            out.push((*p).clone());
        }
    }
    out
}

/// Exact hypervolume dominated by `points` and bounded by `ref_point`.
/// Points not strictly dominating the reference point are ignored.
pub fn hypervolume(points: &[Vec<f64>], ref_point: &[f64]) -> f64 {
    let front = nondominated_within(points, ref_point);
    if front.is_empty() {
        return 0.0;
    }
    slice_volume(front, ref_point)
}

/// Volume by slicing along the last objective.
fn slice_volume(mut front: Vec<Vec<f64>>, ref_point: &[f64]) -> f64 {
    let d = ref_point.len();
    match d {
        1 => ref_point[0] - front.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            front.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut volume = 0.0;
            let mut y_prev = ref_point[1];
            for p in &front {
                if p[1] < y_prev {
                    volume += (ref_point[0] - p[0]) * (y_prev - p[1]);
                    y_prev = p[1];
                }
            }
            volume
        }
        _ => {
            front.sort_by(|a, b| a[d - 1].total_cmp(&b[d - 1]));
            let sub_ref = &ref_point[..d - 1];
            let mut volume = 0.0;
            for i in 0..front.len() {
                let top = if i + 1 < front.len() { front[i + 1][d - 1] } else { ref_point[d - 1] };
                let depth = top - front[i][d - 1];
                if depth <= 0.0 {
                    continue;
                }
                let projected: Vec<Vec<f64>> = front[..=i].iter().map(|p| p[..d - 1].to_vec()).collect();
                volume += depth * hypervolume(&projected, sub_ref);
            }
            volume
        }
    }
}

/// Relative hypervolume gap between a front and the reference front,
/// clipped to `[0, 1]`; an empty front gives 1.
pub fn delta_hv(current: &[Vec<f64>], reference_hv: f64, ref_point: &[f64]) -> f64 {
    if current.is_empty() || reference_hv <= 0.0 {
        return 1.0;
    }
    ((reference_hv - hypervolume(current, ref_point)) / reference_hv).clamp(0.0, 1.0)
}

/// Single-objective gap `(f_best - f_opt) / max(|f_opt|, scale)` clipped to
/// `[0, 1]`; no viable value gives 1.
pub fn delta_optimum(values: &[f64], f_opt: f64, scale: f64) -> f64 {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return 1.0;
    }
    let denom = f_opt.abs().max(scale);
    if denom <= 0.0 {
        return if best <= f_opt { 0.0 } else { 1.0 };
    }
    ((best - f_opt) / denom).clamp(0.0, 1.0)
}

/// State of an optimization after one iteration; iteration 0 is the DoE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: usize,
    /// Cumulative evaluations including the DoE.
    pub n_evaluations: usize,
    pub batch: Vec<EvaluatedPoint>,
    /// Nondominated feasible viable objective vectors so far.
    pub front: Vec<Vec<f64>>,
    pub delta_hv: f64,
    pub t_train_s: f64,
    pub t_infill_s: f64,
}

/// Mean distance over evaluations, by the trapezoid rule over
/// `(evaluations, delta_hv)` pairs. A single pair gives its own distance.
pub fn regret_curve(curve: &[(f64, f64)]) -> f64 {
    match curve {
        [] => 1.0,
        [(_, d)] => *d,
        _ => {
            let span = curve[curve.len() - 1].0 - curve[0].0;
            if span <= 0.0 {
                return curve[curve.len() - 1].1;
            }
            let area: f64 = curve.windows(2).map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1)).sum();
            area / span
        }
    }
}

/// Regret of a run: mean distance over its infill evaluations.
pub fn regret(records: &[RunRecord]) -> f64 {
    let curve: Vec<(f64, f64)> = records.iter().map(|r| (r.n_evaluations as f64, r.delta_hv)).collect();
    regret_curve(&curve)
}

/// Average ranks of the pooled samples, ties sharing the mean rank.
fn pooled_ranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon rank-sum p-value of `a` against `b`: exact over all
/// label permutations for small samples, normal approximation with tie
/// correction otherwise.
pub fn rank_sum_p_value(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return 1.0;
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = pooled_ranks(&pooled);
    let n = n1 + n2;
    // Doubled ranks are integers even with ties.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = doubled[..n1].iter().sum();
    let total: usize = doubled.iter().sum();
    // Expected doubled rank sum is n1 * total / n; compare 2n-scaled values.
    let centered = |s: usize| (n as i64 * s as i64 - n1 as i64 * total as i64).abs();
    let obs_dev = centered(observed);

    if n <= EXACT_RANK_SUM_LIMIT {
        // counts[k][s]: subsets of size k with doubled rank sum s.
        let mut counts = vec![vec![0.0f64; total + 1]; n1 + 1];
        counts[0][0] = 1.0;
        for &r in &doubled {
            for k in (1..=n1).rev() {
                for s in (r..=total).rev() {
                    let add = counts[k - 1][s - r];
                    if add > 0.0 {
                        counts[k][s] += add;
                    }
                }
            }
        }
        let all: f64 = counts[n1].iter().sum();
        let extreme: f64 =
            counts[n1].iter().enumerate().filter(|&(s, &c)| c > 0.0 && centered(s) >= obs_dev).map(|(_, c)| c).sum();
        return (extreme / all).min(1.0);
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let mean = n1f * (nf + 1.0) / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let w: f64 = ranks[..n1].iter().sum();
    let z = (w - mean).abs() / var.sqrt();
    (2.0 * (1.0 - norm_cdf(z))).min(1.0)
}

/// Ranks of strategies on one problem, given their regret samples.
///
/// Strategies are ordered by median. Each one shares the rank of the current
/// group when the rank-sum test against the group's best gives
/// `p >= RANK_ALPHA`, and otherwise opens the next rank.
pub fn rank_problem(samples: &BTreeMap<String, Vec<f64>>) -> BTreeMap<String, usize> {
    let mut order: Vec<(&String, f64)> = samples.iter().map(|(k, v)| (k, median(v))).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    let mut ranks = BTreeMap::new();
    let mut rank = 0;
    let mut leader: Option<&String> = None;
    for (name, _) in order {
        let same = leader.is_some_and(|l| rank_sum_p_value(&samples[l], &samples[name]) >= RANK_ALPHA);
        if !same {
            rank += 1;
            leader = Some(name);
        }
        ranks.insert(name.clone(), rank);
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Problem -> strategy -> rank.
    pub per_problem: BTreeMap<String, BTreeMap<String, usize>>,
    /// Strategy -> fraction of problems where it has rank 1.
    pub rank1: BTreeMap<String, f64>,
    /// Strategy -> fraction of problems where it has rank 1 or 2.
    pub rank_le2: BTreeMap<String, f64>,
}

/// Rank strategies on every problem and aggregate the rank frequencies.
pub fn rank_strategies(samples: &BTreeMap<String, BTreeMap<String, Vec<f64>>>) -> Ranking {
    let per_problem: BTreeMap<String, BTreeMap<String, usize>> =
        samples.iter().map(|(p, s)| (p.clone(), rank_problem(s))).collect();
    let mut rank1: BTreeMap<String, f64> = BTreeMap::new();
    let mut rank_le2: BTreeMap<String, f64> = BTreeMap::new();
    let n = per_problem.len().max(1) as f64;
    for ranks in per_problem.values() {
        for (s, &r) in ranks {
            *rank1.entry(s.clone()).or_default() += if r == 1 { 1.0 / n } else { 0.0 };
            *rank_le2.entry(s.clone()).or_default() += if r <= 2 { 1.0 / n } else { 0.0 };
        }
    }
    Ranking { per_problem, rank1, rank_le2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&[vec![0.0, 0.0]], &[1.0, 1.0]), 1.0);
        assert!((hypervolume(&[vec![0.0, 0.5], vec![0.5, 0.0]], &[1.0, 1.0]) - 0.75).abs() < 1e-12);
        assert_eq!(hypervolume(&[vec![3.0]], &[10.0]), 7.0);
        assert_eq!(hypervolume(&[], &[1.0, 1.0]), 0.0);
        assert_eq!(hypervolume(&[vec![2.0, 0.0]], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn hypervolume_three_objectives() {
        // Union of two boxes: 1*1*0.5 + 0.5*0.5*1 - overlap 0.5*0.5*0.5.
        let pts = vec![vec![0.0, 0.0, 0.5], vec![0.5, 0.5, 0.0]];
        assert!((hypervolume(&pts, &[1.0, 1.0, 1.0]) - (0.5 + 0.25 - 0.125)).abs() < 1e-12);
        assert!((hypervolume(&[vec![0.0, 0.0, 0.0]], &[1.0, 2.0, 3.0]) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn delta_hv_examples() {
        let reference = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
        let r = [1.0, 1.0];
        let hv = hypervolume(&reference, &r);
        assert_eq!(delta_hv(&reference, hv, &r), 0.0);
        assert_eq!(delta_hv(&[], hv, &r), 1.0);
        // A single point covering half of the reference volume.
        let side = (0.375f64).sqrt();
        let half = vec![vec![1.0 - side, 1.0 - side]];
        assert!((delta_hv(&half, hv, &r) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn delta_optimum_examples() {
        assert_eq!(delta_optimum(&[2.0, 1.0], 1.0, 0.5), 0.0);
        assert!((delta_optimum(&[1.5], 1.0, 5.0) - 0.1).abs() < 1e-12);
        assert_eq!(delta_optimum(&[], 1.0, 5.0), 1.0);
        assert_eq!(delta_optimum(&[100.0], 1.0, 5.0), 1.0);
    }

    #[test]
    fn regret_examples() {
        let flat0: Vec<(f64, f64)> = (0..=10).map(|e| (e as f64, 0.0)).collect();
        let flat1: Vec<(f64, f64)> = (0..=10).map(|e| (e as f64, 1.0)).collect();
        let linear: Vec<(f64, f64)> = (0..=10).map(|e| (e as f64, 1.0 - e as f64 / 10.0)).collect();
        assert_eq!(regret_curve(&flat0), 0.0);
        assert_eq!(regret_curve(&flat1), 1.0);
        assert!((regret_curve(&linear) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rank_sum_exact_small_sample() {
        // Fully separated samples of four: 2 of 70 arrangements are as extreme.
        let p = rank_sum_p_value(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]);
        assert!((p - 2.0 / 70.0).abs() < 1e-12);
        assert_eq!(rank_sum_p_value(&[1.0; 4], &[1.0; 4]), 1.0);
    }

    #[test]
    fn ranking_examples() {
        let mut s = BTreeMap::new();
        s.insert("a".to_string(), vec![1.0; 4]);
        s.insert("b".to_string(), vec![1.0; 4]);
        let r = rank_problem(&s);
        assert_eq!((r["a"], r["b"]), (1, 1));

        let mut s = BTreeMap::new();
        s.insert("a".to_string(), vec![1.0; 4]);
        s.insert("b".to_string(), vec![10.0; 4]);
        let r = rank_problem(&s);
        assert_eq!((r["a"], r["b"]), (1, 2));

        let mut s = BTreeMap::new();
        s.insert("a".to_string(), vec![1.0, 1.2, 0.9, 1.1, 1.05]);
        s.insert("b".to_string(), vec![1.1, 0.95, 1.15, 1.0, 1.02]);
        s.insert("c".to_string(), vec![9.0, 9.5, 10.0, 10.5, 11.0]);
        let r = rank_problem(&s);
        assert_eq!((r["a"], r["b"], r["c"]), (1, 1, 2));
    }

    #[test]
    fn aggregate_fractions() {
        let mut samples = BTreeMap::new();
        for (p, worse) in [("p1", "b"), ("p2", "a")] {
            let mut s = BTreeMap::new();
            for name in ["a", "b"] {
                let v = if name == worse { vec![10.0; 5] } else { vec![1.0; 5] };
                s.insert(name.to_string(), v);
            }
            samples.insert(p.to_string(), s);
        }
        let r = rank_strategies(&samples);
        assert_eq!(r.rank1["a"], 0.5);
        assert_eq!(r.rank_le2["b"], 1.0);
    }
}
