//! Picking a batch of infill points from the optimized set.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nsga2::{crowding_distance, key, Key};
use super::Candidate;
use crate::space::DesignVector;

/// Which end of the crowding-distance ordering to take a batch from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrowdingPick {
    Lowest,
    Highest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub points: Vec<DesignVector>,
    /// Indices into the candidate set of the selected points.
    pub chosen: Vec<usize>,
    /// Number of requested points that could not be supplied.
    pub shortfall: usize,
}

/// Select up to `n_batch` distinct candidates not flagged by `is_known`.
///
/// A single point is drawn at random. Larger batches are ordered by
/// crowding distance (ties broken by lexicographic objective order) and
/// taken from the end given by `pick`.
pub fn select_batch(
    front: &[Candidate],
    n_batch: usize,
    pick: CrowdingPick,
    is_known: impl Fn(&DesignVector) -> bool,
    rng: &mut impl Rng,
) -> Batch {
    let mut seen: HashSet<Key> = HashSet::new();
    let fresh: Vec<usize> = (0..front.len())
        .filter(|&i| !is_known(&front[i].x) && seen.insert(key(&front[i].x)))
        .collect();

    let chosen: Vec<usize> = if n_batch == 1 {
        if fresh.is_empty() {
            Vec::new()
        } else {
            vec![fresh[rng.gen_range(0..fresh.len())]]
        }
    } else {
        let f: Vec<Vec<f64>> = front.iter().map(|c| c.f.clone()).collect();
        let d = crowding_distance(&f, &fresh);
        let mut order: Vec<usize> = (0..fresh.len()).collect();
        order.sort_by(|&a, &b| {
            let by_crowd = match pick {
                CrowdingPick::Lowest => d[a].total_cmp(&d[b]),
                CrowdingPick::Highest => d[b].total_cmp(&d[a]),
            };
            by_crowd.then_with(|| {
                f[fresh[a]]
                    .iter()
                    .zip(&f[fresh[b]])
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        order.into_iter().take(n_batch).map(|k| fresh[k]).collect()
    };
    Batch {
        points: chosen.iter().map(|&i| front[i].x.clone()).collect(),
        shortfall: n_batch - chosen.len(),
        chosen,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cand(a: f64, b: f64) -> Candidate {
        let x = DesignVector { discrete: vec![], continuous: vec![a], active: vec![true] };
        let mut c = Candidate::new(x, vec![a, b], vec![], 1.0);
        c.f = vec![a, b];
        c
    }

    #[test]
    fn interior_points_have_lowest_crowding() {
        let front: Vec<Candidate> = (0..4).map(|i| cand(i as f64, 3.0 - i as f64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = select_batch(&front, 2, CrowdingPick::Lowest, |_| false, &mut rng);
        let mut chosen = b.chosen.clone();
        chosen.sort();
        assert_eq!(chosen, vec![1, 2]);
        let h = select_batch(&front, 2, CrowdingPick::Highest, |_| false, &mut rng);
        let mut chosen = h.chosen.clone();
        chosen.sort();
        assert_eq!(chosen, vec![0, 3]);
    }

    #[test]
    fn singleton_and_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = vec![cand(0.5, 0.5)];
        let b = select_batch(&one, 3, CrowdingPick::Lowest, |_| false, &mut rng);
        assert_eq!((b.points.len(), b.shortfall), (1, 2));
        let front: Vec<Candidate> = (0..5).map(|i| cand(i as f64, 4.0 - i as f64)).collect();
        let all = select_batch(&front, 5, CrowdingPick::Lowest, |_| false, &mut rng);
        assert_eq!(all.points.len(), 5);
    }

    #[test]
    fn duplicates_and_known_points_are_skipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let front = vec![cand(0.1, 0.9), cand(0.1, 0.9), cand(0.5, 0.5), cand(0.9, 0.1)];
        let b = select_batch(&front, 4, CrowdingPick::Lowest, |x| x.continuous[0] == 0.5, &mut rng);
        assert_eq!(b.points.len(), 2);
        assert_eq!(b.shortfall, 2);
        for _ in 0..20 {
            let s = select_batch(&front, 1, CrowdingPick::Lowest, |x| x.continuous[0] != 0.9, &mut rng);
            assert_eq!(s.chosen, vec![3]);
        }
    }
}
