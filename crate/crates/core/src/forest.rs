//! Bagged CART classification trees with Gini splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Node {
    Leaf { vote: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { vote } => return vote,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Random forest of unpruned classification trees; the prediction is the
/// fraction of trees voting for the positive class.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    labels: &'a [bool],
    max_features: usize,
    nodes: Vec<Node>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        let vote = match (2 * pos).cmp(&idx.len()) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5,
        };
        self.nodes.push(Node::Leaf { vote });
        self.nodes.len() - 1
    }

    /// Best (impurity, threshold) split of `idx` on one feature.
    fn best_split(&self, idx: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut sorted: Vec<usize> = idx.to_vec();
        sorted.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let n = sorted.len();
        let total_pos = sorted.iter().filter(|&&i| self.labels[i]).count();
        let mut left_pos = 0;
        let mut best: Option<(f64, f64)> = None;
        for k in 0..n - 1 {
            if self.labels[sorted[k]] {
                left_pos += 1;
            }
            let a = self.x[sorted[k]][feature];
            let b = self.x[sorted[k + 1]][feature];
            if a == b {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            let impurity = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr)) / n as f64;
            if best.is_none_or(|(bi, _)| impurity < bi) {
                best = Some((impurity, 0.5 * (a + b)));
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        if pos == 0 || pos == idx.len() || idx.len() < 2 {
            return self.leaf(&idx);
        }
        let n_features = self.x[0].len();
        let mut features: Vec<usize> = (0..n_features).collect();
        features.shuffle(rng);
        let mut chosen: Option<(f64, usize, f64)> = None;
        for (count, &f) in features.iter().enumerate() {
            // Keep drawing features past the budget until some split exists.
            if count >= self.max_features && chosen.is_some() {
                break;
            }
            if let Some((imp, thr)) = self.best_split(&idx, f) {
                if chosen.is_none_or(|(bi, _, _)| imp < bi) {
                    chosen = Some((imp, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = chosen else {
            return self.leaf(&idx);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        let node = self.nodes.len();
        self.nodes.push(Node::Leaf { vote: 0.0 });
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[node] = Node::Split { feature, threshold, left, right };
        node
    }
}

impl RandomForest {
    /// Fit `n_trees` trees on bootstrap resamples, considering
    /// `max(1, floor(sqrt(d)))` random features per split.
    pub fn fit(x: &[Vec<f64>], labels: &[bool], n_trees: usize, seed: u64) -> Self {
        let n = x.len();
        let d = x.first().map_or(0, |r| r.len());
        let max_features = ((d as f64).sqrt().floor() as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees = (0..n_trees)
            .map(|_| {
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut b = Builder { x, labels, max_features, nodes: Vec::new() };
                b.grow(sample, &mut rng);
                Tree { nodes: b.nodes }
            })
            .collect();
        Self { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
