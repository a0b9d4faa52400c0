use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { p_faller: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// One unpruned CART classification tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Faller fraction in the leaf `x` falls into.
    pub fn leaf_probability(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { p_faller } => return *p_faller,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn votes_faller(&self, x: &[f64]) -> bool {
        self.leaf_probability(x) > 0.5
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn grow(x: &Matrix, y: &[bool], sample: Vec<usize>, mtry: usize, rng: &mut seed::Rng) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        let mut features: Vec<usize> = (0..x.ncols()).collect();
        // (node slot, rows reaching it)
        let mut stack = vec![(tree.push_placeholder(), sample)];
        while let Some((slot, rows)) = stack.pop() {
            let pos = rows.iter().filter(|&&i| y[i]).count();
            let p = pos as f64 / rows.len() as f64;
            if pos == 0 || pos == rows.len() {
                tree.nodes[slot] = Node::Leaf { p_faller: p };
                continue;
            }
            features.shuffle(rng);
            let best = best_split(x, y, &rows, &features[..mtry])
                .or_else(|| best_split(x, y, &rows, &features[mtry..]));
            match best {
                None => tree.nodes[slot] = Node::Leaf { p_faller: p },
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.into_iter().partition(|&i| x.get(i, feature) <= threshold);
                    let left = tree.push_placeholder();
                    let right = tree.push_placeholder();
                    tree.nodes[slot] = Node::Split { feature, threshold, left, right };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        tree
    }

    fn push_placeholder(&mut self) -> usize {
        self.nodes.push(Node::Leaf { p_faller: f64::NAN });
        self.nodes.len() - 1
    }

    fn parameters(&self, out: &mut Vec<f64>) {
        for node in &self.nodes {
            match node {
                Node::Leaf { p_faller } => out.push(*p_faller),
                Node::Split { feature, threshold, left, right } => {
                    out.extend([*feature as f64, *threshold, *left as f64, *right as f64])
                }
            }
        }
    }
}

/// Lowest weighted Gini split over the given features; `None` if every one
/// of them is constant on `rows`.
fn best_split(x: &Matrix, y: &[bool], rows: &[usize], features: &[usize]) -> Option<(usize, f64)> {
    let n = rows.len() as f64;
    let total_pos = rows.iter().filter(|&&i| y[i]).count() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
    for &f in features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x.get(i, f), y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0.0;
        for k in 0..pairs.len() - 1 {
            if pairs[k].1 {
                left_pos += 1.0;
            }
            if pairs[k].0 == pairs[k + 1].0 {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = n - nl;
            let right_pos = total_pos - left_pos;
            // n · weighted Gini = nl·2pl(1−pl) + nr·2pr(1−pr)
            let impurity = 2.0 * left_pos * (nl - left_pos) / nl
                + 2.0 * right_pos * (nr - right_pos) / nr;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, 0.5 * (pairs[k].0 + pairs[k + 1].0)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Bagged CART trees with random feature subsets at each split.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub mtry: usize,
}

impl RandomForest {
    pub fn fit(x: &Matrix, y: &[bool], ntree: usize, seed_: u64) -> Self {
        let n = x.nrows();
        let mtry = ((x.ncols() as f64).sqrt().floor() as usize).max(1).min(x.ncols());
        let trees = (0..ntree)
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed_, &[t as u64]));
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                Tree::grow(x, y, sample, mtry, &mut rng)
            })
            .collect();
        Self { trees, mtry }
    }

    /// Fraction of trees voting faller.
    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.votes_faller(x)).count();
        votes as f64 / self.trees.len() as f64
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v = vec![self.mtry as f64];
        for t in &self.trees {
            t.parameters(&mut v);
        }
        v
    }
}
