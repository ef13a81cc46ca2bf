use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{ModelKind, ProbModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestParams {
    pub tree_count: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(m))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { tree_count: 100, max_depth: 12, min_leaf: 5, features_per_split: None, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
enum Node {
    Leaf(f64),
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: u8,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[u8]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(p) => return p,
                Node::Split { feature, threshold, left, right } => {
                    k = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    fn depth(&self, k: usize) -> usize {
        match self.nodes[k] {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + self.depth(left).max(self.depth(right)),
        }
    }

    fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

/// Bagged CART trees; the prediction is the mean leaf class-1 proportion.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomForest {
    trees: Vec<Tree>,
    feature_count: usize,
    pub params: ForestParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestSummary {
    pub tree_count: usize,
    pub mean_depth: f64,
    pub max_depth: usize,
    pub mean_leaves: f64,
}

impl RandomForest {
    pub fn summary(&self) -> ForestSummary {
        let t = self.trees.len() as f64;
        let depths: Vec<usize> = self.trees.iter().map(|tr| tr.depth(0)).collect();
        ForestSummary {
            tree_count: self.trees.len(),
            mean_depth: depths.iter().sum::<usize>() as f64 / t,
            max_depth: depths.iter().copied().max().unwrap_or(0),
            mean_leaves: self.trees.iter().map(Tree::leaves).sum::<usize>() as f64 / t,
        }
    }

    /// Per-tree predictions, mostly for inspection.
    pub fn tree_predictions(&self, x: &[u8]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }
}

impl ProbModel for RandomForest {
    fn predict(&self, x: &[u8]) -> Option<f64> {
        assert_eq!(x.len(), self.feature_count, "feature row arity");
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Some(sum / self.trees.len() as f64)
    }

    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn kind(&self) -> ModelKind {
        ModelKind::RandomForest
    }
}

struct Builder<'a> {
    columns: &'a [Vec<u8>],
    cards: &'a [u8],
    y: &'a [u8],
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

#[inline]
fn gini_mass(n: f64, pos: f64) -> f64 {
    // n * gini impurity
    if n == 0.0 {
        0.0
    } else {
        let p = pos / n;
        n * 2.0 * p * (1.0 - p)
    }
}

impl Builder<'_> {
    fn build<R: Rng>(&mut self, rows: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(pos as f64 / n as f64));
        if depth >= self.params.max_depth || pos == 0 || pos == n || n < 2 * self.params.min_leaf {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, pos, rng) else {
            return id;
        };
        // stable partition: left block first
        let column = &self.columns[feature];
        rows.sort_by_key(|&i| column[i] > threshold);
        let n_left = rows.iter().filter(|&&i| column[i] <= threshold).count();
        let (left_rows, right_rows) = rows.split_at_mut(n_left);
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    fn best_split<R: Rng>(&self, rows: &[usize], pos: usize, rng: &mut R) -> Option<(usize, u8)> {
        let n = rows.len() as f64;
        let parent = gini_mass(n, pos as f64);
        let min_leaf = self.params.min_leaf as f64;
        let mut best: Option<(f64, usize, u8)> = None;
        let mut counts: Vec<[usize; 2]> = Vec::new();
        for feature in index::sample(rng, self.columns.len(), self.mtry) {
            let card = self.cards[feature] as usize;
            counts.clear();
            counts.resize(card, [0, 0]);
            let column = &self.columns[feature];
            for &i in rows {
                counts[column[i] as usize][self.y[i] as usize] += 1;
            }
            let (mut ln, mut lp) = (0.0, 0.0);
            for (t, c) in counts.iter().enumerate().take(card.saturating_sub(1)) {
                ln += (c[0] + c[1]) as f64;
                lp += c[1] as f64;
                let (rn, rp) = (n - ln, pos as f64 - lp);
                if ln < min_leaf || rn < min_leaf {
                    continue;
                }
                let score = gini_mass(ln, lp) + gini_mass(rn, rp);
                if score < parent - 1e-12 && best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, feature, t as u8));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

pub fn fit_forest(train: &Dataset, params: &ForestParams) -> Result<RandomForest> {
    let m = train.n_features();
    let n = train.n_rows();
    if params.tree_count == 0 || params.min_leaf == 0 || m == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree, one feature and min_leaf >= 1".into()));
    }
    let mtry = params.features_per_split.unwrap_or_else(|| libm::ceil(libm::sqrt(m as f64)) as usize);
    if mtry == 0 || mtry > m {
        return Err(Error::InvalidArgument("features per split must lie in 1..=m".into()));
    }
    if n < 2 {
        return Err(Error::EmptyData);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let columns: Vec<Vec<u8>> = (0..m).map(|f| train.column(f)).collect();
    let mut trees = Vec::with_capacity(params.tree_count);
    for t in 0..params.tree_count {
        let mut rng = seed::rng(params.seed, &[stream::FOREST, t as u64]);
        let mut rows: Vec<usize> =
            if params.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
        let mut builder = Builder {
            columns: &columns,
            cards: train.cardinalities(),
            y: train.outcome(),
            params,
            mtry,
            nodes: Vec::new(),
        };
        builder.build(&mut rows, 0, &mut rng);
        trees.push(Tree { nodes: builder.nodes });
    }
    Ok(RandomForest { trees, feature_count: m, params: *params })
}
