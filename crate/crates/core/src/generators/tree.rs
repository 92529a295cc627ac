//! CART-style decision tree and leaf-box specification generation.
//!
//! Splits are axis-aligned: the left child takes `x[f] <= threshold`, the
//! right child `x[f] > threshold`, with thresholds at midpoints between
//! consecutive distinct feature values. Classification trees minimise
//! weighted Gini impurity, regression trees weighted variance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::dataset::{Dataset, Labels, TaskKind};
use crate::error::{Error, Result};
use crate::spec::{extract_from_candidates, Hyperrectangle, SpecSet};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Permutes the per-node feature scan order, which decides ties.
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

impl TreeParams {
    fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if self.min_samples_split < 2 || self.min_samples_split <= self.min_samples_leaf {
            return Err(Error::invalid(format!(
                "min_samples_split ({}) must be >= 2 and > min_samples_leaf ({})",
                self.min_samples_split, self.min_samples_leaf
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCriterion {
    Gini,
    Variance,
}

impl SplitCriterion {
    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::Classification => SplitCriterion::Gini,
            TaskKind::Regression => SplitCriterion::Variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training rows that reached this leaf.
    Leaf { samples: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    root: usize,
    n_features: usize,
    criterion: SplitCriterion,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn criterion(&self) -> SplitCriterion {
        self.criterion
    }

    /// Node id of the leaf `x` falls into.
    pub fn leaf_for(&self, x: &[f64]) -> usize {
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return id,
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.leaf_boxes().iter().map(|l| l.depth).max().unwrap_or(0)
    }

    /// Leaves in depth-first (left before right) order with the box carved
    /// out by their root path. Unconstrained sides stay infinite.
    pub fn leaf_boxes(&self) -> Vec<LeafBox> {
        let mut out = Vec::new();
        let k = self.n_features;
        let mut stack = vec![(
            self.root,
            vec![f64::NEG_INFINITY; k],
            vec![f64::INFINITY; k],
            0usize,
        )];
        while let Some((id, lo, hi, depth)) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf { .. } => out.push(LeafBox {
                    node: id,
                    depth,
                    lower: lo,
                    upper: hi,
                }),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (f, t) = (*feature, *threshold);
                    let mut left_hi = hi.clone();
                    left_hi[f] = left_hi[f].min(t);
                    let mut right_lo = lo.clone();
                    right_lo[f] = right_lo[f].max(t);
                    // right pushed first so the left subtree is visited first
                    stack.push((*right, right_lo, hi, depth + 1));
                    stack.push((*left, lo, left_hi, depth + 1));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafBox {
    pub node: usize,
    pub depth: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// Weighted child impurity (lower is better).
    score: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

struct Grower<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
    criterion: SplitCriterion,
    rng: ChaCha8Rng,
    n_classes: usize,
}

impl Grower<'_> {
    fn is_pure(&self, idx: &[usize]) -> bool {
        match self.data.labels() {
            Labels::Class(ys) => idx.iter().all(|&i| ys[i] == ys[idx[0]]),
            Labels::Real(ys) => idx.iter().all(|&i| ys[i] == ys[idx[0]]),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut features: Vec<usize> = (0..self.data.n_features()).collect();
        features.shuffle(&mut self.rng);

        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for &f in &features {
            order.sort_by(|&a, &b| self.data.row(a)[f].total_cmp(&self.data.row(b)[f]));
            let mut sweep = Sweep::new(self.criterion, self.n_classes, self.data, &order);
            for pos in 0..n - 1 {
                sweep.move_left(order[pos]);
                let n_left = pos + 1;
                let a = self.data.row(order[pos])[f];
                let b = self.data.row(order[pos + 1])[f];
                if a == b || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let score = sweep.score();
                if best.is_none_or(|(_, _, s)| score < s) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some((f, threshold, score));
                }
            }
        }
        let (feature, threshold, score) = best?;
        let (left, right) = idx
            .iter()
            .copied()
            .partition(|&i| self.data.row(i)[feature] <= threshold);
        Some(BestSplit {
            feature,
            threshold,
            score,
            left,
            right,
        })
    }
}

/// Running left/right statistics for a sorted sweep over one feature.
enum Sweep<'a> {
    Gini {
        ys: &'a [usize],
        left: Vec<f64>,
        right: Vec<f64>,
        n_left: f64,
        n_right: f64,
    },
    Variance {
        ys: &'a [f64],
        sum_l: f64,
        sq_l: f64,
        sum_r: f64,
        sq_r: f64,
        n_left: f64,
        n_right: f64,
    },
}

impl<'a> Sweep<'a> {
    fn new(criterion: SplitCriterion, n_classes: usize, data: &'a Dataset, order: &[usize]) -> Self {
        match (criterion, data.labels()) {
            (SplitCriterion::Gini, Labels::Class(ys)) => {
                let mut right = vec![0.0; n_classes];
                for &i in order {
                    right[ys[i]] += 1.0;
                }
                Sweep::Gini {
                    ys,
                    left: vec![0.0; n_classes],
                    right,
                    n_left: 0.0,
                    n_right: order.len() as f64,
                }
            }
            (SplitCriterion::Variance, Labels::Real(ys)) => {
                let (sum_r, sq_r) = order
                    .iter()
                    .fold((0.0, 0.0), |(s, q), &i| (s + ys[i], q + ys[i] * ys[i]));
                Sweep::Variance {
                    ys,
                    sum_l: 0.0,
                    sq_l: 0.0,
                    sum_r,
                    sq_r,
                    n_left: 0.0,
                    n_right: order.len() as f64,
                }
            }
            _ => unreachable!("criterion is chosen from the label kind"),
        }
    }

    fn move_left(&mut self, i: usize) {
        match self {
            Sweep::Gini {
                ys,
                left,
                right,
                n_left,
                n_right,
            } => {
                left[ys[i]] += 1.0;
                right[ys[i]] -= 1.0;
                *n_left += 1.0;
                *n_right -= 1.0;
            }
            Sweep::Variance {
                ys,
                sum_l,
                sq_l,
                sum_r,
                sq_r,
                n_left,
                n_right,
            } => {
                let y = ys[i];
                *sum_l += y;
                *sq_l += y * y;
                *sum_r -= y;
                *sq_r -= y * y;
                *n_left += 1.0;
                *n_right -= 1.0;
            }
        }
    }

    /// Size-weighted child impurity `n_l·I_l + n_r·I_r`.
    fn score(&self) -> f64 {
        match self {
            Sweep::Gini {
                left,
                right,
                n_left,
                n_right,
                ..
            } => {
                let g = |counts: &[f64], n: f64| {
                    n - counts.iter().map(|c| c * c).sum::<f64>() / n
                };
                g(left, *n_left) + g(right, *n_right)
            }
            Sweep::Variance {
                sum_l,
                sq_l,
                sum_r,
                sq_r,
                n_left,
                n_right,
                ..
            } => {
                let sse = |s: f64, q: f64, n: f64| (q - s * s / n).max(0.0);
                sse(*sum_l, *sq_l, *n_left) + sse(*sum_r, *sq_r, *n_right)
            }
        }
    }
}

/// Greedy top-down tree growth. A node becomes a leaf when it is pure, has
/// reached `max_depth`, has fewer than `min_samples_split` rows, or admits no
/// split leaving `min_samples_leaf` rows on each side.
pub fn train_tree(gen: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    let criterion = SplitCriterion::for_task(gen.task());
    let mut grower = Grower {
        data: gen,
        params,
        criterion,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        n_classes: gen.num_classes().unwrap_or(0),
    };

    let mut nodes: Vec<Node> = vec![Node::Leaf { samples: Vec::new() }];
    let mut work = vec![(0usize, (0..gen.len()).collect::<Vec<_>>(), 0usize)];
    while let Some((id, idx, depth)) = work.pop() {
        let can_split = idx.len() >= params.min_samples_split
            && params.max_depth.is_none_or(|d| depth < d)
            && !grower.is_pure(&idx);
        let split = if can_split { grower.best_split(&idx) } else { None };
        match split {
            Some(s) => {
                debug_assert!(s.score.is_finite());
                let (l, r) = (nodes.len(), nodes.len() + 1);
                nodes.push(Node::Leaf { samples: Vec::new() });
                nodes.push(Node::Leaf { samples: Vec::new() });
                nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: l,
                    right: r,
                };
                work.push((r, s.right, depth + 1));
                work.push((l, s.left, depth + 1));
            }
            None => nodes[id] = Node::Leaf { samples: idx },
        }
    }
    Ok(DecisionTree {
        nodes,
        root: 0,
        n_features: gen.n_features(),
        criterion,
    })
}

/// Tree-traversal generation: train a tree, then turn each leaf's root path
/// into a box and extract a spec from the generation points inside it.
///
/// Leaf boxes cover the whole input space, so every evaluation point is
/// covered by at least one spec.
pub fn gen_tree(gen: &Dataset, params: &TreeParams) -> Result<SpecSet> {
    let tree = train_tree(gen, params)?;
    let leaves = tree.leaf_boxes();
    let specs: Vec<_> = leaves
        .into_par_iter()
        .map(|leaf| {
            let region = Hyperrectangle::new(leaf.lower, leaf.upper)?;
            Ok(extract_from_candidates(
                &region,
                gen,
                0..gen.len(),
                format!("tree:leaf={}", leaf.node),
            ))
        })
        .collect::<Result<_>>()?;

    let mut set = SpecSet::new(gen.task(), gen.n_features(), "tree")
        .with_param("max_depth", params.max_depth.map_or(Value::Null, Value::from))
        .with_param("min_samples_leaf", params.min_samples_leaf)
        .with_param("min_samples_split", params.min_samples_split)
        .with_param("seed", params.seed)
        .with_param(
            "criterion",
            match tree.criterion() {
                SplitCriterion::Gini => "gini",
                SplitCriterion::Variance => "variance",
            },
        );
    for spec in specs.into_iter().flatten() {
        set.push(spec)?;
    }
    Ok(set)
}
