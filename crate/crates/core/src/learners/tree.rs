//! CART classification tree with (weighted) Gini impurity.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{weight_of, MaxFeatures, TreeParams};
use crate::dataset::Class;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// In-bag class counts reaching the leaf.
    Leaf { positives: u32, negatives: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

/// A candidate split and its weighted child impurity `W_L·G_L + W_R·G_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
}

/// `W · gini` for a node holding class weights `p` and `n`.
pub(crate) fn weighted_gini(p: f64, n: f64) -> f64 {
    let w = p + n;
    if w <= 0.0 {
        0.0
    } else {
        w - (p * p + n * n) / w
    }
}

/// Shared tie rule: lower impurity wins; within `eps`, lower feature index,
/// then lower threshold.
pub(crate) fn better(cand: &SplitChoice, best: Option<&SplitChoice>, eps: f64) -> bool {
    match best {
        None => true,
        Some(b) => {
            if cand.impurity < b.impurity - eps {
                true
            } else if cand.impurity > b.impurity + eps {
                false
            } else {
                (cand.feature, cand.threshold) < (b.feature, b.threshold)
            }
        }
    }
}

pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    // rounding can land the midpoint on the upper value, which would send it left
    if m >= hi {
        lo
    } else {
        m
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [Class],
    /// Per-row sample weight (class weight × multiplicity).
    weight: Vec<f64>,
    count: &'a [u32],
    params: &'a TreeParams,
    n_candidates: usize,
    rng: rng::Rng,
    sorted: Vec<usize>,
}

impl Builder<'_> {
    fn best_split(&mut self, rows: &[usize]) -> Option<SplitChoice> {
        let d = self.x.cols();
        let mut features: Vec<usize> = (0..d).collect();
        if self.n_candidates < d {
            features.shuffle(&mut self.rng);
        }
        let total_w: f64 = rows.iter().map(|&r| self.weight[r]).sum();
        let eps = 1e-10 * total_w.max(1.0);
        let mut best: Option<SplitChoice> = None;
        for (evaluated, &f) in features.iter().enumerate() {
            if evaluated >= self.n_candidates && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(rows, f, eps) {
                if better(&c, best.as_ref(), eps) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_split_on(&mut self, rows: &[usize], f: usize, eps: f64) -> Option<SplitChoice> {
        let x = self.x;
        self.sorted.clear();
        self.sorted.extend_from_slice(rows);
        self.sorted
            .sort_unstable_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));

        let (mut tp, mut tn, mut tc) = (0.0, 0.0, 0u64);
        for &r in &self.sorted {
            match self.y[r] {
                Class::Positive => tp += self.weight[r],
                Class::Negative => tn += self.weight[r],
            }
            tc += u64::from(self.count[r]);
        }
        let min_leaf = self.params.min_samples_leaf as u64;
        let (mut lp, mut ln, mut lc) = (0.0, 0.0, 0u64);
        let mut best: Option<SplitChoice> = None;
        for k in 0..self.sorted.len() - 1 {
            let r = self.sorted[k];
            match self.y[r] {
                Class::Positive => lp += self.weight[r],
                Class::Negative => ln += self.weight[r],
            }
            lc += u64::from(self.count[r]);
            let (v, next) = (x.get(r, f), x.get(self.sorted[k + 1], f));
            if v == next || lc < min_leaf || tc - lc < min_leaf {
                continue;
            }
            let cand = SplitChoice {
                feature: f,
                threshold: midpoint(v, next),
                impurity: weighted_gini(lp, ln) + weighted_gini(tp - lp, tn - ln),
            };
            if better(&cand, best.as_ref(), eps) {
                best = Some(cand);
            }
        }
        best
    }
}

impl DecisionTree {
    /// Grow a tree. `multiplicity` carries bootstrap counts (rows with 0 are out of bag).
    pub(crate) fn fit(
        x: &Matrix,
        y: &[Class],
        class_weights: [f64; 2],
        params: &TreeParams,
        max_features: MaxFeatures,
        multiplicity: Option<&[u32]>,
        seed: u64,
    ) -> Self {
        let ones;
        let count = match multiplicity {
            Some(m) => m,
            None => {
                ones = vec![1u32; x.rows()];
                &ones
            }
        };
        let weight = y
            .iter()
            .zip(count)
            .map(|(c, m)| weight_of(*c, class_weights) * f64::from(*m))
            .collect();
        let mut b = Builder {
            x,
            y,
            weight,
            count,
            params,
            n_candidates: max_features.resolve(x.cols()),
            rng: rng::seeded(seed),
            sorted: Vec::with_capacity(x.rows()),
        };

        let root: Vec<usize> = (0..x.rows()).filter(|&r| count[r] > 0).collect();
        let mut nodes = vec![Node::Leaf {
            positives: 0,
            negatives: 0,
        }];
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((slot, rows, depth)) = stack.pop() {
            let (mut pos, mut neg) = (0u32, 0u32);
            for &r in &rows {
                match y[r] {
                    Class::Positive => pos += count[r],
                    Class::Negative => neg += count[r],
                }
            }
            let total = u64::from(pos) + u64::from(neg);
            let stop = pos == 0
                || neg == 0
                || params.max_depth.is_some_and(|m| depth >= m)
                || total < 2 * params.min_samples_leaf as u64;
            let split = if stop { None } else { b.best_split(&rows) };
            match split {
                None => {
                    nodes[slot] = Node::Leaf {
                        positives: pos,
                        negatives: neg,
                    }
                }
                Some(s) => {
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&r| x.get(r, s.feature) <= s.threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf {
                        positives: 0,
                        negatives: 0,
                    });
                    nodes.push(Node::Leaf {
                        positives: 0,
                        negatives: 0,
                    });
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right,
                    };
                    stack.push((right, right_rows, depth + 1));
                    stack.push((left, left_rows, depth + 1));
                }
            }
        }
        Self {
            nodes,
            n_features: x.cols(),
        }
    }

    /// The split the tree would place at its root over all features.
    pub fn root_split(x: &Matrix, y: &[Class], class_weights: [f64; 2], params: &TreeParams) -> Option<SplitChoice> {
        let count = vec![1u32; x.rows()];
        let mut b = Builder {
            x,
            y,
            weight: y.iter().map(|c| weight_of(*c, class_weights)).collect(),
            count: &count,
            params,
            n_candidates: x.cols(),
            rng: rng::seeded(0),
            sorted: Vec::new(),
        };
        let rows: Vec<usize> = (0..x.rows()).collect();
        if rows.len() < 2 {
            return None;
        }
        b.best_split(&rows)
    }

    fn leaf(&self, row: &[f64]) -> (u32, u32) {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { positives, negatives } => return (*positives, *negatives),
            }
        }
    }

    /// `2p − 1` with `p` the raw positive fraction of the leaf.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let (p, n) = self.leaf(row);
        let total = f64::from(p) + f64::from(n);
        if total == 0.0 {
            0.0
        } else {
            2.0 * f64::from(p) / total - 1.0
        }
    }

    /// Laplace-smoothed leaf fraction `(pos + 1) / (total + 2)`.
    pub fn proba_row(&self, row: &[f64]) -> f64 {
        let (p, n) = self.leaf(row);
        (f64::from(p) + 1.0) / (f64::from(p) + f64::from(n) + 2.0)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
