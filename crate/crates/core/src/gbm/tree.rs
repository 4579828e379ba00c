use alloc::vec;
use alloc::vec::Vec;

use super::data::FeatureMatrix;
use super::penalty::{leaf_value_from_sums, soft_threshold};
use crate::error::{invalid, Result};

/// One node of a [`RegressionTree`], stored in pre-order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`, the rest to `right`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Axis-aligned binary regression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    depth: usize,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![Node::Leaf { value }], depth: 0 }
    }

    /// Validates a node array: root at 0, every internal node has two
    /// in-range children, every node is reachable exactly once, leaves finite.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid!("tree has no nodes"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut depth = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            if seen[id] {
                return Err(invalid!("node {id} reached twice"));
            }
            seen[id] = true;
            depth = depth.max(d);
            match nodes[id] {
                Node::Leaf { value } if !value.is_finite() => {
                    return Err(invalid!("leaf {id} has non-finite value"));
                }
                Node::Leaf { .. } => {}
                Node::Split { threshold, left, right, .. } => {
                    if !threshold.is_finite() {
                        return Err(invalid!("split {id} has non-finite threshold"));
                    }
                    if left >= nodes.len() || right >= nodes.len() {
                        return Err(invalid!("split {id} points outside the node array"));
                    }
                    stack.push((right, d + 1));
                    stack.push((left, d + 1));
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(invalid!("node {orphan} is unreachable"));
        }
        Ok(Self { nodes, depth })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Largest feature index used by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    id = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub alpha: f64,
}

/// Split gains at or below this fraction of the node's `1 + sum g^2` are
/// treated as zero; it absorbs rounding in `G - G_left` on constant residuals.
const GAIN_TOLERANCE: f64 = 1e-12;

const NO_NODE: u32 = u32::MAX;

/// Exact-greedy tree fitting over a fixed feature matrix.
///
/// Column values are copied column-major and each column's row order is
/// sorted once (by value, ties by row index), so growing a tree is a
/// level-by-level sweep over those orders with no per-node sorting.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    rows: usize,
    cols: usize,
    columns: Vec<f64>,
    order: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Debug, Clone, Copy)]
struct Growing {
    sum: f64,
    sum_sq: f64,
    count: usize,
    depth: usize,
    split: Option<(usize, f64, usize, usize)>,
}

impl TreeBuilder {
    pub fn new(x: &FeatureMatrix) -> Self {
        let (rows, cols) = (x.rows(), x.cols());
        let mut columns = vec![0.0; rows * cols];
        for r in 0..rows {
            for (c, v) in x.row(r).iter().enumerate() {
                columns[c * rows + r] = *v;
            }
        }
        let mut order = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            let col = &columns[c * rows..(c + 1) * rows];
            let mut idx: Vec<u32> = (0..rows as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            order.extend_from_slice(&idx);
        }
        Self { rows, cols, columns, order }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Fits one tree to `g` restricted to `row_subset`.
    pub fn fit(&self, g: &[f64], row_subset: &[usize], params: &TreeParams) -> Result<RegressionTree> {
        if g.len() != self.rows {
            return Err(invalid!("{} residuals for {} rows", g.len(), self.rows));
        }
        if row_subset.is_empty() {
            return Err(invalid!("fit_tree on an empty row subset"));
        }
        if let Some(&bad) = row_subset.iter().find(|&&r| r >= self.rows) {
            return Err(invalid!("row index {bad} out of range for {} rows", self.rows));
        }
        if !(params.lambda >= 0.0 && params.alpha >= 0.0) {
            return Err(invalid!("penalties must be >= 0"));
        }
        let (lambda, alpha) = (params.lambda, params.alpha);

        // node_of[r]: index into `grown` of the frontier node holding row r.
        let mut node_of = vec![NO_NODE; self.rows];
        let mut root = Growing { sum: 0.0, sum_sq: 0.0, count: 0, depth: 0, split: None };
        for &r in row_subset {
            if node_of[r] != NO_NODE {
                return Err(invalid!("row {r} appears twice in the subset"));
            }
            node_of[r] = 0;
            root.sum += g[r];
            root.sum_sq += g[r] * g[r];
            root.count += 1;
        }
        let mut grown = vec![root];
        let mut frontier: Vec<usize> = vec![0];

        let score = |sum: f64, count: usize| {
            let t = soft_threshold(sum, alpha);
            t * t / (count as f64 + lambda)
        };

        let mut left_sum = Vec::new();
        let mut left_n = Vec::new();
        let mut last = Vec::new();
        let mut best: Vec<Option<Candidate>> = Vec::new();

        while !frontier.is_empty() {
            // Slot k in the per-level arrays corresponds to frontier[k].
            let mut slot_of = vec![NO_NODE; grown.len()];
            let mut splittable = false;
            for (k, &id) in frontier.iter().enumerate() {
                let n = &grown[id];
                if n.depth < params.max_depth && n.count >= 2 {
                    slot_of[id] = k as u32;
                    splittable = true;
                }
            }
            if !splittable {
                break;
            }
            let width = frontier.len();
            best.clear();
            best.resize(width, None);
            let floor: Vec<f64> = frontier.iter().map(|&id| GAIN_TOLERANCE * (1.0 + grown[id].sum_sq)).collect();
            let parent: Vec<f64> = frontier.iter().map(|&id| score(grown[id].sum, grown[id].count)).collect();

            for c in 0..self.cols {
                left_sum.clear();
                left_sum.resize(width, 0.0);
                left_n.clear();
                left_n.resize(width, 0usize);
                last.clear();
                last.resize(width, 0.0);
                let col = &self.columns[c * self.rows..(c + 1) * self.rows];
                for &r in &self.order[c * self.rows..(c + 1) * self.rows] {
                    let r = r as usize;
                    let id = node_of[r];
                    if id == NO_NODE {
                        continue;
                    }
                    let k = slot_of[id as usize];
                    if k == NO_NODE {
                        continue;
                    }
                    let k = k as usize;
                    let v = col[r];
                    if left_n[k] > 0 && v > last[k] {
                        let node = &grown[frontier[k]];
                        let right_sum = node.sum - left_sum[k];
                        let right_n = node.count - left_n[k];
                        let gain = 0.5 * (score(left_sum[k], left_n[k]) + score(right_sum, right_n) - parent[k]);
                        let current = best[k].map_or(floor[k], |b| b.gain);
                        if gain > current {
                            best[k] = Some(Candidate { gain, feature: c, threshold: midpoint(last[k], v) });
                        }
                    }
                    left_sum[k] += g[r];
                    left_n[k] += 1;
                    last[k] = v;
                }
            }

            let mut next = Vec::new();
            let mut child_of = vec![(NO_NODE, NO_NODE); width];
            for (k, &id) in frontier.iter().enumerate() {
                if let Some(b) = best[k] {
                    let depth = grown[id].depth + 1;
                    let l = grown.len();
                    let empty = Growing { sum: 0.0, sum_sq: 0.0, count: 0, depth, split: None };
                    grown.push(empty);
                    grown.push(empty);
                    grown[id].split = Some((b.feature, b.threshold, l, l + 1));
                    child_of[k] = (l as u32, (l + 1) as u32);
                    next.push(l);
                    next.push(l + 1);
                }
            }
            if next.is_empty() {
                break;
            }
            for &r in row_subset {
                let id = node_of[r] as usize;
                let k = slot_of.get(id).copied().unwrap_or(NO_NODE);
                if k == NO_NODE {
                    node_of[r] = NO_NODE;
                    continue;
                }
                let (l, rt) = child_of[k as usize];
                if l == NO_NODE {
                    node_of[r] = NO_NODE;
                    continue;
                }
                let (feature, threshold, ..) = grown[id].split.expect("split recorded");
                let child = if self.columns[feature * self.rows + r] <= threshold { l } else { rt };
                node_of[r] = child;
                let n = &mut grown[child as usize];
                n.sum += g[r];
                n.sum_sq += g[r] * g[r];
                n.count += 1;
            }
            frontier = next;
        }

        let mut nodes = Vec::with_capacity(grown.len());
        emit_preorder(&grown, 0, lambda, alpha, &mut nodes);
        RegressionTree::from_nodes(nodes)
    }
}

fn emit_preorder(grown: &[Growing], id: usize, lambda: f64, alpha: f64, out: &mut Vec<Node>) {
    let n = &grown[id];
    match n.split {
        None => out.push(Node::Leaf { value: leaf_value_from_sums(n.sum, n.count, lambda, alpha) }),
        Some((feature, threshold, l, r)) => {
            let at = out.len();
            out.push(Node::Leaf { value: 0.0 });
            let left = out.len();
            emit_preorder(grown, l, lambda, alpha, out);
            let right = out.len();
            emit_preorder(grown, r, lambda, alpha, out);
            out[at] = Node::Split { feature, threshold, left, right };
        }
    }
}

/// Midpoint of two consecutive distinct values `a < b` that still sends `a`
/// left and `b` right.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m < b {
        m
    } else {
        a
    }
}

/// Fits a single tree; see [`TreeBuilder::fit`].
pub fn fit_tree(x: &FeatureMatrix, g: &[f64], row_subset: &[usize], params: &TreeParams) -> Result<RegressionTree> {
    TreeBuilder::new(x).fit(g, row_subset, params)
}
