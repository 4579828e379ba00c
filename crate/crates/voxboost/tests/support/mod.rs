//! Reference implementations the acceptance checks compare against. None of
//! them reuse the closed forms or sweeps from the library.

#![allow(dead_code)]

use voxboost_core::gbm::{FeatureMatrix, Node, RegressionTree};

/// Minimizer of a convex `h(w) = s(w) + alpha * |w|` given the derivative of
/// its smooth part, by bisection on the right derivative. `s'` must be
/// nondecreasing and the minimizer must lie in `[-bound, bound]`.
pub fn penalized_argmin(smooth_grad: impl Fn(f64) -> f64, alpha: f64, bound: f64) -> f64 {
    let right = |w: f64| smooth_grad(w) + if w >= 0.0 { alpha } else { -alpha };
    let left = |w: f64| smooth_grad(w) + if w > 0.0 { alpha } else { -alpha };
    if left(0.0) <= 0.0 && right(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if right(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Argmin of `0.5 * sum (g - w)^2 + 0.5 * lambda * w^2 + alpha * |w|`.
pub fn leaf_oracle(g: &[f64], lambda: f64, alpha: f64) -> f64 {
    let bound = 1.0 + g.iter().map(|v| v.abs()).sum::<f64>();
    penalized_argmin(|w| g.iter().map(|gi| w - gi).sum::<f64>() + lambda * w, alpha, bound)
}

/// Argmin of `0.5 * sum (r - rho f)^2 + 0.5 * lambda * rho^2 + alpha * |rho|`.
pub fn rho_oracle(r: &[f64], f: &[f64], lambda: f64, alpha: f64) -> f64 {
    let energy: f64 = f.iter().map(|v| v * v).sum();
    let cross: f64 = r.iter().zip(f).map(|(a, b)| (a * b).abs()).sum();
    let bound = 1.0 + cross / (energy + lambda).max(f64::MIN_POSITIVE);
    penalized_argmin(
        |rho| r.iter().zip(f).map(|(ri, fi)| -fi * (ri - rho * fi)).sum::<f64>() + lambda * rho,
        alpha,
        bound,
    )
}

/// Minimum of the penalized leaf objective over the rows in `g`.
pub fn node_objective(g: &[f64], lambda: f64, alpha: f64) -> f64 {
    let w = leaf_oracle(g, lambda, alpha);
    0.5 * g.iter().map(|v| (v - w) * (v - w)).sum::<f64>() + 0.5 * lambda * w * w + alpha * w.abs()
}

/// One candidate split found by enumeration.
#[derive(Debug, Clone)]
pub struct SplitCandidate {
    pub feature: usize,
    pub gain: f64,
    /// Sorted row ids that go left.
    pub left: Vec<usize>,
}

/// Every split of `rows` into two non-empty groups by a threshold on one
/// feature, with its objective reduction.
pub fn enumerate_splits(x: &FeatureMatrix, g: &[f64], rows: &[usize], lambda: f64, alpha: f64) -> Vec<SplitCandidate> {
    let parent_g: Vec<f64> = rows.iter().map(|&r| g[r]).collect();
    let parent = node_objective(&parent_g, lambda, alpha);
    let mut out = Vec::new();
    for feature in 0..x.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.get(r, feature)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for cut in &values[..values.len().saturating_sub(1)] {
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, feature) <= *cut).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, feature) > *cut).collect();
            let lg: Vec<f64> = left.iter().map(|&r| g[r]).collect();
            let rg: Vec<f64> = right.iter().map(|&r| g[r]).collect();
            let gain = parent - node_objective(&lg, lambda, alpha) - node_objective(&rg, lambda, alpha);
            let mut left = left;
            left.sort_unstable();
            out.push(SplitCandidate { feature, gain, left });
        }
    }
    out
}

/// Walks `tree` over `rows` and checks every node against enumeration:
/// internal nodes must realize a best split (up to `tie` in gain), leaves
/// must appear exactly where no split improves the objective by more than
/// `tie`, and leaf values must equal the leaf oracle within `leaf_tol`.
/// Returns the number of nodes checked.
#[allow(clippy::too_many_arguments)]
pub fn check_tree(
    tree: &RegressionTree,
    x: &FeatureMatrix,
    g: &[f64],
    rows: &[usize],
    max_depth: usize,
    lambda: f64,
    alpha: f64,
    tie: f64,
    leaf_tol: f64,
) -> Result<usize, String> {
    fn walk(
        nodes: &[Node],
        at: usize,
        depth: usize,
        rows: &[usize],
        ctx: (&FeatureMatrix, &[f64], usize, f64, f64, f64, f64),
    ) -> Result<usize, String> {
        let (x, g, max_depth, lambda, alpha, tie, leaf_tol) = ctx;
        let node_g: Vec<f64> = rows.iter().map(|&r| g[r]).collect();
        let scale = 1.0 + node_g.iter().map(|v| v * v).sum::<f64>();
        let candidates = if depth < max_depth { enumerate_splits(x, g, rows, lambda, alpha) } else { Vec::new() };
        let best = candidates.iter().map(|c| c.gain).fold(f64::NEG_INFINITY, f64::max);
        match nodes[at] {
            Node::Leaf { value } => {
                if best > tie * scale {
                    return Err(format!("leaf at depth {depth} over {} rows, but a split gains {best}", rows.len()));
                }
                let expect = leaf_oracle(&node_g, lambda, alpha);
                if (value - expect).abs() > leaf_tol {
                    return Err(format!("leaf value {value} vs oracle {expect}"));
                }
                Ok(1)
            }
            Node::Split { feature, threshold, left, right } => {
                if depth >= max_depth {
                    return Err(format!("split below the depth limit {max_depth}"));
                }
                let mut l: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, feature) <= threshold).collect();
                let r: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, feature) > threshold).collect();
                l.sort_unstable();
                let realized = candidates.iter().find(|c| c.feature == feature && c.left == l);
                let Some(realized) = realized else {
                    return Err(format!("split on feature {feature} at {threshold} is not a threshold partition"));
                };
                if realized.gain < best - tie * scale {
                    return Err(format!("split gains {} but the best gains {best}", realized.gain));
                }
                if realized.gain <= -tie * scale {
                    return Err(format!("split with negative gain {}", realized.gain));
                }
                let n = walk(nodes, left, depth + 1, &l, ctx)? + walk(nodes, right, depth + 1, &r, ctx)?;
                Ok(n + 1)
            }
        }
    }
    walk(tree.nodes(), 0, 0, rows, (x, g, max_depth, lambda, alpha, tie, leaf_tol))
}

/// `||a - b|| / max(||a||, ||b||, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / na.max(nb).max(floor)
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
