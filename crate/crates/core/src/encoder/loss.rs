use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Mean squared error over every (sample, output) pair, and its gradient
/// `2 * (pred - target) / count` with respect to `pred`.
pub fn mse_multi_loss(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(invalid!("loss needs equal non-empty batches, got {} and {}", pred.len(), target.len()));
    }
    let mut count = 0usize;
    for (i, (p, t)) in pred.iter().zip(target).enumerate() {
        if p.len() != t.len() {
            return Err(invalid!("sample {i}: {} predictions for {} targets", p.len(), t.len()));
        }
        count += p.len();
    }
    if count == 0 {
        return Err(invalid!("loss over zero outputs"));
    }
    let scale = 2.0 / count as f64;
    let mut total = 0.0;
    let grads = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            p.iter()
                .zip(t)
                .map(|(p, t)| {
                    let d = p - t;
                    total += d * d;
                    scale * d
                })
                .collect()
        })
        .collect();
    Ok((total / count as f64, grads))
}
