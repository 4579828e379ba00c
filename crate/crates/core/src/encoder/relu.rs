use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Gradient of ReLU given the pre-activation `x`; the kink at 0 gets slope 0.
pub fn relu_backward(grad_out: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if grad_out.len() != x.len() {
        return Err(invalid!("relu_backward: {} grads for {} inputs", grad_out.len(), x.len()));
    }
    Ok(grad_out.iter().zip(x).map(|(&g, &v)| if v > 0.0 { g } else { 0.0 }).collect())
}
