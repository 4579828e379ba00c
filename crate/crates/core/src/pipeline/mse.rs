use crate::error::{invalid, Result};

/// `(1/N) * sum (y - y_hat)^2`, accumulated in input order.
pub fn evaluate_mse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != truth.len() {
        return Err(invalid!(
            "MSE needs equal non-empty inputs, got {} predictions and {} truths",
            predictions.len(),
            truth.len()
        ));
    }
    let mut sum = 0.0;
    for (p, t) in predictions.iter().zip(truth) {
        let d = t - p;
        sum += d * d;
    }
    Ok(sum / predictions.len() as f64)
}
