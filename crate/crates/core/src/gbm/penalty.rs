use crate::error::{invalid, Result};

/// `sign(s) * max(|s| - alpha, 0)`.
pub fn soft_threshold(s: f64, alpha: f64) -> f64 {
    if s > alpha {
        s - alpha
    } else if s < -alpha {
        s + alpha
    } else {
        0.0
    }
}

/// Minimizer of `0.5 * sum_i (g_i - w)^2 + 0.5 * lambda * w^2 + alpha * |w|`.
pub fn leaf_value(residuals: &[f64], lambda: f64, alpha: f64) -> Result<f64> {
    if residuals.is_empty() {
        return Err(invalid!("leaf_value on an empty leaf"));
    }
    check_penalties(lambda, alpha)?;
    let sum: f64 = residuals.iter().sum();
    Ok(leaf_value_from_sums(sum, residuals.len(), lambda, alpha))
}

pub(crate) fn leaf_value_from_sums(sum: f64, count: usize, lambda: f64, alpha: f64) -> f64 {
    soft_threshold(sum, alpha) / (count as f64 + lambda)
}

/// Minimizer of `0.5 * sum_i (r_i - rho * f_i)^2 + 0.5 * lambda * rho^2 + alpha * |rho|`.
///
/// Returns 0 when the predictor is identically zero.
pub fn line_search_rho(residual: &[f64], tree_pred: &[f64], lambda: f64, alpha: f64) -> Result<f64> {
    if residual.len() != tree_pred.len() {
        return Err(invalid!(
            "line search length mismatch: {} residuals, {} predictions",
            residual.len(),
            tree_pred.len()
        ));
    }
    check_penalties(lambda, alpha)?;
    let mut cross = 0.0;
    let mut energy = 0.0;
    for (r, f) in residual.iter().zip(tree_pred) {
        cross += r * f;
        energy += f * f;
    }
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(soft_threshold(cross, alpha) / (energy + lambda))
}

fn check_penalties(lambda: f64, alpha: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite() && alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid!("penalties must be finite and >= 0 (lambda={lambda}, alpha={alpha})"));
    }
    Ok(())
}
