use crate::error::{config_err, invalid, Result};

/// Minibatch SGD with classical (heavy-ball) momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdMomentumConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdMomentumConfig {
    fn default() -> Self {
        Self { learning_rate: 0.005, momentum: 0.9, batch_size: 4, epochs: 6, seed: 0 }
    }
}

impl SgdMomentumConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(config_err!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(config_err!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            return Err(config_err!("batch_size must be positive"));
        }
        Ok(())
    }
}

/// `v <- momentum * v + grad; w <- w - lr * v`, elementwise.
pub fn sgd_momentum_step(
    weights: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
) -> Result<()> {
    if weights.len() != grads.len() || weights.len() != velocity.len() {
        return Err(invalid!(
            "sgd step shape mismatch: {} weights, {} grads, {} velocities",
            weights.len(),
            grads.len(),
            velocity.len()
        ));
    }
    for ((w, g), v) in weights.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *w -= lr * *v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn plain_sgd_without_momentum() {
        let mut w = [1.0, -2.0];
        let mut v = [0.0, 0.0];
        sgd_momentum_step(&mut w, &[0.5, 1.0], &mut v, 0.1, 0.0).unwrap();
        assert_eq!(w, [0.95, -2.1]);
    }

    #[test]
    fn zero_grad_zero_velocity_is_noop() {
        let mut w = [3.0];
        let mut v = [0.0];
        sgd_momentum_step(&mut w, &[0.0], &mut v, 0.01, 0.9).unwrap();
        assert_eq!(w, [3.0]);
    }

    #[test]
    fn two_momentum_steps_unroll() {
        let g = 0.7;
        let mut w = [0.0];
        let mut v = [0.0];
        sgd_momentum_step(&mut w, &[g], &mut v, 0.01, 0.9).unwrap();
        sgd_momentum_step(&mut w, &[g], &mut v, 0.01, 0.9).unwrap();
        assert_abs_diff_eq!(w[0], -0.01 * (g + 1.9 * g), epsilon = 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        assert!(sgd_momentum_step(&mut [0.0], &[0.0, 1.0], &mut [0.0], 0.1, 0.9).is_err());
    }
}
