//! Adam with bias correction over a fixed list of flat parameter tensors.

use crate::error::{Error, Result};

/// Optimizer state: one first/second-moment accumulator per tensor, plus the
/// shared step counter and hyperparameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Completed steps; bias correction uses `t + 1` on the next call.
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Default hyperparameters: beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn new(lr: f64, tensor_sizes: &[usize]) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: tensor_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: tensor_sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    /// One update over all tensors. `params` and `grads` must match the
    /// sizes this state was built with, in the same order.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "{} params / {} grads for {} optimizer slots",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.len() != self.m[i].len() || params[i].len() != self.m[i].len() {
                return Err(Error::invalid(format!("tensor {i} size changed under the optimizer")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::TrainingDiverged(format!(
                    "non-finite gradient in tensor {i}"
                )));
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..g.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_in_the_gradient_sign() {
        let lr = 1e-3;
        let mut state = AdamState::new(lr, &[3]);
        let mut p = vec![0.2, -0.4, 1.0];
        let g = vec![0.05, -0.8, 2.0];
        let before = p.clone();
        state.step(&mut [&mut p], &[&g]).unwrap();
        for k in 0..3 {
            let update = p[k] - before[k];
            assert!(
                (update + lr * g[k].signum()).abs() <= lr * 1e-6,
                "entry {k}: {update}"
            );
        }
    }

    #[test]
    fn zero_gradients_leave_params_untouched() {
        let mut state = AdamState::new(1e-2, &[2]);
        let mut p = vec![1.5f64, -2.5];
        let g = vec![0.0, 0.0];
        let before = p.clone();
        for _ in 0..50 {
            state.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn three_steps_match_a_scalar_reference() {
        // Quadratic: grad = q .* (p - a).
        let q = [2.0f64, 0.5];
        let a = [1.0f64, -1.0];
        let (lr, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);

        let mut state = AdamState::new(lr, &[2]);
        let mut p = vec![0.0f64, 0.0];

        // Independent reference written with scalar arithmetic.
        let mut p_ref = [0.0f64, 0.0];
        let mut m = [0.0f64; 2];
        let mut v = [0.0f64; 2];
        for t in 1..=3 {
            let g: Vec<f64> = (0..2).map(|k| q[k] * (p[k] - a[k])).collect();
            state.step(&mut [&mut p], &[&g]).unwrap();

            for k in 0..2 {
                let gr = q[k] * (p_ref[k] - a[k]);
                m[k] = b1 * m[k] + (1.0 - b1) * gr;
                v[k] = b2 * v[k] + (1.0 - b2) * gr * gr;
                let m_hat = m[k] / (1.0 - b1f64_pow(b1, t));
                let v_hat = v[k] / (1.0 - b1f64_pow(b2, t));
                p_ref[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            for k in 0..2 {
                assert!((p[k] - p_ref[k]).abs() < 1e-12, "step {t} entry {k}");
            }
        }
    }

    fn b1f64_pow(b: f64, t: u32) -> f64 {
        let mut out = 1.0;
        for _ in 0..t {
            out *= b;
        }
        out
    }

    #[test]
    fn non_finite_gradients_are_a_divergence_error() {
        let mut state = AdamState::new(1e-3, &[2]);
        let mut p = vec![0.0f64, 0.0];
        let g = vec![1.0, f64::NAN];
        match state.step(&mut [&mut p], &[&g]) {
            Err(Error::TrainingDiverged(_)) => {}
            other => panic!("expected divergence error, got {other:?}"),
        }
    }
}
