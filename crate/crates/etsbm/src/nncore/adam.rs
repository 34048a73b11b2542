//! Bias-corrected Adam over a list of flat parameter blocks.

use super::NnError;

#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(block_sizes: &[usize], lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One descent step: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    /// Callers maximizing an objective pass the negated gradient.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch(format!(
                "adam has {} blocks, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(NnError::ShapeMismatch(format!(
                    "block {i}: state {} vs param {} / grad {}",
                    self.m[i].len(),
                    p.len(),
                    g.len()
                )));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..p.len() {
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
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut adam = AdamState::new(&[3], 0.1);
        let mut p = vec![1.0, -2.0, 0.5];
        let orig = p.clone();
        adam.step(&mut [&mut p], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p, orig);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        // closed form: alpha * g / (|g| + eps)
        let lr = 0.05;
        let g = 3.7;
        let mut adam = AdamState::new(&[1], lr);
        let mut p = vec![10.0];
        adam.step(&mut [&mut p], &[&[g]]).unwrap();
        let expected = 10.0 - lr * g / (g.abs() + 1e-8);
        assert_abs_diff_eq!(p[0], expected, epsilon = 1e-12);
        assert!(p[0] < 10.0);
    }

    #[test]
    fn deterministic_given_same_inputs() {
        let run = || {
            let mut adam = AdamState::new(&[2, 1], 0.01);
            let mut a = vec![0.3, -0.4];
            let mut b = vec![2.0];
            for i in 0..25 {
                let g0 = [0.1 * (i as f64 + 1.0), -0.2];
                let g1 = [0.05 * (i as f64)];
                adam.step(&mut [&mut a, &mut b], &[&g0, &g1]).unwrap();
            }
            (a, b)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut adam = AdamState::new(&[2], 0.01);
        let mut p = vec![0.0, 0.0];
        assert!(adam.step(&mut [&mut p], &[&[1.0]]).is_err());
    }
}
