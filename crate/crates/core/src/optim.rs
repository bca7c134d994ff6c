//! Adam with per-tensor moment buffers.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moments for one parameter tensor.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// One update at step `t` (1-based). A zero gradient with zero moments
    /// leaves the parameters untouched.
    pub fn step(&mut self, cfg: &AdamConfig, t: u64, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        let b1t = 1.0 - cfg.beta1.powi(t as i32);
        let b2t = 1.0 - cfg.beta2.powi(t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut st = AdamState::new(1);
        let mut x = [3.0];
        for t in 1..=500 {
            let g = [2.0 * x[0]];
            st.step(&cfg, t, &mut x, &g);
        }
        assert!(x[0].abs() < 1e-2);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut st = AdamState::new(2);
        let mut x = [1.0, -2.0];
        st.step(&AdamConfig::with_lr(0.1), 1, &mut x, &[0.0, 0.0]);
        assert_eq!(x, [1.0, -2.0]);
    }
}
