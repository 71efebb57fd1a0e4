//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::nn::network::{NetGrads, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state for one network: first/second moments per parameter plus
/// the step counter, laid out exactly like [`Network::flat_params`].
#[derive(Debug, Clone)]
pub struct AdamState {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &Network, params: AdamParams) -> Self {
        let n = net.param_count();
        Self {
            params,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update over all network parameters.
    pub fn step(&mut self, net: &mut Network, grads: &NetGrads) {
        self.step += 1;
        let t = self.step as i32;
        let b1 = self.params.beta1;
        let b2 = self.params.beta2;
        let bias1 = 1.0 - b1.powi(t);
        let bias2 = 1.0 - b2.powi(t);
        let lr = self.params.learning_rate;
        let eps = self.params.epsilon;

        let mut idx = 0;
        for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
            for (w, dw) in layer.weights.iter_mut().zip(&g.d_weights) {
                idx = Self::update(&mut self.m, &mut self.v, idx, w, *dw, b1, b2, bias1, bias2, lr, eps);
            }
            for (b, db) in layer.biases.iter_mut().zip(&g.d_biases) {
                idx = Self::update(&mut self.m, &mut self.v, idx, b, *db, b1, b2, bias1, bias2, lr, eps);
            }
        }
        debug_assert_eq!(idx, self.m.len());
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn update(
        m: &mut [f64],
        v: &mut [f64],
        idx: usize,
        param: &mut f64,
        grad: f64,
        b1: f64,
        b2: f64,
        bias1: f64,
        bias2: f64,
        lr: f64,
        eps: f64,
    ) -> usize {
        m[idx] = b1 * m[idx] + (1.0 - b1) * grad;
        v[idx] = b2 * v[idx] + (1.0 - b2) * grad * grad;
        let m_hat = m[idx] / bias1;
        let v_hat = v[idx] / bias2;
        *param -= lr * m_hat / (v_hat.sqrt() + eps);
        idx + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::Activation;
    use crate::nn::network::LayerSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_net() -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        Network::init(
            &[LayerSpec {
                input_dim: 2,
                output_dim: 2,
                activation: Activation::Identity,
            }],
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_fresh_params_unchanged() {
        let mut net = tiny_net();
        let before = net.flat_params();
        let grads = NetGrads::zeros_like(&net);
        let mut state = AdamState::new(&net, AdamParams::default());
        state.step(&mut net, &grads);
        assert_eq!(net.flat_params(), before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut net = tiny_net();
        let before = net.flat_params();
        let mut grads = NetGrads::zeros_like(&net);
        grads.layers[0].d_weights = vec![0.3, -0.7, 1.5, -0.001];
        grads.layers[0].d_biases = vec![2.0, -4.0];
        let params = AdamParams::default();
        let mut state = AdamState::new(&net, params);
        state.step(&mut net, &grads);
        let after = net.flat_params();
        let flat_grads = grads.flat();
        for i in 0..after.len() {
            let delta = after[i] - before[i];
            let expected = -params.learning_rate * flat_grads[i].signum();
            // bias-corrected m_hat / sqrt(v_hat) == sign(g) up to epsilon
            assert!(
                (delta - expected).abs() < params.learning_rate * 1e-3,
                "param {i}: delta {delta} expected {expected}"
            );
        }
    }

    #[test]
    fn three_steps_on_scalar_quadratic_match_reference_iteration() {
        // Scalar problem: f(w) = w^2 / 2, grad = w. Hand-rolled reference.
        let mut net = tiny_net();
        net.layers_mut()[0].weights = vec![1.0, 0.0, 0.0, 0.0];
        net.layers_mut()[0].biases = vec![0.0, 0.0];
        let params = AdamParams {
            learning_rate: 0.1,
            ..AdamParams::default()
        };
        let mut state = AdamState::new(&net, params);

        let mut w_ref = 1.0_f64;
        let (mut m, mut v) = (0.0_f64, 0.0_f64);
        for t in 1..=3 {
            // drive the full net with a gradient only on the first weight
            let mut grads = NetGrads::zeros_like(&net);
            let w_now = net.layers()[0].weights[0];
            grads.layers[0].d_weights[0] = w_now;
            state.step(&mut net, &grads);

            let g = w_ref;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let m_hat = m / (1.0 - 0.9_f64.powi(t));
            let v_hat = v / (1.0 - 0.999_f64.powi(t));
            w_ref -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
            assert!(
                (net.layers()[0].weights[0] - w_ref).abs() < 1e-15,
                "step {t} diverged from reference"
            );
        }
    }
}
