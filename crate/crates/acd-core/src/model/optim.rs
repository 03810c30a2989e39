//! AdamW: Adam with decoupled weight decay.

use serde::{Deserialize, Serialize};

use super::Network;
use crate::scalar::{real, Scalar};

/// Optimizer hyperparameters. The learning rate is passed per step because
/// the plateau scheduler changes it during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Optimizer state: first/second moments and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState<T> {
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

/// AdamW optimizer over a flat view of the network parameters.
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    cfg: OptimizerConfig,
    state: AdamWState<T>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(cfg: OptimizerConfig, num_params: usize) -> Self {
        Self {
            cfg,
            state: AdamWState {
                step: 0,
                m: vec![T::zero(); num_params],
                v: vec![T::zero(); num_params],
            },
        }
    }

    pub fn from_state(cfg: OptimizerConfig, state: AdamWState<T>) -> Self {
        Self { cfg, state }
    }

    pub fn state(&self) -> &AdamWState<T> {
        &self.state
    }

    /// One update: decoupled weight decay on the parameters plus the
    /// bias-corrected Adam step.
    pub fn step(&mut self, params: &mut Network<T>, grads: &Network<T>, lr: f64) {
        let grad_flat = grads.flatten();
        assert_eq!(grad_flat.len(), self.state.m.len(), "gradient size");
        self.state.step += 1;
        let t = self.state.step as i32;
        let lr = real::<T>(lr);
        let beta1 = real::<T>(self.cfg.beta1);
        let beta2 = real::<T>(self.cfg.beta2);
        let eps = real::<T>(self.cfg.epsilon);
        let decay = real::<T>(self.cfg.weight_decay);
        let bias1 = T::one() - beta1.powi(t);
        let bias2 = T::one() - beta2.powi(t);

        let m = &mut self.state.m;
        let v = &mut self.state.v;
        params.for_each_param_mut(|i, p| {
            let g = grad_flat[i];
            m[i] = beta1 * m[i] + (T::one() - beta1) * g;
            v[i] = beta2 * v[i] + (T::one() - beta2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            *p = *p - lr * (m_hat / (v_hat.sqrt() + eps) + decay * *p);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, Network};

    fn scalar_net(value: f64) -> Network<f64> {
        // One 1x1 layer without bias usage: weight = value, bias = 0.
        let mut net = Network::init(&ModelConfig::new(1, &[], 1), 0).zeros_like();
        net.layers[0].weights[0] = value;
        net
    }

    #[test]
    fn zero_gradient_zero_decay_is_a_fixed_point() {
        let mut net = scalar_net(1.5);
        let grads = net.zeros_like();
        let mut opt = AdamW::new(OptimizerConfig::default(), net.num_params());
        let before = net.clone();
        opt.step(&mut net, &grads, 0.1);
        assert_eq!(net, before);
    }

    #[test]
    fn zero_gradient_with_decay_scales_parameters() {
        let mut net = scalar_net(2.0);
        let grads = net.zeros_like();
        let cfg = OptimizerConfig {
            weight_decay: 0.04,
            ..OptimizerConfig::default()
        };
        let mut opt = AdamW::new(cfg, net.num_params());
        opt.step(&mut net, &grads, 0.5);
        // Decoupled decay: theta * (1 - lr * lambda) = 2 * (1 - 0.02).
        assert!((net.layers[0].weights[0] - 2.0 * 0.98).abs() < 1e-15);
    }

    #[test]
    fn two_steps_match_hand_computed_trace() {
        // Scalar parameter 1.0, constant gradient 0.5, lr 0.1, defaults.
        let mut net = scalar_net(1.0);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = 0.5;
        let mut opt = AdamW::new(OptimizerConfig::default(), net.num_params());

        // Hand trace of the update equations.
        let (beta1, beta2, eps, lr) = (0.9f64, 0.999f64, 1e-8f64, 0.1f64);
        let g = 0.5;
        let mut theta = 1.0;
        let mut m = 0.0;
        let mut v = 0.0;
        for t in 1..=2 {
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            let m_hat = m / (1.0 - beta1.powi(t));
            let v_hat = v / (1.0 - beta2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }

        opt.step(&mut net, &grads, lr);
        opt.step(&mut net, &grads, lr);
        assert!(
            (net.layers[0].weights[0] - theta).abs() < 1e-12,
            "got {}, hand trace {}",
            net.layers[0].weights[0],
            theta
        );
        // Both bias-corrected moments cancel to m_hat = 0.5, v_hat = 0.25,
        // so each step moves by lr * 0.5/(0.5 + eps):
        // theta_2 = 1 - 2 * 0.1 * 0.5/(0.5 + 1e-8) = 0.800000004.
        assert!((theta - 0.800_000_004).abs() < 1e-9);
    }

    #[test]
    fn bias_correction_makes_first_step_close_to_lr() {
        // With a unit gradient the bias-corrected first step is lr * g/|g|.
        let mut net = scalar_net(0.0);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = 1.0;
        let mut opt = AdamW::new(OptimizerConfig::default(), net.num_params());
        opt.step(&mut net, &grads, 0.01);
        assert!((net.layers[0].weights[0] + 0.01).abs() < 1e-6);
    }
}
