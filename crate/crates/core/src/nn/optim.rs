use alloc::vec;
use alloc::vec::Vec;

use super::{expect_len, DenseNet, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    /// Adam with bias correction.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub const ADAM: OptimizerKind = OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 };
}

/// First-order optimizer with per-parameter moment state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (vec![0.0; params], vec![0.0; params]),
        };
        Self { kind, learning_rate, m, v, steps: 0 }
    }

    pub fn sgd(learning_rate: f64, params: usize) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, params)
    }

    pub fn adam(learning_rate: f64, params: usize) -> Self {
        Self::new(OptimizerKind::ADAM, learning_rate, params)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Descends `params` along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        expect_len(params.len(), grads.len())?;
        self.steps += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                expect_len(self.m.len(), params.len())?;
                let t = self.steps as f64;
                let c1 = 1.0 - libm::pow(beta1, t);
                let c2 = 1.0 - libm::pow(beta2, t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
                }
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, net: &mut DenseNet, grads: &[f64]) -> Result<()> {
        self.step(net.params_mut(), grads)
    }
}
