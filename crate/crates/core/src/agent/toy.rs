//! Small tasks with known solutions for checking the learners.

use alloc::vec;
use alloc::vec::Vec;

use super::train::{Task, TaskStep};
use super::Result;

/// Deterministic chain `0 → 1 → … → n−1 → end` whose reward depends only on
/// the state, so every action has the same value.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    pub rewards: Vec<f64>,
    pub actions: usize,
    state: usize,
}

impl ChainMdp {
    pub fn new(rewards: Vec<f64>, actions: usize) -> Self {
        Self { rewards, actions, state: 0 }
    }

    pub fn features_of(&self, s: usize) -> Vec<f64> {
        let mut f = vec![0.0; self.rewards.len()];
        if s < f.len() {
            f[s] = 1.0;
        }
        f
    }

    /// `Q(s, a)` by value iteration until the largest change is below `tol`.
    pub fn value_iteration(&self, discount: f64, tol: f64) -> Vec<f64> {
        let n = self.rewards.len();
        let mut v = vec![0.0; n + 1];
        loop {
            let mut delta: f64 = 0.0;
            for s in 0..n {
                let backup = self.rewards[s] + discount * v[s + 1];
                delta = delta.max((backup - v[s]).abs());
                v[s] = backup;
            }
            if delta < tol {
                break;
            }
        }
        v.truncate(n);
        v
    }
}

impl Task for ChainMdp {
    type Info = usize;

    fn heads(&self) -> Vec<usize> {
        vec![self.actions]
    }

    fn feature_dim(&self) -> usize {
        self.rewards.len()
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = 0;
        self.features_of(0)
    }

    fn step(&mut self, _action: &[usize]) -> Result<TaskStep<usize>> {
        let s = self.state;
        self.state += 1;
        let done = self.state == self.rewards.len();
        Ok(TaskStep { features: self.features_of(self.state), reward: self.rewards[s], done, info: s })
    }
}

/// One-step bandit with deterministic arm payoffs.
#[derive(Debug, Clone)]
pub struct Bandit {
    pub means: Vec<f64>,
}

impl Bandit {
    pub fn new(means: Vec<f64>) -> Self {
        Self { means }
    }

    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (j, m) in self.means.iter().enumerate() {
            if *m > self.means[best] {
                best = j;
            }
        }
        best
    }
}

impl Task for Bandit {
    type Info = usize;

    fn heads(&self) -> Vec<usize> {
        vec![self.means.len()]
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn reset(&mut self) -> Vec<f64> {
        vec![1.0]
    }

    fn step(&mut self, action: &[usize]) -> Result<TaskStep<usize>> {
        Ok(TaskStep { features: vec![1.0], reward: self.means[action[0]], done: true, info: action[0] })
    }
}
