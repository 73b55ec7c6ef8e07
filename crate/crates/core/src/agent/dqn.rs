//! DQN baseline: one Q-network per action head with ε-greedy exploration.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::replay::{Batch, Experience, ReplayBuffer};
use super::{AgentError, Result};
use crate::nn::{self, Activation, DenseNet, Optimizer};
use crate::rng::{self, streams, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct DqnHyper {
    pub discount: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub replay_capacity: usize,
    pub warmup: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Steps over which ε decays linearly.
    pub eps_decay_steps: usize,
    /// Soft target update rate.
    pub tau: f64,
    pub episodes: usize,
    pub steps_per_episode: Option<usize>,
}

impl Default for DqnHyper {
    fn default() -> Self {
        Self {
            discount: 0.95,
            lr: 5e-4,
            batch_size: 64,
            hidden: vec![128, 128],
            activation: Activation::Relu,
            replay_capacity: 100_000,
            warmup: 500,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 20_000,
            tau: 0.005,
            episodes: 500,
            steps_per_episode: None,
        }
    }
}

impl DqnHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(AgentError::BadConfig("discount must lie in [0, 1)"));
        }
        if !(self.lr > 0.0) {
            return Err(AgentError::BadConfig("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(AgentError::BadConfig("batch size must be positive and fit in the replay buffer"));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.eps_start) || !unit.contains(&self.eps_end) {
            return Err(AgentError::BadConfig("exploration rates must lie in [0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(AgentError::BadConfig("soft-update rate must lie in (0, 1]"));
        }
        if self.hidden.contains(&0) || self.steps_per_episode == Some(0) {
            return Err(AgentError::BadConfig("widths and step caps must be positive"));
        }
        Ok(())
    }
}

fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..q.len() {
        if q[j] > q[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub nets: Vec<DenseNet>,
    pub targets: Vec<DenseNet>,
    pub hyper: DqnHyper,
    opts: Vec<Optimizer>,
    heads: Vec<usize>,
    feature_dim: usize,
    replay: ReplayBuffer,
    explore_rng: SimRng,
    replay_rng: SimRng,
    steps: usize,
}

impl DqnAgent {
    pub fn new(feature_dim: usize, heads: &[usize], hyper: DqnHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        if heads.is_empty() || heads.contains(&0) {
            return Err(AgentError::BadConfig("action heads must be non-empty"));
        }
        let mut init = rng::stream(seed, streams::CRITIC_INIT);
        let nets = heads
            .iter()
            .map(|&n| {
                let mut dims = vec![feature_dim];
                dims.extend_from_slice(&hyper.hidden);
                dims.push(n);
                DenseNet::random(&dims, hyper.activation, Activation::Linear, &mut init)
            })
            .collect::<core::result::Result<Vec<_>, _>>()?;
        Self::from_nets(nets.clone(), nets, feature_dim, heads, hyper, seed)
    }

    fn from_nets(
        nets: Vec<DenseNet>,
        targets: Vec<DenseNet>,
        feature_dim: usize,
        heads: &[usize],
        hyper: DqnHyper,
        seed: u64,
    ) -> Result<Self> {
        let ok = nets.len() == heads.len()
            && targets.len() == heads.len()
            && nets.iter().chain(&targets).zip(heads.iter().chain(heads)).all(|(n, &h)| n.input_dim() == feature_dim && n.output_dim() == h);
        if !ok {
            return Err(AgentError::BadConfig("Q-network shapes do not match the action layout"));
        }
        Ok(Self {
            opts: nets.iter().map(|n| Optimizer::adam(hyper.lr, n.param_count())).collect(),
            replay: ReplayBuffer::new(hyper.replay_capacity),
            explore_rng: rng::stream(seed, streams::EXPLORATION),
            replay_rng: rng::stream(seed, streams::REPLAY),
            nets,
            targets,
            heads: heads.to_vec(),
            feature_dim,
            hyper,
            steps: 0,
        })
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Current exploration rate.
    pub fn epsilon(&self) -> f64 {
        let h = &self.hyper;
        if h.eps_decay_steps == 0 {
            return h.eps_end;
        }
        let frac = (self.steps as f64 / h.eps_decay_steps as f64).min(1.0);
        h.eps_start + frac * (h.eps_end - h.eps_start)
    }

    /// Q-values of every head for one state.
    pub fn q_values(&self, feats: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.nets.iter().map(|n| n.forward(feats).map_err(AgentError::from)).collect()
    }

    /// Greedy per head, lowest index on ties.
    pub fn act_greedy(&self, feats: &[f64]) -> Result<Vec<usize>> {
        Ok(self.q_values(feats)?.iter().map(|q| argmax(q)).collect())
    }

    /// ε-greedy per head; advances the exploration schedule.
    pub fn act(&mut self, feats: &[f64]) -> Result<Vec<usize>> {
        let eps = self.epsilon();
        let greedy = self.act_greedy(feats)?;
        let out = greedy
            .into_iter()
            .zip(&self.heads)
            .map(|(g, &n)| if self.explore_rng.random::<f64>() < eps { self.explore_rng.random_range(0..n) } else { g })
            .collect();
        self.steps += 1;
        Ok(out)
    }

    /// Squared TD step on every head: `Q_h(s,a_h) → r + ω·max Q̂_h(s',·)`.
    pub fn update(&mut self, batch: &Batch) -> Result<f64> {
        let n = batch.size;
        if n == 0 {
            return Err(AgentError::EmptyBatch);
        }
        let mut total = 0.0;
        for h in 0..self.heads.len() {
            let width = self.heads[h];
            let next = self.targets[h].forward_batch(&batch.next_states, n)?;
            let cache = self.nets[h].forward_batch(&batch.states, n)?;
            let mut upstream = vec![0.0; n * width];
            let mut loss = 0.0;
            for r in 0..n {
                let bootstrap = if batch.dones[r] {
                    0.0
                } else {
                    next.output()[r * width..(r + 1) * width].iter().copied().fold(f64::NEG_INFINITY, f64::max)
                };
                let target = batch.rewards[r] + self.hyper.discount * bootstrap;
                let a = batch.action(r)[h];
                let e = cache.output()[r * width + a] - target;
                loss += 0.5 * e * e / n as f64;
                upstream[r * width + a] = e / n as f64;
            }
            let mut grads = vec![0.0; self.nets[h].param_count()];
            self.nets[h].backward(&cache, &upstream, &mut grads)?;
            self.opts[h].apply(&mut self.nets[h], &grads)?;
            self.targets[h].soft_update_from(&self.nets[h], self.hyper.tau)?;
            total += loss;
        }
        Ok(total)
    }

    pub fn observe(&mut self, e: Experience) -> Result<Option<f64>> {
        self.replay.push(e);
        if self.replay.len() < self.hyper.warmup.max(self.hyper.batch_size) {
            return Ok(None);
        }
        let batch = self.replay.sample(self.hyper.batch_size, &mut self.replay_rng).expect("replay holds a full batch");
        self.update(&batch).map(Some)
    }

    /// Online networks followed by targets.
    pub fn checkpoint(&self) -> Vec<u8> {
        nn::encode_many(self.nets.iter().chain(&self.targets))
    }

    pub fn from_checkpoint(bytes: &[u8], feature_dim: usize, heads: &[usize], hyper: DqnHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut nets = nn::decode_many(bytes)?;
        if nets.len() != 2 * heads.len() {
            return Err(AgentError::BadConfig("checkpoint holds the wrong number of networks"));
        }
        let targets = nets.split_off(heads.len());
        Self::from_nets(nets, targets, feature_dim, heads, hyper, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper() -> DqnHyper {
        DqnHyper { hidden: vec![8], batch_size: 4, warmup: 4, replay_capacity: 64, ..DqnHyper::default() }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut a = DqnAgent::new(2, &[5, 2], DqnHyper { eps_start: 1.0, eps_end: 1.0, ..hyper() }, 1).unwrap();
        let mut counts = [0usize; 5];
        let n = 10_000;
        for _ in 0..n {
            counts[a.act(&[0.3, 0.7]).unwrap()[0]] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.2).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn greedy_zero_q_breaks_ties_low() {
        let mut a = DqnAgent::new(2, &[5, 3], DqnHyper { eps_start: 0.0, eps_end: 0.0, ..hyper() }, 2).unwrap();
        for n in &mut a.nets {
            n.params_mut().iter_mut().for_each(|p| *p = 0.0);
        }
        assert_eq!(a.act(&[1.0, 2.0]).unwrap(), vec![0, 0]);
    }

    #[test]
    fn epsilon_decays_linearly() {
        let mut a = DqnAgent::new(1, &[2], DqnHyper { eps_decay_steps: 10, eps_start: 1.0, eps_end: 0.0, ..hyper() }, 3).unwrap();
        for _ in 0..5 {
            a.act(&[0.0]).unwrap();
        }
        assert!((a.epsilon() - 0.5).abs() < 1e-12);
        for _ in 0..10 {
            a.act(&[0.0]).unwrap();
        }
        assert_eq!(a.epsilon(), 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let a = DqnAgent::new(3, &[2, 4], hyper(), 4).unwrap();
        let b = DqnAgent::from_checkpoint(&a.checkpoint(), 3, &[2, 4], hyper(), 4).unwrap();
        assert_eq!(a.nets, b.nets);
        assert!(DqnAgent::from_checkpoint(&a.checkpoint(), 3, &[2], hyper(), 4).is_err());
    }
}
