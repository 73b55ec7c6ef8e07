//! Soft actor-critic with a diffusion actor and twin critics.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::actor::{logits_gradient, sample_action, ChainNoise, DiffusionActor, HeadDistributions, SampledAction};
use super::replay::{Batch, Experience, ReplayBuffer};
use super::schedule::{DiffusionSchedule, NoiseScale};
use super::{AgentError, Result};
use crate::nn::{self, Activation, DenseNet, Optimizer};
use crate::rng::{self, streams, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SacHyper {
    /// Discount `ω`.
    pub discount: f64,
    /// Entropy temperature `γ`.
    pub temperature: f64,
    /// Soft-update rate `ς`.
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_activation: Activation,
    pub critic_activation: Activation,
    pub diffusion_steps: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub noise_scale: NoiseScale,
    pub embed_dim: usize,
    pub replay_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub episodes: usize,
    /// Step cap per episode; `None` runs until the task reports done.
    pub steps_per_episode: Option<usize>,
}

impl Default for SacHyper {
    fn default() -> Self {
        Self {
            discount: 0.95,
            temperature: 0.05,
            tau: 0.005,
            batch_size: 64,
            actor_lr: 5e-4,
            critic_lr: 5e-4,
            actor_hidden: vec![128, 128],
            critic_hidden: vec![128, 128],
            actor_activation: Activation::Tanh,
            critic_activation: Activation::Relu,
            diffusion_steps: 20,
            phi_min: 0.1,
            phi_max: 20.0,
            noise_scale: NoiseScale::QuarterSquared,
            embed_dim: 16,
            replay_capacity: 100_000,
            warmup: 500,
            episodes: 500,
            steps_per_episode: None,
        }
    }
}

impl SacHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(AgentError::BadConfig("discount must lie in [0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(AgentError::BadConfig("soft-update rate must lie in (0, 1]"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(AgentError::BadConfig("entropy temperature must be non-negative"));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(AgentError::BadConfig("batch size must be positive and fit in the replay buffer"));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(AgentError::BadConfig("learning rates must be positive"));
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return Err(AgentError::BadConfig("hidden widths must be positive"));
        }
        if self.embed_dim % 2 != 0 {
            return Err(AgentError::BadConfig("time embedding width must be even"));
        }
        if self.steps_per_episode == Some(0) {
            return Err(AgentError::BadConfig("steps per episode must be positive"));
        }
        DiffusionSchedule::new(self.diffusion_steps, self.phi_min, self.phi_max)?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<DiffusionSchedule> {
        DiffusionSchedule::new(self.diffusion_steps, self.phi_min, self.phi_max)
    }
}

/// Which critic(s) form the bootstrap value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticChoice {
    Min,
    First,
    Second,
}

/// Losses of one gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic_loss: [f64; 2],
    pub actor_loss: f64,
    /// Mean total head entropy over the actor batch.
    pub entropy: f64,
}

/// One-hot encoding of per-head indices.
pub fn one_hot(heads: &[usize], idx: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; heads.iter().sum()];
    let mut off = 0;
    for (&n, &i) in heads.iter().zip(idx) {
        v[off + i] = 1.0;
        off += n;
    }
    v
}

/// Rows `[features, action vector]` for a critic.
pub fn critic_input(feats: &[f64], actions: &[f64], batch: usize) -> Vec<f64> {
    let f = feats.len() / batch;
    let a = actions.len() / batch;
    let mut x = Vec::with_capacity(batch * (f + a));
    for r in 0..batch {
        x.extend_from_slice(&feats[r * f..(r + 1) * f]);
        x.extend_from_slice(&actions[r * a..(r + 1) * a]);
    }
    x
}

/// `½·mean (Q(s,a) − q̂)²` and its parameter gradient.
pub fn critic_loss_grad(critic: &DenseNet, batch: &Batch, heads: &[usize], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = batch.size;
    if n == 0 {
        return Err(AgentError::EmptyBatch);
    }
    let actions: Vec<f64> = (0..n).flat_map(|r| one_hot(heads, batch.action(r))).collect();
    let cache = critic.forward_batch(&critic_input(&batch.states, &actions, n), n)?;
    let resid: Vec<f64> = cache.output().iter().zip(targets).map(|(q, t)| q - t).collect();
    let loss = 0.5 * resid.iter().map(|e| e * e).sum::<f64>() / n as f64;
    let upstream: Vec<f64> = resid.iter().map(|e| e / n as f64).collect();
    let mut grads = vec![0.0; critic.param_count()];
    critic.backward(&cache, &upstream, &mut grads)?;
    Ok((loss, grads))
}

/// Actor loss `mean[−γ·ΣH(π) − min_i Q_i(s, π)]` for fixed chain noise, with
/// its gradient through the unrolled reverse chain.
pub fn actor_loss_grad(
    actor: &DiffusionActor,
    critics: &[DenseNet; 2],
    temperature: f64,
    states: &[f64],
    batch: usize,
    noise: &ChainNoise,
) -> Result<(f64, Vec<f64>, f64)> {
    if batch == 0 {
        return Err(AgentError::EmptyBatch);
    }
    let trace = actor.run_chain(states, batch, noise)?;
    let dists = actor.distributions(&trace);
    let a_dim = actor.action_dim();
    let probs: Vec<f64> = dists.iter().flat_map(|d| d.probs().iter().copied()).collect();
    let x = critic_input(states, &probs, batch);
    let c0 = critics[0].forward_batch(&x, batch)?;
    let c1 = critics[1].forward_batch(&x, batch)?;
    let bn = batch as f64;
    let mut loss = 0.0;
    let mut entropy = 0.0;
    let mut up = [vec![0.0; batch], vec![0.0; batch]];
    for r in 0..batch {
        let (q0, q1) = (c0.output()[r], c1.output()[r]);
        let h = dists[r].total_entropy();
        entropy += h;
        let pick = if q1 < q0 { 1 } else { 0 };
        loss += -temperature * h - q0.min(q1);
        up[pick][r] = -1.0 / bn;
    }
    let mut scratch0 = vec![0.0; critics[0].param_count()];
    let mut scratch1 = vec![0.0; critics[1].param_count()];
    let dx0 = critics[0].backward(&c0, &up[0], &mut scratch0)?;
    let dx1 = critics[1].backward(&c1, &up[1], &mut scratch1)?;
    let width = x.len() / batch;
    let f = width - a_dim;
    let mut dz0 = Vec::with_capacity(batch * a_dim);
    for (r, d) in dists.iter().enumerate() {
        let dprobs: Vec<f64> = (0..a_dim).map(|j| dx0[r * width + f + j] + dx1[r * width + f + j]).collect();
        dz0.extend(logits_gradient(d, &dprobs, -temperature / bn));
    }
    let mut grads = vec![0.0; actor.denoiser.param_count()];
    actor.backward_chain(&trace, &dz0, &mut grads)?;
    Ok((loss / bn, grads, entropy / bn))
}

/// `target ← ς·online + (1−ς)·target`.
pub fn soft_update(online: &DenseNet, target: &mut DenseNet, tau: f64) -> Result<()> {
    Ok(target.soft_update_from(online, tau)?)
}

/// Diffusion-policy SAC learner.
#[derive(Debug, Clone)]
pub struct GdrsAgent {
    pub actor: DiffusionActor,
    pub critics: [DenseNet; 2],
    pub targets: [DenseNet; 2],
    pub hyper: SacHyper,
    actor_opt: Optimizer,
    critic_opts: [Optimizer; 2],
    heads: Vec<usize>,
    feature_dim: usize,
    replay: ReplayBuffer,
    policy_rng: SimRng,
    replay_rng: SimRng,
    updates: usize,
}

impl GdrsAgent {
    pub fn new(feature_dim: usize, heads: &[usize], hyper: SacHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let actor = DiffusionActor::new(
            feature_dim,
            heads,
            &hyper.actor_hidden,
            hyper.actor_activation,
            hyper.schedule()?,
            hyper.embed_dim,
            hyper.noise_scale,
            &mut rng::stream(seed, streams::ACTOR_INIT),
        )?;
        let a_dim: usize = heads.iter().sum();
        let mut dims = vec![feature_dim + a_dim];
        dims.extend_from_slice(&hyper.critic_hidden);
        dims.push(1);
        let mut crng = rng::stream(seed, streams::CRITIC_INIT);
        let c0 = DenseNet::random(&dims, hyper.critic_activation, Activation::Linear, &mut crng)?;
        let c1 = DenseNet::random(&dims, hyper.critic_activation, Activation::Linear, &mut crng)?;
        Self::from_parts(actor, [c0.clone(), c1.clone()], [c0, c1], hyper, seed)
    }

    fn from_parts(
        actor: DiffusionActor,
        critics: [DenseNet; 2],
        targets: [DenseNet; 2],
        hyper: SacHyper,
        seed: u64,
    ) -> Result<Self> {
        let heads = actor.heads().to_vec();
        let feature_dim = actor.feature_dim();
        let want = feature_dim + actor.action_dim();
        if critics.iter().chain(&targets).any(|c| c.input_dim() != want || c.output_dim() != 1) {
            return Err(AgentError::BadConfig("critic shape does not match the action layout"));
        }
        Ok(Self {
            actor_opt: Optimizer::adam(hyper.actor_lr, actor.denoiser.param_count()),
            critic_opts: [
                Optimizer::adam(hyper.critic_lr, critics[0].param_count()),
                Optimizer::adam(hyper.critic_lr, critics[1].param_count()),
            ],
            replay: ReplayBuffer::new(hyper.replay_capacity),
            policy_rng: rng::stream(seed, streams::POLICY),
            replay_rng: rng::stream(seed, streams::REPLAY),
            actor,
            critics,
            targets,
            hyper,
            heads,
            feature_dim,
            updates: 0,
        })
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    /// Head distributions for one state, drawing fresh chain noise.
    pub fn distribution(&mut self, feats: &[f64]) -> Result<HeadDistributions> {
        self.actor.generate_action_distribution(feats, &mut self.policy_rng)
    }

    /// Samples an action from the current policy.
    pub fn act(&mut self, feats: &[f64]) -> Result<SampledAction> {
        let d = self.distribution(feats)?;
        Ok(sample_action(&d, &mut self.policy_rng))
    }

    /// Most probable action under one chain draw.
    pub fn act_greedy(&mut self, feats: &[f64]) -> Result<Vec<usize>> {
        Ok(self.distribution(feats)?.argmax())
    }

    /// `q̂ = r + ω·(1−done)·(Q̂(s', a') + γ·ΣH(π(s')))` with `a'` freshly sampled.
    pub fn critic_target<R: Rng + ?Sized>(&self, batch: &Batch, choice: CriticChoice, rng: &mut R) -> Result<Vec<f64>> {
        let n = batch.size;
        if n == 0 {
            return Err(AgentError::EmptyBatch);
        }
        let h = &self.hyper;
        if h.discount == 0.0 || batch.dones.iter().all(|d| *d) {
            return Ok(batch.rewards.clone());
        }
        let trace = self.actor.sample_chain(&batch.next_states, n, rng)?;
        let dists = self.actor.distributions(&trace);
        let mut actions = Vec::with_capacity(n * self.actor.action_dim());
        let mut entropy = Vec::with_capacity(n);
        for d in &dists {
            let s = sample_action(d, rng);
            actions.extend(one_hot(&self.heads, &s.indices));
            entropy.push(d.total_entropy());
        }
        let x = critic_input(&batch.next_states, &actions, n);
        let q0 = self.targets[0].forward_batch(&x, n)?;
        let q1 = self.targets[1].forward_batch(&x, n)?;
        Ok((0..n)
            .map(|r| {
                if batch.dones[r] {
                    return batch.rewards[r];
                }
                let q = match choice {
                    CriticChoice::Min => q0.output()[r].min(q1.output()[r]),
                    CriticChoice::First => q0.output()[r],
                    CriticChoice::Second => q1.output()[r],
                };
                batch.rewards[r] + h.discount * (q + h.temperature * entropy[r])
            })
            .collect())
    }

    /// One Adam step on each critic toward `targets`.
    pub fn critic_update(&mut self, batch: &Batch, targets: &[f64]) -> Result<[f64; 2]> {
        let mut losses = [0.0; 2];
        for i in 0..2 {
            let (loss, grads) = critic_loss_grad(&self.critics[i], batch, &self.heads, targets)?;
            self.critic_opts[i].apply(&mut self.critics[i], &grads)?;
            losses[i] = loss;
        }
        Ok(losses)
    }

    /// One Adam step on the denoiser with fresh chain noise.
    pub fn actor_update(&mut self, states: &[f64], batch: usize) -> Result<(f64, f64)> {
        let noise = ChainNoise::draw(self.actor.schedule.steps(), batch * self.actor.action_dim(), &mut self.policy_rng);
        let (loss, grads, entropy) =
            actor_loss_grad(&self.actor, &self.critics, self.hyper.temperature, states, batch, &noise)?;
        self.actor_opt.apply(&mut self.actor.denoiser, &grads)?;
        Ok((loss, entropy))
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        for i in 0..2 {
            soft_update(&self.critics[i], &mut self.targets[i], self.hyper.tau)?;
        }
        Ok(())
    }

    /// Critic step, actor step and target blend on one minibatch.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let mut rng = self.policy_rng.clone();
        let targets = self.critic_target(batch, CriticChoice::Min, &mut rng)?;
        self.policy_rng = rng;
        let critic_loss = self.critic_update(batch, &targets)?;
        let (actor_loss, entropy) = self.actor_update(&batch.states, batch.size)?;
        self.soft_update_targets()?;
        self.updates += 1;
        Ok(UpdateStats { critic_loss, actor_loss, entropy })
    }

    /// Stores a transition and updates once the warm-up is over.
    pub fn observe(&mut self, e: Experience) -> Result<Option<UpdateStats>> {
        self.replay.push(e);
        let need = self.hyper.warmup.max(self.hyper.batch_size);
        if self.replay.len() < need {
            return Ok(None);
        }
        let batch = self.replay.sample(self.hyper.batch_size, &mut self.replay_rng).expect("replay holds a full batch");
        self.update(&batch).map(Some)
    }

    /// Actor denoiser, both critics and both targets in the flat network layout.
    pub fn checkpoint(&self) -> Vec<u8> {
        nn::encode_many([&self.actor.denoiser, &self.critics[0], &self.critics[1], &self.targets[0], &self.targets[1]])
    }

    pub fn from_checkpoint(bytes: &[u8], feature_dim: usize, heads: &[usize], hyper: SacHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut nets = nn::decode_many(bytes)?;
        if nets.len() != 5 {
            return Err(AgentError::BadConfig("checkpoint must hold five networks"));
        }
        let t1 = nets.pop().expect("five nets");
        let t0 = nets.pop().expect("five nets");
        let c1 = nets.pop().expect("five nets");
        let c0 = nets.pop().expect("five nets");
        let den = nets.pop().expect("five nets");
        let actor =
            DiffusionActor::from_parts(den, hyper.schedule()?, heads, feature_dim, hyper.embed_dim, hyper.noise_scale)?;
        Self::from_parts(actor, [c0, c1], [t0, t1], hyper, seed)
    }
}
