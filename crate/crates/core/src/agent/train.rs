//! Interaction loops shared by every learner.

use alloc::vec::Vec;

use rand::Rng;

use super::dqn::{DqnAgent, DqnHyper};
use super::replay::Experience;
use super::sac::{GdrsAgent, SacHyper, UpdateStats};
use super::{AgentError, Result};
use crate::mdp::{self, EnvConfig, EnvTransition, Environment};
use crate::rng::{self, streams, SimRng};
use crate::scenario::ScenarioConfig;

/// Result of one task step.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStep<I> {
    pub features: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: I,
}

/// An episodic problem with a factorized discrete action space.
pub trait Task {
    type Info;

    fn heads(&self) -> Vec<usize>;
    fn feature_dim(&self) -> usize;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: &[usize]) -> Result<TaskStep<Self::Info>>;
}

impl Task for Environment {
    type Info = EnvTransition;

    fn heads(&self) -> Vec<usize> {
        self.layout().heads()
    }

    fn feature_dim(&self) -> usize {
        Environment::feature_dim(self)
    }

    fn reset(&mut self) -> Vec<f64> {
        let s = Environment::reset(self).clone();
        self.features(&s)
    }

    fn step(&mut self, action: &[usize]) -> Result<TaskStep<EnvTransition>> {
        let a = self.layout().decode(action)?;
        let tr = Environment::step(self, &a)?;
        Ok(TaskStep { features: self.features(&tr.next_state), reward: tr.reward, done: tr.done, info: tr })
    }
}

/// What a policy reports for one step.
pub trait Policy {
    fn act(&mut self, feats: &[f64]) -> Result<Vec<usize>>;

    /// Learns from a transition; returns update losses when a step was taken.
    fn observe(&mut self, _e: Experience) -> Result<Option<UpdateStats>> {
        Ok(None)
    }
}

impl Policy for GdrsAgent {
    fn act(&mut self, feats: &[f64]) -> Result<Vec<usize>> {
        Ok(GdrsAgent::act(self, feats)?.indices)
    }

    fn observe(&mut self, e: Experience) -> Result<Option<UpdateStats>> {
        GdrsAgent::observe(self, e)
    }
}

impl Policy for DqnAgent {
    fn act(&mut self, feats: &[f64]) -> Result<Vec<usize>> {
        DqnAgent::act(self, feats)
    }

    fn observe(&mut self, e: Experience) -> Result<Option<UpdateStats>> {
        Ok(DqnAgent::observe(self, e)?.map(|l| UpdateStats { critic_loss: [l, l], ..UpdateStats::default() }))
    }
}

/// Frozen evaluation wrapper: acts greedily (or by sampling) and never learns.
pub struct Frozen<'a, P>(pub &'a mut P);

impl Policy for Frozen<'_, GdrsAgent> {
    fn act(&mut self, feats: &[f64]) -> Result<Vec<usize>> {
        Ok(self.0.act(feats)?.indices)
    }
}

impl Policy for Frozen<'_, DqnAgent> {
    fn act(&mut self, feats: &[f64]) -> Result<Vec<usize>> {
        self.0.act_greedy(feats)
    }
}

/// Uniform draw per head.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    heads: Vec<usize>,
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(heads: &[usize], seed: u64) -> Self {
        Self { heads: heads.to_vec(), rng: rng::stream(seed, streams::EXPLORATION) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _feats: &[f64]) -> Result<Vec<usize>> {
        Ok(self.heads.iter().map(|&n| self.rng.random_range(0..n)).collect())
    }
}

/// Everything produced by one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<I> {
    pub index: usize,
    pub rewards: Vec<f64>,
    pub actions: Vec<Vec<usize>>,
    pub infos: Vec<I>,
    /// Gradient steps taken during the episode.
    pub updates: usize,
    pub last_update: Option<UpdateStats>,
}

impl<I> EpisodeRecord<I> {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn mean_reward(&self) -> f64 {
        if self.rewards.is_empty() {
            0.0
        } else {
            self.total_reward() / self.rewards.len() as f64
        }
    }
}

/// Runs `episodes` episodes, calling `on_episode` after each.
pub fn run_episodes<T, P, F>(
    task: &mut T,
    policy: &mut P,
    episodes: usize,
    max_steps: Option<usize>,
    mut on_episode: F,
) -> Result<()>
where
    T: Task,
    P: Policy,
    F: FnMut(&EpisodeRecord<T::Info>) -> Result<()>,
{
    for index in 0..episodes {
        let mut feats = task.reset();
        let mut rec = EpisodeRecord { index, rewards: Vec::new(), actions: Vec::new(), infos: Vec::new(), updates: 0, last_update: None };
        loop {
            let action = policy.act(&feats)?;
            let st = task.step(&action)?;
            let capped = max_steps.is_some_and(|m| rec.rewards.len() + 1 >= m);
            let exp = Experience {
                state: feats,
                action: action.clone(),
                reward: st.reward,
                next_state: st.features.clone(),
                done: st.done,
            };
            if let Some(u) = policy.observe(exp)? {
                rec.updates += 1;
                rec.last_update = Some(u);
            }
            rec.rewards.push(st.reward);
            rec.actions.push(action);
            rec.infos.push(st.info);
            feats = st.features;
            if st.done || capped {
                break;
            }
        }
        on_episode(&rec)?;
    }
    Ok(())
}

/// Trains a GDRS agent on `task`.
pub fn train_gdrs<T, F>(task: &mut T, hyper: SacHyper, seed: u64, on_episode: F) -> Result<GdrsAgent>
where
    T: Task,
    F: FnMut(&EpisodeRecord<T::Info>) -> Result<()>,
{
    let mut agent = GdrsAgent::new(task.feature_dim(), &task.heads(), hyper, seed)?;
    let (episodes, cap) = (agent.hyper.episodes, agent.hyper.steps_per_episode);
    run_episodes(task, &mut agent, episodes, cap, on_episode)?;
    Ok(agent)
}

pub fn train_dqn<T, F>(task: &mut T, hyper: DqnHyper, seed: u64, on_episode: F) -> Result<DqnAgent>
where
    T: Task,
    F: FnMut(&EpisodeRecord<T::Info>) -> Result<()>,
{
    let mut agent = DqnAgent::new(task.feature_dim(), &task.heads(), hyper, seed)?;
    let (episodes, cap) = (agent.hyper.episodes, agent.hyper.steps_per_episode);
    run_episodes(task, &mut agent, episodes, cap, on_episode)?;
    Ok(agent)
}

/// Builds the UAV environment and trains GDRS on it.
pub fn train<F>(scenario: ScenarioConfig, env: EnvConfig, hyper: SacHyper, seed: u64, on_episode: F) -> Result<GdrsAgent>
where
    F: FnMut(&EpisodeRecord<EnvTransition>) -> Result<()>,
{
    hyper.validate()?;
    let mut task = Environment::new(scenario, env, seed)?;
    train_gdrs(&mut task, hyper, seed, on_episode)
}

pub fn dqn_train<F>(scenario: ScenarioConfig, env: EnvConfig, hyper: DqnHyper, seed: u64, on_episode: F) -> Result<DqnAgent>
where
    F: FnMut(&EpisodeRecord<EnvTransition>) -> Result<()>,
{
    hyper.validate()?;
    let mut task = Environment::new(scenario, env, seed)?;
    train_dqn(&mut task, hyper, seed, on_episode)
}

/// Episode summary of a UAV episode record.
pub fn uav_episode_summary(rec: &EpisodeRecord<EnvTransition>) -> Result<mdp::EpisodeSummary> {
    mdp::episode_metrics(&rec.infos).map_err(AgentError::from)
}
