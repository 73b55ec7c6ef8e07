//! Learners: the diffusion-policy soft actor-critic (GDRS), the DQN baseline,
//! a uniform random policy and the loops that drive them.

mod actor;
mod dqn;
mod replay;
mod sac;
mod schedule;
pub mod toy;
mod train;

pub use actor::{
    logits_gradient, sample_action, time_embedding, ChainNoise, ChainTrace, DiffusionActor, HeadDistributions,
    SampledAction,
};
pub use dqn::{DqnAgent, DqnHyper};
pub use replay::{Batch, Experience, ReplayBuffer};
pub use sac::{
    actor_loss_grad, critic_input, critic_loss_grad, one_hot, soft_update, CriticChoice, GdrsAgent, SacHyper,
    UpdateStats,
};
pub use schedule::{forward_noise, DiffusionSchedule, NoiseScale};
pub use train::{
    dqn_train, run_episodes, train, train_dqn, train_gdrs, uav_episode_summary, EpisodeRecord, Frozen, Policy,
    RandomPolicy, Task, TaskStep,
};

use thiserror::Error;

use crate::mdp::EnvError;
use crate::nn::{CheckpointError, NnError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("diffusion schedule needs T >= 1 and 0 < phi_min < phi_max")]
    BadSchedule,
    #[error("bad configuration: {0}")]
    BadConfig(&'static str),
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

pub type Result<T> = core::result::Result<T, AgentError>;
