//! Models and learners for uplink rate-splitting UAV mobile-edge computing.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It contains:
//!
//! * [`physics`]: cell grid, UAV kinematics, rotary-wing propulsion energy and
//!   the air-to-ground channel.
//! * [`access`]: RSMA sub-message rates under SIC, the gain/split priority
//!   decoding order with an exhaustive oracle, FDMA/NOMA baselines and the
//!   offloading/computing model.
//! * [`scenario`]: the immutable world description with default system values.
//! * [`mdp`]: the episodic environment (state, factorized action, reward,
//!   constraint penalties).
//! * [`nn`]: dense networks with exact backpropagation, optimizers, gradient
//!   checking and a flat checkpoint layout.
//! * [`agent`]: the diffusion-policy soft actor-critic learner, the DQN
//!   baseline and the training loop.
//!
//! Everything is seedable; given the same seed and configuration every result
//! is bit-identical.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod access;
pub mod agent;
pub mod mdp;
pub mod nn;
pub mod physics;
pub mod rng;
pub mod scenario;

pub use access::{AccessError, AccessScheme, DecodingPolicy};
pub use mdp::{EnvAction, EnvError, EnvState, EnvTransition, Environment};
pub use physics::{AreaGrid, PhysicsError, Point, UavPose};
pub use scenario::ScenarioConfig;
