//! Experiment configuration: JSON in, validated core types out.
//!
//! Every field is optional in the file; omitted fields take the default
//! system values. Unknown keys are rejected. Errors carry a JSON pointer to
//! the offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uavmec_core::access::{ComputeParams, RsmaConfig};
use uavmec_core::agent::{DqnHyper, NoiseScale, SacHyper};
use uavmec_core::mdp::{EnvConfig, RewardConfig};
use uavmec_core::nn::Activation;
use uavmec_core::physics::{ChannelParams, GroundTerminal, MissionBounds, PropulsionParams};
use uavmec_core::rng::{self, streams};
use uavmec_core::scenario::{self, TaskRanges};
use uavmec_core::{AccessScheme, AreaGrid, DecodingPolicy, Point, ScenarioConfig, UavPose};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
}

impl ConfigError {
    fn at(pointer: &str, message: impl Into<String>) -> Self {
        ConfigError::Schema { pointer: pointer.to_owned(), message: message.into() }
    }

    pub fn pointer(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { pointer, .. } => Some(pointer),
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AccessArg {
    #[default]
    Rsma,
    Noma,
    Fdma,
}

impl From<AccessArg> for AccessScheme {
    fn from(a: AccessArg) -> Self {
        match a {
            AccessArg::Rsma => AccessScheme::Rsma,
            AccessArg::Noma => AccessScheme::Noma,
            AccessArg::Fdma => AccessScheme::Fdma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DecodingArg {
    #[default]
    Priority,
    Random,
    Oracle,
}

impl From<DecodingArg> for DecodingPolicy {
    fn from(d: DecodingArg) -> Self {
        match d {
            DecodingArg::Priority => DecodingPolicy::Priority,
            DecodingArg::Random => DecodingPolicy::Random,
            DecodingArg::Oracle => DecodingPolicy::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AgentArg {
    #[default]
    Gdrs,
    Dqn,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ActivationArg {
    Linear,
    #[default]
    Relu,
    Tanh,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Linear => Activation::Linear,
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScaleArg {
    #[default]
    QuarterSquared,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub cols: usize,
    pub rows: usize,
    pub x_spacing: f64,
    pub y_spacing: f64,
    pub origin: [f64; 2],
}

impl Default for GridSection {
    fn default() -> Self {
        Self { cols: 101, rows: 101, x_spacing: 10.0, y_spacing: 10.0, origin: [0.0, 0.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSection {
    pub cell: usize,
    pub alt_level: u32,
    pub time_level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionSection {
    pub h_min: f64,
    pub h_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub v_max_h: f64,
    pub v_max_v: f64,
    pub alt_levels: u32,
    pub time_levels: u32,
    pub slots: usize,
    pub start: PoseSection,
    pub end: PoseSection,
}

impl Default for MissionSection {
    fn default() -> Self {
        let b = scenario::default_bounds(100);
        let pose = |p: UavPose| PoseSection { cell: p.cell.0, alt_level: p.alt_level, time_level: p.time_level };
        Self {
            h_min: b.h_min,
            h_max: b.h_max,
            t_min: b.t_min,
            t_max: b.t_max,
            v_max_h: b.v_max_h,
            v_max_v: b.v_max_v,
            alt_levels: b.alt_levels,
            time_levels: b.time_levels,
            slots: b.slots,
            start: pose(b.start),
            end: pose(b.end),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub alpha: f64,
    pub beta: f64,
    pub zeta_los_db: f64,
    pub zeta_nlos_db: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let c = ChannelParams::default();
        Self {
            alpha: c.alpha,
            beta: c.beta,
            zeta_los_db: c.zeta_los_db,
            zeta_nlos_db: c.zeta_nlos_db,
            carrier_hz: c.carrier_hz,
            bandwidth_hz: c.bandwidth_hz,
            noise_dbm_per_hz: -174.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropulsionSection {
    pub blade_profile_power: f64,
    pub induced_power: f64,
    pub climb_power: f64,
    pub tip_speed: f64,
    pub mean_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    pub rotor_solidity: f64,
    pub air_density: f64,
    pub rotor_disc_area: f64,
}

impl Default for PropulsionSection {
    fn default() -> Self {
        let p = PropulsionParams::DEFAULT;
        Self {
            blade_profile_power: p.blade_profile_power,
            induced_power: p.induced_power,
            climb_power: p.climb_power,
            tip_speed: p.tip_speed,
            mean_induced_velocity: p.mean_induced_velocity,
            fuselage_drag_ratio: p.fuselage_drag_ratio,
            rotor_solidity: p.rotor_solidity,
            air_density: p.air_density,
            rotor_disc_area: p.rotor_disc_area,
        }
    }
}

impl PropulsionSection {
    fn to_core(&self) -> PropulsionParams {
        PropulsionParams {
            blade_profile_power: self.blade_profile_power,
            induced_power: self.induced_power,
            climb_power: self.climb_power,
            tip_speed: self.tip_speed,
            mean_induced_velocity: self.mean_induced_velocity,
            fuselage_drag_ratio: self.fuselage_drag_ratio,
            rotor_solidity: self.rotor_solidity,
            air_density: self.air_density,
            rotor_disc_area: self.rotor_disc_area,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsmaSection {
    /// Per-GT transmit power budget in watts.
    pub p_max: f64,
    /// Minimum rate in bit/s/Hz.
    pub r_min: f64,
    pub submessages: usize,
    /// Per-GT split ratios; uniform when absent.
    pub split: Option<Vec<Vec<f64>>>,
}

impl Default for RsmaSection {
    fn default() -> Self {
        Self { p_max: 5e-3, r_min: 0.2, submessages: 2, split: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub cycles: [f64; 2],
    pub bits: [f64; 2],
    pub local_rate: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        let t = TaskRanges::default();
        Self { cycles: [t.cycles.0, t.cycles.1], bits: [t.bits.0, t.bits.1], local_rate: t.local_rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub gts: usize,
    pub placement_seed: u64,
    /// Explicit GT coordinates; drawn uniformly over the grid when absent.
    pub positions: Option<Vec<[f64; 2]>>,
    pub grid: GridSection,
    pub tasks: TaskSection,
    pub mission: MissionSection,
    pub channel: ChannelSection,
    pub propulsion: PropulsionSection,
    pub rsma: RsmaSection,
    /// UAV CPU rate in cycles/s.
    pub uav_cpu_rate: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            gts: 2,
            placement_seed: 0,
            positions: None,
            grid: GridSection::default(),
            tasks: TaskSection::default(),
            mission: MissionSection::default(),
            channel: ChannelSection::default(),
            propulsion: PropulsionSection::default(),
            rsma: RsmaSection::default(),
            uav_cpu_rate: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    pub lambda1: f64,
    pub lambda2: f64,
    pub penalty: f64,
    /// Fractions of `P_max / I` selectable per sub-message.
    pub power_grid: Vec<f64>,
    pub end_distance_weight: Option<f64>,
}

impl Default for RewardSection {
    fn default() -> Self {
        let r = RewardConfig::default();
        Self {
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            penalty: r.penalty,
            power_grid: r.power_grid,
            end_distance_weight: r.end_distance_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub episodes: usize,
    /// Step cap per episode; the episode otherwise ends after all slots.
    pub steps_per_episode: Option<usize>,
    /// Episodes run by `evaluate`.
    pub eval_episodes: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self { episodes: 500, steps_per_episode: None, eval_episodes: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacSection {
    pub discount: f64,
    pub temperature: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_activation: ActivationArg,
    pub critic_activation: ActivationArg,
    pub diffusion_steps: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub noise_scale: NoiseScaleArg,
    pub embed_dim: usize,
    pub replay_capacity: usize,
    pub warmup: usize,
}

impl Default for SacSection {
    fn default() -> Self {
        let h = SacHyper::default();
        Self {
            discount: h.discount,
            temperature: h.temperature,
            tau: h.tau,
            batch_size: h.batch_size,
            actor_lr: h.actor_lr,
            critic_lr: h.critic_lr,
            actor_hidden: h.actor_hidden,
            critic_hidden: h.critic_hidden,
            actor_activation: ActivationArg::Tanh,
            critic_activation: ActivationArg::Relu,
            diffusion_steps: h.diffusion_steps,
            phi_min: h.phi_min,
            phi_max: h.phi_max,
            noise_scale: NoiseScaleArg::QuarterSquared,
            embed_dim: h.embed_dim,
            replay_capacity: h.replay_capacity,
            warmup: h.warmup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnSection {
    pub discount: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub activation: ActivationArg,
    pub replay_capacity: usize,
    pub warmup: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: usize,
    pub tau: f64,
}

impl Default for DqnSection {
    fn default() -> Self {
        let h = DqnHyper::default();
        Self {
            discount: h.discount,
            lr: h.lr,
            batch_size: h.batch_size,
            hidden: h.hidden,
            activation: ActivationArg::Relu,
            replay_capacity: h.replay_capacity,
            warmup: h.warmup,
            eps_start: h.eps_start,
            eps_end: h.eps_end,
            eps_decay_steps: h.eps_decay_steps,
            tau: h.tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    pub access: AccessArg,
    pub decoding: DecodingArg,
    pub agent: AgentArg,
    pub reward: RewardSection,
    pub training: TrainingSection,
    pub sac: SacSection,
    pub dqn: DqnSection,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSection::default(),
            access: AccessArg::default(),
            decoding: DecodingArg::default(),
            agent: AgentArg::default(),
            reward: RewardSection::default(),
            training: TrainingSection::default(),
            sac: SacSection::default(),
            dqn: DqnSection::default(),
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        ConfigError::Schema { pointer, message: e.into_inner().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    parse_config(&text)
}

fn positive(pointer: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(pointer, format!("must be positive and finite, got {v}")))
    }
}

fn ordered(pointer: &str, lo: f64, hi: f64) -> Result<(), ConfigError> {
    positive(&format!("{pointer}/0"), lo)?;
    if hi >= lo && hi.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(&format!("{pointer}/1"), "upper bound must not be below the lower bound"))
    }
}

impl ExperimentConfig {
    /// Field-level checks, then a full build of the core types.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        if s.gts == 0 {
            return Err(ConfigError::at("/scenario/gts", "need at least one ground terminal"));
        }
        if let Some(p) = &s.positions {
            if p.len() != s.gts {
                return Err(ConfigError::at("/scenario/positions", format!("expected {} positions, got {}", s.gts, p.len())));
            }
        }
        positive("/scenario/grid/x_spacing", s.grid.x_spacing)?;
        positive("/scenario/grid/y_spacing", s.grid.y_spacing)?;
        if s.grid.cols == 0 || s.grid.rows == 0 {
            return Err(ConfigError::at("/scenario/grid", "grid needs at least one row and column"));
        }
        ordered("/scenario/tasks/cycles", s.tasks.cycles[0], s.tasks.cycles[1])?;
        ordered("/scenario/tasks/bits", s.tasks.bits[0], s.tasks.bits[1])?;
        positive("/scenario/tasks/local_rate", s.tasks.local_rate)?;
        positive("/scenario/mission/h_min", s.mission.h_min)?;
        positive("/scenario/mission/t_min", s.mission.t_min)?;
        positive("/scenario/mission/v_max_h", s.mission.v_max_h)?;
        positive("/scenario/mission/v_max_v", s.mission.v_max_v)?;
        if s.mission.slots == 0 {
            return Err(ConfigError::at("/scenario/mission/slots", "need at least one slot"));
        }
        positive("/scenario/channel/bandwidth_hz", s.channel.bandwidth_hz)?;
        positive("/scenario/channel/carrier_hz", s.channel.carrier_hz)?;
        positive("/scenario/rsma/p_max", s.rsma.p_max)?;
        if !(s.rsma.r_min >= 0.0) {
            return Err(ConfigError::at("/scenario/rsma/r_min", "must be non-negative"));
        }
        if s.rsma.submessages == 0 {
            return Err(ConfigError::at("/scenario/rsma/submessages", "need at least one sub-message"));
        }
        positive("/scenario/uav_cpu_rate", s.uav_cpu_rate)?;
        if self.seeds.is_empty() {
            return Err(ConfigError::at("/seeds", "need at least one seed"));
        }
        if self.training.episodes == 0 {
            return Err(ConfigError::at("/training/episodes", "need at least one episode"));
        }
        self.build_scenario(self.seeds[0])?;
        self.env_config().reward.validate().map_err(|e| ConfigError::at("/reward", e.to_string()))?;
        self.sac_hyper().validate().map_err(|e| ConfigError::at("/sac", e.to_string()))?;
        self.dqn_hyper().validate().map_err(|e| ConfigError::at("/dqn", e.to_string()))?;
        Ok(())
    }

    /// The world description. GT placement and tasks come from the placement
    /// seed, never from the run seed.
    pub fn build_scenario(&self, _run_seed: u64) -> Result<ScenarioConfig, ConfigError> {
        let s = &self.scenario;
        let g = &s.grid;
        let grid = AreaGrid::new(g.cols, g.rows, g.x_spacing, g.y_spacing, Point::new(g.origin[0], g.origin[1]))
            .map_err(|e| ConfigError::at("/scenario/grid", e.to_string()))?;
        let ranges = TaskRanges {
            cycles: (s.tasks.cycles[0], s.tasks.cycles[1]),
            bits: (s.tasks.bits[0], s.tasks.bits[1]),
            local_rate: s.tasks.local_rate,
        };
        let mut prng = rng::stream(s.placement_seed, streams::PLACEMENT);
        let mut terminals: Vec<GroundTerminal> = scenario::random_terminals(&grid, s.gts, ranges, &mut prng);
        if let Some(pos) = &s.positions {
            for (t, p) in terminals.iter_mut().zip(pos) {
                t.position = Point::new(p[0], p[1]);
            }
        }
        let m = &s.mission;
        let pose = |p: &PoseSection| UavPose::new(p.cell, p.alt_level, p.time_level);
        let bounds = MissionBounds {
            h_min: m.h_min,
            h_max: m.h_max,
            t_min: m.t_min,
            t_max: m.t_max,
            v_max_h: m.v_max_h,
            v_max_v: m.v_max_v,
            alt_levels: m.alt_levels,
            time_levels: m.time_levels,
            start: pose(&m.start),
            end: pose(&m.end),
            slots: m.slots,
        };
        let c = &s.channel;
        let channel = ChannelParams {
            alpha: c.alpha,
            beta: c.beta,
            zeta_los_db: c.zeta_los_db,
            zeta_nlos_db: c.zeta_nlos_db,
            carrier_hz: c.carrier_hz,
            bandwidth_hz: c.bandwidth_hz,
            ..ChannelParams::default()
        }
        .with_noise_dbm_per_hz(c.noise_dbm_per_hz);
        let r = &s.rsma;
        let rsma = match &r.split {
            None => RsmaConfig::uniform(s.gts, r.submessages, r.p_max, r.r_min),
            Some(rows) => {
                if rows.len() != s.gts || rows.iter().any(|row| row.len() != r.submessages) {
                    return Err(ConfigError::at("/scenario/rsma/split", "need one row of I ratios per GT"));
                }
                RsmaConfig::with_split(r.submessages, rows.concat(), r.p_max, r.r_min)
            }
        }
        .map_err(|e| ConfigError::at("/scenario/rsma", e.to_string()))?;
        let cfg = ScenarioConfig {
            grid,
            bounds,
            propulsion: s.propulsion.to_core(),
            channel,
            rsma,
            compute: ComputeParams { uav_rate: s.uav_cpu_rate },
            terminals,
        };
        cfg.validate().map_err(|e| ConfigError::at("/scenario", e.to_string()))?;
        Ok(cfg)
    }

    pub fn env_config(&self) -> EnvConfig {
        let r = &self.reward;
        EnvConfig {
            access: self.access.into(),
            decoding: self.decoding.into(),
            reward: RewardConfig {
                lambda1: r.lambda1,
                lambda2: r.lambda2,
                penalty: r.penalty,
                power_grid: r.power_grid.clone(),
                end_distance_weight: r.end_distance_weight,
            },
        }
    }

    pub fn sac_hyper(&self) -> SacHyper {
        let s = &self.sac;
        SacHyper {
            discount: s.discount,
            temperature: s.temperature,
            tau: s.tau,
            batch_size: s.batch_size,
            actor_lr: s.actor_lr,
            critic_lr: s.critic_lr,
            actor_hidden: s.actor_hidden.clone(),
            critic_hidden: s.critic_hidden.clone(),
            actor_activation: s.actor_activation.into(),
            critic_activation: s.critic_activation.into(),
            diffusion_steps: s.diffusion_steps,
            phi_min: s.phi_min,
            phi_max: s.phi_max,
            noise_scale: match s.noise_scale {
                NoiseScaleArg::QuarterSquared => NoiseScale::QuarterSquared,
                NoiseScaleArg::Sqrt => NoiseScale::Sqrt,
            },
            embed_dim: s.embed_dim,
            replay_capacity: s.replay_capacity,
            warmup: s.warmup,
            episodes: self.training.episodes,
            steps_per_episode: self.training.steps_per_episode,
        }
    }

    pub fn dqn_hyper(&self) -> DqnHyper {
        let d = &self.dqn;
        DqnHyper {
            discount: d.discount,
            lr: d.lr,
            batch_size: d.batch_size,
            hidden: d.hidden.clone(),
            activation: d.activation.into(),
            replay_capacity: d.replay_capacity,
            warmup: d.warmup,
            eps_start: d.eps_start,
            eps_end: d.eps_end,
            eps_decay_steps: d.eps_decay_steps,
            tau: d.tau,
            episodes: self.training.episodes,
            steps_per_episode: self.training.steps_per_episode,
        }
    }

    /// Canonical JSON of the fully resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
