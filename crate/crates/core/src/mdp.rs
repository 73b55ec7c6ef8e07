//! Episodic environment: factorized actions, kinematics, constraint
//! penalties and the per-slot energy-efficiency reward.
//!
//! An action is a tuple of independent categorical heads: horizontal move,
//! altitude change, flight-time level, one offload bit per GT and one power
//! level per sub-message. Powers come from a grid of fractions of
//! `P_max / I`, so the per-GT power budget holds by construction.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use thiserror::Error;

use crate::access::{
    self, AccessError, AccessScheme, DecodingOrder, DecodingPolicy, OffloadVector, OrderObjective, PowerAllocation,
    SlotContext,
};
use crate::physics::{self, PhysicsError, Point, SlotSpeeds, UavPose};
use crate::rng::{self, streams, SimRng};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("episode log is empty")]
    EmptyEpisode,
    #[error("invalid action: {0}")]
    InvalidAction(&'static str),
    #[error("invalid environment configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Access(#[from] AccessError),
}

pub type Result<T> = core::result::Result<T, EnvError>;

/// Horizontal move; `North` is `+y`, `East` is `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    North,
    South,
    East,
    West,
    Idle,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::North, Move::South, Move::East, Move::West, Move::Idle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        ['N', 'S', 'E', 'W', 'I'][self as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Climb {
    Up,
    Down,
    Idle,
}

impl Climb {
    pub const ALL: [Climb; 3] = [Climb::Up, Climb::Down, Climb::Idle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        ['U', 'D', 'I'][self as usize]
    }
}

/// Constraints of the joint trajectory/offloading/power problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", *self as u8 + 1)
    }
}

/// One decision per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvAction {
    pub movement: Move,
    pub climb: Climb,
    /// Flight-time level of the slot being flown, `1..=T`.
    pub time_level: u32,
    pub offload: Vec<bool>,
    /// Index into the power grid for each sub-message, row-major `[gt][part]`.
    pub power_levels: Vec<usize>,
}

/// Reward shaping and the discrete power grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Penalty magnitude `c0`.
    pub penalty: f64,
    /// Fractions of `P_max / I` selectable per sub-message.
    pub power_grid: Vec<f64>,
    /// Optional penalty per metre between the final and the required end cell.
    pub end_distance_weight: Option<f64>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            penalty: 10.0,
            power_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            end_distance_weight: None,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return Err(EnvError::BadConfig("reward scales must be positive"));
        }
        if !(self.penalty > 0.0) {
            return Err(EnvError::BadConfig("penalty magnitude must be positive"));
        }
        if self.power_grid.is_empty() || self.power_grid.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(EnvError::BadConfig("power grid fractions must lie in [0, 1]"));
        }
        if matches!(self.end_distance_weight, Some(w) if !(w >= 0.0)) {
            return Err(EnvError::BadConfig("end-distance weight must be non-negative"));
        }
        Ok(())
    }
}

/// Run-level environment switches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvConfig {
    pub access: AccessScheme,
    pub decoding: DecodingPolicy,
    pub reward: RewardConfig,
}

/// Sizes of the categorical action heads for a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionLayout {
    pub gts: usize,
    pub submessages: usize,
    pub time_levels: usize,
    pub power_levels: usize,
}

impl ActionLayout {
    pub fn new(scenario: &ScenarioConfig, reward: &RewardConfig) -> Self {
        Self {
            gts: scenario.gts(),
            submessages: scenario.submessages(),
            time_levels: scenario.bounds.time_levels as usize,
            power_levels: reward.power_grid.len(),
        }
    }

    /// Head sizes in order: move, climb, time, offload per GT, power per sub-message.
    pub fn heads(&self) -> Vec<usize> {
        let mut heads = vec![Move::ALL.len(), Climb::ALL.len(), self.time_levels];
        heads.extend(core::iter::repeat_n(2, self.gts));
        heads.extend(core::iter::repeat_n(self.power_levels, self.gts * self.submessages));
        heads
    }

    pub fn head_count(&self) -> usize {
        3 + self.gts + self.gts * self.submessages
    }

    /// Per-head category indices of `action`.
    pub fn encode(&self, action: &EnvAction) -> Vec<usize> {
        let mut idx = vec![action.movement.index(), action.climb.index(), action.time_level as usize - 1];
        idx.extend(action.offload.iter().map(|&a| a as usize));
        idx.extend(action.power_levels.iter().copied());
        idx
    }

    pub fn decode(&self, idx: &[usize]) -> Result<EnvAction> {
        if idx.len() != self.head_count() {
            return Err(EnvError::InvalidAction("wrong number of action heads"));
        }
        for (i, &size) in idx.iter().zip(self.heads().iter()) {
            if *i >= size {
                return Err(EnvError::InvalidAction("head index out of range"));
            }
        }
        let off_end = 3 + self.gts;
        Ok(EnvAction {
            movement: Move::ALL[idx[0]],
            climb: Climb::ALL[idx[1]],
            time_level: idx[2] as u32 + 1,
            offload: idx[3..off_end].iter().map(|&a| a == 1).collect(),
            power_levels: idx[off_end..].to_vec(),
        })
    }
}

/// System state at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub gt_positions: Vec<Point>,
    pub uav: UavPose,
    pub slot: usize,
    pub residual_bits: Vec<f64>,
    pub cumulative_energy: f64,
    pub cumulative_processed: f64,
}

impl EnvState {
    pub fn initial(scenario: &ScenarioConfig) -> Self {
        Self {
            gt_positions: scenario.terminals.iter().map(|t| t.position).collect(),
            uav: scenario.bounds.start,
            slot: 0,
            residual_bits: scenario.terminals.iter().map(|t| t.task_bits).collect(),
            cumulative_energy: 0.0,
            cumulative_processed: 0.0,
        }
    }

    pub fn is_done(&self, scenario: &ScenarioConfig) -> bool {
        self.slot >= scenario.bounds.slots
    }
}

/// Diagnostics recorded for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub duration: f64,
    pub speeds: SlotSpeeds,
    pub gains: Vec<f64>,
    /// Decoding order used (empty for the FDMA/NOMA baselines).
    pub order: DecodingOrder,
    /// Per-GT uplink rate in bit/s.
    pub gt_rates: Vec<f64>,
    /// Transmit fraction per GT; `None` when computing locally.
    pub kappa: Vec<Option<f64>>,
    /// Bits processed per GT after capping at the residual task.
    pub processed: Vec<f64>,
    pub slot_energy: f64,
    pub violations: Vec<Constraint>,
    /// Total subtracted from the efficiency term.
    pub penalty: f64,
    /// `λ1·Σϖ/E` before penalties.
    pub efficiency_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvTransition {
    pub state: EnvState,
    pub action: EnvAction,
    pub reward: f64,
    pub next_state: EnvState,
    pub done: bool,
    pub info: StepInfo,
}

/// Applies the 5-way move and 3-way climb, cancelling moves that would leave
/// the area or the altitude envelope.
pub fn apply_kinematics(pose: &UavPose, movement: Move, climb: Climb, scenario: &ScenarioConfig) -> Result<UavPose> {
    let grid = &scenario.grid;
    let bounds = &scenario.bounds;
    let (col, row) = grid.coords(pose.cell)?;
    let target = match movement {
        Move::North => row.checked_add(1).map(|r| (col, r)),
        Move::South => row.checked_sub(1).map(|r| (col, r)),
        Move::East => col.checked_add(1).map(|c| (c, row)),
        Move::West => col.checked_sub(1).map(|c| (c, row)),
        Move::Idle => Some((col, row)),
    };
    let cell = target.and_then(|(c, r)| grid.cell_at(c, r)).unwrap_or(pose.cell);
    let level = match climb {
        Climb::Up => pose.alt_level.checked_add(1),
        Climb::Down => pose.alt_level.checked_sub(1),
        Climb::Idle => Some(pose.alt_level),
    };
    let alt_level = level.filter(|&l| bounds.altitude_ok(l)).unwrap_or(pose.alt_level);
    Ok(UavPose { cell, alt_level, time_level: pose.time_level })
}

fn check_action_shape(action: &EnvAction, scenario: &ScenarioConfig, cfg: &EnvConfig) -> Result<()> {
    let k = scenario.gts();
    if action.offload.len() != k {
        return Err(EnvError::InvalidAction("one offload decision per GT required"));
    }
    if action.power_levels.len() != k * scenario.submessages() {
        return Err(EnvError::InvalidAction("one power level per sub-message required"));
    }
    if action.power_levels.iter().any(|&l| l >= cfg.reward.power_grid.len()) {
        return Err(EnvError::InvalidAction("power level outside the grid"));
    }
    if action.time_level == 0 || action.time_level > scenario.bounds.time_levels {
        return Err(EnvError::InvalidAction("time level outside 1..=T"));
    }
    Ok(())
}

/// Transmit powers selected by `action`.
pub fn action_powers(action: &EnvAction, scenario: &ScenarioConfig, reward: &RewardConfig) -> PowerAllocation {
    let unit = scenario.rsma.p_max / scenario.submessages() as f64;
    let watts = action.power_levels.iter().map(|&l| reward.power_grid[l] * unit).collect();
    PowerAllocation::new(scenario.submessages(), watts).expect("power vector shape checked")
}

/// Per-slot constraints violated by taking `action` in `state`.
///
/// The task-completion constraint is a horizon constraint; see
/// [`terminal_violations`].
pub fn constraint_check(
    state: &EnvState,
    action: &EnvAction,
    scenario: &ScenarioConfig,
    cfg: &EnvConfig,
) -> Result<Vec<Constraint>> {
    check_action_shape(action, scenario, cfg)?;
    let bounds = &scenario.bounds;
    let flown = UavPose { time_level: action.time_level, ..state.uav };
    let mut next = apply_kinematics(&flown, action.movement, action.climb, scenario)?;
    next.time_level = action.time_level;
    let speeds = physics::slot_speeds(&flown, &next, &scenario.grid, bounds)?;
    let powers = action_powers(action, scenario, &cfg.reward);

    let mut out = Vec::new();
    // C1 holds by type: offload decisions are booleans.
    if !powers.within_budget(scenario.rsma.p_max) {
        out.push(Constraint::C3);
    }
    if speeds.exceeds_horizontal(bounds) {
        out.push(Constraint::C4);
    }
    if speeds.exceeds_vertical(bounds) {
        out.push(Constraint::C5);
    }
    if !bounds.altitude_ok(next.alt_level) {
        out.push(Constraint::C6);
    }
    if !bounds.duration_ok(action.time_level) {
        out.push(Constraint::C7);
    }
    if !powers.non_negative() {
        out.push(Constraint::C8);
    }
    Ok(out)
}

/// GTs whose task is unfinished; each one violates the completion constraint.
pub fn terminal_violations(state: &EnvState) -> usize {
    state.residual_bits.iter().filter(|r| **r > 0.0).count()
}

/// Advances one slot.
pub fn step<R: Rng + ?Sized>(
    state: &EnvState,
    action: &EnvAction,
    scenario: &ScenarioConfig,
    cfg: &EnvConfig,
    rng: &mut R,
) -> Result<EnvTransition> {
    if state.is_done(scenario) {
        return Err(EnvError::EpisodeFinished);
    }
    let mut violations = constraint_check(state, action, scenario, cfg)?;
    let bounds = &scenario.bounds;
    let k = scenario.gts();

    let flown = UavPose { time_level: action.time_level, ..state.uav };
    let mut next_pose = apply_kinematics(&flown, action.movement, action.climb, scenario)?;
    next_pose.time_level = action.time_level;
    let speeds = physics::slot_speeds(&flown, &next_pose, &scenario.grid, bounds)?;
    let duration = speeds.duration;

    let uav_xy = scenario.grid.cell_center(next_pose.cell)?;
    let altitude = bounds.altitude(next_pose.alt_level);
    let gains = scenario
        .terminals
        .iter()
        .map(|t| physics::link_gain(uav_xy, altitude, t.position, &scenario.channel))
        .collect::<core::result::Result<Vec<f64>, PhysicsError>>()?;

    let offload = OffloadVector(action.offload.clone());
    let powers = action_powers(action, scenario, &cfg.reward);
    let (order, gt_rates) = match cfg.access {
        AccessScheme::Rsma => {
            let order = match cfg.decoding {
                DecodingPolicy::Priority => access::priority_order(&gains, &offload, &scenario.rsma)?,
                DecodingPolicy::Random => access::random_order(&offload, scenario.submessages(), rng),
                DecodingPolicy::Oracle => {
                    let ctx = SlotContext {
                        gains: &gains,
                        powers: &powers,
                        offload: &offload,
                        terminals: &scenario.terminals,
                        rsma: &scenario.rsma,
                        channel: &scenario.channel,
                        compute: &scenario.compute,
                        duration,
                    };
                    access::oracle_best_order(&ctx, OrderObjective::SumProcessed)?.0
                }
            };
            let rates = access::submessage_rates(&gains, &powers, &offload, &order, &scenario.channel)?;
            (order, rates.gt_sums())
        }
        scheme => {
            let per_gt: Vec<f64> = (0..k).map(|j| powers.gt_total(j)).collect();
            (DecodingOrder::default(), access::alt_access_rates(scheme, &gains, &per_gt, &offload, &scenario.channel)?)
        }
    };

    let mut residual = state.residual_bits.clone();
    let mut processed = vec![0.0; k];
    let mut kappa = vec![None; k];
    for j in 0..k {
        let task = &scenario.terminals[j];
        let on = offload.is_offloading(j);
        if on {
            kappa[j] = Some(access::transmit_fraction(gt_rates[j], task, &scenario.compute));
        }
        let raw = access::processed_data(on, gt_rates[j], duration, task, &scenario.compute);
        if raw >= residual[j] {
            processed[j] = residual[j];
            residual[j] = 0.0;
        } else {
            processed[j] = raw;
            residual[j] -= raw;
        }
    }

    let slot_energy = physics::slot_propulsion_energy(speeds.horizontal, speeds.vertical, duration, &scenario.propulsion)?;
    let total_processed: f64 = processed.iter().sum();
    let reward_cfg = &cfg.reward;
    let efficiency_term = reward_cfg.lambda1 * total_processed / slot_energy;
    let mut penalty = if violations.is_empty() { 0.0 } else { reward_cfg.lambda2 * reward_cfg.penalty };

    let next_state = EnvState {
        gt_positions: state.gt_positions.clone(),
        uav: next_pose,
        slot: state.slot + 1,
        residual_bits: residual,
        cumulative_energy: state.cumulative_energy + slot_energy,
        cumulative_processed: state.cumulative_processed + total_processed,
    };
    let done = next_state.is_done(scenario);
    if done {
        let unfinished = terminal_violations(&next_state);
        if unfinished > 0 {
            violations.push(Constraint::C2);
            violations.sort();
            penalty += reward_cfg.lambda2 * reward_cfg.penalty * unfinished as f64;
        }
        if let Some(weight) = reward_cfg.end_distance_weight {
            let here = scenario.grid.cell_center(next_pose.cell)?;
            let goal = scenario.grid.cell_center(bounds.end.cell)?;
            penalty += reward_cfg.lambda2 * weight * here.distance(goal);
        }
    }

    Ok(EnvTransition {
        state: state.clone(),
        action: action.clone(),
        reward: efficiency_term - penalty,
        next_state,
        done,
        info: StepInfo {
            duration,
            speeds,
            gains,
            order,
            gt_rates,
            kappa,
            processed,
            slot_energy,
            violations,
            penalty,
            efficiency_term,
        },
    })
}

/// Stateful wrapper that owns the scenario, switches and its random stream.
#[derive(Debug, Clone)]
pub struct Environment {
    scenario: ScenarioConfig,
    cfg: EnvConfig,
    layout: ActionLayout,
    state: EnvState,
    rng: SimRng,
}

impl Environment {
    pub fn new(scenario: ScenarioConfig, cfg: EnvConfig, seed: u64) -> Result<Self> {
        scenario.validate().map_err(|_| EnvError::BadConfig("scenario failed validation"))?;
        cfg.reward.validate()?;
        if cfg.access == AccessScheme::Rsma && cfg.decoding == DecodingPolicy::Oracle {
            let pairs = scenario.gts() * scenario.submessages();
            if pairs > access::ORACLE_MAX_PAIRS {
                return Err(EnvError::BadConfig("oracle decoding needs at most 8 sub-messages"));
            }
        }
        let layout = ActionLayout::new(&scenario, &cfg.reward);
        let state = EnvState::initial(&scenario);
        Ok(Self { scenario, cfg, layout, state, rng: rng::stream(seed, streams::ENVIRONMENT) })
    }

    pub fn reset(&mut self) -> &EnvState {
        self.state = EnvState::initial(&self.scenario);
        &self.state
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ActionLayout {
        &self.layout
    }

    pub fn step(&mut self, action: &EnvAction) -> Result<EnvTransition> {
        let tr = step(&self.state, action, &self.scenario, &self.cfg, &mut self.rng)?;
        self.state = tr.next_state.clone();
        Ok(tr)
    }

    /// Dimension of [`Environment::features`].
    pub fn feature_dim(&self) -> usize {
        feature_dim(self.scenario.gts())
    }

    pub fn features(&self, state: &EnvState) -> Vec<f64> {
        state_features(state, &self.scenario)
    }
}

pub fn feature_dim(gts: usize) -> usize {
    3 * gts + 5
}

/// Normalized state vector: GT positions, UAV position/altitude/time level,
/// slot progress and the remaining fraction of each task.
pub fn state_features(state: &EnvState, scenario: &ScenarioConfig) -> Vec<f64> {
    let (w, h) = scenario.grid.extent();
    let o = scenario.grid.origin();
    let norm = |v: f64, span: f64| if span > 0.0 { v / span } else { 0.0 };
    let mut f = Vec::with_capacity(feature_dim(scenario.gts()));
    for p in &state.gt_positions {
        f.push(norm(p.x - o.x, w));
        f.push(norm(p.y - o.y, h));
    }
    let uav = scenario.grid.cell_center(state.uav.cell).unwrap_or(o);
    f.push(norm(uav.x - o.x, w));
    f.push(norm(uav.y - o.y, h));
    f.push(state.uav.alt_level as f64 / scenario.bounds.alt_levels as f64);
    f.push(state.uav.time_level as f64 / scenario.bounds.time_levels as f64);
    f.push(state.slot as f64 / scenario.bounds.slots as f64);
    for (r, t) in state.residual_bits.iter().zip(&scenario.terminals) {
        f.push(r / t.task_bits);
    }
    f
}

/// Episode totals.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub slots: usize,
    pub total_reward: f64,
    pub mean_reward: f64,
    pub total_processed: f64,
    pub total_energy: f64,
    pub efficiency: f64,
    /// Slots with at least one per-slot violation, plus unfinished GTs at the end.
    pub violation_count: usize,
}

pub fn episode_metrics(transitions: &[EnvTransition]) -> Result<EpisodeSummary> {
    if transitions.is_empty() {
        return Err(EnvError::EmptyEpisode);
    }
    let mut s = EpisodeSummary {
        slots: transitions.len(),
        total_reward: 0.0,
        mean_reward: 0.0,
        total_processed: 0.0,
        total_energy: 0.0,
        efficiency: 0.0,
        violation_count: 0,
    };
    for tr in transitions {
        s.total_reward += tr.reward;
        s.total_processed += tr.info.processed.iter().sum::<f64>();
        s.total_energy += tr.info.slot_energy;
        let per_slot = tr.info.violations.iter().any(|c| *c != Constraint::C2);
        s.violation_count += per_slot as usize;
        if tr.info.violations.contains(&Constraint::C2) {
            s.violation_count += terminal_violations(&tr.next_state);
        }
    }
    s.mean_reward = s.total_reward / s.slots as f64;
    s.efficiency = access::energy_efficiency(s.total_processed, s.total_energy)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{AreaGrid, CellIndex, GroundTerminal};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::RngCore;

    fn scenario(slots: usize) -> ScenarioConfig {
        let grid = AreaGrid::new(5, 5, 10.0, 10.0, Point::default()).unwrap();
        let terminals = vec![
            GroundTerminal { id: 0, position: Point::new(10.0, 20.0), task_cycles: 2000.0, task_bits: 1000.0, local_rate: 5.0 },
            GroundTerminal { id: 1, position: Point::new(40.0, 0.0), task_cycles: 1000.0, task_bits: 1200.0, local_rate: 5.0 },
        ];
        let mut s = ScenarioConfig::default_with_terminals(grid, terminals).unwrap();
        s.bounds.slots = slots;
        s
    }

    fn hover(offload: bool, level: usize) -> EnvAction {
        EnvAction {
            movement: Move::Idle,
            climb: Climb::Idle,
            time_level: 1,
            offload: vec![offload; 2],
            power_levels: vec![level; 4],
        }
    }

    #[test]
    fn identity_action_keeps_pose() {
        let s = scenario(10);
        let p = UavPose::new(7, 15, 2);
        assert_eq!(apply_kinematics(&p, Move::Idle, Climb::Idle, &s).unwrap(), p);
    }

    #[test]
    fn boundary_moves_are_cancelled() {
        let s = scenario(10);
        let top = UavPose::new(1, 20, 1);
        assert_eq!(apply_kinematics(&top, Move::Idle, Climb::Up, &s).unwrap().alt_level, 20);
        let bottom = UavPose::new(1, 10, 1);
        assert_eq!(apply_kinematics(&bottom, Move::Idle, Climb::Down, &s).unwrap().alt_level, 10);
        let east_edge = UavPose::new(5, 15, 1);
        assert_eq!(apply_kinematics(&east_edge, Move::East, Climb::Idle, &s).unwrap().cell, CellIndex(5));
        let origin = UavPose::new(1, 15, 1);
        assert_eq!(apply_kinematics(&origin, Move::South, Climb::Idle, &s).unwrap().cell, CellIndex(1));
        assert_eq!(apply_kinematics(&origin, Move::West, Climb::Idle, &s).unwrap().cell, CellIndex(1));
        assert_eq!(apply_kinematics(&origin, Move::North, Climb::Up, &s).unwrap(), UavPose::new(6, 16, 1));
        assert_eq!(apply_kinematics(&origin, Move::East, Climb::Down, &s).unwrap(), UavPose::new(2, 14, 1));
    }

    #[test]
    fn local_hover_reward() {
        let s = scenario(10);
        let cfg = EnvConfig::default();
        let st = EnvState::initial(&s);
        let tr = step(&st, &hover(false, 4), &s, &cfg, &mut rng::stream(0, 0)).unwrap();
        // λ1 · Σ f_g · 1 s / hover energy
        assert_relative_eq!(tr.reward, (5.0 + 5.0) / 168.5, max_relative = 1e-12);
        assert!(tr.info.violations.is_empty());
        assert_eq!(tr.info.penalty, 0.0);
        assert_eq!(tr.next_state.residual_bits, vec![995.0, 1195.0]);
    }

    #[test]
    fn violation_costs_exactly_the_penalty() {
        let mut s = scenario(10);
        s.bounds.v_max_h = 5.0;
        let cfg = EnvConfig::default();
        let st = EnvState::initial(&s);
        let mut a = hover(false, 0);
        a.movement = Move::East;
        let tr = step(&st, &a, &s, &cfg, &mut rng::stream(0, 0)).unwrap();
        assert_eq!(tr.info.violations, vec![Constraint::C4]);
        assert_eq!(tr.info.penalty, 10.0);
        assert_relative_eq!(tr.reward + 10.0, tr.info.efficiency_term, max_relative = 1e-12);
    }

    #[test]
    fn short_slot_violates_time_envelope() {
        let mut s = scenario(10);
        s.bounds.t_min = 2.0;
        let cfg = EnvConfig::default();
        let v = constraint_check(&EnvState::initial(&s), &hover(true, 2), &s, &cfg).unwrap();
        assert_eq!(v, vec![Constraint::C7]);
    }

    #[test]
    fn grid_powers_never_break_the_budget() {
        let s = scenario(10);
        let cfg = EnvConfig::default();
        let st = EnvState::initial(&s);
        for level in 0..5 {
            let v = constraint_check(&st, &hover(true, level), &s, &cfg).unwrap();
            assert!(!v.contains(&Constraint::C3) && !v.contains(&Constraint::C8));
        }
        let mut over = cfg.clone();
        over.reward.power_grid = vec![1.5];
        let v = constraint_check(&st, &hover(true, 0), &s, &over).unwrap();
        assert_eq!(v, vec![Constraint::C3]);
    }

    #[test]
    fn unfinished_tasks_are_penalized_at_the_end() {
        let s = scenario(1);
        let cfg = EnvConfig::default();
        let tr = step(&EnvState::initial(&s), &hover(false, 0), &s, &cfg, &mut rng::stream(0, 0)).unwrap();
        assert!(tr.done);
        assert_eq!(tr.info.violations, vec![Constraint::C2]);
        assert_eq!(tr.info.penalty, 20.0);
        let again = step(&tr.next_state, &hover(false, 0), &s, &cfg, &mut rng::stream(0, 0));
        assert_eq!(again.unwrap_err(), EnvError::EpisodeFinished);
    }

    #[test]
    fn residual_is_capped_and_reaches_zero() {
        let s = scenario(40);
        let cfg = EnvConfig::default();
        let mut env = Environment::new(s.clone(), cfg, 1).unwrap();
        let mut cumulative = [0.0; 2];
        let mut prev = env.state().residual_bits.clone();
        for _ in 0..40 {
            let tr = env.step(&hover(true, 4)).unwrap();
            for j in 0..2 {
                cumulative[j] += tr.info.processed[j];
                assert!(tr.next_state.residual_bits[j] <= prev[j]);
                if tr.next_state.residual_bits[j] == 0.0 {
                    assert!(cumulative[j] >= s.terminals[j].task_bits - 1e-9);
                }
            }
            prev = tr.next_state.residual_bits.clone();
        }
        assert_eq!(prev, vec![0.0, 0.0]);
    }

    #[test]
    fn stationary_offloading_reward_is_constant() {
        let mut s = scenario(6);
        s.terminals[0].task_bits = 1e9;
        s.terminals[1].task_bits = 1e9;
        let cfg = EnvConfig::default();
        let mut env = Environment::new(s, cfg, 1).unwrap();
        let rewards: Vec<f64> = (0..5).map(|_| env.step(&hover(true, 3)).unwrap().reward).collect();
        assert!(rewards.iter().all(|r| *r == rewards[0]));
    }

    #[test]
    fn layout_round_trip() {
        let s = scenario(5);
        let layout = ActionLayout::new(&s, &RewardConfig::default());
        assert_eq!(layout.heads(), vec![5, 3, 5, 2, 2, 5, 5, 5, 5]);
        let a = EnvAction {
            movement: Move::West,
            climb: Climb::Down,
            time_level: 3,
            offload: vec![true, false],
            power_levels: vec![0, 4, 2, 1],
        };
        assert_eq!(layout.decode(&layout.encode(&a)).unwrap(), a);
        assert!(layout.decode(&[0; 3]).is_err());
        assert!(layout.decode(&[5, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn metrics_single_slot_and_additivity() {
        let s = scenario(10);
        let cfg = EnvConfig::default();
        let mut env = Environment::new(s, cfg, 3).unwrap();
        let one = env.step(&hover(true, 4)).unwrap();
        let m = episode_metrics(core::slice::from_ref(&one)).unwrap();
        let bits: f64 = one.info.processed.iter().sum();
        assert_relative_eq!(m.efficiency, bits / one.info.slot_energy, max_relative = 1e-15);
        assert_eq!(episode_metrics(&[]).unwrap_err(), EnvError::EmptyEpisode);
    }

    #[test]
    fn metrics_match_second_pass() {
        let s = scenario(10);
        let layout = ActionLayout::new(&s, &RewardConfig::default());
        let mut env = Environment::new(s, EnvConfig::default(), 4).unwrap();
        let mut r = rng::stream(4, 99);
        let mut log = Vec::new();
        for _ in 0..10 {
            let idx: Vec<usize> = layout.heads().iter().map(|&n| (r.next_u32() as usize) % n).collect();
            log.push(env.step(&layout.decode(&idx).unwrap()).unwrap());
        }
        let m = episode_metrics(&log).unwrap();
        let mut bits = 0.0;
        let mut energy = 0.0;
        let mut reward = 0.0;
        for tr in log.iter() {
            for b in &tr.info.processed {
                bits += b;
            }
            energy += tr.info.slot_energy;
            reward += tr.reward;
        }
        assert_relative_eq!(m.total_processed, bits, max_relative = 1e-12);
        assert_relative_eq!(m.total_energy, energy, max_relative = 1e-12);
        assert_relative_eq!(m.efficiency, bits / energy, max_relative = 1e-12);
        assert_relative_eq!(m.total_reward, reward, max_relative = 1e-12);
        assert_relative_eq!(log.last().unwrap().next_state.cumulative_energy, energy, max_relative = 1e-12);
    }

    #[test]
    fn random_decoding_and_baselines_run() {
        for (access, decoding) in [
            (AccessScheme::Rsma, DecodingPolicy::Random),
            (AccessScheme::Rsma, DecodingPolicy::Oracle),
            (AccessScheme::Noma, DecodingPolicy::Priority),
            (AccessScheme::Fdma, DecodingPolicy::Priority),
        ] {
            let cfg = EnvConfig { access, decoding, reward: RewardConfig::default() };
            let mut env = Environment::new(scenario(3), cfg, 5).unwrap();
            let tr = env.step(&hover(true, 2)).unwrap();
            assert!(tr.info.gt_rates.iter().all(|r| *r > 0.0));
        }
    }

    proptest! {
        #[test]
        fn never_leaves_the_envelope(seed in 0u64..1000) {
            let s = scenario(30);
            let layout = ActionLayout::new(&s, &RewardConfig::default());
            let mut env = Environment::new(s.clone(), EnvConfig::default(), seed).unwrap();
            let mut r = rng::stream(seed, 77);
            for _ in 0..30 {
                let idx: Vec<usize> = layout.heads().iter().map(|&n| (r.next_u32() as usize) % n).collect();
                let tr = env.step(&layout.decode(&idx).unwrap()).unwrap();
                let pose = tr.next_state.uav;
                prop_assert!(s.grid.coords(pose.cell).is_ok());
                prop_assert!(s.bounds.altitude_ok(pose.alt_level));
                prop_assert!((tr.reward + tr.info.penalty - tr.info.efficiency_term).abs() <= 1e-12 * tr.info.efficiency_term.abs().max(1.0));
                prop_assert_eq!(tr.done, tr.next_state.slot == 30);
            }
        }

        #[test]
        fn same_seed_same_transitions(seed in 0u64..200) {
            let s = scenario(8);
            let layout = ActionLayout::new(&s, &RewardConfig::default());
            let cfg = EnvConfig { decoding: DecodingPolicy::Random, ..EnvConfig::default() };
            let run = |seed: u64| {
                let mut env = Environment::new(s.clone(), cfg.clone(), seed).unwrap();
                let mut r = rng::stream(seed, 78);
                (0..8).map(|_| {
                    let idx: Vec<usize> = layout.heads().iter().map(|&n| (r.next_u32() as usize) % n).collect();
                    env.step(&layout.decode(&idx).unwrap()).unwrap()
                }).collect::<Vec<_>>()
            };
            let a = run(seed);
            let b = run(seed);
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.reward.to_bits(), y.reward.to_bits());
                prop_assert_eq!(&x.info.order, &y.info.order);
            }
        }
    }
}
