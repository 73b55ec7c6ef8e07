//! Immutable world description.

use alloc::vec::Vec;

use rand::Rng;

use crate::access::{AccessError, ComputeParams, RsmaConfig};
use crate::physics::{
    AreaGrid, ChannelParams, GroundTerminal, MissionBounds, PhysicsError, Point, PropulsionParams, UavPose,
};
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error("{0}")]
    Inconsistent(&'static str),
}

/// Grid, mission envelope, physical constants and the GT population.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: AreaGrid,
    pub bounds: MissionBounds,
    pub propulsion: PropulsionParams,
    pub channel: ChannelParams,
    pub rsma: RsmaConfig,
    pub compute: ComputeParams,
    pub terminals: Vec<GroundTerminal>,
}

/// Ranges used when drawing a random GT population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRanges {
    pub cycles: (f64, f64),
    pub bits: (f64, f64),
    pub local_rate: f64,
}

impl Default for TaskRanges {
    fn default() -> Self {
        Self { cycles: (500.0, 2500.0), bits: (1000.0, 1500.0), local_rate: 5.0 }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.bounds.validate(&self.grid)?;
        self.propulsion.validate()?;
        self.channel.validate()?;
        if !(self.compute.uav_rate > 0.0) {
            return Err(ScenarioError::Inconsistent("UAV CPU rate must be positive"));
        }
        if self.terminals.is_empty() {
            return Err(ScenarioError::Inconsistent("need at least one ground terminal"));
        }
        if self.rsma.gts() != self.terminals.len() {
            return Err(ScenarioError::Inconsistent("split ratios do not match the number of GTs"));
        }
        for (k, t) in self.terminals.iter().enumerate() {
            if t.id != k {
                return Err(ScenarioError::Inconsistent("GT ids must be 0..K in order"));
            }
            t.validate(&self.grid)?;
        }
        Ok(())
    }

    pub fn gts(&self) -> usize {
        self.terminals.len()
    }

    pub fn submessages(&self) -> usize {
        self.rsma.submessages()
    }

    /// Default system with `K` GTs drawn uniformly over a 1 km square.
    ///
    /// The area is a 101×101 grid of 10 m cells, the UAV starts and ends at
    /// the origin at 200 m, altitude levels are 10 m apart and slots are
    /// 1–5 s in 1 s steps.
    pub fn default_with_random_gts(k: usize, placement_seed: u64) -> Result<Self, ScenarioError> {
        let grid = AreaGrid::new(101, 101, 10.0, 10.0, Point::default())?;
        let mut rng = rng::stream(placement_seed, streams::PLACEMENT);
        let terminals = random_terminals(&grid, k, TaskRanges::default(), &mut rng);
        Self::default_with_terminals(grid, terminals)
    }

    pub fn default_with_terminals(grid: AreaGrid, terminals: Vec<GroundTerminal>) -> Result<Self, ScenarioError> {
        let k = terminals.len();
        let cfg = Self {
            grid,
            bounds: default_bounds(100),
            propulsion: PropulsionParams::DEFAULT,
            channel: ChannelParams::default(),
            rsma: RsmaConfig::uniform(k, 2, 5e-3, 0.2)?,
            compute: ComputeParams { uav_rate: 100.0 },
            terminals,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Centroid of the GT positions.
    pub fn gt_centroid(&self) -> Point {
        let n = self.terminals.len() as f64;
        let (x, y) = self.terminals.iter().fold((0.0, 0.0), |(x, y), t| (x + t.position.x, y + t.position.y));
        Point::new(x / n, y / n)
    }
}

/// Mission envelope with the default altitude/time/speed limits.
pub fn default_bounds(slots: usize) -> MissionBounds {
    MissionBounds {
        h_min: 100.0,
        h_max: 200.0,
        t_min: 1.0,
        t_max: 5.0,
        v_max_h: 10.0,
        v_max_v: 10.0,
        alt_levels: 20,
        time_levels: 5,
        start: UavPose::new(1, 20, 1),
        end: UavPose::new(1, 20, 1),
        slots,
    }
}

/// Uniformly placed GTs with tasks drawn from `ranges`.
pub fn random_terminals<R: Rng + ?Sized>(
    grid: &AreaGrid,
    k: usize,
    ranges: TaskRanges,
    rng: &mut R,
) -> Vec<GroundTerminal> {
    let (w, h) = grid.extent();
    let o = grid.origin();
    let draw = |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    (0..k)
        .map(|id| {
            let position = Point::new(o.x + draw(rng, (0.0, w)), o.y + draw(rng, (0.0, h)));
            GroundTerminal {
                id,
                position,
                task_cycles: draw(rng, ranges.cycles),
                task_bits: draw(rng, ranges.bits),
                local_rate: ranges.local_rate,
            }
        })
        .collect()
}
