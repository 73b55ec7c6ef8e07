//! Geometry, UAV kinematics, propulsion energy and the air-to-ground channel.
//!
//! All quantities are SI and double precision. Cells are numbered row-major
//! from the origin corner starting at 1, so cell 1 is centred on the grid
//! origin and cell `cols + 1` sits one `y_spacing` north of it.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PhysicsError {
    #[error("cell index {0} is outside the grid")]
    InvalidCell(usize),
    #[error("slot duration is zero")]
    ZeroDuration,
    #[error("speeds and durations must be non-negative and finite")]
    InvalidKinematics,
    #[error("altitude must be positive and distance non-negative")]
    InvalidGeometry,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, PhysicsError>;

/// Horizontal position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// 1-based cell index into an [`AreaGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub usize);

/// Uniform grid of cell centres covering the task area.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaGrid {
    cols: usize,
    rows: usize,
    x_spacing: f64,
    y_spacing: f64,
    origin: Point,
}

impl AreaGrid {
    pub fn new(cols: usize, rows: usize, x_spacing: f64, y_spacing: f64, origin: Point) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(PhysicsError::InvalidParameter("grid needs at least one row and column"));
        }
        if !(x_spacing > 0.0 && y_spacing > 0.0 && x_spacing.is_finite() && y_spacing.is_finite()) {
            return Err(PhysicsError::InvalidParameter("cell spacing must be positive"));
        }
        Ok(Self { cols, rows, x_spacing, y_spacing, origin })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn x_spacing(&self) -> f64 {
        self.x_spacing
    }

    pub fn y_spacing(&self) -> f64 {
        self.y_spacing
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Number of cells `L`.
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Width and height spanned by the cell centres.
    pub fn extent(&self) -> (f64, f64) {
        ((self.cols - 1) as f64 * self.x_spacing, (self.rows - 1) as f64 * self.y_spacing)
    }

    /// Zero-based `(column, row)` of a cell.
    pub fn coords(&self, idx: CellIndex) -> Result<(usize, usize)> {
        if idx.0 == 0 || idx.0 > self.len() {
            return Err(PhysicsError::InvalidCell(idx.0));
        }
        let zero = idx.0 - 1;
        Ok((zero % self.cols, zero / self.cols))
    }

    pub fn cell_at(&self, col: usize, row: usize) -> Option<CellIndex> {
        (col < self.cols && row < self.rows).then(|| CellIndex(row * self.cols + col + 1))
    }

    pub fn cell_center(&self, idx: CellIndex) -> Result<Point> {
        let (col, row) = self.coords(idx)?;
        Ok(Point::new(
            self.origin.x + col as f64 * self.x_spacing,
            self.origin.y + row as f64 * self.y_spacing,
        ))
    }

    /// Cell whose centre is closest to `p` (clamped to the grid).
    pub fn nearest_cell(&self, p: Point) -> CellIndex {
        let snap = |v: f64, spacing: f64, n: usize| -> usize {
            let k = libm::round(v / spacing);
            if k <= 0.0 {
                0
            } else {
                (k as usize).min(n - 1)
            }
        };
        let col = snap(p.x - self.origin.x, self.x_spacing, self.cols);
        let row = snap(p.y - self.origin.y, self.y_spacing, self.rows);
        CellIndex(row * self.cols + col + 1)
    }

    /// Whether `p` lies inside the rectangle spanned by the cell centres.
    pub fn contains(&self, p: Point) -> bool {
        let (w, h) = self.extent();
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        (0.0..=w).contains(&dx) && (0.0..=h).contains(&dy)
    }
}

/// Discrete UAV waypoint: cell, altitude level and flight-time level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UavPose {
    pub cell: CellIndex,
    pub alt_level: u32,
    pub time_level: u32,
}

impl UavPose {
    pub const fn new(cell: usize, alt_level: u32, time_level: u32) -> Self {
        Self { cell: CellIndex(cell), alt_level, time_level }
    }
}

/// Altitude/duration envelopes, speed limits and mission endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionBounds {
    pub h_min: f64,
    pub h_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub v_max_h: f64,
    pub v_max_v: f64,
    /// Number of altitude levels `H`.
    pub alt_levels: u32,
    /// Number of flight-time levels.
    pub time_levels: u32,
    pub start: UavPose,
    pub end: UavPose,
    /// Number of slots `N` in an episode.
    pub slots: usize,
}

impl MissionBounds {
    pub fn validate(&self, grid: &AreaGrid) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min <= self.h_max) {
            return Err(PhysicsError::InvalidParameter("need 0 < h_min <= h_max"));
        }
        if !(self.t_min > 0.0 && self.t_min <= self.t_max) {
            return Err(PhysicsError::InvalidParameter("need 0 < t_min <= t_max"));
        }
        if !(self.v_max_h > 0.0 && self.v_max_v > 0.0) {
            return Err(PhysicsError::InvalidParameter("speed limits must be positive"));
        }
        if self.slots == 0 {
            return Err(PhysicsError::InvalidParameter("need at least one slot"));
        }
        if self.alt_step() <= 0.0 || self.time_step() <= 0.0 {
            return Err(PhysicsError::InvalidParameter("level counts exceed the altitude/time maxima"));
        }
        if self.alt_level_range().is_none() || self.time_level_range().is_none() {
            return Err(PhysicsError::InvalidParameter("no discrete level satisfies the envelope"));
        }
        for pose in [self.start, self.end] {
            grid.coords(pose.cell)?;
            if !self.altitude_ok(pose.alt_level) || !self.duration_ok(pose.time_level) {
                return Err(PhysicsError::InvalidParameter("start/end pose outside the envelope"));
            }
        }
        Ok(())
    }

    /// Altitude step `Δh = ⌊h_max / H⌋`.
    pub fn alt_step(&self) -> f64 {
        libm::floor(self.h_max / self.alt_levels as f64)
    }

    /// Duration step `Δt = ⌊t_max / T⌋`.
    pub fn time_step(&self) -> f64 {
        libm::floor(self.t_max / self.time_levels as f64)
    }

    pub fn altitude(&self, level: u32) -> f64 {
        level as f64 * self.alt_step()
    }

    pub fn duration(&self, level: u32) -> f64 {
        level as f64 * self.time_step()
    }

    pub fn altitude_ok(&self, level: u32) -> bool {
        let h = self.altitude(level);
        (1..=self.alt_levels).contains(&level) && h >= self.h_min && h <= self.h_max
    }

    pub fn duration_ok(&self, level: u32) -> bool {
        let t = self.duration(level);
        (1..=self.time_levels).contains(&level) && t >= self.t_min && t <= self.t_max
    }

    /// Inclusive range of altitude levels satisfying `h_min ≤ level·Δh ≤ h_max`.
    pub fn alt_level_range(&self) -> Option<(u32, u32)> {
        let valid = (1..=self.alt_levels).filter(|&l| self.altitude_ok(l));
        let lo = valid.clone().next()?;
        Some((lo, valid.last().unwrap_or(lo)))
    }

    pub fn time_level_range(&self) -> Option<(u32, u32)> {
        let valid = (1..=self.time_levels).filter(|&l| self.duration_ok(l));
        let lo = valid.clone().next()?;
        Some((lo, valid.last().unwrap_or(lo)))
    }
}

/// Rotary-wing propulsion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropulsionParams {
    /// Blade profile power in hover `W0`.
    pub blade_profile_power: f64,
    /// Induced power in hover `W1`.
    pub induced_power: f64,
    /// Climb/descent power per m/s `W2`.
    pub climb_power: f64,
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover.
    pub mean_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    pub rotor_solidity: f64,
    pub air_density: f64,
    pub rotor_disc_area: f64,
}

impl PropulsionParams {
    pub const DEFAULT: Self = Self {
        blade_profile_power: 79.9,
        induced_power: 88.6,
        climb_power: 11.46,
        tip_speed: 120.0,
        mean_induced_velocity: 4.03,
        fuselage_drag_ratio: 0.6,
        rotor_solidity: 0.05,
        air_density: 1.225,
        rotor_disc_area: 0.503,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.blade_profile_power,
            self.induced_power,
            self.climb_power,
            self.tip_speed,
            self.mean_induced_velocity,
            self.fuselage_drag_ratio,
            self.rotor_solidity,
            self.air_density,
            self.rotor_disc_area,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(PhysicsError::InvalidParameter("propulsion parameters must be positive"))
        }
    }

    /// Propulsion power in watts at the given speeds.
    pub fn power(&self, v_h: f64, v_v: f64) -> f64 {
        let ut2 = self.tip_speed * self.tip_speed;
        let v2 = v_h * v_h;
        let vbar2 = self.mean_induced_velocity * self.mean_induced_velocity;
        let blade = self.blade_profile_power * (1.0 + 3.0 * v2 / ut2);
        let parasite =
            0.5 * self.fuselage_drag_ratio * self.air_density * self.rotor_solidity * self.rotor_disc_area * v2 * v_h;
        let induced = self.induced_power
            * libm::sqrt(libm::sqrt(1.0 + v2 * v2 / (4.0 * vbar2 * vbar2)) - v2 / (2.0 * vbar2));
        blade + parasite + induced + self.climb_power * v_v
    }
}

impl Default for PropulsionParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Air-to-ground channel and receiver constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub alpha: f64,
    pub beta: f64,
    pub zeta_los_db: f64,
    pub zeta_nlos_db: f64,
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub bandwidth_hz: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_psd: f64,
}

/// Converts a power spectral density from dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, dbm / 10.0) * 1e-3
}

impl ChannelParams {
    pub fn with_noise_dbm_per_hz(mut self, dbm: f64) -> Self {
        self.noise_psd = dbm_per_hz_to_watts(dbm);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(PhysicsError::InvalidParameter("alpha and beta must be positive"));
        }
        if self.zeta_nlos_db < self.zeta_los_db {
            return Err(PhysicsError::InvalidParameter("NLoS excess loss must not be below LoS"));
        }
        if !(self.carrier_hz > 0.0 && self.light_speed > 0.0) {
            return Err(PhysicsError::InvalidParameter("carrier frequency and light speed must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.noise_psd > 0.0) {
            return Err(PhysicsError::InvalidParameter("bandwidth and noise density must be positive"));
        }
        Ok(())
    }

    /// `A1 = ζ_LoS − ζ_NLoS`.
    pub fn los_offset_db(&self) -> f64 {
        self.zeta_los_db - self.zeta_nlos_db
    }

    /// `A2 = 20·log10(4π f_c / c) + ζ_NLoS`.
    pub fn base_loss_db(&self) -> f64 {
        20.0 * libm::log10(4.0 * core::f64::consts::PI * self.carrier_hz / self.light_speed) + self.zeta_nlos_db
    }

    /// Receiver noise power `B·N0` in watts.
    pub fn noise_power(&self) -> f64 {
        self.bandwidth_hz * self.noise_psd
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            alpha: 12.08,
            beta: 0.11,
            zeta_los_db: 1.6,
            zeta_nlos_db: 23.0,
            carrier_hz: 2.4e9,
            light_speed: 3e8,
            bandwidth_hz: 1e6,
            noise_psd: 0.0,
        }
        .with_noise_dbm_per_hz(-174.0)
    }
}

/// A stationary user with a computation task.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTerminal {
    pub id: usize,
    pub position: Point,
    /// CPU cycles `C_k` required by the task.
    pub task_cycles: f64,
    /// Task size `D_k` in bits.
    pub task_bits: f64,
    /// Local processing rate `f_g`.
    pub local_rate: f64,
}

impl GroundTerminal {
    pub fn validate(&self, grid: &AreaGrid) -> Result<()> {
        if !(self.task_cycles > 0.0 && self.task_bits > 0.0 && self.local_rate >= 0.0) {
            return Err(PhysicsError::InvalidParameter("task cycles and bits must be positive"));
        }
        if !grid.contains(self.position) {
            return Err(PhysicsError::InvalidParameter("ground terminal outside the grid"));
        }
        Ok(())
    }
}

/// Horizontal and vertical speed flown during one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSpeeds {
    pub horizontal: f64,
    pub vertical: f64,
    pub duration: f64,
}

impl SlotSpeeds {
    pub fn exceeds_horizontal(&self, bounds: &MissionBounds) -> bool {
        self.horizontal > bounds.v_max_h
    }

    pub fn exceeds_vertical(&self, bounds: &MissionBounds) -> bool {
        self.vertical > bounds.v_max_v
    }
}

/// Speeds flown from `pose` to `next` over `pose`'s slot duration.
pub fn slot_speeds(pose: &UavPose, next: &UavPose, grid: &AreaGrid, bounds: &MissionBounds) -> Result<SlotSpeeds> {
    let duration = bounds.duration(pose.time_level);
    if duration <= 0.0 {
        return Err(PhysicsError::ZeroDuration);
    }
    let from = grid.cell_center(pose.cell)?;
    let to = grid.cell_center(next.cell)?;
    let climb = libm::fabs(bounds.altitude(next.alt_level) - bounds.altitude(pose.alt_level));
    Ok(SlotSpeeds { horizontal: from.distance(to) / duration, vertical: climb / duration, duration })
}

/// Energy in joules spent flying one slot.
pub fn slot_propulsion_energy(v_h: f64, v_v: f64, duration: f64, p: &PropulsionParams) -> Result<f64> {
    let ok = |v: f64| v >= 0.0 && v.is_finite();
    if !(ok(v_h) && ok(v_v) && ok(duration)) {
        return Err(PhysicsError::InvalidKinematics);
    }
    if duration == 0.0 {
        return Err(PhysicsError::ZeroDuration);
    }
    Ok(duration * p.power(v_h, v_v))
}

/// Total propulsion energy `E^uav` along a pose sequence.
pub fn trajectory_energy(
    poses: &[UavPose],
    grid: &AreaGrid,
    bounds: &MissionBounds,
    p: &PropulsionParams,
) -> Result<f64> {
    if poses.len() < 2 {
        return Err(PhysicsError::InvalidParameter("a trajectory needs at least two poses"));
    }
    poses.windows(2).try_fold(0.0, |acc, w| {
        let s = slot_speeds(&w[0], &w[1], grid, bounds)?;
        Ok(acc + slot_propulsion_energy(s.horizontal, s.vertical, s.duration, p)?)
    })
}

/// Elevation angle in degrees; 90° straight overhead.
pub fn elevation_deg(h: f64, l: f64) -> f64 {
    libm::atan2(h, l).to_degrees()
}

/// Line-of-sight probability at altitude `h` and horizontal distance `l`.
pub fn los_probability(h: f64, l: f64, ch: &ChannelParams) -> Result<f64> {
    if !(h > 0.0 && l >= 0.0 && h.is_finite() && l.is_finite()) {
        return Err(PhysicsError::InvalidGeometry);
    }
    let theta = elevation_deg(h, l);
    Ok(1.0 / (1.0 + ch.alpha * libm::exp(-ch.beta * (theta - ch.alpha))))
}

/// Mean path loss in dB.
pub fn pathloss_db(h: f64, l: f64, ch: &ChannelParams) -> Result<f64> {
    let los = los_probability(h, l, ch)?;
    let distance = libm::hypot(h, l);
    Ok(20.0 * libm::log10(distance) + ch.los_offset_db() * los + ch.base_loss_db())
}

/// Linear power gain from a loss in dB.
pub fn channel_gain(d_db: f64) -> f64 {
    libm::pow(10.0, -d_db / 10.0)
}

/// Channel power gain between a UAV at `uav` / altitude `h` and a GT at `gt`.
pub fn link_gain(uav: Point, h: f64, gt: Point, ch: &ChannelParams) -> Result<f64> {
    Ok(channel_gain(pathloss_db(h, uav.distance(gt), ch)?))
}
