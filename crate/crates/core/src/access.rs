//! Uplink multiple access and the computing model.
//!
//! Each offloading GT splits its message into `I` sub-messages that the UAV
//! decodes with successive interference cancellation. A sub-message only sees
//! interference from the offloading sub-messages decoded after it; GTs that
//! compute locally neither transmit nor interfere. Channel gains are linear
//! power gains throughout.
//!
//! GT and sub-message indices are zero-based in this module.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::physics::{ChannelParams, GroundTerminal};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AccessError {
    #[error("decoding order does not cover every offloading sub-message")]
    IncompleteOrder,
    #[error("decoding order contains a duplicate or a non-offloading sub-message")]
    InvalidOrder,
    #[error("exhaustive search over {0} sub-messages is too large")]
    OracleTooLarge(usize),
    #[error("total energy must be positive")]
    ZeroEnergy,
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("invalid access configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, AccessError>;

/// Largest number of sub-messages [`oracle_best_order`] will enumerate.
pub const ORACLE_MAX_PAIRS: usize = 8;

/// Relative slack when comparing a power sum against `P_max`.
const POWER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AccessScheme {
    #[default]
    Rsma,
    Noma,
    Fdma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DecodingPolicy {
    /// Sort sub-messages by the gain/split priority metric.
    #[default]
    Priority,
    /// Uniformly random permutation each slot.
    Random,
    /// Exhaustive search for the order maximizing processed data.
    Oracle,
}

/// Rate-splitting configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RsmaConfig {
    submessages: usize,
    /// Split ratios `μ`, row-major `[gt][submessage]`.
    split: Vec<f64>,
    pub p_max: f64,
    /// Minimum rate in bit/s/Hz.
    pub r_min: f64,
}

impl RsmaConfig {
    /// Uniform split `μ = 1/I` for every GT.
    pub fn uniform(gts: usize, submessages: usize, p_max: f64, r_min: f64) -> Result<Self> {
        if submessages == 0 {
            return Err(AccessError::InvalidConfig("need at least one sub-message"));
        }
        let mu = 1.0 / submessages as f64;
        Self::with_split(submessages, vec![mu; gts * submessages], p_max, r_min)
    }

    pub fn with_split(submessages: usize, split: Vec<f64>, p_max: f64, r_min: f64) -> Result<Self> {
        if submessages == 0 {
            return Err(AccessError::InvalidConfig("need at least one sub-message"));
        }
        if split.len() % submessages != 0 {
            return Err(AccessError::ShapeMismatch("split ratios must have I entries per GT"));
        }
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(AccessError::InvalidConfig("P_max must be positive"));
        }
        if !(r_min >= 0.0 && r_min.is_finite()) {
            return Err(AccessError::InvalidConfig("R_min must be non-negative"));
        }
        for row in split.chunks(submessages) {
            if row.iter().any(|m| !(*m >= 0.0)) {
                return Err(AccessError::InvalidConfig("split ratios must be non-negative"));
            }
            if libm::fabs(row.iter().sum::<f64>() - 1.0) > 1e-9 {
                return Err(AccessError::InvalidConfig("split ratios of a GT must sum to one"));
            }
        }
        Ok(Self { submessages, split, p_max, r_min })
    }

    pub fn submessages(&self) -> usize {
        self.submessages
    }

    pub fn gts(&self) -> usize {
        self.split.len() / self.submessages
    }

    pub fn split(&self, gt: usize, part: usize) -> f64 {
        self.split[gt * self.submessages + part]
    }

    pub fn split_ratios(&self) -> &[f64] {
        &self.split
    }
}

/// Transmit power per sub-message, row-major `[gt][submessage]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    submessages: usize,
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(submessages: usize, p: Vec<f64>) -> Result<Self> {
        if submessages == 0 || p.len() % submessages != 0 {
            return Err(AccessError::ShapeMismatch("powers must have I entries per GT"));
        }
        Ok(Self { submessages, p })
    }

    pub fn zeros(gts: usize, submessages: usize) -> Self {
        Self { submessages, p: vec![0.0; gts * submessages] }
    }

    pub fn get(&self, gt: usize, part: usize) -> f64 {
        self.p[gt * self.submessages + part]
    }

    pub fn set(&mut self, gt: usize, part: usize, watts: f64) {
        self.p[gt * self.submessages + part] = watts;
    }

    pub fn gt_total(&self, gt: usize) -> f64 {
        self.p[gt * self.submessages..(gt + 1) * self.submessages].iter().sum()
    }

    pub fn gts(&self) -> usize {
        self.p.len() / self.submessages
    }

    pub fn submessages(&self) -> usize {
        self.submessages
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Whether every power is non-negative.
    pub fn non_negative(&self) -> bool {
        self.p.iter().all(|v| *v >= 0.0)
    }

    /// Whether every GT respects `Σ_i p ≤ P_max`.
    pub fn within_budget(&self, p_max: f64) -> bool {
        (0..self.gts()).all(|k| self.gt_total(k) <= p_max * (1.0 + POWER_SLACK))
    }
}

/// Binary offloading decisions, one per GT.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OffloadVector(pub Vec<bool>);

impl OffloadVector {
    pub fn all(gts: usize) -> Self {
        Self(vec![true; gts])
    }

    pub fn none(gts: usize) -> Self {
        Self(vec![false; gts])
    }

    pub fn is_offloading(&self, gt: usize) -> bool {
        self.0[gt]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|a| **a).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One sub-message of one GT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubMessage {
    pub gt: usize,
    pub part: usize,
}

impl SubMessage {
    pub const fn new(gt: usize, part: usize) -> Self {
        Self { gt, part }
    }
}

/// SIC decoding order, earliest-decoded first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct DecodingOrder(pub Vec<SubMessage>);

impl DecodingOrder {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, SubMessage> {
        self.0.iter()
    }
}

/// All sub-messages of offloading GTs in lexicographic order.
pub fn offloading_pairs(offload: &OffloadVector, submessages: usize) -> Vec<SubMessage> {
    (0..offload.len())
        .filter(|&k| offload.is_offloading(k))
        .flat_map(|k| (0..submessages).map(move |i| SubMessage::new(k, i)))
        .collect()
}

/// UAV onboard computing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputeParams {
    /// UAV CPU rate `f_u`.
    pub uav_rate: f64,
}

/// Decoding priority `υ = g·(1 + 1/(2^(μ·R_min) − 1))`.
///
/// A zero exponent means no minimum SINR, which sends `υ` to `+∞`.
pub fn priority_metric(gain: f64, mu: f64, r_min: f64) -> f64 {
    let exponent = mu * r_min;
    if exponent <= 0.0 {
        return f64::INFINITY;
    }
    gain * (1.0 + 1.0 / libm::expm1(exponent * core::f64::consts::LN_2))
}

/// Orders offloading sub-messages by descending priority, ties by `(gt, part)`.
pub fn priority_order(gains: &[f64], offload: &OffloadVector, cfg: &RsmaConfig) -> Result<DecodingOrder> {
    check_gt_count(gains.len(), offload, cfg)?;
    let mut keyed: Vec<(f64, SubMessage)> = offloading_pairs(offload, cfg.submessages())
        .into_iter()
        .map(|sm| (priority_metric(gains[sm.gt], cfg.split(sm.gt, sm.part), cfg.r_min), sm))
        .collect();
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    Ok(DecodingOrder(keyed.into_iter().map(|(_, sm)| sm).collect()))
}

/// Uniformly random permutation of the offloading sub-messages.
pub fn random_order<R: Rng + ?Sized>(offload: &OffloadVector, submessages: usize, rng: &mut R) -> DecodingOrder {
    let mut pairs = offloading_pairs(offload, submessages);
    pairs.shuffle(rng);
    DecodingOrder(pairs)
}

fn check_gt_count(gains: usize, offload: &OffloadVector, cfg: &RsmaConfig) -> Result<()> {
    if gains != offload.len() || gains != cfg.gts() {
        return Err(AccessError::ShapeMismatch("gains, offload vector and split ratios disagree on K"));
    }
    Ok(())
}

/// Achievable sub-message rates in bit/s, row-major `[gt][submessage]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmessageRates {
    submessages: usize,
    rates: Vec<f64>,
}

impl SubmessageRates {
    pub fn get(&self, gt: usize, part: usize) -> f64 {
        self.rates[gt * self.submessages + part]
    }

    /// `Σ_i R_{k,i}`.
    pub fn gt_sum(&self, gt: usize) -> f64 {
        self.rates[gt * self.submessages..(gt + 1) * self.submessages].iter().sum()
    }

    pub fn gt_sums(&self) -> Vec<f64> {
        (0..self.gts()).map(|k| self.gt_sum(k)).collect()
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn gts(&self) -> usize {
        self.rates.len() / self.submessages
    }

    pub fn submessages(&self) -> usize {
        self.submessages
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rates
    }

    pub fn from_vec(submessages: usize, rates: Vec<f64>) -> Result<Self> {
        if submessages == 0 || rates.len() % submessages != 0 {
            return Err(AccessError::ShapeMismatch("rates must have I entries per GT"));
        }
        Ok(Self { submessages, rates })
    }
}

/// SIC rates of every sub-message under `order`.
pub fn submessage_rates(
    gains: &[f64],
    powers: &PowerAllocation,
    offload: &OffloadVector,
    order: &DecodingOrder,
    ch: &ChannelParams,
) -> Result<SubmessageRates> {
    let k = gains.len();
    if offload.len() != k || powers.gts() != k {
        return Err(AccessError::ShapeMismatch("gains, powers and offload vector disagree on K"));
    }
    let parts = powers.submessages();
    let mut seen = vec![false; k * parts];
    for sm in order.iter() {
        if sm.gt >= k || sm.part >= parts || !offload.is_offloading(sm.gt) {
            return Err(AccessError::InvalidOrder);
        }
        let slot = &mut seen[sm.gt * parts + sm.part];
        if *slot {
            return Err(AccessError::InvalidOrder);
        }
        *slot = true;
    }
    if order.len() != offload.count() * parts {
        return Err(AccessError::IncompleteOrder);
    }

    let noise = ch.noise_power();
    let mut rates = vec![0.0; k * parts];
    // Walk backwards so the running sum is exactly the later-decoded interference.
    let mut interference = 0.0;
    for sm in order.iter().rev() {
        let received = gains[sm.gt] * powers.get(sm.gt, sm.part);
        rates[sm.gt * parts + sm.part] = ch.bandwidth_hz * libm::log2(1.0 + received / (noise + interference));
        interference += received;
    }
    Ok(SubmessageRates { submessages: parts, rates })
}

/// Closed-form SIC sum rate `B·log2(1 + Σ g·p / (B·N0))` over offloading GTs.
pub fn sum_capacity(gains: &[f64], powers: &PowerAllocation, offload: &OffloadVector, ch: &ChannelParams) -> f64 {
    let received: f64 = (0..gains.len())
        .filter(|&k| offload.is_offloading(k))
        .map(|k| gains[k] * powers.gt_total(k))
        .sum();
    ch.bandwidth_hz * libm::log2(1.0 + received / ch.noise_power())
}

/// Fraction `κ` of the slot spent transmitting so the UAV CPU keeps up.
pub fn transmit_fraction(sum_rate: f64, task: &GroundTerminal, cp: &ComputeParams) -> f64 {
    let absorb = cp.uav_rate * task.task_bits;
    absorb / (sum_rate * task.task_cycles + absorb)
}

/// Task bits `ϖ` processed in one slot.
pub fn processed_data(offloading: bool, sum_rate: f64, duration: f64, task: &GroundTerminal, cp: &ComputeParams) -> f64 {
    if offloading {
        let absorb = cp.uav_rate * task.task_bits;
        absorb * duration * sum_rate / (sum_rate * task.task_cycles + absorb)
    } else {
        duration * task.local_rate
    }
}

/// Energy efficiency `η` in bits per joule.
pub fn energy_efficiency(total_processed: f64, total_energy: f64) -> Result<f64> {
    if !(total_energy > 0.0) {
        return Err(AccessError::ZeroEnergy);
    }
    Ok(total_processed / total_energy)
}

/// Per-GT rates under the orthogonal or power-domain baselines.
///
/// Returns one rate per GT; GTs computing locally get `0`.
pub fn alt_access_rates(
    scheme: AccessScheme,
    gains: &[f64],
    per_gt_power: &[f64],
    offload: &OffloadVector,
    ch: &ChannelParams,
) -> Result<Vec<f64>> {
    let k = gains.len();
    if per_gt_power.len() != k || offload.len() != k {
        return Err(AccessError::ShapeMismatch("gains, powers and offload vector disagree on K"));
    }
    let mut rates = vec![0.0; k];
    let active: Vec<usize> = (0..k).filter(|&j| offload.is_offloading(j)).collect();
    if active.is_empty() {
        return Ok(rates);
    }
    match scheme {
        AccessScheme::Fdma => {
            let band = ch.bandwidth_hz / active.len() as f64;
            for &j in &active {
                rates[j] = band * libm::log2(1.0 + gains[j] * per_gt_power[j] / (band * ch.noise_psd));
            }
        }
        AccessScheme::Noma | AccessScheme::Rsma => {
            // Strongest GT decoded first.
            let mut order = active;
            order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
            let noise = ch.noise_power();
            let mut interference = 0.0;
            for &j in order.iter().rev() {
                let received = gains[j] * per_gt_power[j];
                rates[j] = ch.bandwidth_hz * libm::log2(1.0 + received / (noise + interference));
                interference += received;
            }
        }
    }
    Ok(rates)
}

/// Minimum-rate and split-proportion check for one GT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRateReport {
    /// `Σ_i R_{k,i} ≥ R_min·B`.
    pub meets_min_rate: bool,
    /// `max_i |R_{k,i}/ΣR − μ_{k,i}|`; with a zero sum every share counts as 0.
    pub split_deviation: f64,
}

pub fn rate_constraints_check(rates: &SubmessageRates, cfg: &RsmaConfig, ch: &ChannelParams) -> Vec<GtRateReport> {
    let floor = cfg.r_min * ch.bandwidth_hz;
    (0..rates.gts())
        .map(|k| {
            let total = rates.gt_sum(k);
            let split_deviation = (0..rates.submessages())
                .map(|i| {
                    let share = if total > 0.0 { rates.get(k, i) / total } else { 0.0 };
                    libm::fabs(share - cfg.split(k, i))
                })
                .fold(0.0, f64::max);
            GtRateReport { meets_min_rate: total >= floor, split_deviation }
        })
        .collect()
}

/// Objective used to rank decoding orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderObjective {
    /// Total processed bits `Σ_k ϖ_k` in the slot.
    SumProcessed,
    /// Number of GTs meeting the minimum-rate constraint.
    FeasibleCount,
}

/// Everything fixed while the decoding order varies.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub gains: &'a [f64],
    pub powers: &'a PowerAllocation,
    pub offload: &'a OffloadVector,
    pub terminals: &'a [GroundTerminal],
    pub rsma: &'a RsmaConfig,
    pub channel: &'a ChannelParams,
    pub compute: &'a ComputeParams,
    pub duration: f64,
}

/// Value of `order` under `objective`.
pub fn order_objective(ctx: &SlotContext<'_>, order: &DecodingOrder, objective: OrderObjective) -> Result<f64> {
    let rates = submessage_rates(ctx.gains, ctx.powers, ctx.offload, order, ctx.channel)?;
    Ok(match objective {
        OrderObjective::SumProcessed => (0..ctx.gains.len())
            .map(|k| {
                let on = ctx.offload.is_offloading(k);
                processed_data(on, rates.gt_sum(k), ctx.duration, &ctx.terminals[k], ctx.compute)
            })
            .sum(),
        OrderObjective::FeasibleCount => rate_constraints_check(&rates, ctx.rsma, ctx.channel)
            .iter()
            .enumerate()
            .filter(|(k, r)| ctx.offload.is_offloading(*k) && r.meets_min_rate)
            .count() as f64,
    })
}

/// Exhaustive search over every decoding order.
///
/// Permutations are visited in lexicographic order and only a strictly
/// better value replaces the incumbent, so ties resolve to the
/// lexicographically smallest order.
pub fn oracle_best_order(ctx: &SlotContext<'_>, objective: OrderObjective) -> Result<(DecodingOrder, f64)> {
    let mut pairs = offloading_pairs(ctx.offload, ctx.rsma.submessages());
    if pairs.len() > ORACLE_MAX_PAIRS {
        return Err(AccessError::OracleTooLarge(pairs.len()));
    }
    let mut best = DecodingOrder(pairs.clone());
    let mut best_value = order_objective(ctx, &best, objective)?;
    while next_permutation(&mut pairs) {
        let candidate = DecodingOrder(pairs.clone());
        let value = order_objective(ctx, &candidate, objective)?;
        if value > best_value {
            best_value = value;
            best = candidate;
        }
    }
    Ok((best, best_value))
}

/// Objective of every decoding order, in lexicographic permutation order.
pub fn all_order_objectives(ctx: &SlotContext<'_>, objective: OrderObjective) -> Result<Vec<f64>> {
    let mut pairs = offloading_pairs(ctx.offload, ctx.rsma.submessages());
    if pairs.len() > ORACLE_MAX_PAIRS {
        return Err(AccessError::OracleTooLarge(pairs.len()));
    }
    let mut values = vec![order_objective(ctx, &DecodingOrder(pairs.clone()), objective)?];
    while next_permutation(&mut pairs) {
        values.push(order_objective(ctx, &DecodingOrder(pairs.clone()), objective)?);
    }
    Ok(values)
}

/// Advances to the next lexicographic permutation; false after the last one.
pub fn next_permutation<T: Ord>(items: &mut [T]) -> bool {
    if items.len() < 2 {
        return false;
    }
    let mut i = items.len() - 1;
    while i > 0 && items[i - 1] >= items[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = items.len() - 1;
    while items[j] <= items[i - 1] {
        j -= 1;
    }
    items.swap(i - 1, j);
    items[i..].reverse();
    true
}
