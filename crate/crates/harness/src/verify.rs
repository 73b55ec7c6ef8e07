//! Property suites behind `uavmec verify`. Each check reports its measured
//! statistic next to the threshold it must meet.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use uavmec_core::access::{
    all_order_objectives, order_objective, priority_order, random_order, rate_constraints_check, submessage_rates,
    sum_capacity,
    ComputeParams, OffloadVector, OrderObjective, PowerAllocation, RsmaConfig,
    SlotContext,
};
use uavmec_core::agent::{
    actor_loss_grad, critic_loss_grad, forward_noise, logits_gradient, Batch, ChainNoise, DiffusionSchedule,
    Experience, GdrsAgent, HeadDistributions, NoiseScale, SacHyper,
};
use uavmec_core::nn::{finite_difference_check, GradCheckOptions, GradCheckReport};
use uavmec_core::physics::{link_gain, slot_propulsion_energy, ChannelParams, GroundTerminal, PropulsionParams};
use uavmec_core::rng::{self, SimRng};
use uavmec_core::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Telescoping,
    DecodingOracle,
    Gradcheck,
    Energy,
    Schedule,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Energy, Suite::Telescoping, Suite::DecodingOracle, Suite::Gradcheck, Suite::Schedule];
}

/// One property with its measured statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable bound, e.g. `<= 1e-9`.
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, threshold: format!("<= {bound:e}"), passed: measured <= bound }
    }

    fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, threshold: format!(">= {bound}"), passed: measured >= bound }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), measured: f64::from(u8::from(ok)), threshold: "= 1".into(), passed: ok }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict}  {}: measured {:.6e} (threshold {})", self.name, self.measured, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs one suite with fixed seeds.
pub fn verify(suite: Suite) -> VerifyReport {
    let checks = match suite {
        Suite::Energy => energy(),
        Suite::Telescoping => telescoping(),
        Suite::DecodingOracle => decoding_oracle(),
        Suite::Gradcheck => gradcheck(),
        Suite::Schedule => schedule(),
    };
    VerifyReport { checks }
}

fn energy() -> Vec<Check> {
    let p = PropulsionParams::DEFAULT;
    let hover = slot_propulsion_energy(0.0, 0.0, 1.0, &p).unwrap_or(f64::NAN);
    let climb = slot_propulsion_energy(0.0, 10.0, 1.0, &p).unwrap_or(f64::NAN);
    vec![
        Check::at_most("hover energy |E - 168.5 J|", (hover - 168.5).abs(), 1e-9),
        Check::at_most("climb energy |E - 283.1 J|", (climb - 283.1).abs(), 1e-9),
    ]
}

fn random_powers(r: &mut SimRng, k: usize, parts: usize, p_max: f64) -> PowerAllocation {
    let p = (0..k * parts).map(|_| r.random_range(0.0..=p_max / parts as f64)).collect();
    PowerAllocation::new(parts, p).expect("shape is consistent")
}

fn telescoping() -> Vec<Check> {
    let ch = ChannelParams::default();
    let mut r = rng::stream(11, 0);
    let mut worst: f64 = 0.0;
    let mut orders = 0usize;
    for _ in 0..200 {
        let k = r.random_range(2..=4);
        let gains: Vec<f64> = (0..k).map(|_| 10f64.powf(r.random_range(-12.0..-8.0))).collect();
        let powers = random_powers(&mut r, k, 2, 5e-3);
        let offload = OffloadVector::all(k);
        let exact = sum_capacity(&gains, &powers, &offload, &ch);
        for _ in 0..24 {
            let order = random_order(&offload, 2, &mut r);
            let rates = submessage_rates(&gains, &powers, &offload, &order, &ch).expect("valid order");
            worst = worst.max((rates.total() - exact).abs() / exact.max(f64::MIN_POSITIVE));
            orders += 1;
        }
    }
    vec![
        Check::at_most("max relative deviation of SIC sum rate from closed form", worst, 1e-9),
        Check::at_least("orders checked", orders as f64, 4800.0),
    ]
}

/// Random slot geometry with all GTs offloading.
struct OracleInstance {
    gains: Vec<f64>,
    powers: PowerAllocation,
    terminals: Vec<GroundTerminal>,
    rsma: RsmaConfig,
    duration: f64,
}

fn oracle_instance(r: &mut SimRng, ch: &ChannelParams) -> OracleInstance {
    let k = r.random_range(1..=3);
    let uav = Point::new(500.0, 500.0);
    let h = r.random_range(100.0..=200.0);
    let terminals: Vec<GroundTerminal> = (0..k)
        .map(|id| GroundTerminal {
            id,
            position: Point::new(r.random_range(0.0..=1000.0), r.random_range(0.0..=1000.0)),
            task_cycles: r.random_range(500.0..=2500.0),
            task_bits: r.random_range(1000.0..=1500.0),
            local_rate: 5.0,
        })
        .collect();
    let gains: Vec<f64> = terminals.iter().map(|t| link_gain(uav, h, t.position, ch).expect("valid geometry")).collect();
    let rsma = RsmaConfig::uniform(k, 2, 5e-3, 0.2).expect("valid split");
    let offload = OffloadVector::all(k);
    // Redraw until every GT meets its minimum rate under the priority order.
    let powers = loop {
        let p = random_powers(r, k, 2, 5e-3);
        let order = priority_order(&gains, &offload, &rsma).expect("valid config");
        let rates = submessage_rates(&gains, &p, &offload, &order, ch).expect("valid order");
        if rate_constraints_check(&rates, &rsma, ch).iter().all(|g| g.meets_min_rate) {
            break p;
        }
    };
    OracleInstance { gains, powers, terminals, rsma, duration: r.random_range(1..=5) as f64 }
}

fn decoding_oracle() -> Vec<Check> {
    let ch = ChannelParams::default();
    let cp = ComputeParams { uav_rate: 100.0 };
    let mut r = rng::stream(12, 0);
    let n = 500;
    let (mut above_median, mut near_best) = (0usize, 0usize);
    for _ in 0..n {
        let inst = oracle_instance(&mut r, &ch);
        let offload = OffloadVector::all(inst.gains.len());
        let ctx = SlotContext {
            gains: &inst.gains,
            powers: &inst.powers,
            offload: &offload,
            terminals: &inst.terminals,
            rsma: &inst.rsma,
            channel: &ch,
            compute: &cp,
            duration: inst.duration,
        };
        let order = priority_order(&inst.gains, &offload, &inst.rsma).expect("valid config");
        let value = order_objective(&ctx, &order, OrderObjective::SumProcessed).expect("valid order");
        let mut all = all_order_objectives(&ctx, OrderObjective::SumProcessed).expect("small instance");
        all.sort_by(f64::total_cmp);
        let median = if all.len() % 2 == 1 {
            all[all.len() / 2]
        } else {
            0.5 * (all[all.len() / 2 - 1] + all[all.len() / 2])
        };
        let best = *all.last().expect("at least one order");
        if value >= median - 1e-9 * median.abs() {
            above_median += 1;
        }
        if value >= 0.98 * best {
            near_best += 1;
        }
    }
    vec![
        Check::at_least("share of instances with priority order >= median order", above_median as f64 / n as f64, 0.99),
        Check::at_least("share of instances with priority order within 2% of oracle", near_best as f64 / n as f64, 0.90),
    ]
}

fn small_hyper() -> SacHyper {
    SacHyper {
        actor_hidden: vec![12, 12],
        critic_hidden: vec![12, 12],
        diffusion_steps: 5,
        embed_dim: 4,
        batch_size: 4,
        warmup: 4,
        replay_capacity: 100,
        ..SacHyper::default()
    }
}

fn random_batch(r: &mut SimRng, feature_dim: usize, heads: &[usize], n: usize) -> Batch {
    let exps: Vec<Experience> = (0..n)
        .map(|_| Experience {
            state: (0..feature_dim).map(|_| r.random_range(0.0..1.0)).collect(),
            action: heads.iter().map(|&h| r.random_range(0..h)).collect(),
            reward: r.random_range(-1.0..1.0),
            next_state: (0..feature_dim).map(|_| r.random_range(0.0..1.0)).collect(),
            done: false,
        })
        .collect();
    Batch::from_experiences(&exps)
}

fn gradcheck() -> Vec<Check> {
    let opts = GradCheckOptions::default();
    let heads = [5, 3, 2];
    let mut r = rng::stream(13, 0);
    let agent = GdrsAgent::new(4, &heads, small_hyper(), 13).expect("valid hyperparameters");

    let batch = random_batch(&mut r, 4, &heads, 6);
    let targets: Vec<f64> = batch.rewards.iter().map(|v| 3.0 * v).collect();
    let (_, g) = critic_loss_grad(&agent.critics[0], &batch, &heads, &targets).expect("shapes match");
    let mut params = agent.critics[0].params().to_vec();
    let mut probe = agent.critics[0].clone();
    let critic = finite_difference_check(
        &mut params,
        |p| {
            probe.params_mut().copy_from_slice(p);
            critic_loss_grad(&probe, &batch, &heads, &targets).expect("shapes match").0
        },
        &g,
        &opts,
        &mut r,
    );

    let mut z: Vec<f64> = (0..10).map(|_| r.random_range(-2.0..2.0)).collect();
    let w: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
    let temp = 0.7;
    let d = HeadDistributions::from_logits(&z, &heads);
    let g = logits_gradient(&d, &w, temp);
    let softmax = finite_difference_check(
        &mut z,
        |z| {
            let d = HeadDistributions::from_logits(z, &heads);
            temp * d.total_entropy() + d.probs().iter().zip(&w).map(|(p, w)| p * w).sum::<f64>()
        },
        &g,
        &opts,
        &mut r,
    );

    let states: Vec<f64> = (0..3 * 4).map(|_| r.random_range(0.0..1.0)).collect();
    let noise = ChainNoise::draw(5, 3 * 10, &mut r);
    let (_, g, _) = actor_loss_grad(&agent.actor, &agent.critics, 0.05, &states, 3, &noise).expect("shapes match");
    let mut params = agent.actor.denoiser.params().to_vec();
    let mut probe = agent.actor.clone();
    let actor = finite_difference_check(
        &mut params,
        |p| {
            probe.denoiser.params_mut().copy_from_slice(p);
            actor_loss_grad(&probe, &agent.critics, 0.05, &states, 3, &noise).expect("shapes match").0
        },
        &g,
        &opts,
        &mut r,
    );

    let check = |name: &str, rep: GradCheckReport| Check::at_most(name, rep.max_rel_error, 1e-5);
    vec![
        check("critic loss max relative error", critic),
        check("softmax-entropy heads max relative error", softmax),
        check("5-step reverse-chain actor loss max relative error", actor),
    ]
}

fn schedule() -> Vec<Check> {
    let s = DiffusionSchedule::new(20, 0.1, 20.0).expect("valid schedule");
    let decreasing = (1..=20).all(|t| s.nu_bar(t) < s.nu_bar(t - 1));
    let z0 = [0.5, -1.3, 2.0, 0.0];
    let t = 7;
    let mut r = rng::stream(14, 0);
    let draws = 100_000;
    let mut worst: f64 = 0.0;
    let mut sums = [0.0; 4];
    for _ in 0..draws {
        let eps: Vec<f64> = (0..4).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let z = forward_noise(&z0, t, &s, &eps);
        for (acc, v) in sums.iter_mut().zip(&z) {
            *acc += v * v;
        }
    }
    let nb = s.nu_bar(t);
    for (j, acc) in sums.iter().enumerate() {
        let expected = nb * z0[j] * z0[j] + (1.0 - nb);
        worst = worst.max((acc / draws as f64 - expected).abs() / expected);
    }
    vec![
        Check::holds("cumulative nu strictly decreasing", decreasing),
        Check::at_most("posterior variance at t=1", s.phi_tilde(1).abs(), 0.0),
        Check::at_most("cumulative nu at T=20", s.nu_bar(20), 0.05 - f64::EPSILON),
        Check::at_most("forward-noise second moment relative error", worst, 0.02),
        Check::holds("no noise injected at t=1", s.noise_coeff(1, NoiseScale::QuarterSquared) == 0.0),
    ]
}
