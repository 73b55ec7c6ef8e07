//! Single training or evaluation run and its output files.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use uavmec_core::agent::{
    self, run_episodes, uav_episode_summary, DqnAgent, EpisodeRecord, Frozen, GdrsAgent, RandomPolicy, Task,
};
use uavmec_core::mdp::EpisodeSummary;
use uavmec_core::{EnvTransition, Environment, ScenarioConfig};

use crate::config::{AccessArg, AgentArg, ExperimentConfig};
use crate::{HarnessError, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVAL_METRICS_FILE: &str = "eval_metrics.csv";
pub const EVAL_TRAJECTORY_FILE: &str = "eval_trajectory.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CHECKPOINT_META_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const METRICS_HEADER: [&str; 6] = ["episode", "mean_reward", "efficiency", "total_bits", "total_energy", "violations"];

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub metrics: PathBuf,
    pub trajectory: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub manifest: PathBuf,
    pub episodes: Vec<EpisodeSummary>,
}

/// SHA-256 of the canonical resolved configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

/// Messages about settings that have no effect in this configuration.
pub fn notices(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.access != AccessArg::Rsma {
        let scheme = match cfg.access {
            AccessArg::Fdma => "fdma",
            _ => "noma",
        };
        out.push(format!("access={scheme} has no decoding choice; decoding={:?} is ignored", cfg.decoding).to_lowercase());
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Streams per-episode and per-slot rows.
struct RunWriter {
    metrics: csv::Writer<File>,
    trajectory: csv::Writer<File>,
    summaries: Vec<EpisodeSummary>,
}

impl RunWriter {
    fn create(metrics: &Path, trajectory: &Path, scenario: &ScenarioConfig) -> Result<Self> {
        let mut m = csv::Writer::from_path(metrics)?;
        m.write_record(METRICS_HEADER)?;
        let mut t = csv::Writer::from_path(trajectory)?;
        t.write_record(trajectory_header(scenario.gts(), scenario.submessages()))?;
        Ok(Self { metrics: m, trajectory: t, summaries: Vec::new() })
    }

    fn episode(&mut self, rec: &EpisodeRecord<EnvTransition>, scenario: &ScenarioConfig) -> Result<()> {
        let s = uav_episode_summary(rec)?;
        self.metrics.write_record([
            rec.index.to_string(),
            fmt(s.mean_reward),
            fmt(s.efficiency),
            fmt(s.total_processed),
            fmt(s.total_energy),
            s.violation_count.to_string(),
        ])?;
        for tr in &rec.infos {
            self.trajectory.write_record(trajectory_row(rec.index, tr, scenario)?)?;
        }
        log::debug!("episode {} mean reward {:.6} eta {:.6}", rec.index, s.mean_reward, s.efficiency);
        self.summaries.push(s);
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<EpisodeSummary>> {
        self.metrics.flush().map_err(|e| HarnessError::io("flushing metrics", e))?;
        self.trajectory.flush().map_err(|e| HarnessError::io("flushing trajectory", e))?;
        Ok(self.summaries)
    }
}

pub fn trajectory_header(gts: usize, submessages: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["episode", "slot", "x", "y", "h", "t", "move", "climb", "time_level"].iter().map(|s| s.to_string()).collect();
    h.extend((0..gts).map(|k| format!("offload_{k}")));
    for k in 0..gts {
        h.extend((0..submessages).map(|i| format!("power_{k}_{i}")));
    }
    h.extend((0..gts).map(|k| format!("rate_{k}")));
    h.extend(["processed", "reward", "eta", "violations"].iter().map(|s| s.to_string()));
    h
}

fn trajectory_row(episode: usize, tr: &EnvTransition, scenario: &ScenarioConfig) -> Result<Vec<String>> {
    let pose = tr.next_state.uav;
    let p = scenario
        .grid
        .cell_center(pose.cell)
        .map_err(|e| HarnessError::Invalid(format!("trajectory cell: {e}")))?;
    let a = &tr.action;
    let mut row = vec![
        episode.to_string(),
        tr.state.slot.to_string(),
        fmt(p.x),
        fmt(p.y),
        fmt(scenario.bounds.altitude(pose.alt_level)),
        fmt(tr.info.duration),
        a.movement.symbol().to_string(),
        a.climb.symbol().to_string(),
        a.time_level.to_string(),
    ];
    row.extend(a.offload.iter().map(|&o| u8::from(o).to_string()));
    row.extend(a.power_levels.iter().map(|l| l.to_string()));
    row.extend(tr.info.gt_rates.iter().map(|&r| fmt(r)));
    let energy = tr.next_state.cumulative_energy;
    let eta = if energy > 0.0 { tr.next_state.cumulative_processed / energy } else { 0.0 };
    let violations: Vec<String> = tr.info.violations.iter().map(|c| c.to_string()).collect();
    row.extend([fmt(tr.info.processed.iter().sum()), fmt(tr.reward), fmt(eta), violations.join(";")]);
    Ok(row)
}

#[derive(Serialize)]
struct CheckpointMeta<'a> {
    agent: AgentArg,
    seed: u64,
    episodes: usize,
    feature_dim: usize,
    heads: &'a [usize],
    config_hash: &'a str,
    hyperparameters: serde_json::Value,
}

#[derive(Serialize)]
struct Outputs<'a> {
    metrics: &'a str,
    trajectory: &'a str,
    checkpoint: Option<&'a str>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    seed: u64,
    config_hash: &'a str,
    notices: &'a [String],
    outputs: Outputs<'a>,
    config: &'a ExperimentConfig,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

/// Holds the first output error raised inside a training callback.
struct Sink<'a> {
    writer: RunWriter,
    scenario: &'a ScenarioConfig,
    error: Option<HarnessError>,
}

impl Sink<'_> {
    fn on_episode(&mut self, rec: &EpisodeRecord<EnvTransition>) -> agent::Result<()> {
        match self.writer.episode(rec, self.scenario) {
            Ok(()) => Ok(()),
            Err(e) => {
                self.error = Some(e);
                Err(agent::AgentError::BadConfig("output write failed"))
            }
        }
    }

    fn finish(self, outcome: agent::Result<()>) -> Result<Vec<EpisodeSummary>> {
        if let Some(e) = self.error {
            return Err(e);
        }
        outcome?;
        self.writer.finish()
    }
}

/// Trains (or, for the random agent, just rolls out) one seed and writes
/// metrics, trajectory, checkpoint and manifest into `out`.
pub fn run(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<RunArtifacts> {
    cfg.validate()?;
    let scenario = cfg.build_scenario(seed)?;
    let env_cfg = cfg.env_config();
    let notes = notices(cfg);
    for n in &notes {
        log::warn!("{n}");
    }
    fs::create_dir_all(out).map_err(|e| HarnessError::io(format!("creating {}", out.display()), e))?;
    let metrics = out.join(METRICS_FILE);
    let trajectory = out.join(TRAJECTORY_FILE);
    let hash = config_hash(cfg);
    let mut sink = Sink { writer: RunWriter::create(&metrics, &trajectory, &scenario)?, scenario: &scenario, error: None };

    let t = &cfg.training;
    let model = match cfg.agent {
        AgentArg::Gdrs => {
            let res = agent::train(scenario.clone(), env_cfg, cfg.sac_hyper(), seed, |r| sink.on_episode(r));
            let (outcome, a) = split(res);
            let episodes = sink.finish(outcome)?;
            let a = a.expect("training succeeded");
            let meta = Model { bytes: a.checkpoint(), feature_dim: a.feature_dim(), heads: a.heads().to_vec(), hyper: serde_json::to_value(&cfg.sac)? };
            (episodes, Some(meta))
        }
        AgentArg::Dqn => {
            let res = agent::dqn_train(scenario.clone(), env_cfg, cfg.dqn_hyper(), seed, |r| sink.on_episode(r));
            let (outcome, a) = split(res);
            let episodes = sink.finish(outcome)?;
            let a = a.expect("training succeeded");
            let meta = Model { bytes: a.checkpoint(), feature_dim: a.feature_dim(), heads: a.heads().to_vec(), hyper: serde_json::to_value(&cfg.dqn)? };
            (episodes, Some(meta))
        }
        AgentArg::Random => {
            let mut env = Environment::new(scenario.clone(), env_cfg, seed).map_err(agent::AgentError::from)?;
            let mut policy = RandomPolicy::new(&Task::heads(&env), seed);
            let outcome = run_episodes(&mut env, &mut policy, t.episodes, t.steps_per_episode, |r| sink.on_episode(r));
            (sink.finish(outcome)?, None)
        }
    };
    let (episodes, model) = model;
    let checkpoint = match model {
        Some(m) => {
            let path = out.join(CHECKPOINT_FILE);
            fs::write(&path, &m.bytes).map_err(|e| HarnessError::io("writing checkpoint", e))?;
            let meta = CheckpointMeta {
                agent: cfg.agent,
                seed,
                episodes: episodes.len(),
                feature_dim: m.feature_dim,
                heads: &m.heads,
                config_hash: &hash,
                hyperparameters: m.hyper,
            };
            write_json(&out.join(CHECKPOINT_META_FILE), &meta)?;
            Some(path)
        }
        None => None,
    };
    let manifest = out.join(MANIFEST_FILE);
    write_json(
        &manifest,
        &Manifest {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_hash: &hash,
            notices: &notes,
            outputs: Outputs {
                metrics: METRICS_FILE,
                trajectory: TRAJECTORY_FILE,
                checkpoint: checkpoint.as_ref().map(|_| CHECKPOINT_FILE),
            },
            config: cfg,
        },
    )?;
    Ok(RunArtifacts { dir: out.to_owned(), metrics, trajectory, checkpoint, manifest, episodes })
}

struct Model {
    bytes: Vec<u8>,
    feature_dim: usize,
    heads: Vec<usize>,
    hyper: serde_json::Value,
}

fn split<T>(res: agent::Result<T>) -> (agent::Result<()>, Option<T>) {
    match res {
        Ok(v) => (Ok(()), Some(v)),
        Err(e) => (Err(e), None),
    }
}

/// Runs `training.eval_episodes` frozen episodes from the checkpoint in
/// `dir` and writes `eval_metrics.csv` / `eval_trajectory.csv` next to it.
pub fn evaluate(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<Vec<EpisodeSummary>> {
    cfg.validate()?;
    let scenario = cfg.build_scenario(seed)?;
    let mut env = Environment::new(scenario.clone(), cfg.env_config(), seed).map_err(agent::AgentError::from)?;
    let heads = Task::heads(&env);
    let feature_dim = Task::feature_dim(&env);
    let load = || {
        let path = dir.join(CHECKPOINT_FILE);
        fs::read(&path).map_err(|_| HarnessError::MissingCheckpoint(path))
    };
    let mut sink = Sink {
        writer: RunWriter::create(&dir.join(EVAL_METRICS_FILE), &dir.join(EVAL_TRAJECTORY_FILE), &scenario)?,
        scenario: &scenario,
        error: None,
    };
    let (n, cap) = (cfg.training.eval_episodes, cfg.training.steps_per_episode);
    let outcome = match cfg.agent {
        AgentArg::Gdrs => {
            let mut a = GdrsAgent::from_checkpoint(&load()?, feature_dim, &heads, cfg.sac_hyper(), seed)?;
            run_episodes(&mut env, &mut Frozen(&mut a), n, cap, |r| sink.on_episode(r))
        }
        AgentArg::Dqn => {
            let mut a = DqnAgent::from_checkpoint(&load()?, feature_dim, &heads, cfg.dqn_hyper(), seed)?;
            run_episodes(&mut env, &mut Frozen(&mut a), n, cap, |r| sink.on_episode(r))
        }
        AgentArg::Random => {
            let mut p = RandomPolicy::new(&heads, seed);
            run_episodes(&mut env, &mut p, n, cap, |r| sink.on_episode(r))
        }
    };
    sink.finish(outcome)
}

/// Mean efficiency and reward over a set of episodes, for console output.
pub fn describe(episodes: &[EpisodeSummary]) -> String {
    if episodes.is_empty() {
        return "no episodes".into();
    }
    let n = episodes.len() as f64;
    let eta = episodes.iter().map(|e| e.efficiency).sum::<f64>() / n;
    let reward = episodes.iter().map(|e| e.mean_reward).sum::<f64>() / n;
    let viol: usize = episodes.iter().map(|e| e.violation_count).sum();
    format!("{} episodes, mean eta {eta:.6} bit/J, mean reward {reward:.6}, {viol} violations", episodes.len())
}
