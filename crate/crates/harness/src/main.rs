use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uavmec::config::{load_config, AccessArg, AgentArg, DecodingArg, ExperimentConfig};
use uavmec::run::describe;
use uavmec::{evaluate, run, sweep, verify, HarnessError, Suite};

#[derive(Parser)]
#[command(name = "uavmec", version, about = "RSMA UAV edge-computing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    access: Option<AccessArg>,
    #[arg(long, value_enum)]
    decoding: Option<DecodingArg>,
    #[arg(long, value_enum)]
    agent: Option<AgentArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or roll out the random agent) for every seed.
    Train(Common),
    /// Evaluate the checkpoints written by `train`.
    Evaluate(Common),
    /// One run per (value, seed) along a numeric config field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config path (e.g. scenario.rsma.p_max) or a short alias (p_max, slots, gts, ...).
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run a property suite; exits with 2 on failure.
    Verify {
        /// Suite to run; all suites when omitted.
        #[arg(value_enum)]
        suite: Option<Suite>,
    },
}

fn resolve(c: &Common) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
    let mut cfg = match &c.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(a) = c.access {
        cfg.access = a;
    }
    if let Some(d) = c.decoding {
        cfg.decoding = d;
    }
    if let Some(a) = c.agent {
        cfg.agent = a;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    Ok((cfg, out))
}

fn execute(cmd: Command) -> Result<bool, HarnessError> {
    match cmd {
        Command::Train(c) => {
            let (cfg, out) = resolve(&c)?;
            for &seed in &cfg.seeds {
                let art = run(&cfg, seed, &out.join(format!("seed-{seed}")))?;
                println!("seed {seed}: {} -> {}", describe(&art.episodes), art.dir.display());
            }
            Ok(true)
        }
        Command::Evaluate(c) => {
            let (cfg, out) = resolve(&c)?;
            for &seed in &cfg.seeds {
                let eps = evaluate(&cfg, seed, &out.join(format!("seed-{seed}")))?;
                println!("seed {seed}: {}", describe(&eps));
            }
            Ok(true)
        }
        Command::Sweep { common, axis, values, workers } => {
            let (cfg, out) = resolve(&common)?;
            for s in sweep(&cfg, &axis, &values, &out, workers)? {
                println!("{}={}: eta {:.6} +- {:.6} over {} runs", s.axis, s.value, s.mean_eta, s.std_eta, s.runs);
            }
            Ok(true)
        }
        Command::Verify { suite } => {
            let suites = suite.map_or(Suite::ALL.to_vec(), |s| vec![s]);
            let mut ok = true;
            for s in suites {
                let report = verify(s);
                for c in &report.checks {
                    println!("{c}");
                }
                ok &= report.passed();
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
