//! Parameter sweeps: one run per (value, seed), aggregated from the per-run
//! metrics files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::Value;

use crate::config::{parse_config, ExperimentConfig};
use crate::run::{run, METRICS_FILE};
use crate::{HarnessError, Result};

pub const RUNS_FILE: &str = "sweep_runs.csv";
pub const SUMMARY_FILE: &str = "sweep_summary.csv";

/// Short names for common axes.
const ALIASES: [(&str, &str); 8] = [
    ("p_max", "scenario.rsma.p_max"),
    ("r_min", "scenario.rsma.r_min"),
    ("slots", "scenario.mission.slots"),
    ("gts", "scenario.gts"),
    ("submessages", "scenario.rsma.submessages"),
    ("uav_cpu_rate", "scenario.uav_cpu_rate"),
    ("bandwidth_hz", "scenario.channel.bandwidth_hz"),
    ("episodes", "training.episodes"),
];

/// Final-window statistic of one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub axis: String,
    pub value: f64,
    pub runs: usize,
    pub mean_eta: f64,
    pub std_eta: f64,
}

/// Run directories of one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub runs: Vec<(u64, PathBuf)>,
}

fn resolve_axis(axis: &str) -> String {
    ALIASES.iter().find(|(a, _)| *a == axis).map_or(axis, |(_, p)| *p).to_owned()
}

/// Copy of `cfg` with the numeric field at dotted path `axis` set to `value`.
pub fn with_axis(cfg: &ExperimentConfig, axis: &str, value: f64) -> Result<ExperimentConfig> {
    let path = resolve_axis(axis);
    let mut doc = serde_json::to_value(cfg)?;
    let mut slot = &mut doc;
    for key in path.split('.') {
        slot = slot.get_mut(key).ok_or_else(|| HarnessError::UnknownAxis(axis.to_owned()))?;
    }
    *slot = match slot {
        Value::Number(n) if n.is_u64() || n.is_i64() => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(HarnessError::Invalid(format!("axis {axis} takes non-negative integers, got {value}")));
            }
            Value::from(value as u64)
        }
        Value::Number(_) => Value::from(value),
        _ => return Err(HarnessError::UnknownAxis(axis.to_owned())),
    };
    Ok(parse_config(&doc.to_string())?)
}

fn point_dir(out: &Path, axis: &str, value: f64, seed: u64) -> PathBuf {
    out.join(format!("{axis}={value}")).join(format!("seed-{seed}"))
}

/// Mean efficiency over the last 10% of episodes (at least one).
pub fn final_window_eta(metrics: &Path) -> Result<f64> {
    let mut rdr = csv::Reader::from_path(metrics)?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "efficiency")
        .ok_or_else(|| HarnessError::Invalid(format!("{} has no efficiency column", metrics.display())))?;
    let mut etas = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: f64 = rec[col].parse().map_err(|_| HarnessError::Invalid(format!("bad efficiency in {}", metrics.display())))?;
        etas.push(v);
    }
    if etas.is_empty() {
        return Err(HarnessError::Invalid(format!("{} has no episodes", metrics.display())));
    }
    let window = etas.len().div_ceil(10);
    let tail = &etas[etas.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// Mean and sample standard deviation (zero for a single run) per value.
pub fn aggregate(axis: &str, points: &[SweepPoint]) -> Result<Vec<SweepSummary>> {
    points
        .iter()
        .map(|p| {
            let etas = p.runs.iter().map(|(_, dir)| final_window_eta(&dir.join(METRICS_FILE))).collect::<Result<Vec<_>>>()?;
            let n = etas.len() as f64;
            let mean = etas.iter().sum::<f64>() / n;
            let var = if etas.len() > 1 { etas.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            Ok(SweepSummary { axis: axis.to_owned(), value: p.value, runs: etas.len(), mean_eta: mean, std_eta: var.sqrt() })
        })
        .collect()
}

/// Runs every (value, seed) pair on up to `workers` threads, then writes
/// `sweep_runs.csv` and `sweep_summary.csv` into `out`.
pub fn sweep(cfg: &ExperimentConfig, axis: &str, values: &[f64], out: &Path, workers: usize) -> Result<Vec<SweepSummary>> {
    if values.is_empty() {
        return Err(HarnessError::Invalid("sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|&v| with_axis(cfg, axis, v)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64, PathBuf)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s, point_dir(out, axis, values[i], s))))
        .collect();
    fs::create_dir_all(out).map_err(|e| HarnessError::io(format!("creating {}", out.display()), e))?;

    let next = AtomicUsize::new(0);
    let errors = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.len()) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some((i, seed, dir)) = jobs.get(j) else { break };
                log::info!("sweep {axis}={} seed {seed}", values[*i]);
                if let Err(e) = run(&configs[*i], *seed, dir) {
                    errors.lock().expect("error list lock").push((j, e));
                }
            });
        }
    });
    let mut errors = errors.into_inner().expect("error list lock");
    errors.sort_by_key(|(j, _)| *j);
    if let Some((_, e)) = errors.into_iter().next() {
        return Err(e);
    }

    let points: Vec<SweepPoint> = values
        .iter()
        .enumerate()
        .map(|(i, &value)| SweepPoint {
            value,
            runs: jobs.iter().filter(|(k, ..)| *k == i).map(|(_, s, d)| (*s, d.clone())).collect(),
        })
        .collect();

    let mut runs_csv = csv::Writer::from_path(out.join(RUNS_FILE))?;
    runs_csv.write_record(["axis", "value", "seed", "final_eta"])?;
    for p in &points {
        for (seed, dir) in &p.runs {
            let eta = final_window_eta(&dir.join(METRICS_FILE))?;
            runs_csv.write_record([axis.to_owned(), p.value.to_string(), seed.to_string(), eta.to_string()])?;
        }
    }
    runs_csv.flush().map_err(|e| HarnessError::io("writing sweep runs", e))?;

    let summary = aggregate(axis, &points)?;
    let mut w = csv::Writer::from_path(out.join(SUMMARY_FILE))?;
    w.write_record(["axis", "value", "runs", "mean_eta", "std_eta"])?;
    for s in &summary {
        w.write_record([s.axis.clone(), s.value.to_string(), s.runs.to_string(), s.mean_eta.to_string(), s.std_eta.to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::io("writing sweep summary", e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_paths_and_aliases() {
        let cfg = ExperimentConfig::default();
        assert_eq!(with_axis(&cfg, "p_max", 3e-3).unwrap().scenario.rsma.p_max, 3e-3);
        assert_eq!(with_axis(&cfg, "scenario.mission.slots", 7.0).unwrap().scenario.mission.slots, 7);
        assert!(matches!(with_axis(&cfg, "warp_factor", 1.0), Err(HarnessError::UnknownAxis(_))));
        assert!(matches!(with_axis(&cfg, "access", 1.0), Err(HarnessError::UnknownAxis(_))));
        assert!(with_axis(&cfg, "slots", 2.5).is_err());
        assert!(matches!(with_axis(&cfg, "p_max", -1.0), Err(HarnessError::Config(_))));
    }

    #[test]
    fn final_window_uses_last_tenth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut text = String::from("episode,efficiency\n");
        for e in 0..20 {
            text.push_str(&format!("{e},{}\n", e as f64));
        }
        fs::write(&path, text).unwrap();
        assert_eq!(final_window_eta(&path).unwrap(), 18.5);
    }
}
