//! Result emission: per-sweep history, final profiles, and a JSON summary.
//! Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use ness_core::{ModelParams, OrderingKind, RunResult, SweepSchedule};

/// Machine-readable record of one finished run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub params: ModelParams,
    pub scheme: OrderingKind,
    pub schedule: SweepSchedule,
    pub seed: u64,
    pub converged: bool,
    pub stop_reason: String,
    pub sweeps: usize,
    pub warmup_sweeps: usize,
    pub final_energy: f64,
    pub mean_current: f64,
    pub max_imag: f64,
    pub walltime_s: f64,
}

impl RunSummary {
    pub fn new(
        params: &ModelParams,
        scheme: OrderingKind,
        schedule: &SweepSchedule,
        seed: u64,
        result: &RunResult,
    ) -> Self {
        Self {
            params: params.clone(),
            scheme,
            schedule: schedule.clone(),
            seed,
            converged: result.converged,
            stop_reason: result.stop_reason.to_string(),
            sweeps: result.sweeps(),
            warmup_sweeps: result.warmup_sweeps,
            final_energy: result.final_energy(),
            mean_current: result.mean_current(),
            max_imag: result.max_imag,
            walltime_s: result.walltime_history.iter().sum(),
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)
        .with_context(|| format!("creating output directory {}", parent.display()))?;
    let tmp = path.with_extension("tmp");
    {
        let mut file =
            fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        file.write_all(bytes)?;
        file.flush()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Per-sweep history table: one row per sweep with the observable columns
/// left empty when observables were only measured at the end.
pub fn write_history_csv(path: &Path, result: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sweep", "max_bond", "energy", "walltime_s", "mean_current", "max_imag"])?;
    for i in 0..result.energy_history.len() {
        let mean_current = result.current_history.get(i).map(|profile| {
            if profile.is_empty() {
                0.0
            } else {
                profile.iter().sum::<f64>() / profile.len() as f64
            }
        });
        w.write_record([
            (i + 1).to_string(),
            result.bond_history[i].to_string(),
            result.energy_history[i].to_string(),
            result.walltime_history[i].to_string(),
            mean_current.map(|v| v.to_string()).unwrap_or_default(),
            result
                .imag_history
                .get(i)
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ])?;
    }
    write_atomic(path, &w.into_inner()?)
}

pub fn write_profile_csv(path: &Path, index_name: &str, value_name: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([index_name, value_name])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    write_atomic(path, &w.into_inner()?)
}

/// Standard per-run file set.
pub fn write_run(dir: &Path, summary: &RunSummary, result: &RunResult) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_history_csv(&dir.join("history.csv"), result)?;
    write_profile_csv(
        &dir.join("final_current.csv"),
        "bond",
        "current",
        &result.current_profile,
    )?;
    write_profile_csv(
        &dir.join("final_magnetization.csv"),
        "site",
        "magnetization",
        &result.magnetization_profile,
    )?;
    write_json(&dir.join("summary.json"), summary)?;
    Ok(dir.to_owned())
}
