//! CSV and manifest emission.
//!
//! Floats are written as `{:.16e}` (17 significant digits), lines end in LF.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::runner::AggregateResult;

pub const QUANTILES_FILE: &str = "regret_mean_quantiles.csv";
pub const SNAPSHOTS_FILE: &str = "theta_snapshots.csv";
pub const REGRET_FILE: &str = "regret.csv";
pub const ESTIMATION_ERROR_FILE: &str = "estimation_error.csv";
pub const REPLAY_PROPORTION_FILE: &str = "replay_proportion.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Trailing window used for the running proportion in the replay CSV.
pub const PROPORTION_WINDOW: usize = 100;

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical().as_bytes()))
}

struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    fn create(dir: &Path, name: &str, header: &str) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        let mut csv = Self {
            path,
            out: BufWriter::with_capacity(1 << 20, file),
        };
        csv.line(format_args!("{header}"))?;
        Ok(csv)
    }

    fn line(&mut self, args: std::fmt::Arguments<'_>) -> Result<()> {
        self.out
            .write_fmt(args)
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| HarnessError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| HarnessError::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Write every output file for `result` into `dir`, creating it if needed.
/// Returns the paths written.
pub fn emit_csv(result: &AggregateResult, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();

    let mut q = CsvFile::create(dir, QUANTILES_FILE, "round,policy,mean,q05,q95")?;
    for p in &result.policies {
        let agg = &result.aggregates[p];
        for i in 0..agg.mean.len() {
            q.line(format_args!(
                "{},{},{:.16e},{:.16e},{:.16e}",
                i + 1,
                p,
                agg.mean[i],
                agg.q05[i],
                agg.q95[i]
            ))?;
        }
    }
    written.push(q.finish()?);

    let mut s = CsvFile::create(dir, SNAPSHOTS_FILE, "run,round,policy,component_index,value")?;
    for r in &result.records {
        for (round, theta) in &r.snapshots {
            for (j, v) in theta.iter().enumerate() {
                s.line(format_args!("{},{},{},{},{:.16e}", r.run, round, r.policy, j, v))?;
            }
        }
    }
    written.push(s.finish()?);

    let mut g = CsvFile::create(dir, REGRET_FILE, "run,seed,round,policy,chosen,reward,cumulative_regret")?;
    for r in &result.records {
        for (i, c) in r.cumulative_regret.iter().enumerate() {
            g.line(format_args!(
                "{},{},{},{},{},{},{:.16e}",
                r.run,
                r.seed,
                i + 1,
                r.policy,
                r.chosen[i],
                r.rewards[i],
                c
            ))?;
        }
    }
    written.push(g.finish()?);

    if result.aggregates.values().any(|a| !a.mean_estimation_error.is_empty()) {
        let mut e = CsvFile::create(dir, ESTIMATION_ERROR_FILE, "round,policy,mean_error")?;
        for p in &result.policies {
            for (i, v) in result.aggregates[p].mean_estimation_error.iter().enumerate() {
                e.line(format_args!("{},{},{:.16e}", i + 1, p, v))?;
            }
        }
        written.push(e.finish()?);
    }

    if result.experiment == ExperimentKind::Replay {
        let mut f = CsvFile::create(dir, REPLAY_PROPORTION_FILE, "round,policy,proportion,windowed_proportion")?;
        for p in &result.policies {
            let rewards = &result.aggregates[p].mean_reward;
            let mut window_sum = 0.0;
            for (i, v) in rewards.iter().enumerate() {
                window_sum += v;
                if i >= PROPORTION_WINDOW {
                    window_sum -= rewards[i - PROPORTION_WINDOW];
                }
                let width = (i + 1).min(PROPORTION_WINDOW) as f64;
                f.line(format_args!("{},{},{:.16e},{:.16e}", i + 1, p, v, window_sum / width))?;
            }
        }
        written.push(f.finish()?);
    }

    written.push(write_manifest(cfg, dir, result.failures.len())?);
    Ok(written)
}

pub fn write_manifest(cfg: &ExperimentConfig, dir: &Path, failures: usize) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let text = format!(
        "software = {} {}\nexperiment = {}\nconfig_sha256 = {}\nbase_seed = {}\nruns = {}\nfailed_runs = {}\n\n[config]\n{}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        cfg.experiment.name(),
        config_hash(cfg),
        cfg.base_seed,
        cfg.runs,
        failures,
        cfg.canonical()
    );
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}
