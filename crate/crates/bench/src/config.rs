//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Per-policy overrides use `<policy>.<key>`, e.g. `sw-glucb.tau = 100`.
//! Unknown keys are rejected so typos fail fast.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nsglb::{LinkFunction, PolicyKind};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sim2d,
    Replay,
    Concentration,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sim2d => "sim2d",
            ExperimentKind::Replay => "replay",
            ExperimentKind::Concentration => "concentration",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim2d" => Ok(ExperimentKind::Sim2d),
            "replay" => Ok(ExperimentKind::Replay),
            "concentration" => Ok(ExperimentKind::Concentration),
            other => Err(HarnessError::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tuning {
    /// Forgetting tuned with the true breakpoint count.
    KnownBreakpoints,
    /// Forgetting tuned as if the breakpoint count were unknown.
    UnknownBreakpoints,
    /// `tau` / `gamma` taken from the config.
    Manual,
}

impl Tuning {
    pub fn name(self) -> &'static str {
        match self {
            Tuning::KnownBreakpoints => "paper_known_gamma_t",
            Tuning::UnknownBreakpoints => "paper_unknown_gamma_t",
            Tuning::Manual => "manual",
        }
    }
}

impl FromStr for Tuning {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_known_gamma_t" | "known" => Ok(Tuning::KnownBreakpoints),
            "paper_unknown_gamma_t" | "unknown" => Ok(Tuning::UnknownBreakpoints),
            "manual" => Ok(Tuning::Manual),
            other => Err(HarnessError::Config(format!("unknown tuning `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    Zero,
}

/// Per-policy settings that win over the global ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyOverrides {
    pub tau: Option<usize>,
    pub gamma: Option<f64>,
    pub analysis_horizon: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub policies: Vec<PolicyKind>,
    pub overrides: BTreeMap<PolicyKind, PolicyOverrides>,
    pub runs: usize,
    pub base_seed: u64,
    pub horizon: usize,
    pub delta: f64,
    pub lambda: f64,
    pub tuning: Tuning,
    pub tau: Option<usize>,
    pub gamma: Option<f64>,
    pub analysis_horizon: Option<f64>,
    pub output_dir: PathBuf,
    pub snapshot_interval: usize,
    pub link: LinkFunction,
    pub actions_per_round: usize,
    pub threads: Option<usize>,

    pub replay_csv: Option<PathBuf>,
    pub invert_at: usize,
    pub replay_param_bound: f64,
    pub replay_action_bound: Option<f64>,
    pub synthetic_rows_per_class: usize,
    pub synthetic_separation: f64,

    pub replications: usize,
    pub concentration_gammas: Vec<f64>,
    pub concentration_dim: usize,
    pub concentration_horizon: usize,
    pub coverage_horizon: usize,
    pub noise: NoiseKind,
    pub noise_sigma: f64,
    pub c_mu: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Sim2d,
            policies: PolicyKind::ALL.to_vec(),
            overrides: BTreeMap::new(),
            runs: 100,
            base_seed: 0,
            horizon: 6000,
            delta: 0.05,
            lambda: 1.0,
            tuning: Tuning::KnownBreakpoints,
            tau: None,
            gamma: None,
            analysis_horizon: None,
            output_dir: PathBuf::from("out"),
            snapshot_interval: 1000,
            link: LinkFunction::Logistic,
            actions_per_round: 6,
            threads: None,
            replay_csv: None,
            invert_at: 1000,
            replay_param_bound: 5.0,
            replay_action_bound: None,
            synthetic_rows_per_class: 250,
            synthetic_separation: 2.0,
            replications: 1000,
            concentration_gammas: vec![0.9, 0.99],
            concentration_dim: 2,
            concentration_horizon: 1000,
            coverage_horizon: 200,
            noise: NoiseKind::Gaussian,
            noise_sigma: 0.5,
            c_mu: 1.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {}", lineno + 1, strip(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some((policy, field)) = key.split_once('.') {
            let kind: PolicyKind = policy
                .parse()
                .map_err(|_| HarnessError::Config(format!("unknown policy `{policy}` in key `{key}`")))?;
            let o = self.overrides.entry(kind).or_default();
            match field {
                "tau" => o.tau = Some(parse(key, value)?),
                "gamma" => o.gamma = Some(parse(key, value)?),
                "analysis_horizon" => o.analysis_horizon = Some(parse(key, value)?),
                "lambda" => o.lambda = Some(parse(key, value)?),
                "delta" => o.delta = Some(parse(key, value)?),
                "radius" => o.radius = Some(parse(key, value)?),
                _ => return Err(HarnessError::Config(format!("unknown per-policy key `{key}`"))),
            }
            return Ok(());
        }
        match key {
            "experiment" => self.experiment = value.parse()?,
            "policies" => {
                self.policies = parse_list::<String>(key, value)?
                    .iter()
                    .map(|p| p.parse().map_err(|e: nsglb::BanditError| HarnessError::Config(e.to_string())))
                    .collect::<Result<_>>()?
            }
            "runs" => self.runs = parse(key, value)?,
            "base_seed" | "seed" => self.base_seed = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "tuning" => self.tuning = value.parse()?,
            "tau" => self.tau = Some(parse(key, value)?),
            "gamma" => self.gamma = Some(parse(key, value)?),
            "analysis_horizon" => self.analysis_horizon = Some(parse(key, value)?),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "snapshot_interval" => self.snapshot_interval = parse(key, value)?,
            "link" => {
                self.link = value
                    .parse()
                    .map_err(|e: nsglb::BanditError| HarnessError::Config(e.to_string()))?
            }
            "actions_per_round" => self.actions_per_round = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            "replay_csv" => self.replay_csv = Some(PathBuf::from(value)),
            "invert_at" => self.invert_at = parse(key, value)?,
            "replay_param_bound" => self.replay_param_bound = parse(key, value)?,
            "replay_action_bound" => self.replay_action_bound = Some(parse(key, value)?),
            "synthetic_rows_per_class" => self.synthetic_rows_per_class = parse(key, value)?,
            "synthetic_separation" => self.synthetic_separation = parse(key, value)?,
            "replications" => self.replications = parse(key, value)?,
            "concentration_gammas" => self.concentration_gammas = parse_list(key, value)?,
            "concentration_dim" => self.concentration_dim = parse(key, value)?,
            "concentration_horizon" => self.concentration_horizon = parse(key, value)?,
            "coverage_horizon" => self.coverage_horizon = parse(key, value)?,
            "noise" => {
                self.noise = match value {
                    "gaussian" => NoiseKind::Gaussian,
                    "zero" | "none" => NoiseKind::Zero,
                    _ => return Err(HarnessError::Config(format!("unknown noise `{value}`"))),
                }
            }
            "noise_sigma" => self.noise_sigma = parse(key, value)?,
            "c_mu" => self.c_mu = parse(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.policies.is_empty() && self.experiment != ExperimentKind::Concentration {
            return fail("at least one policy is required".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.lambda > 0.0) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.snapshot_interval == 0 {
            return fail("snapshot_interval must be positive".into());
        }
        if self.actions_per_round == 0 {
            return fail("actions_per_round must be positive".into());
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return fail(format!("gamma must lie in (0, 1), got {g}"));
            }
        }
        if self.tau == Some(0) {
            return fail("tau must be positive".into());
        }
        if self.tuning == Tuning::Manual {
            for p in &self.policies {
                let o = self.overrides.get(p).cloned().unwrap_or_default();
                let needs_tau = matches!(p, PolicyKind::SwGlucb | PolicyKind::SwLinUcb);
                let needs_gamma = matches!(p, PolicyKind::DGlucb | PolicyKind::DLinUcb);
                if needs_tau && o.tau.or(self.tau).is_none() {
                    return fail(format!("manual tuning needs `tau` for {p}"));
                }
                if needs_gamma && o.gamma.or(self.gamma).is_none() {
                    return fail(format!("manual tuning needs `gamma` for {p}"));
                }
            }
        }
        if !(self.replay_param_bound > 0.0) {
            return fail("replay_param_bound must be positive".into());
        }
        if self.experiment == ExperimentKind::Concentration {
            if self.replications == 0 || self.concentration_horizon == 0
                || self.coverage_horizon == 0
                || self.concentration_dim == 0
            {
                return fail("replications, concentration_horizon and concentration_dim must be positive".into());
            }
            if self.concentration_gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
                return fail("concentration_gammas must lie in (0, 1)".into());
            }
            if !(self.c_mu > 0.0) || !(self.noise_sigma >= 0.0) {
                return fail("c_mu must be positive and noise_sigma non-negative".into());
            }
        }
        Ok(())
    }

    /// Resolved settings as sorted `key = value` lines, excluding the
    /// output directory. The manifest hashes this text.
    pub fn canonical(&self) -> String {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        let opt = |x: Option<String>| x.unwrap_or_else(|| "-".into());
        kv.insert("experiment".into(), self.experiment.name().into());
        kv.insert(
            "policies".into(),
            self.policies.iter().map(|p| p.name()).collect::<Vec<_>>().join(","),
        );
        kv.insert("runs".into(), self.runs.to_string());
        kv.insert("base_seed".into(), self.base_seed.to_string());
        kv.insert("horizon".into(), self.horizon.to_string());
        kv.insert("delta".into(), format!("{:e}", self.delta));
        kv.insert("lambda".into(), format!("{:e}", self.lambda));
        kv.insert("tuning".into(), self.tuning.name().into());
        kv.insert("tau".into(), opt(self.tau.map(|x| x.to_string())));
        kv.insert("gamma".into(), opt(self.gamma.map(|x| format!("{x:e}"))));
        kv.insert("analysis_horizon".into(), opt(self.analysis_horizon.map(|x| format!("{x:e}"))));
        kv.insert("snapshot_interval".into(), self.snapshot_interval.to_string());
        kv.insert("link".into(), self.link.to_string());
        kv.insert("actions_per_round".into(), self.actions_per_round.to_string());
        kv.insert("replay_csv".into(), opt(self.replay_csv.as_ref().map(|p| p.display().to_string())));
        kv.insert("invert_at".into(), self.invert_at.to_string());
        kv.insert("replay_param_bound".into(), format!("{:e}", self.replay_param_bound));
        kv.insert("replay_action_bound".into(), opt(self.replay_action_bound.map(|x| format!("{x:e}"))));
        kv.insert("synthetic_rows_per_class".into(), self.synthetic_rows_per_class.to_string());
        kv.insert("synthetic_separation".into(), format!("{:e}", self.synthetic_separation));
        kv.insert("replications".into(), self.replications.to_string());
        kv.insert(
            "concentration_gammas".into(),
            self.concentration_gammas.iter().map(|g| format!("{g:e}")).collect::<Vec<_>>().join(","),
        );
        kv.insert("concentration_dim".into(), self.concentration_dim.to_string());
        kv.insert("concentration_horizon".into(), self.concentration_horizon.to_string());
        kv.insert("coverage_horizon".into(), self.coverage_horizon.to_string());
        kv.insert("noise".into(), format!("{:?}", self.noise).to_lowercase());
        kv.insert("noise_sigma".into(), format!("{:e}", self.noise_sigma));
        kv.insert("c_mu".into(), format!("{:e}", self.c_mu));
        for (p, o) in &self.overrides {
            let mut put = |k: &str, v: Option<String>| {
                if let Some(v) = v {
                    kv.insert(format!("{}.{k}", p.name()), v);
                }
            };
            put("tau", o.tau.map(|x| x.to_string()));
            put("gamma", o.gamma.map(|x| format!("{x:e}")));
            put("analysis_horizon", o.analysis_horizon.map(|x| format!("{x:e}")));
            put("lambda", o.lambda.map(|x| format!("{x:e}")));
            put("delta", o.delta.map(|x| format!("{x:e}")));
            put("radius", o.radius.map(|x| format!("{x:e}")));
        }
        let mut out = String::new();
        for (k, v) in kv {
            writeln!(out, "{k} = {v}").expect("write to string");
        }
        out
    }
}

fn strip(e: HarnessError) -> String {
    match e {
        HarnessError::Config(m) => m,
        other => other.to_string(),
    }
}
