//! Multi-run orchestration.
//!
//! Run `r` uses seed `base_seed + r`. Within a run every policy sees the
//! same action sets (drawn from stream 0 of the run's ChaCha generator),
//! while rewards come from a stream owned by the policy kind. Results are
//! collected in (run, policy) order, so outputs do not depend on how rayon
//! schedules the work.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nsglb::environments::{
    abrupt_schedule_2d, replay_round, sample_reward, synthetic_dataset_csv, ReplayDataset, ReplayRound,
    SimulatedEnvironment, SimulatedRound,
};
use nsglb::policies::{analysis_horizon, tune_gamma, tune_tau, GlmUcb, LinearUcb};
use nsglb::{BanditError, BanditPolicy, Forgetting, GlmConstants, LinkFunction, PolicyConfig, PolicyKind};

use crate::aggregate::{aggregate, PolicyAggregate};
use crate::config::{ExperimentConfig, ExperimentKind, Tuning};
use crate::error::{HarnessError, Result};

/// Seed offset for the synthetic replay dataset, kept apart from run seeds.
const SYNTHETIC_DATA_STREAM: u64 = 0x5eed_da7a;

/// Problem constants the policies are built against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub dim: usize,
    pub horizon: usize,
    pub link: LinkFunction,
    pub action_bound: f64,
    pub param_bound: f64,
    pub reward_bound: f64,
    pub breakpoints: usize,
}

/// Forgetting parameters after tuning and overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedForgetting {
    pub tau: usize,
    pub gamma: f64,
    pub analysis_horizon: f64,
}

pub fn resolve_forgetting(kind: PolicyKind, cfg: &ExperimentConfig, problem: &Problem) -> Result<ResolvedForgetting> {
    let o = cfg.overrides.get(&kind).cloned().unwrap_or_default();
    // A horizon without changes still tunes as if one change occurred;
    // zero would send gamma to 1.
    let breakpoints = match cfg.tuning {
        Tuning::KnownBreakpoints => Some(problem.breakpoints.max(1)),
        _ => None,
    };
    let tau = match o.tau.or(cfg.tau) {
        Some(t) => t,
        None if cfg.tuning == Tuning::Manual => 1,
        None => tune_tau(problem.dim, problem.horizon, breakpoints),
    };
    let (tuned_gamma, tuned_d) = if cfg.tuning == Tuning::Manual {
        (0.5, 0.0)
    } else {
        tune_gamma::<f64>(problem.dim, problem.horizon, breakpoints)?
    };
    let explicit_gamma = o.gamma.or(cfg.gamma);
    let gamma = explicit_gamma.unwrap_or(tuned_gamma);
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(HarnessError::Config(format!("{kind}: gamma must lie in (0, 1), got {gamma}")));
    }
    let d = match (o.analysis_horizon.or(cfg.analysis_horizon), explicit_gamma) {
        (Some(d), _) => d,
        (None, Some(_)) => analysis_horizon(gamma),
        (None, None) => tuned_d,
    };
    Ok(ResolvedForgetting {
        tau,
        gamma,
        analysis_horizon: d,
    })
}

pub type DynPolicy = Box<dyn BanditPolicy<f64> + Send>;

pub fn policy_config(kind: PolicyKind, cfg: &ExperimentConfig, problem: &Problem) -> Result<PolicyConfig<f64>> {
    let o = cfg.overrides.get(&kind).cloned().unwrap_or_default();
    let f = resolve_forgetting(kind, cfg, problem)?;
    let link = if kind.is_linear() { LinkFunction::Identity } else { problem.link };
    let constants = GlmConstants::new(link, problem.action_bound, problem.param_bound, problem.reward_bound)
        .map_err(|e| HarnessError::Config(format!("{kind}: {e}")))?;
    let forgetting = match kind {
        PolicyKind::Glucb | PolicyKind::LinUcb => Forgetting::None,
        PolicyKind::SwGlucb | PolicyKind::SwLinUcb => Forgetting::Window(f.tau),
        PolicyKind::DGlucb | PolicyKind::DLinUcb => Forgetting::Discount {
            gamma: f.gamma,
            analysis_horizon: f.analysis_horizon,
        },
    };
    let config = PolicyConfig {
        delta: o.delta.unwrap_or(cfg.delta),
        lambda: o.lambda.unwrap_or(cfg.lambda),
        dim: problem.dim,
        horizon: problem.horizon,
        link,
        constants,
        forgetting,
        radius_override: o.radius,
    };
    config
        .validate()
        .map_err(|e| HarnessError::Config(format!("{kind}: {e}")))?;
    Ok(config)
}

pub fn build_policy(kind: PolicyKind, cfg: &ExperimentConfig, problem: &Problem) -> Result<DynPolicy> {
    let config = policy_config(kind, cfg, problem)?;
    Ok(if kind.is_linear() {
        Box::new(LinearUcb::new(config)?.with_name(kind.name()))
    } else {
        Box::new(GlmUcb::new(config)?.with_name(kind.name()))
    })
}

/// Stable per-kind reward stream, independent of the order policies are listed.
fn reward_stream(kind: PolicyKind) -> u64 {
    1 + PolicyKind::ALL.iter().position(|k| *k == kind).expect("kind listed in ALL") as u64
}

/// Everything logged for one policy in one run. Round `t` lives at index `t - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub chosen: Vec<u32>,
    pub rewards: Vec<f64>,
    pub cumulative_regret: Vec<f64>,
    /// `||theta_hat_t - theta*_t||`, empty when the true parameter is unknown.
    pub estimation_error: Vec<f64>,
    /// `(round, theta_hat)` every `snapshot_interval` rounds.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl RunRecord {
    fn with_capacity(run: usize, seed: u64, policy: PolicyKind, horizon: usize) -> Self {
        Self {
            run,
            seed,
            policy,
            chosen: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon),
            cumulative_regret: Vec::with_capacity(horizon),
            estimation_error: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn instantaneous_regret(&self, t: usize) -> f64 {
        let prev = if t > 1 { self.cumulative_regret[t - 2] } else { 0.0 };
        self.cumulative_regret[t - 1] - prev
    }

    fn log(&mut self, t: usize, chosen: usize, reward: f64, regret: f64, theta: &DVector<f64>, interval: usize) {
        let prev = self.cumulative_regret.last().copied().unwrap_or(0.0);
        self.chosen.push(chosen as u32);
        self.rewards.push(reward);
        self.cumulative_regret.push(prev + regret);
        if t.is_multiple_of(interval) {
            self.snapshots.push((t, theta.iter().copied().collect()));
        }
    }
}

#[derive(Debug)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub error: BanditError,
}

#[derive(Debug)]
pub struct AggregateResult {
    pub experiment: ExperimentKind,
    pub horizon: usize,
    pub policies: Vec<PolicyKind>,
    pub problem: Problem,
    pub records: Vec<RunRecord>,
    pub aggregates: BTreeMap<PolicyKind, PolicyAggregate>,
    pub failures: Vec<RunFailure>,
}

impl AggregateResult {
    pub fn records_for(&self, policy: PolicyKind) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.policy == policy)
    }

    /// Run-averaged fraction of rewarded selections over rounds `from..=to`.
    pub fn mean_reward_over(&self, policy: PolicyKind, from: usize, to: usize) -> Option<f64> {
        let agg = self.aggregates.get(&policy)?;
        let slice = agg.mean_reward.get(from.checked_sub(1)?..to)?;
        Some(slice.iter().sum::<f64>() / slice.len() as f64)
    }

    /// Converts recorded failures into an error, if any.
    pub fn check_failures(&self) -> Result<()> {
        match self.failures.first() {
            None => Ok(()),
            Some(f) => Err(HarnessError::RunFailed {
                failures: self.failures.len(),
                run: f.run,
                seed: f.seed,
                policy: f.policy.name().into(),
                message: f.error.to_string(),
            }),
        }
    }
}

/// Run every configured policy `runs` times and aggregate.
///
/// Config problems are reported before any run starts. A solver failure
/// aborts only the affected (run, policy) pair; it is listed in
/// `failures` and excluded from the aggregates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot build thread pool: {e}")))?
            .install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    match cfg.experiment {
        ExperimentKind::Sim2d => run_sim2d(cfg),
        ExperimentKind::Replay => run_replay(cfg),
        ExperimentKind::Concentration => Err(HarnessError::Config(
            "the concentration experiment is run with validate-concentration".into(),
        )),
    }
}

fn seed_of(cfg: &ExperimentConfig, run: usize) -> u64 {
    cfg.base_seed.wrapping_add(run as u64)
}

/// Shared driver: `env_rounds` yields the per-run environment, `play`
/// drives one policy through it.
fn orchestrate<E, G, P>(cfg: &ExperimentConfig, problem: Problem, env_rounds: G, play: P) -> Result<AggregateResult>
where
    E: Send + Sync,
    G: Fn(&mut ChaCha8Rng) -> std::result::Result<E, BanditError> + Sync,
    P: Fn(&E, &mut DynPolicy, &mut ChaCha8Rng, &mut RunRecord) -> std::result::Result<(), BanditError> + Sync,
{
    // Build once up front so config problems surface before any run.
    for &kind in &cfg.policies {
        build_policy(kind, cfg, &problem)?;
    }

    let outcomes: Vec<Vec<std::result::Result<RunRecord, RunFailure>>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let seed = seed_of(cfg, run);
            let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
            let env = env_rounds(&mut env_rng);
            cfg.policies
                .par_iter()
                .map(|&kind| {
                    let fail = |error| RunFailure {
                        run,
                        seed,
                        policy: kind,
                        error,
                    };
                    let env = env.as_ref().map_err(|e| fail(BanditError::InvalidParameter(e.to_string())))?;
                    let mut policy = build_policy(kind, cfg, &problem)
                        .map_err(|e| fail(BanditError::InvalidParameter(e.to_string())))?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(reward_stream(kind));
                    let mut record = RunRecord::with_capacity(run, seed, kind, problem.horizon);
                    play(env, &mut policy, &mut rng, &mut record).map_err(fail)?;
                    Ok(record)
                })
                .collect()
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let aggregates = cfg
        .policies
        .iter()
        .map(|&p| (p, aggregate(records.iter().filter(|r| r.policy == p), problem.horizon)))
        .collect();
    Ok(AggregateResult {
        experiment: cfg.experiment,
        horizon: problem.horizon,
        policies: cfg.policies.clone(),
        problem,
        records,
        aggregates,
        failures,
    })
}

fn run_sim2d(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    let schedule = abrupt_schedule_2d();
    if cfg.horizon > schedule.horizon() {
        return Err(HarnessError::Config(format!(
            "sim2d horizon is at most {}, got {}",
            schedule.horizon(),
            cfg.horizon
        )));
    }
    let problem = Problem {
        dim: schedule.dim(),
        horizon: cfg.horizon,
        link: cfg.link,
        action_bound: 1.0,
        param_bound: 1.0,
        reward_bound: 1.0,
        breakpoints: schedule.change_rounds().iter().filter(|&&c| c < cfg.horizon).count(),
    };
    let env = SimulatedEnvironment {
        schedule,
        actions_per_round: cfg.actions_per_round,
        link: cfg.link,
    };
    let interval = cfg.snapshot_interval;
    orchestrate(
        cfg,
        problem,
        |rng| (1..=problem.horizon).map(|t| env.round(t, rng)).collect::<std::result::Result<Vec<_>, _>>(),
        |rounds: &Vec<SimulatedRound>, policy, rng, record| {
            record.estimation_error.reserve(rounds.len());
            for round in rounds {
                let decision = policy.select(&round.actions)?;
                let i = decision.chosen_index;
                let action = &round.actions[i];
                let reward = sample_reward(action, &round.theta_star, cfg.link, rng)?;
                let theta = policy.theta_hat();
                record.estimation_error.push((theta - &round.theta_star).norm());
                record.log(round.t, i, reward, round.regret_of(i, cfg.link), theta, interval);
                policy.observe(action, reward)?;
            }
            Ok(())
        },
    )
}

/// Dataset for the replay experiment: the configured CSV, or a synthetic
/// two-class stand-in when none is given.
pub fn replay_dataset(cfg: &ExperimentConfig) -> Result<ReplayDataset> {
    match &cfg.replay_csv {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| HarnessError::Config(format!("cannot open {}: {e}", path.display())))?;
            ReplayDataset::from_reader(std::io::BufReader::new(file))
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed ^ SYNTHETIC_DATA_STREAM);
            let text = synthetic_dataset_csv(cfg.synthetic_rows_per_class, cfg.synthetic_separation, &mut rng);
            ReplayDataset::from_reader(text.as_bytes()).map_err(|e| HarnessError::Config(e.to_string()))
        }
    }
}

fn run_replay(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    let dataset = replay_dataset(cfg)?;
    let problem = Problem {
        dim: nsglb::environments::replay::ACTION_DIM,
        horizon: cfg.horizon,
        link: cfg.link,
        action_bound: cfg.replay_action_bound.unwrap_or_else(|| dataset.max_action_norm()),
        param_bound: cfg.replay_param_bound,
        reward_bound: 1.0,
        breakpoints: usize::from(cfg.invert_at < cfg.horizon),
    };
    if dataset.max_action_norm() > problem.action_bound * (1.0 + 1e-9) {
        return Err(HarnessError::Config(format!(
            "replay_action_bound {} is below the largest action norm {}",
            problem.action_bound,
            dataset.max_action_norm()
        )));
    }
    let interval = cfg.snapshot_interval;
    orchestrate(
        cfg,
        problem,
        |rng| {
            Ok((1..=problem.horizon)
                .map(|t| replay_round(&dataset, t, cfg.invert_at, rng))
                .collect::<Vec<ReplayRound>>())
        },
        |rounds: &Vec<ReplayRound>, policy, _rng, record| {
            for (t, round) in (1..).zip(rounds) {
                let decision = policy.select(&round.actions)?;
                let i = decision.chosen_index;
                let reward = round.reward(i);
                record.log(t, i, reward, 1.0 - reward, policy.theta_hat(), interval);
                policy.observe(&round.actions[i], reward)?;
            }
            Ok(())
        },
    )
}
