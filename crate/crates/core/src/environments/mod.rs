//! Reward-generating environments.
//!
//! [`simulated`] is the abruptly changing GLM world with a piecewise
//! constant parameter; [`replay`] turns a labelled two-class dataset into a
//! two-armed bandit whose labels are swapped at a chosen round.

pub mod replay;
pub mod schedule;
pub mod simulated;

pub use replay::{load_replay_dataset, replay_round, synthetic_dataset_csv, ReplayDataset, ReplayRound};
pub use schedule::{abrupt_schedule_2d, PiecewiseSchedule, Segment};
pub use simulated::{
    instantaneous_regret, sample_reward, sample_round, sample_unit_ball, SimulatedEnvironment, SimulatedRound,
};
