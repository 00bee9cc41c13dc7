use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::schedule::PiecewiseSchedule;
use crate::error::{BanditError, Result};
use crate::link::LinkFunction;
use crate::Vector;

/// Uniform draw from the `d`-dimensional unit ball: Gaussian direction,
/// radius `U^{1/d}`.
pub fn sample_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let dir = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = dir.norm();
        if n > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return dir * (radius / n);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRound {
    pub t: usize,
    pub actions: Vec<Vector>,
    pub theta_star: Vector,
    /// `max_a mu(a^T theta*)` over `actions`.
    pub best_mean: f64,
}

impl SimulatedRound {
    pub fn mean_of(&self, index: usize, link: LinkFunction) -> f64 {
        link.evaluate(self.actions[index].dot(&self.theta_star))
    }

    pub fn regret_of(&self, index: usize, link: LinkFunction) -> f64 {
        (self.best_mean - self.mean_of(index, link)).max(0.0)
    }
}

/// `K` actions uniform in the unit ball at round `t`.
pub fn sample_round<R: Rng + ?Sized>(
    schedule: &PiecewiseSchedule,
    t: usize,
    k: usize,
    link: LinkFunction,
    rng: &mut R,
) -> Result<SimulatedRound> {
    if t == 0 || t > schedule.horizon() {
        return Err(BanditError::InvalidParameter(format!(
            "round {t} outside 1..={}",
            schedule.horizon()
        )));
    }
    if k == 0 {
        return Err(BanditError::EmptyActionSet);
    }
    let theta_star = schedule.theta_at(t).clone();
    let actions: Vec<Vector> = (0..k).map(|_| sample_unit_ball(schedule.dim(), rng)).collect();
    let best_mean = actions
        .iter()
        .map(|a| link.evaluate(a.dot(&theta_star)))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SimulatedRound {
        t,
        actions,
        theta_star,
        best_mean,
    })
}

/// Reward in `[0, 1]` with conditional mean `mu(a^T theta*)`.
///
/// Logistic: Bernoulli. Identity: the mean plus symmetric uniform noise whose
/// half-width keeps the reward inside `[0, 1]`, which requires the mean to lie
/// in `[0, 1]`.
pub fn sample_reward<R: Rng + ?Sized>(
    action: &Vector,
    theta_star: &Vector,
    link: LinkFunction,
    rng: &mut R,
) -> Result<f64> {
    let mean = link.evaluate(action.dot(theta_star));
    match link {
        LinkFunction::Logistic => Ok(if rng.random_bool(mean) { 1.0 } else { 0.0 }),
        LinkFunction::Identity => {
            if !(0.0..=1.0).contains(&mean) {
                return Err(BanditError::InvalidParameter(format!(
                    "identity-link mean {mean} outside the reward range [0, 1]"
                )));
            }
            let half = mean.min(1.0 - mean);
            let u: f64 = rng.random();
            Ok((mean + half * (2.0 * u - 1.0)).clamp(0.0, 1.0))
        }
    }
}

/// `best_mean - mu(chosen^T theta*)`; `chosen` must be one of the round's actions.
pub fn instantaneous_regret(round: &SimulatedRound, chosen: &Vector, link: LinkFunction) -> Result<f64> {
    let index = round
        .actions
        .iter()
        .position(|a| a == chosen)
        .ok_or(BanditError::ChosenNotInSet)?;
    Ok(round.regret_of(index, link))
}

/// Schedule, action count and link bundled for the harness.
#[derive(Debug, Clone)]
pub struct SimulatedEnvironment {
    pub schedule: PiecewiseSchedule,
    pub actions_per_round: usize,
    pub link: LinkFunction,
}

impl SimulatedEnvironment {
    pub fn round<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<SimulatedRound> {
        sample_round(&self.schedule, t, self.actions_per_round, self.link, rng)
    }
}
