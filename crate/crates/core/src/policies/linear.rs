use nalgebra::DVector;

use super::{linear_radius, select_with, BanditPolicy, Forgetting, PolicyConfig, UcbDecision};
use crate::error::{BanditError, Result};
use crate::estimators::{weighted_reward_sum, DiscountedState, SlidingWindowState};
use crate::linalg::SpdFactor;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum Store<T: Scalar> {
    Window(SlidingWindowState<T>),
    Discounted(DiscountedState<T>),
}

/// Linear UCB baselines on (weighted) ridge regression.
///
/// * no forgetting: LinUCB with `||a||_{V^{-1}}` and `n = t`;
/// * window: SW-LinUCB, same bonus with `n = min(t, tau)`;
/// * discount: D-LinUCB, bonus `||a||_{W^{-1} W~ W^{-1}}` with
///   `n = (1 - gamma^{2t}) / (1 - gamma^2)`.
///
/// The link in the config is ignored; rewards are modelled as `a^T theta`.
#[derive(Debug, Clone)]
pub struct LinearUcb<T: Scalar> {
    name: String,
    config: PolicyConfig<T>,
    store: Store<T>,
    rounds: usize,
    theta_hat: DVector<T>,
}

impl<T: Scalar> LinearUcb<T> {
    pub fn new(config: PolicyConfig<T>) -> Result<Self> {
        config.validate()?;
        let l = config.constants.l;
        let (store, name) = match config.forgetting {
            Forgetting::None => (
                Store::Window(SlidingWindowState::new(config.dim, None, config.lambda, l)?),
                "linucb",
            ),
            Forgetting::Window(tau) => (
                Store::Window(SlidingWindowState::new(config.dim, Some(tau), config.lambda, l)?),
                "sw-linucb",
            ),
            Forgetting::Discount { gamma, .. } => (
                Store::Discounted(DiscountedState::new(config.dim, gamma, config.lambda, l)?),
                "d-linucb",
            ),
        };
        Ok(Self {
            name: name.to_string(),
            theta_hat: DVector::zeros(config.dim),
            config,
            store,
            rounds: 0,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Radius for round `t` (1-based).
    pub fn radius(&self, t: usize) -> T {
        if let Some(r) = self.config.radius_override {
            return r;
        }
        let n = match self.config.forgetting {
            Forgetting::None => T::from_count(t),
            Forgetting::Window(tau) => T::from_count(t.min(tau)),
            Forgetting::Discount { gamma, .. } => {
                let g2 = gamma * gamma;
                (T::one() - g2.powi(t as i32)) / (T::one() - g2)
            }
        };
        linear_radius(n, &self.config)
    }

    /// Ridge estimate `M^{-1} sum w X a` from current data.
    pub fn ridge_estimate(&self) -> Result<DVector<T>> {
        Ok(match &self.store {
            Store::Window(s) => SpdFactor::new(s.gram())?.solve(&weighted_reward_sum(s)),
            Store::Discounted(s) => SpdFactor::new(s.w())?.solve(&weighted_reward_sum(s)),
        })
    }
}

impl<T: Scalar> BanditPolicy<T> for LinearUcb<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, actions: &[DVector<T>]) -> Result<UcbDecision<T>> {
        if actions.is_empty() {
            return Err(BanditError::EmptyActionSet);
        }
        for a in actions {
            crate::estimators::check_action(a, self.config.dim, self.config.constants.l)?;
        }
        let theta = self.ridge_estimate()?;
        let beta = self.radius(self.rounds + 1);
        let decision = match &self.store {
            Store::Window(s) => {
                let f = SpdFactor::new(s.gram())?;
                select_with(actions, &theta, |a| beta * f.inverse_norm(a), |x| x)?
            }
            Store::Discounted(s) => {
                let f = SpdFactor::new(s.w())?;
                let wt = s.w_tilde();
                select_with(
                    actions,
                    &theta,
                    |a| {
                        let y = f.solve(a);
                        beta * y.dot(&(wt * &y)).max(T::zero()).sqrt()
                    },
                    |x| x,
                )?
            }
        };
        self.theta_hat = theta;
        Ok(decision)
    }

    fn observe(&mut self, action: &DVector<T>, reward: T) -> Result<()> {
        let m = self.config.constants.m;
        if !(reward >= T::zero() && reward <= m) {
            return Err(BanditError::RewardOutOfRange {
                reward: reward.as_f64(),
                max: m.as_f64(),
            });
        }
        match &mut self.store {
            Store::Window(s) => {
                s.push(action.clone(), reward)?;
            }
            Store::Discounted(s) => s.push(action.clone(), reward)?,
        }
        self.rounds += 1;
        Ok(())
    }

    fn theta_hat(&self) -> &DVector<T> {
        &self.theta_hat
    }

    fn rounds(&self) -> usize {
        self.rounds
    }
}
