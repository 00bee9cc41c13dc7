use nalgebra::DVector;

use super::{rho_d, rho_sw, select_action, BanditPolicy, Forgetting, PolicyConfig, UcbDecision};
use crate::error::{BanditError, Result};
use crate::estimators::{estimate_from, DiscountedState, MleSolution, SlidingWindowState, WeightedHistory};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum Store<T: Scalar> {
    Window(SlidingWindowState<T>),
    Discounted(DiscountedState<T>),
}

/// Generalized linear UCB with sliding-window, discounted, or no forgetting.
///
/// Each round: penalized MLE (warm-started from the previous round),
/// projection onto the S-ball only when `||theta_hat|| > S` (warm-started
/// from the previous projected estimate), then the UCB
/// rule with `V` (window) or `W` (discounted) as the bonus metric.
#[derive(Debug, Clone)]
pub struct GlmUcb<T: Scalar> {
    name: String,
    config: PolicyConfig<T>,
    store: Store<T>,
    rounds: usize,
    theta_hat: DVector<T>,
    last: Option<MleSolution<T>>,
}

impl<T: Scalar> GlmUcb<T> {
    pub fn new(config: PolicyConfig<T>) -> Result<Self> {
        config.validate()?;
        let reg = config.lambda / config.constants.c_mu;
        let (store, name) = match config.forgetting {
            Forgetting::None => (
                Store::Window(SlidingWindowState::new(config.dim, None, reg, config.constants.l)?),
                "glucb",
            ),
            Forgetting::Window(tau) => (
                Store::Window(SlidingWindowState::new(config.dim, Some(tau), reg, config.constants.l)?),
                "sw-glucb",
            ),
            Forgetting::Discount { gamma, .. } => (
                Store::Discounted(DiscountedState::new(config.dim, gamma, reg, config.constants.l)?),
                "d-glucb",
            ),
        };
        Ok(Self {
            name: name.to_string(),
            theta_hat: DVector::zeros(config.dim),
            config,
            store,
            rounds: 0,
            last: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn config(&self) -> &PolicyConfig<T> {
        &self.config
    }

    /// Estimator output of the most recent `select`.
    pub fn last_solution(&self) -> Option<&MleSolution<T>> {
        self.last.as_ref()
    }

    pub fn window_state(&self) -> Option<&SlidingWindowState<T>> {
        match &self.store {
            Store::Window(s) => Some(s),
            Store::Discounted(_) => None,
        }
    }

    pub fn discounted_state(&self) -> Option<&DiscountedState<T>> {
        match &self.store {
            Store::Discounted(s) => Some(s),
            Store::Window(_) => None,
        }
    }

    /// Confidence radius for round `t` (1-based).
    pub fn radius(&self, t: usize) -> T {
        if let Some(r) = self.config.radius_override {
            return r;
        }
        match self.config.forgetting {
            Forgetting::None => rho_sw(t, None, &self.config),
            Forgetting::Window(tau) => rho_sw(t, Some(tau), &self.config),
            Forgetting::Discount { gamma, analysis_horizon } => rho_d(t, gamma, analysis_horizon, &self.config),
        }
    }

    /// Estimate from current data without choosing an action.
    pub fn estimate(&self) -> Result<MleSolution<T>> {
        let c = &self.config;
        let warm = Some(&self.theta_hat);
        let proj = self.last.as_ref().filter(|l| l.projected).map(|l| &l.theta_tilde);
        match &self.store {
            Store::Window(s) => estimate_from(s, c.link, c.lambda, c.constants.s, warm, proj),
            Store::Discounted(s) => estimate_from(s, c.link, c.lambda, c.constants.s, warm, proj),
        }
    }

    fn check_actions(&self, actions: &[DVector<T>]) -> Result<()> {
        for a in actions {
            crate::estimators::check_action(a, self.config.dim, self.config.constants.l)?;
        }
        Ok(())
    }
}

impl<T: Scalar> BanditPolicy<T> for GlmUcb<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, actions: &[DVector<T>]) -> Result<UcbDecision<T>> {
        if actions.is_empty() {
            return Err(BanditError::EmptyActionSet);
        }
        self.check_actions(actions)?;
        let solution = self.estimate()?;
        let rho = self.radius(self.rounds + 1);
        let bonus_matrix = match &self.store {
            Store::Window(s) => s.bonus_matrix(),
            Store::Discounted(s) => s.bonus_matrix(),
        };
        let decision = select_action(actions, &solution.theta_tilde, rho, bonus_matrix, self.config.link)?;
        self.theta_hat = solution.theta_hat.clone();
        self.last = Some(solution);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{GlmConstants, LinkFunction};

    fn config(forgetting: Forgetting<f64>) -> PolicyConfig<f64> {
        PolicyConfig {
            delta: 0.05,
            lambda: 1.0,
            dim: 2,
            horizon: 100,
            link: LinkFunction::Logistic,
            constants: GlmConstants::new(LinkFunction::Logistic, 1.0, 1.0, 1.0).unwrap(),
            forgetting,
            radius_override: None,
        }
    }

    #[test]
    fn first_round_is_bonus_driven() {
        for f in [
            Forgetting::None,
            Forgetting::Window(5),
            Forgetting::Discount { gamma: 0.9, analysis_horizon: 20.0 },
        ] {
            let mut p = GlmUcb::new(config(f)).unwrap();
            let actions = [
                DVector::from_vec(vec![0.2, 0.0]),
                DVector::from_vec(vec![0.0, -0.9]),
                DVector::from_vec(vec![0.5, 0.5]),
            ];
            let d = p.select(&actions).unwrap();
            assert_eq!(d.theta_used, DVector::zeros(2));
            assert_eq!(d.chosen_index, 1);
        }
    }

    #[test]
    fn observe_validates_reward() {
        let mut p = GlmUcb::new(config(Forgetting::Window(3))).unwrap();
        let a = DVector::from_vec(vec![0.5, 0.0]);
        assert!(matches!(p.observe(&a, 1.5), Err(BanditError::RewardOutOfRange { .. })));
        p.observe(&a, 1.0).unwrap();
        p.observe(&a, 0.0).unwrap();
        assert_eq!(p.rounds(), 2);
        let long = DVector::from_vec(vec![1.5, 0.0]);
        assert!(p.select(&[long]).is_err());
    }

    #[test]
    fn rejects_invalid_config() {
        let mut c = config(Forgetting::Window(3));
        c.delta = 1.0;
        assert!(GlmUcb::new(c).is_err());
        assert!(GlmUcb::new(config(Forgetting::Discount { gamma: 1.0, analysis_horizon: 1.0 })).is_err());
    }
}
