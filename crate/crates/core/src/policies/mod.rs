//! UCB decision rules for generalized linear bandits with forgetting, and
//! their linear counterparts.
//!
//! [`GlmUcb`] covers the sliding-window, discounted and stationary GLM
//! policies; [`LinearUcb`] covers LinUCB and its windowed and discounted
//! variants. Both implement [`BanditPolicy`].

mod glm_ucb;
mod linear;
mod radius;
mod tuning;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

pub use glm_ucb::GlmUcb;
pub use linear::LinearUcb;
pub use radius::{linear_radius, rho_d, rho_sw};
pub use tuning::{analysis_horizon, tune_gamma, tune_tau};

use crate::error::{BanditError, Result};
use crate::linalg::SpdFactor;
use crate::link::{GlmConstants, LinkFunction};
use crate::scalar::Scalar;

/// How past observations are forgotten.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forgetting<T> {
    /// Keep everything.
    None,
    /// Keep the `tau` most recent observations.
    Window(usize),
    /// Weight the observation `k` rounds old by `gamma^k`. `analysis_horizon`
    /// is `D(gamma)`, which only enters the confidence radius.
    Discount { gamma: T, analysis_horizon: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig<T: Scalar> {
    pub delta: T,
    pub lambda: T,
    pub dim: usize,
    pub horizon: usize,
    pub link: LinkFunction,
    pub constants: GlmConstants<T>,
    pub forgetting: Forgetting<T>,
    /// Replaces the theoretical radius with a constant when set.
    pub radius_override: Option<T>,
}

impl<T: Scalar> PolicyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BanditError::InvalidParameter(msg));
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta.as_f64()));
        }
        if !(self.lambda > T::zero()) {
            return bad(format!("lambda must be positive, got {}", self.lambda.as_f64()));
        }
        if self.dim == 0 || self.horizon == 0 {
            return bad("dimension and horizon must be positive".into());
        }
        let k = &self.constants;
        if !(k.l > T::zero() && k.s > T::zero() && k.m > T::zero() && k.c_mu > T::zero()) {
            return bad("L, S, m and c_mu must be positive".into());
        }
        if k.c_mu > k.k_mu {
            return bad("c_mu cannot exceed k_mu".into());
        }
        match self.forgetting {
            Forgetting::Window(0) => bad("window length must be positive".into()),
            Forgetting::Discount { gamma, analysis_horizon }
                if !(gamma > T::zero() && gamma < T::one() && analysis_horizon > T::zero()) =>
            {
                bad(format!(
                    "discount needs gamma in (0, 1) and D(gamma) > 0, got {} / {}",
                    gamma.as_f64(),
                    analysis_horizon.as_f64()
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcbDecision<T: Scalar> {
    pub chosen_index: usize,
    pub ucb_values: Vec<T>,
    /// `rho * ||a||_{M^{-1}}` per action.
    pub exploration_bonus: Vec<T>,
    pub theta_used: DVector<T>,
}

/// `argmax_a mu(a^T theta) + rho ||a||_{M^{-1}}`, ties to the lowest index.
pub fn select_action<T: Scalar>(
    actions: &[DVector<T>],
    theta: &DVector<T>,
    rho: T,
    matrix: &DMatrix<T>,
    link: LinkFunction,
) -> Result<UcbDecision<T>> {
    let factor = SpdFactor::new(matrix)?;
    select_with(actions, theta, |a| rho * factor.inverse_norm(a), |x| link.evaluate(x))
}

pub(crate) fn select_with<T, B, M>(
    actions: &[DVector<T>],
    theta: &DVector<T>,
    bonus: B,
    mean: M,
) -> Result<UcbDecision<T>>
where
    T: Scalar,
    B: Fn(&DVector<T>) -> T,
    M: Fn(T) -> T,
{
    if actions.is_empty() {
        return Err(BanditError::EmptyActionSet);
    }
    let mut ucb_values = Vec::with_capacity(actions.len());
    let mut exploration_bonus = Vec::with_capacity(actions.len());
    let mut chosen_index = 0;
    for (i, a) in actions.iter().enumerate() {
        if a.len() != theta.len() {
            return Err(BanditError::DimensionMismatch {
                expected: theta.len(),
                found: a.len(),
            });
        }
        let b = bonus(a);
        let u = mean(a.dot(theta)) + b;
        if i > 0 && u > ucb_values[chosen_index] {
            chosen_index = i;
        }
        ucb_values.push(u);
        exploration_bonus.push(b);
    }
    Ok(UcbDecision {
        chosen_index,
        ucb_values,
        exploration_bonus,
        theta_used: theta.clone(),
    })
}

/// Common interface driven by the experiment harness.
pub trait BanditPolicy<T: Scalar> {
    fn name(&self) -> &str;

    /// Compute estimates from the data seen so far and pick an action.
    fn select(&mut self, actions: &[DVector<T>]) -> Result<UcbDecision<T>>;

    /// Record the reward of the played action.
    fn observe(&mut self, action: &DVector<T>, reward: T) -> Result<()>;

    /// Unconstrained estimate from the most recent `select`.
    fn theta_hat(&self) -> &DVector<T>;

    /// Number of observed rounds.
    fn rounds(&self) -> usize;
}

/// The six policies compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    SwGlucb,
    DGlucb,
    Glucb,
    LinUcb,
    SwLinUcb,
    DLinUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::SwGlucb,
        PolicyKind::DGlucb,
        PolicyKind::Glucb,
        PolicyKind::LinUcb,
        PolicyKind::SwLinUcb,
        PolicyKind::DLinUcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::SwGlucb => "sw-glucb",
            PolicyKind::DGlucb => "d-glucb",
            PolicyKind::Glucb => "glucb",
            PolicyKind::LinUcb => "linucb",
            PolicyKind::SwLinUcb => "sw-linucb",
            PolicyKind::DLinUcb => "d-linucb",
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, PolicyKind::LinUcb | PolicyKind::SwLinUcb | PolicyKind::DLinUcb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        match key.as_str() {
            "logistic-ucb" | "logisticucb" | "stationary" => return Ok(PolicyKind::Glucb),
            _ => {}
        }
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| BanditError::InvalidParameter(format!("unknown policy `{s}`")))
    }
}
