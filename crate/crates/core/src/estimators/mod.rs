//! Penalized maximum-likelihood estimation under forgetting.
//!
//! Two observation stores share one interface: [`SlidingWindowState`] keeps
//! the `tau` most recent pairs with Gram matrix `V`, and [`DiscountedState`]
//! keeps exponentially down-weighted history with the pair `W` / `W~`. The
//! solver ([`solve_penalized_mle`]) and the S-ball projection
//! ([`project_theta`]) are written against [`WeightedHistory`] so both
//! forgetting schemes, and the unwindowed stationary estimator, go through
//! the same code.

mod discounted;
mod mle;
mod projection;
mod window;

use nalgebra::{DMatrix, DVector};

pub use discounted::DiscountedState;
pub use mle::{g_and_jacobian, g_function, g_jacobian, score, solve_penalized_mle, weighted_reward_sum, MleFit};
pub use projection::{project_theta, project_theta_from, Projection};
pub use window::SlidingWindowState;

use crate::error::{BanditError, Result};
use crate::link::LinkFunction;
use crate::scalar::Scalar;

/// One `(action, reward)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T: Scalar> {
    pub action: DVector<T>,
    pub reward: T,
}

/// Weighted observations plus the regularized design matrices built from them.
pub trait WeightedHistory<T: Scalar> {
    fn dim(&self) -> usize;

    /// `(weight, observation)` pairs, oldest first.
    fn observations(&self) -> impl Iterator<Item = (T, &Observation<T>)>;

    /// `(weight, action, reward)` per observation, oldest first. Implementors
    /// with contiguous storage override this for the solvers' hot loops.
    fn weighted_rows(&self) -> impl Iterator<Item = (T, &[T], T)> {
        self.observations().map(|(w, obs)| (w, obs.action.as_slice(), obs.reward))
    }

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matrix whose inverse defines the projection objective norm.
    fn projection_matrix(&self) -> &DMatrix<T>;

    /// Matrix whose inverse defines the exploration bonus norm.
    fn bonus_matrix(&self) -> &DMatrix<T>;
}

/// Fixed-stride rows in one buffer, appended at the back and removed from
/// the front. The dead prefix is compacted once it outgrows the live part.
#[derive(Debug, Clone)]
pub(crate) struct FlatRows<T> {
    data: Vec<T>,
    start: usize,
    stride: usize,
}

impl<T: Copy> FlatRows<T> {
    pub(crate) fn new(stride: usize) -> Self {
        Self {
            data: Vec::new(),
            start: 0,
            stride,
        }
    }

    pub(crate) fn push_back(&mut self, row: impl IntoIterator<Item = T>) {
        let before = self.data.len();
        self.data.extend(row);
        debug_assert_eq!(self.data.len() - before, self.stride);
    }

    pub(crate) fn pop_front(&mut self) {
        if self.start < self.data.len() {
            self.start += self.stride;
        }
        if self.start * 2 >= self.data.len() {
            self.data.drain(..self.start);
            self.start = 0;
        }
    }

    pub(crate) fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data[self.start..].chunks_exact(self.stride)
    }

    pub(crate) fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, T> {
        self.data[self.start..].chunks_exact_mut(self.stride)
    }
}

/// Unconstrained and projected penalized MLE at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct MleSolution<T: Scalar> {
    pub theta_hat: DVector<T>,
    pub theta_tilde: DVector<T>,
    pub residual_norm: T,
    pub projected: bool,
    /// False when the projection hit its iteration cap; `theta_tilde` is
    /// then the best feasible iterate found.
    pub projection_converged: bool,
}

/// Solve for `theta_hat`, then project onto the S-ball when `||theta_hat|| > S`.
pub fn estimate<T, H>(
    history: &H,
    link: LinkFunction,
    lambda: T,
    param_bound: T,
    warm_start: Option<&DVector<T>>,
) -> Result<MleSolution<T>>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    estimate_from(history, link, lambda, param_bound, warm_start, None)
}

/// [`estimate`] with a separate starting point for the projection, e.g. the
/// previous round's projected estimate.
pub fn estimate_from<T, H>(
    history: &H,
    link: LinkFunction,
    lambda: T,
    param_bound: T,
    warm_start: Option<&DVector<T>>,
    projection_start: Option<&DVector<T>>,
) -> Result<MleSolution<T>>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    let fit = solve_penalized_mle(history, link, lambda, warm_start)?;
    if fit.theta.norm() <= param_bound {
        return Ok(MleSolution {
            theta_tilde: fit.theta.clone(),
            theta_hat: fit.theta,
            residual_norm: fit.residual_norm,
            projected: false,
            projection_converged: true,
        });
    }
    let proj = project_theta_from(&fit.theta, history, link, lambda, param_bound, projection_start)?;
    Ok(MleSolution {
        theta_hat: fit.theta,
        theta_tilde: proj.theta,
        residual_norm: fit.residual_norm,
        projected: true,
        projection_converged: proj.converged,
    })
}

pub(crate) fn check_action<T: Scalar>(action: &DVector<T>, dim: usize, bound: T) -> Result<()> {
    if action.len() != dim {
        return Err(BanditError::DimensionMismatch {
            expected: dim,
            found: action.len(),
        });
    }
    let norm = action.norm();
    if !(norm <= bound * (T::one() + T::lit(1e-9))) {
        return Err(BanditError::ActionNormExceeded {
            norm: norm.as_f64(),
            bound: bound.as_f64(),
        });
    }
    Ok(())
}

pub(crate) fn check_regularization<T: Scalar>(reg: T) -> Result<()> {
    if reg > T::zero() && reg.is_finite() {
        Ok(())
    } else {
        Err(BanditError::InvalidParameter(format!(
            "regularization lambda / c_mu must be positive and finite, got {}",
            reg.as_f64()
        )))
    }
}

/// Solve for `theta_hat` with the sliding-window likelihood.
pub fn solve_mle_sw<T: Scalar>(
    state: &SlidingWindowState<T>,
    link: LinkFunction,
    lambda: T,
) -> Result<DVector<T>> {
    Ok(solve_penalized_mle(state, link, lambda, None)?.theta)
}

/// Solve for `theta_hat` with the discounted likelihood.
pub fn solve_mle_discounted<T: Scalar>(
    state: &DiscountedState<T>,
    link: LinkFunction,
    lambda: T,
) -> Result<DVector<T>> {
    Ok(solve_penalized_mle(state, link, lambda, None)?.theta)
}
