//! Generalized linear bandits for abruptly changing environments.
//!
//! The two forgetting policies, sliding-window GLM-UCB and discounted
//! GLM-UCB, penalize the log-likelihood with `lambda / 2 ||theta||^2`,
//! project the estimate onto the admissible ball when needed, and play the
//! action maximizing `mu(a^T theta) + rho ||a||_{M^{-1}}`. Stationary and
//! linear baselines share the same machinery.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the experiment harness uses.

// `!(x > 0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environments;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod link;
pub mod policies;
pub mod scalar;

pub use error::{BanditError, Result};
pub use link::{GlmConstants, LinkFunction};
pub use policies::{BanditPolicy, Forgetting, PolicyConfig, PolicyKind, UcbDecision};
pub use scalar::Scalar;

pub type Real = f64;
pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

pub type Constants = GlmConstants<f64>;
pub type Config = PolicyConfig<f64>;
pub type Decision = UcbDecision<f64>;
pub type GlmUcbPolicy = policies::GlmUcb<f64>;
pub type LinearUcbPolicy = policies::LinearUcb<f64>;
pub type SlidingWindow = estimators::SlidingWindowState<f64>;
pub type Discounted = estimators::DiscountedState<f64>;
pub type Solution = estimators::MleSolution<f64>;
