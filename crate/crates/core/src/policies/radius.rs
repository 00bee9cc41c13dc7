//! Confidence radii multiplying the exploration bonus `||a||_{M^{-1}}`.

use crate::policies::PolicyConfig;
use crate::scalar::Scalar;

/// Radius for the sliding-window policy at round `t` (1-based).
///
/// `window = None` is the unwindowed stationary policy, for which
/// `min(t, tau) = t`.
pub fn rho_sw<T: Scalar>(t: usize, window: Option<usize>, config: &PolicyConfig<T>) -> T {
    let k = &config.constants;
    let d = T::from_count(config.dim);
    let two = T::lit(2.0);
    let effective = T::from_count(window.map_or(t, |tau| t.min(tau)));
    let horizon = T::from_count(config.horizon);
    let inner = two * (horizon / config.delta).ln()
        + d * (T::one() + k.c_mu * k.l * k.l * effective / (d * config.lambda)).ln();
    let c_sw = k.m / two * inner.sqrt();
    two * k.k_mu / k.c_mu * (c_sw + (k.c_mu * config.lambda).sqrt() * k.s)
}

/// Radius for the discounted policy at round `t` (1-based).
///
/// `analysis_horizon` is `D(gamma)`; pass infinity to drop the bias addend.
pub fn rho_d<T: Scalar>(t: usize, gamma: T, analysis_horizon: T, config: &PolicyConfig<T>) -> T {
    let k = &config.constants;
    let d = T::from_count(config.dim);
    let two = T::lit(2.0);
    let g2 = gamma * gamma;
    let effective = (T::one() - g2.powi(t as i32)) / (T::one() - g2);
    let inner = two * (T::one() / config.delta).ln()
        + d * (T::one() + k.c_mu * k.l * k.l * effective / (d * config.lambda)).ln();
    let c_d = k.m / two * inner.sqrt();
    let bias = if analysis_horizon.is_finite() {
        two * k.l * k.l * k.s * k.k_mu * (k.c_mu / config.lambda).sqrt() * gamma.powf(analysis_horizon)
            / (T::one() - gamma)
    } else {
        T::zero()
    };
    two * k.k_mu / k.c_mu * (c_d + (k.c_mu * config.lambda).sqrt() * k.s + bias)
}

/// Ellipsoid radius of the linear baselines:
/// `sigma sqrt(2 log(1/delta) + d log(1 + L^2 n / (d lambda))) + sqrt(lambda) S`
/// with `sigma = m / 2` and `n` the effective sample count.
pub fn linear_radius<T: Scalar>(effective_count: T, config: &PolicyConfig<T>) -> T {
    let k = &config.constants;
    let d = T::from_count(config.dim);
    let two = T::lit(2.0);
    let inner = two * (T::one() / config.delta).ln()
        + d * (T::one() + k.l * k.l * effective_count / (d * config.lambda)).ln();
    k.m / two * inner.sqrt() + config.lambda.sqrt() * k.s
}
