//! Forgetting-parameter choices that balance the regret bounds.

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

/// `ceil((d T / Gamma_T)^{2/3})`, or `ceil((d T)^{2/3})` when the number of
/// breakpoints is unknown; clamped to `[1, T]`.
///
/// Computed exactly as the least `n` with `n^3 Gamma^2 >= (d T)^2`, so
/// perfect cubes do not round up.
pub fn tune_tau(dim: usize, horizon: usize, breakpoints: Option<usize>) -> usize {
    let gamma = breakpoints.unwrap_or(1).max(1) as u128;
    let dt = (dim.max(1) as u128) * (horizon.max(1) as u128);
    let target = dt * dt;
    let covers = |n: u128| n * n * n * gamma * gamma >= target;

    let guess = ((dt as f64) / (gamma as f64)).powf(2.0 / 3.0).floor().max(1.0) as u128;
    let mut n = guess;
    while n > 1 && covers(n - 1) {
        n -= 1;
    }
    while !covers(n) {
        n += 1;
    }
    (n as usize).clamp(1, horizon.max(1))
}

/// Discount factor `gamma = 1 - (Gamma_T / (d T))^{2/3}` with analysis
/// horizon `D(gamma) = log(1 / (1 - gamma)) / (1 - gamma)`. An unknown
/// breakpoint count uses `Gamma_T = 1`.
pub fn tune_gamma<T: Scalar>(dim: usize, horizon: usize, breakpoints: Option<usize>) -> Result<(T, T)> {
    let gamma_t = T::from_count(breakpoints.unwrap_or(1));
    let dt = T::from_count(dim) * T::from_count(horizon);
    let forget = (gamma_t / dt).powf(T::lit(2.0) / T::lit(3.0));
    let gamma = T::one() - forget;
    if !(gamma > T::zero()) {
        return Err(BanditError::InvalidParameter(format!(
            "tuned discount factor {} is not positive (d T too small for Gamma_T)",
            gamma.as_f64()
        )));
    }
    Ok((gamma, analysis_horizon(gamma)))
}

/// `D(gamma) = log(1 / (1 - gamma)) / (1 - gamma)`.
pub fn analysis_horizon<T: Scalar>(gamma: T) -> T {
    let forget = T::one() - gamma;
    -forget.ln() / forget
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        assert_eq!(tune_tau(2, 6000, Some(3)), 252);
        assert_eq!(tune_tau(1, 1000, None), 100);
        assert_eq!(tune_tau(2, 6000, Some(12_000)), 1);
        assert_eq!(tune_tau(1, 8, None), 4);
        assert_eq!(tune_tau(1, 9, None), 5);
        // Clamp to T.
        assert_eq!(tune_tau(50, 3, None), 3);
    }

    #[test]
    fn tau_is_least_cover() {
        for d in 1..4 {
            for t in 1..400 {
                for g in 1..4 {
                    let n = tune_tau(d, t, Some(g)) as f64;
                    let x = ((d * t) as f64 / g as f64).powf(2.0 / 3.0);
                    if n < t as f64 && n > 1.0 {
                        assert!(n >= x - 1e-9 && n - 1.0 < x + 1e-9, "d={d} t={t} g={g}");
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let (g, dg): (f64, f64) = tune_gamma(2, 6000, Some(3)).unwrap();
        assert!((g - 0.996_031_497_370_079_5).abs() / g < 1e-12);
        assert!((dg - 1_393.313_030_725_005_5).abs() / dg < 1e-12);
        assert!(tune_gamma::<f64>(2, 6000, Some(12_000)).is_err());
        assert!((analysis_horizon(0.9f64) - 23.025_850_929_940_457).abs() < 1e-12);
        let (g_unknown, _): (f64, f64) = tune_gamma(2, 6000, None).unwrap();
        assert!((g_unknown - (1.0 - (1.0f64 / 12_000.0).powf(2.0 / 3.0))).abs() < 1e-15);
    }
}
