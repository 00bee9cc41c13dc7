//! Inverse link functions and the GLM constants `k_mu` / `c_mu`.
//!
//! Only the logistic and identity links ship. Every estimator and
//! confidence radius depends on the link only through `mu`, its derivative,
//! and the two constants computed here.

use std::fmt;
use std::str::FromStr;

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

/// Inverse link `mu` mapping the linear predictor to the mean reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkFunction {
    Logistic,
    Identity,
}

impl LinkFunction {
    pub fn evaluate<T: Scalar>(self, x: T) -> T {
        match self {
            LinkFunction::Logistic => logistic(x),
            LinkFunction::Identity => x,
        }
    }

    pub fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            LinkFunction::Logistic => {
                let p = logistic(x);
                p * (T::one() - p)
            }
            LinkFunction::Identity => T::one(),
        }
    }

    /// `(mu(x), mu'(x))` with a single evaluation of the link.
    pub fn evaluate_with_derivative<T: Scalar>(self, x: T) -> (T, T) {
        match self {
            LinkFunction::Logistic => {
                let p = logistic(x);
                (p, p * (T::one() - p))
            }
            LinkFunction::Identity => (x, T::one()),
        }
    }

    /// Global Lipschitz constant of `mu`.
    pub fn k_mu<T: Scalar>(self) -> T {
        match self {
            LinkFunction::Logistic => T::lit(0.25),
            LinkFunction::Identity => T::one(),
        }
    }

    /// Infimum of the derivative over `[-L*S, L*S]`.
    ///
    /// The logistic derivative is even and decreasing in `|x|`, so the
    /// infimum sits at `x = L*S`.
    pub fn c_mu<T: Scalar>(self, action_bound: T, param_bound: T) -> Result<T> {
        if !(action_bound >= T::zero() && param_bound >= T::zero()) {
            return Err(BanditError::InvalidParameter(format!(
                "L and S must be non-negative, got L = {}, S = {}",
                action_bound.as_f64(),
                param_bound.as_f64()
            )));
        }
        let radius = action_bound * param_bound;
        let min = match self {
            LinkFunction::Logistic => self.derivative(radius),
            LinkFunction::Identity => T::one(),
        };
        if min > T::zero() {
            Ok(min)
        } else {
            Err(BanditError::DegenerateLink { min: min.as_f64() })
        }
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkFunction::Logistic => f.write_str("logistic"),
            LinkFunction::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for LinkFunction {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "sigmoid" => Ok(LinkFunction::Logistic),
            "identity" | "linear" => Ok(LinkFunction::Identity),
            other => Err(BanditError::InvalidParameter(format!("unknown link `{other}`"))),
        }
    }
}

fn logistic<T: Scalar>(x: T) -> T {
    // exp(-|x|) never overflows; the sign only picks the numerator.
    let e = (-x.abs()).exp();
    let r = T::one() / (T::one() + e);
    if x >= T::zero() {
        r
    } else {
        e * r
    }
}

/// Numerical infimum of `derivative` over `[lo, hi]`.
///
/// Golden-section search for an interior minimum, compared against both
/// endpoints. Exact for derivatives that are unimodal on the interval, which
/// covers any link whose derivative is single-peaked or single-troughed.
pub fn derivative_infimum<T, F>(derivative: F, lo: T, hi: T) -> T
where
    T: Scalar,
    F: Fn(T) -> T,
{
    let mut best = derivative(lo).min(derivative(hi));
    if hi <= lo {
        return best;
    }
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (derivative(c), derivative(d));
    let tol = T::default_epsilon().sqrt() * (T::one() + hi.abs().max(lo.abs()));
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = derivative(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = derivative(d);
        }
    }
    best = best.min(fc).min(fd);
    best
}

/// Constants shared by every estimator and confidence radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmConstants<T> {
    pub k_mu: T,
    pub c_mu: T,
    /// Bound on action norms.
    pub l: T,
    /// Bound on parameter norms.
    pub s: T,
    /// Upper bound on rewards.
    pub m: T,
}

impl<T: Scalar> GlmConstants<T> {
    pub fn new(link: LinkFunction, l: T, s: T, m: T) -> Result<Self> {
        if !(l > T::zero() && s > T::zero() && m > T::zero()) {
            return Err(BanditError::InvalidParameter(format!(
                "L, S, m must be positive (L = {}, S = {}, m = {})",
                l.as_f64(),
                s.as_f64(),
                m.as_f64()
            )));
        }
        let k_mu = link.k_mu();
        let c_mu = link.c_mu(l, s)?;
        Ok(Self { k_mu, c_mu, l, s, m })
    }
}

pub fn compute_c_mu<T: Scalar>(link: LinkFunction, l: T, s: T) -> Result<T> {
    link.c_mu(l, s)
}

pub fn compute_k_mu<T: Scalar>(link: LinkFunction) -> T {
    link.k_mu()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn c_mu_logistic_unit_region() {
        let c: f64 = compute_c_mu(LinkFunction::Logistic, 1.0, 1.0).unwrap();
        assert!((c - 0.196_611_933_241_481_85).abs() < 1e-15);
        // Brute-force grid over [-1, 1].
        let grid_min = (0..=100_000)
            .map(|i| -1.0 + 2.0 * i as f64 / 100_000.0)
            .map(|x| LinkFunction::Logistic.derivative(x))
            .fold(f64::INFINITY, f64::min);
        assert!((c - grid_min).abs() < 1e-12);
    }

    #[test]
    fn c_mu_identity_and_degenerate_region() {
        let c: f64 = compute_c_mu(LinkFunction::Identity, 1.0, 1.0).unwrap();
        assert_eq!(c, 1.0);
        let c: f64 = compute_c_mu(LinkFunction::Logistic, 0.0, 5.0).unwrap();
        assert_eq!(c, 0.25);
    }

    #[test]
    fn c_mu_rejects_vanishing_derivative() {
        // sigma'(800) underflows to zero.
        let err = compute_c_mu::<f64>(LinkFunction::Logistic, 40.0, 20.0).unwrap_err();
        assert!(matches!(err, BanditError::DegenerateLink { .. }));
        assert!(compute_c_mu::<f64>(LinkFunction::Logistic, -1.0, 1.0).is_err());
    }

    #[test]
    fn k_mu_values() {
        assert_eq!(compute_k_mu::<f64>(LinkFunction::Logistic), 0.25);
        assert_eq!(compute_k_mu::<f64>(LinkFunction::Identity), 1.0);
        let lhs = (LinkFunction::Logistic.evaluate(0.3_f64) - LinkFunction::Logistic.evaluate(-0.2)).abs();
        assert!(lhs <= 0.25 * 0.5);
    }

    #[test]
    fn golden_section_matches_closed_form() {
        for &r in &[0.1, 1.0, 2.5, 7.0] {
            let closed: f64 = LinkFunction::Logistic.c_mu(1.0, r).unwrap();
            let numeric = derivative_infimum(|x| LinkFunction::Logistic.derivative(x), -r, r);
            assert!((closed - numeric).abs() < 1e-14, "r = {r}");
        }
        // Interior minimum of a convex function.
        let m = derivative_infimum(|x: f64| (x - 0.3).powi(2) + 0.1, -1.0, 1.0);
        assert!((m - 0.1).abs() < 1e-12);
    }

    #[test]
    fn logistic_is_stable_in_tails() {
        assert_eq!(LinkFunction::Logistic.evaluate(-800.0_f64), 0.0);
        assert_eq!(LinkFunction::Logistic.evaluate(800.0_f64), 1.0);
        assert!(LinkFunction::Logistic.evaluate(-30.0_f32) > 0.0);
    }

    #[test]
    fn f32_constants() {
        let c: f32 = compute_c_mu(LinkFunction::Logistic, 1.0, 1.0).unwrap();
        assert!((c - 0.196_611_93).abs() < 1e-6);
    }

    #[test]
    fn finite_difference_derivative() {
        let h = 1e-5;
        for link in [LinkFunction::Logistic, LinkFunction::Identity] {
            for i in 0..=200 {
                let x = -5.0 + 0.05 * i as f64;
                let fd = (link.evaluate(x + h) - link.evaluate(x - h)) / (2.0 * h);
                assert!((link.derivative(x) - fd).abs() <= 1e-6);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn lipschitz_and_lower_bound(x in -1.0f64..=1.0, y in -1.0f64..=1.0) {
            for link in [LinkFunction::Logistic, LinkFunction::Identity] {
                let k: f64 = link.k_mu();
                let c: f64 = link.c_mu(1.0, 1.0).unwrap();
                prop_assert!((link.evaluate(x) - link.evaluate(y)).abs() <= k * (x - y).abs() + 1e-12);
                prop_assert!(link.derivative(x) >= c - 1e-12);
                prop_assert!(link.derivative(x) >= 0.0);
                if x < y {
                    prop_assert!(link.evaluate(x) <= link.evaluate(y));
                }
            }
        }
    }
}
