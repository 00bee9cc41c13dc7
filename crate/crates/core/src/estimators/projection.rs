use nalgebra::DVector;

use super::mle::{g_and_jacobian, g_function};
use super::WeightedHistory;
use crate::error::{BanditError, Result};
use crate::linalg::SpdFactor;
use crate::link::LinkFunction;
use crate::scalar::Scalar;

const MAX_ITERATIONS: usize = 200;
const MAX_BACKTRACKS: usize = 60;
const ARMIJO: f64 = 1e-4;
const STATIONARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T: Scalar> {
    pub theta: DVector<T>,
    /// `||g(theta_hat) - g(theta)||^2_{M^{-1}}` at `theta`.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

fn onto_ball<T: Scalar>(mut theta: DVector<T>, radius: T) -> DVector<T> {
    let n = theta.norm();
    if n > radius {
        theta *= radius / n;
    }
    theta
}

/// Feasible `theta` in the S-ball minimizing `||g(theta_hat) - g(theta)||_{M^{-1}}`,
/// with `M` the history's projection matrix.
///
/// Interior `theta_hat` is returned unchanged. Otherwise projected gradient
/// descent with Barzilai-Borwein trial steps and Armijo backtracking, started
/// from the radial projection of `theta_hat`. The objective can be
/// nonconvex, so the result is a stationary point, not necessarily the
/// global minimizer. Hitting the iteration cap returns the best iterate with
/// `converged = false`.
pub fn project_theta<T, H>(
    theta_hat: &DVector<T>,
    history: &H,
    link: LinkFunction,
    lambda: T,
    param_bound: T,
) -> Result<Projection<T>>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    project_theta_from(theta_hat, history, link, lambda, param_bound, None)
}

/// [`project_theta`] that may start from `start` (pulled into the ball)
/// instead of the radial projection of `theta_hat`. The start is used only
/// when its objective is lower; the stopping tolerance is the same either way.
pub fn project_theta_from<T, H>(
    theta_hat: &DVector<T>,
    history: &H,
    link: LinkFunction,
    lambda: T,
    param_bound: T,
    start: Option<&DVector<T>>,
) -> Result<Projection<T>>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    if !(param_bound > T::zero()) {
        return Err(BanditError::InvalidParameter("S must be positive".into()));
    }
    if theta_hat.norm() <= param_bound {
        return Ok(Projection {
            theta: theta_hat.clone(),
            objective: T::zero(),
            iterations: 0,
            converged: true,
        });
    }
    let metric = SpdFactor::new(history.projection_matrix())?;
    let target = g_function(theta_hat, history, link, lambda);

    // Returns (objective, gradient).
    let eval = |theta: &DVector<T>| {
        let (g, jac) = g_and_jacobian(theta, history, link, lambda);
        let resid = &target - g;
        let weighted = metric.solve(&resid);
        let objective = resid.dot(&weighted);
        let grad = jac * weighted * T::lit(-2.0);
        (objective, grad)
    };

    let mut theta = onto_ball(theta_hat.clone(), param_bound);
    let (mut f, mut grad) = eval(&theta);
    let grad_scale = grad.norm().max(T::one());
    let tol = T::lit(STATIONARITY_TOL) * grad_scale;
    let initial_step = T::one() / grad_scale;
    let mut step = initial_step;
    let mut stalled = false;
    if let Some(s) = start.filter(|s| s.len() == theta.len() && s.iter().all(|x| x.is_finite())) {
        let s = onto_ball(s.clone(), param_bound);
        let (fs, gs) = eval(&s);
        if fs < f {
            theta = s;
            f = fs;
            grad = gs;
        }
    }

    for iteration in 0..MAX_ITERATIONS {
        let stationarity = (&theta - onto_ball(&theta - &grad, param_bound)).norm();
        if stationarity <= tol || f == T::zero() {
            return Ok(Projection {
                theta,
                objective: f,
                iterations: iteration,
                converged: true,
            });
        }
        let mut accepted = None;
        let mut trial = step;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = onto_ball(&theta - &grad * trial, param_bound);
            let delta = &candidate - &theta;
            let (fc, gc) = eval(&candidate);
            if fc <= f + T::lit(ARMIJO) * grad.dot(&delta) {
                accepted = Some((candidate, fc, gc, delta));
                break;
            }
            trial *= T::lit(0.5);
        }
        let Some((candidate, fc, gc, delta)) = accepted else {
            // Cannot decrease further at this precision.
            return Ok(Projection {
                theta,
                objective: f,
                iterations: iteration,
                converged: true,
            });
        };
        if fc >= f {
            // Accepted without decrease: the BB step has collapsed onto
            // rounding noise. Restart from the initial step once; a second
            // stall means we are at the floating-point floor.
            if stalled {
                return Ok(Projection {
                    theta,
                    objective: f,
                    iterations: iteration,
                    converged: true,
                });
            }
            stalled = true;
            step = initial_step;
            continue;
        }
        stalled = false;
        let dg = &gc - &grad;
        let curvature = delta.dot(&dg);
        step = if curvature > T::zero() {
            delta.norm_squared() / curvature
        } else {
            trial * T::lit(2.0)
        };
        theta = candidate;
        f = fc;
        grad = gc;
    }
    Ok(Projection {
        theta,
        objective: f,
        iterations: MAX_ITERATIONS,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{solve_penalized_mle, DiscountedState, SlidingWindowState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_point_is_fixed() {
        let s = SlidingWindowState::<f64>::new(2, None, 1.0, 1.0).unwrap();
        let th = DVector::from_vec(vec![0.3, 0.0]);
        let p = project_theta(&th, &s, LinkFunction::Logistic, 1.0, 1.0).unwrap();
        assert_eq!(p.theta, th);
        assert_eq!(p.objective, 0.0);
    }

    #[test]
    fn identity_link_no_data_matches_grid() {
        let s = SlidingWindowState::<f64>::new(1, None, 1.0, 1.0).unwrap();
        let th = DVector::from_vec(vec![2.0]);
        let p = project_theta(&th, &s, LinkFunction::Identity, 1.0, 1.0).unwrap();
        // Grid oracle: f(x) = (2 - x)^2 over [-1, 1].
        let best = (0..=20_000)
            .map(|i| -1.0 + i as f64 / 10_000.0)
            .min_by(|a, b| (2.0 - a).powi(2).partial_cmp(&(2.0 - b).powi(2)).unwrap())
            .unwrap();
        assert!((p.theta[0] - best).abs() < 1e-4);
        assert!((p.theta[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_projections_are_feasible_and_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in 0..50 {
            let d = rng.random_range(1..=4);
            let mut s = SlidingWindowState::new(d, Some(30), 1.0 / 0.2, 1.0).unwrap();
            let mut disc = DiscountedState::new(d, 0.95, 1.0 / 0.2, 1.0).unwrap();
            let bias = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
            for _ in 0..rng.random_range(1..40) {
                let a = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)) / (d as f64).sqrt();
                let p = crate::link::LinkFunction::Logistic.evaluate(a.dot(&bias));
                let x = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                s.push(a.clone(), x).unwrap();
                disc.push(a, x).unwrap();
            }
            for radius in [0.05, 0.3] {
                let fit = solve_penalized_mle(&s, LinkFunction::Logistic, 1.0, None).unwrap();
                let p = project_theta(&fit.theta, &s, LinkFunction::Logistic, 1.0, radius).unwrap();
                assert!(p.theta.norm() <= radius + 1e-9, "case {case}");
                let fit = solve_penalized_mle(&disc, LinkFunction::Logistic, 1.0, None).unwrap();
                let p = project_theta(&fit.theta, &disc, LinkFunction::Logistic, 1.0, radius).unwrap();
                assert!(p.theta.norm() <= radius + 1e-9, "case {case}");
            }
        }
    }

    #[test]
    fn projection_not_worse_than_radial_start() {
        let mut s = SlidingWindowState::new(2, None, 5.0, 1.0).unwrap();
        let dirs = [[0.9, 0.1], [0.8, -0.3], [0.2, 0.95], [-0.5, 0.5]];
        for (i, a) in dirs.iter().cycle().take(40).enumerate() {
            s.push(DVector::from_column_slice(a), if i % 3 == 0 { 0.0 } else { 1.0 }).unwrap();
        }
        let fit = solve_penalized_mle(&s, LinkFunction::Logistic, 1.0, None).unwrap();
        assert!(fit.theta.norm() > 0.5);
        let p = project_theta(&fit.theta, &s, LinkFunction::Logistic, 1.0, 0.5).unwrap();
        let radial = onto_ball(fit.theta.clone(), 0.5);
        let target = g_function(&fit.theta, &s, LinkFunction::Logistic, 1.0);
        let m = SpdFactor::new(s.gram()).unwrap();
        let r = &target - g_function(&radial, &s, LinkFunction::Logistic, 1.0);
        assert!(p.objective <= r.dot(&m.solve(&r)) + 1e-12);
        assert!(p.converged);
    }
}
