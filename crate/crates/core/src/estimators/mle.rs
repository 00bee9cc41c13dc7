use nalgebra::{DMatrix, DVector};

use super::WeightedHistory;
use crate::error::{BanditError, Result};
use crate::linalg::SpdFactor;
use crate::link::LinkFunction;
use crate::scalar::Scalar;

const MAX_NEWTON_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit<T: Scalar> {
    pub theta: DVector<T>,
    pub iterations: usize,
    /// Euclidean norm of the score at `theta`.
    pub residual_norm: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

fn add_scaled<T: Scalar>(out: &mut [T], c: T, a: &[T]) {
    for (o, x) in out.iter_mut().zip(a) {
        *o += c * *x;
    }
}

/// `sum_s w_s mu(a_s^T theta) a_s + lambda theta`.
pub fn g_function<T, H>(theta: &DVector<T>, history: &H, link: LinkFunction, lambda: T) -> DVector<T>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    let th = theta.as_slice();
    let mut g: Vec<T> = th.iter().map(|x| *x * lambda).collect();
    for (w, a, _) in history.weighted_rows() {
        add_scaled(&mut g, w * link.evaluate(dot(a, th)), a);
    }
    DVector::from_vec(g)
}

/// Adds `c a a^T` to the lower triangle of the column-major `d x d` buffer.
fn add_outer_lower<T: Scalar>(m: &mut [T], d: usize, c: T, a: &[T]) {
    for j in 0..d {
        let cj = c * a[j];
        let col = &mut m[j * d..(j + 1) * d];
        for i in j..d {
            col[i] += cj * a[i];
        }
    }
}

/// Symmetric matrix from an accumulated lower triangle, plus `lambda I`.
fn finish_jacobian<T: Scalar>(lower: Vec<T>, d: usize, lambda: T) -> DMatrix<T> {
    let mut m = DMatrix::from_vec(d, d, lower);
    for j in 0..d {
        m[(j, j)] += lambda;
        for i in j + 1..d {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// Jacobian of [`g_function`]: `sum_s w_s mu'(a_s^T theta) a_s a_s^T + lambda I`.
pub fn g_jacobian<T, H>(theta: &DVector<T>, history: &H, link: LinkFunction, lambda: T) -> DMatrix<T>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    let d = theta.len();
    let th = theta.as_slice();
    let mut j = vec![T::zero(); d * d];
    for (w, a, _) in history.weighted_rows() {
        add_outer_lower(&mut j, d, w * link.derivative(dot(a, th)), a);
    }
    finish_jacobian(j, d, lambda)
}

/// [`g_function`] and [`g_jacobian`] from a single pass over the history.
pub fn g_and_jacobian<T, H>(
    theta: &DVector<T>,
    history: &H,
    link: LinkFunction,
    lambda: T,
) -> (DVector<T>, DMatrix<T>)
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    let d = theta.len();
    let th = theta.as_slice();
    let mut g: Vec<T> = th.iter().map(|x| *x * lambda).collect();
    let mut j = vec![T::zero(); d * d];
    for (w, a, _) in history.weighted_rows() {
        let (mean, slope) = link.evaluate_with_derivative(dot(a, th));
        add_scaled(&mut g, w * mean, a);
        add_outer_lower(&mut j, d, w * slope, a);
    }
    (DVector::from_vec(g), finish_jacobian(j, d, lambda))
}

/// `sum_s w_s X_s a_s`.
pub fn weighted_reward_sum<T, H>(history: &H) -> DVector<T>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    let mut b = vec![T::zero(); history.dim()];
    for (w, a, x) in history.weighted_rows() {
        add_scaled(&mut b, w * x, a);
    }
    DVector::from_vec(b)
}

/// Gradient of the penalized log-likelihood:
/// `sum_s w_s (X_s - mu(a_s^T theta)) a_s - lambda theta`.
pub fn score<T, H>(theta: &DVector<T>, history: &H, link: LinkFunction, lambda: T) -> DVector<T>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    let th = theta.as_slice();
    let mut s: Vec<T> = th.iter().map(|x| -*x * lambda).collect();
    for (w, a, x) in history.weighted_rows() {
        add_scaled(&mut s, w * (x - link.evaluate(dot(a, th))), a);
    }
    DVector::from_vec(s)
}

/// Maximize the weighted penalized log-likelihood by damped Newton.
///
/// The Hessian `-(sum w mu' a a^T + lambda I)` is negative definite for
/// `lambda > 0`, so each step solves an SPD system. Steps are halved until
/// the score norm decreases. Converged when
/// `||score|| <= tol * max(1, ||sum w X a||)`.
pub fn solve_penalized_mle<T, H>(
    history: &H,
    link: LinkFunction,
    lambda: T,
    warm_start: Option<&DVector<T>>,
) -> Result<MleFit<T>>
where
    T: Scalar,
    H: WeightedHistory<T>,
{
    if !(lambda > T::zero()) {
        return Err(BanditError::InvalidParameter(format!(
            "lambda must be positive, got {}",
            lambda.as_f64()
        )));
    }
    let d = history.dim();
    let mut theta = match warm_start {
        Some(w) if w.len() == d && w.iter().all(|x| x.is_finite()) => w.clone(),
        _ => DVector::zeros(d),
    };
    let rewards = weighted_reward_sum(history);
    let scale = rewards.norm().max(T::one());
    let tol = T::solver_tolerance() * scale;

    // The score is `rewards - g(theta)`; one pass yields it and the Hessian.
    let (g, mut hessian) = g_and_jacobian(&theta, history, link, lambda);
    let mut grad = &rewards - g;
    let mut resid = grad.norm();
    for iteration in 0..MAX_NEWTON_ITERATIONS {
        if resid <= tol {
            return Ok(MleFit {
                theta,
                iterations: iteration,
                residual_norm: resid,
            });
        }
        let step = SpdFactor::new(&hessian)?.solve(&grad);

        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate = &theta + &step * t;
            let (cand_g, cand_h) = g_and_jacobian(&candidate, history, link, lambda);
            let cand_grad = &rewards - cand_g;
            let cand_resid = cand_grad.norm();
            if cand_resid < resid {
                accepted = Some((candidate, cand_grad, cand_resid, cand_h));
                break;
            }
            t *= T::lit(0.5);
        }
        match accepted {
            Some((c, g, r, h)) => {
                theta = c;
                grad = g;
                resid = r;
                hessian = h;
            }
            // No representable step reduces the score: we are at the
            // rounding floor.
            None => break,
        }
    }
    if resid <= tol {
        Ok(MleFit {
            theta,
            iterations: MAX_NEWTON_ITERATIONS,
            residual_norm: resid,
        })
    } else {
        Err(BanditError::NonConvergence {
            iterations: MAX_NEWTON_ITERATIONS,
            residual: resid.as_f64(),
        })
    }
}
