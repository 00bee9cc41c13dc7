use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{check_action, check_regularization, FlatRows, Observation, WeightedHistory};
use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

/// Weights below this are dropped from the stored history.
const PRUNE_WEIGHT: f64 = 1e-12;

/// Exponentially discounted history with `W` and `W~`.
///
/// After `n` pushes the newest observation carries weight 1 and the one
/// pushed `k` rounds earlier carries `gamma^k`, so the stored weights are
/// exactly those of the discounted likelihood solved at the next round.
#[derive(Debug, Clone)]
pub struct DiscountedState<T: Scalar> {
    gamma: T,
    history: VecDeque<(T, Observation<T>)>,
    /// `[weight, a, X]` per stored observation, same order as `history`.
    rows: FlatRows<T>,
    w: DMatrix<T>,
    w_tilde: DMatrix<T>,
    regularization: T,
    action_bound: T,
    pushes: usize,
}

impl<T: Scalar> DiscountedState<T> {
    pub fn new(dim: usize, gamma: T, regularization: T, action_bound: T) -> Result<Self> {
        if dim == 0 {
            return Err(BanditError::InvalidParameter("dimension must be positive".into()));
        }
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(BanditError::InvalidParameter(format!(
                "discount factor must lie in (0, 1), got {}",
                gamma.as_f64()
            )));
        }
        check_regularization(regularization)?;
        let id = DMatrix::identity(dim, dim) * regularization;
        Ok(Self {
            gamma,
            history: VecDeque::new(),
            rows: FlatRows::new(dim + 2),
            w: id.clone(),
            w_tilde: id,
            regularization,
            action_bound,
            pushes: 0,
        })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn regularization(&self) -> T {
        self.regularization
    }

    pub fn w(&self) -> &DMatrix<T> {
        &self.w
    }

    pub fn w_tilde(&self) -> &DMatrix<T> {
        &self.w_tilde
    }

    /// Number of pairs pushed so far, including pruned ones.
    pub fn pushes(&self) -> usize {
        self.pushes
    }

    pub fn history(&self) -> impl Iterator<Item = (T, &Observation<T>)> {
        self.history.iter().map(|(w, o)| (*w, o))
    }

    pub fn push(&mut self, action: DVector<T>, reward: T) -> Result<()> {
        let d = self.w.nrows();
        check_action(&action, d, self.action_bound)?;
        if !reward.is_finite() {
            return Err(BanditError::InvalidParameter("reward must be finite".into()));
        }
        let g = self.gamma;
        let g2 = g * g;
        let reg = self.regularization;

        // W_t = A A^T + gamma W_{t-1} + reg (1 - gamma) I, likewise W~ with gamma^2.
        self.w *= g;
        self.w_tilde *= g2;
        for i in 0..d {
            self.w[(i, i)] += reg * (T::one() - g);
            self.w_tilde[(i, i)] += reg * (T::one() - g2);
        }
        self.w.ger(T::one(), &action, &action, T::one());
        self.w_tilde.ger(T::one(), &action, &action, T::one());

        for (w, _) in self.history.iter_mut() {
            *w *= g;
        }
        for row in self.rows.rows_mut() {
            row[0] *= g;
        }
        let cutoff = T::lit(PRUNE_WEIGHT);
        while self.history.front().is_some_and(|(w, _)| *w < cutoff) {
            self.history.pop_front();
            self.rows.pop_front();
        }
        self.rows.push_back(
            std::iter::once(T::one())
                .chain(action.iter().copied())
                .chain(std::iter::once(reward)),
        );
        self.history.push_back((T::one(), Observation { action, reward }));
        self.pushes += 1;
        Ok(())
    }

    /// `(W, W~)` recomputed from the retained history.
    pub fn batch_matrices(&self) -> (DMatrix<T>, DMatrix<T>) {
        let d = self.w.nrows();
        let mut w = DMatrix::identity(d, d) * self.regularization;
        let mut wt = w.clone();
        for (weight, obs) in &self.history {
            w.ger(*weight, &obs.action, &obs.action, T::one());
            wt.ger(*weight * *weight, &obs.action, &obs.action, T::one());
        }
        (w, wt)
    }
}

impl<T: Scalar> WeightedHistory<T> for DiscountedState<T> {
    fn dim(&self) -> usize {
        self.w.nrows()
    }

    fn observations(&self) -> impl Iterator<Item = (T, &Observation<T>)> {
        self.history()
    }

    fn weighted_rows(&self) -> impl Iterator<Item = (T, &[T], T)> {
        let d = self.w.nrows();
        self.rows.rows().map(move |row| (row[0], &row[1..=d], row[d + 1]))
    }

    fn len(&self) -> usize {
        self.history.len()
    }

    fn projection_matrix(&self) -> &DMatrix<T> {
        &self.w_tilde
    }

    fn bonus_matrix(&self) -> &DMatrix<T> {
        &self.w
    }
}
