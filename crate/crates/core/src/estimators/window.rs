use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{check_action, check_regularization, FlatRows, Observation, WeightedHistory};
use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

/// The `tau` most recent observations and `V = sum a a^T + (lambda / c_mu) I`.
///
/// A window of `None` never evicts, which gives the stationary estimator.
#[derive(Debug, Clone)]
pub struct SlidingWindowState<T: Scalar> {
    window: Option<usize>,
    buffer: VecDeque<Observation<T>>,
    /// `[a, X]` per buffered observation, same order as `buffer`.
    rows: FlatRows<T>,
    gram: DMatrix<T>,
    regularization: T,
    action_bound: T,
}

impl<T: Scalar> SlidingWindowState<T> {
    pub fn new(dim: usize, window: Option<usize>, regularization: T, action_bound: T) -> Result<Self> {
        if dim == 0 {
            return Err(BanditError::InvalidParameter("dimension must be positive".into()));
        }
        if window == Some(0) {
            return Err(BanditError::InvalidParameter("window length must be positive".into()));
        }
        check_regularization(regularization)?;
        Ok(Self {
            window,
            buffer: VecDeque::with_capacity(window.unwrap_or(0).min(1 << 16)),
            rows: FlatRows::new(dim + 1),
            gram: DMatrix::identity(dim, dim) * regularization,
            regularization,
            action_bound,
        })
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn regularization(&self) -> T {
        self.regularization
    }

    pub fn buffer(&self) -> &VecDeque<Observation<T>> {
        &self.buffer
    }

    /// The design matrix `V` over the current buffer.
    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    /// Append a pair, evicting (and returning) the oldest once the window is full.
    pub fn push(&mut self, action: DVector<T>, reward: T) -> Result<Option<Observation<T>>> {
        check_action(&action, self.gram.nrows(), self.action_bound)?;
        if !reward.is_finite() {
            return Err(BanditError::InvalidParameter("reward must be finite".into()));
        }
        self.gram.ger(T::one(), &action, &action, T::one());
        self.rows.push_back(action.iter().copied().chain(std::iter::once(reward)));
        self.buffer.push_back(Observation { action, reward });
        let evicted = match self.window {
            Some(tau) if self.buffer.len() > tau => {
                self.rows.pop_front();
                self.buffer.pop_front()
            }
            _ => None,
        };
        if let Some(old) = &evicted {
            self.gram.ger(-T::one(), &old.action, &old.action, T::one());
        }
        Ok(evicted)
    }

    /// `V` recomputed from the buffer.
    pub fn batch_gram(&self) -> DMatrix<T> {
        let d = self.gram.nrows();
        let mut v = DMatrix::identity(d, d) * self.regularization;
        for obs in &self.buffer {
            v.ger(T::one(), &obs.action, &obs.action, T::one());
        }
        v
    }
}

impl<T: Scalar> WeightedHistory<T> for SlidingWindowState<T> {
    fn dim(&self) -> usize {
        self.gram.nrows()
    }

    fn observations(&self) -> impl Iterator<Item = (T, &Observation<T>)> {
        self.buffer.iter().map(|o| (T::one(), o))
    }

    fn weighted_rows(&self) -> impl Iterator<Item = (T, &[T], T)> {
        let d = self.gram.nrows();
        self.rows.rows().map(move |row| (T::one(), &row[..d], row[d]))
    }

    fn len(&self) -> usize {
        self.buffer.len()
    }

    fn projection_matrix(&self) -> &DMatrix<T> {
        &self.gram
    }

    fn bonus_matrix(&self) -> &DMatrix<T> {
        &self.gram
    }
}
