use crate::runner::RunRecord;

/// Per-round statistics across runs for one policy. Index `t - 1` holds round `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyAggregate {
    pub runs: usize,
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
    pub mean_reward: Vec<f64>,
    /// Empty when no run logged estimation error.
    pub mean_estimation_error: Vec<f64>,
}

/// Empirical quantile with linear interpolation at rank `p (n - 1)` of the
/// sorted sample. Returns NaN for an empty sample.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let rank = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = rank - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn aggregate<'a>(records: impl Iterator<Item = &'a RunRecord>, horizon: usize) -> PolicyAggregate {
    let records: Vec<&RunRecord> = records.collect();
    let runs = records.len();
    if runs == 0 {
        return PolicyAggregate::default();
    }
    let mut out = PolicyAggregate {
        runs,
        mean: Vec::with_capacity(horizon),
        q05: Vec::with_capacity(horizon),
        q95: Vec::with_capacity(horizon),
        mean_reward: Vec::with_capacity(horizon),
        mean_estimation_error: Vec::new(),
    };
    let with_error = records.iter().all(|r| r.estimation_error.len() == horizon);
    let mut column = vec![0.0; runs];
    for i in 0..horizon {
        for (slot, r) in column.iter_mut().zip(&records) {
            *slot = r.cumulative_regret[i];
        }
        out.mean.push(mean(&column));
        column.sort_by(f64::total_cmp);
        out.q05.push(quantile(&column, 0.05));
        out.q95.push(quantile(&column, 0.95));
        out.mean_reward
            .push(records.iter().map(|r| r.rewards[i]).sum::<f64>() / runs as f64);
        if with_error {
            out.mean_estimation_error
                .push(records.iter().map(|r| r.estimation_error[i]).sum::<f64>() / runs as f64);
        }
    }
    out
}
