use crate::error::{BanditError, Result};
use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// First round (1-based) at which `theta_star` is in force.
    pub start: usize,
    pub theta_star: Vector,
}

/// Piecewise-constant true parameter over rounds `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSchedule {
    segments: Vec<Segment>,
    horizon: usize,
}

impl PiecewiseSchedule {
    pub fn new(segments: Vec<Segment>, horizon: usize, param_bound: f64) -> Result<Self> {
        let invalid = |msg: String| Err(BanditError::InvalidParameter(msg));
        if horizon == 0 {
            return invalid("horizon must be positive".into());
        }
        let Some(first) = segments.first() else {
            return invalid("schedule needs at least one segment".into());
        };
        if first.start != 1 {
            return invalid(format!("first segment must start at round 1, got {}", first.start));
        }
        let dim = first.theta_star.len();
        for pair in segments.windows(2) {
            if pair[1].start <= pair[0].start {
                return invalid("segment starts must be strictly increasing".into());
            }
        }
        for seg in &segments {
            if seg.theta_star.len() != dim {
                return Err(BanditError::DimensionMismatch {
                    expected: dim,
                    found: seg.theta_star.len(),
                });
            }
            if seg.theta_star.norm() > param_bound * (1.0 + 1e-12) {
                return invalid(format!(
                    "segment at round {} has ||theta*|| = {} > S = {}",
                    seg.start,
                    seg.theta_star.norm(),
                    param_bound
                ));
            }
            if seg.start > horizon {
                return invalid(format!("segment start {} beyond horizon {}", seg.start, horizon));
            }
        }
        Ok(Self { segments, horizon })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.segments[0].theta_star.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of parameter changes, `Gamma_T`.
    pub fn breakpoints(&self) -> usize {
        self.segments.len() - 1
    }

    /// Last round of every segment but the final one.
    pub fn change_rounds(&self) -> Vec<usize> {
        self.segments[1..].iter().map(|s| s.start - 1).collect()
    }

    pub fn theta_at(&self, t: usize) -> &Vector {
        let idx = self.segments.partition_point(|s| s.start <= t).saturating_sub(1);
        &self.segments[idx].theta_star
    }
}

/// The four-segment 2-D schedule over `T = 6000` rounds:
/// `(1,0)` for `t <= 1000`, `(-1,0)` up to 2000, `(0,1)` up to 3000, then `(0,-1)`.
pub fn abrupt_schedule_2d() -> PiecewiseSchedule {
    let seg = |start, x: f64, y: f64| Segment {
        start,
        theta_star: Vector::from_vec(vec![x, y]),
    };
    PiecewiseSchedule::new(
        vec![
            seg(1, 1.0, 0.0),
            seg(1001, -1.0, 0.0),
            seg(2001, 0.0, 1.0),
            seg(3001, 0.0, -1.0),
        ],
        6000,
        1.0,
    )
    .expect("static schedule is valid")
}
