//! Label-replay environment over a two-class tabular dataset.
//!
//! Each round one negative and one positive row are drawn (with
//! replacement) and offered as two arms in random order. Picking the
//! positive row pays 1. After `invert_at` the labels are swapped, so the
//! formerly negative row pays.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{BanditError, Result};
use crate::Vector;

pub const FEATURE_COLUMNS: usize = 8;
/// Standardized features plus a constant intercept.
pub const ACTION_DIM: usize = FEATURE_COLUMNS + 1;
const INTERCEPT: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct ReplayDataset {
    column_names: Vec<String>,
    /// Standardized features, one row per record.
    features: Vec<[f64; FEATURE_COLUMNS]>,
    labels: Vec<bool>,
    means: [f64; FEATURE_COLUMNS],
    stds: [f64; FEATURE_COLUMNS],
    positives: Vec<usize>,
    negatives: Vec<usize>,
}

impl ReplayDataset {
    /// Parse CSV text: header, 8 numeric feature columns, binary outcome.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| BanditError::MalformedCsv {
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        if header.len() < FEATURE_COLUMNS + 1 {
            return Err(BanditError::MissingColumns {
                expected: FEATURE_COLUMNS + 1,
                found: header.len(),
            });
        }
        if header.len() > FEATURE_COLUMNS + 1 {
            return Err(BanditError::MalformedCsv {
                row: 1,
                message: format!("expected {} columns, header has {}", FEATURE_COLUMNS + 1, header.len()),
            });
        }
        let column_names: Vec<String> = header.iter().map(str::to_string).collect();

        let mut raw = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| BanditError::MalformedCsv {
                row: line,
                message: e.to_string(),
            })?;
            if record.len() != FEATURE_COLUMNS + 1 {
                return Err(BanditError::MalformedCsv {
                    row: line,
                    message: format!("expected {} fields, found {}", FEATURE_COLUMNS + 1, record.len()),
                });
            }
            let mut row = [0.0; FEATURE_COLUMNS];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = parse_field(&record[j], line, &column_names[j])?;
            }
            let label = parse_field(&record[FEATURE_COLUMNS], line, &column_names[FEATURE_COLUMNS])?;
            let label = if label == 0.0 {
                false
            } else if label == 1.0 {
                true
            } else {
                return Err(BanditError::MalformedCsv {
                    row: line,
                    message: format!("outcome must be 0 or 1, got {label}"),
                });
            };
            raw.push(row);
            labels.push(label);
        }
        Self::from_rows(column_names, raw, labels)
    }

    /// Standardize raw rows column by column (population standard deviation).
    pub fn from_rows(
        column_names: Vec<String>,
        raw: Vec<[f64; FEATURE_COLUMNS]>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        if raw.is_empty() || raw.len() != labels.len() {
            return Err(BanditError::InvalidParameter("dataset needs labelled rows".into()));
        }
        let n = raw.len() as f64;
        let mut means = [0.0; FEATURE_COLUMNS];
        let mut stds = [0.0; FEATURE_COLUMNS];
        for j in 0..FEATURE_COLUMNS {
            let mean = raw.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if !(std > 0.0) || !std.is_finite() {
                return Err(BanditError::ZeroVarianceColumn {
                    column: column_names.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
                });
            }
            means[j] = mean;
            stds[j] = std;
        }
        let features = raw
            .iter()
            .map(|r| std::array::from_fn(|j| (r[j] - means[j]) / stds[j]))
            .collect();
        let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
        let negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
        if positives.is_empty() || negatives.is_empty() {
            return Err(BanditError::InvalidParameter("both outcome classes must be present".into()));
        }
        Ok(Self {
            column_names,
            features,
            labels,
            means,
            stds,
            positives,
            negatives,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn standardized(&self, row: usize) -> &[f64; FEATURE_COLUMNS] {
        &self.features[row]
    }

    pub fn label(&self, row: usize) -> bool {
        self.labels[row]
    }

    /// Per-column mean and standard deviation of the raw data.
    pub fn standardization(&self) -> (&[f64; FEATURE_COLUMNS], &[f64; FEATURE_COLUMNS]) {
        (&self.means, &self.stds)
    }

    /// 9-dimensional arm vector: standardized features then intercept.
    pub fn action_vector(&self, row: usize) -> Vector {
        let f = &self.features[row];
        Vector::from_fn(ACTION_DIM, |i, _| if i < FEATURE_COLUMNS { f[i] } else { INTERCEPT })
    }

    /// Largest arm-vector norm; the natural action bound `L`.
    pub fn max_action_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.action_vector(i).norm())
            .fold(0.0, f64::max)
    }
}

fn parse_field(field: &str, line: usize, column: &str) -> Result<f64> {
    if field.is_empty() {
        return Err(BanditError::MalformedCsv {
            row: line,
            message: format!("missing value in column `{column}`"),
        });
    }
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| BanditError::MalformedCsv {
            row: line,
            message: format!("non-numeric value `{field}` in column `{column}`"),
        })
}

pub fn load_replay_dataset(path: impl AsRef<Path>) -> Result<ReplayDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| BanditError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ReplayDataset::from_reader(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRound {
    pub actions: [Vector; 2],
    /// Dataset rows behind each arm.
    pub rows: [usize; 2],
    /// Arm whose row was originally labelled positive.
    pub original_positive: usize,
    /// Arm paying 1 this round.
    pub rewarded_index: usize,
}

impl ReplayRound {
    pub fn reward(&self, chosen: usize) -> f64 {
        if chosen == self.rewarded_index {
            1.0
        } else {
            0.0
        }
    }

    /// Rewards of both arms, the chosen one and the counterfactual.
    pub fn rewards(&self) -> [f64; 2] {
        [self.reward(0), self.reward(1)]
    }
}

/// Draw one negative and one positive row and shuffle them into two arms.
/// For `t > invert_at` the paying arm is the originally negative one.
pub fn replay_round<R: Rng + ?Sized>(
    dataset: &ReplayDataset,
    t: usize,
    invert_at: usize,
    rng: &mut R,
) -> ReplayRound {
    let neg = dataset.negatives[rng.random_range(0..dataset.negatives.len())];
    let pos = dataset.positives[rng.random_range(0..dataset.positives.len())];
    let positive_first: bool = rng.random();
    let (rows, original_positive) = if positive_first { ([pos, neg], 0) } else { ([neg, pos], 1) };
    let rewarded_index = if t > invert_at { 1 - original_positive } else { original_positive };
    ReplayRound {
        actions: [dataset.action_vector(rows[0]), dataset.action_vector(rows[1])],
        rows,
        original_positive,
        rewarded_index,
    }
}

/// Stand-in CSV with two Gaussian classes whose means differ by
/// `separation` standard deviations in every feature.
pub fn synthetic_dataset_csv<R: Rng + ?Sized>(rows_per_class: usize, separation: f64, rng: &mut R) -> String {
    let mut out = String::from("f1,f2,f3,f4,f5,f6,f7,f8,outcome\n");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    for label in [0u8, 1u8] {
        let shift = if label == 1 { separation / 2.0 } else { -separation / 2.0 };
        for _ in 0..rows_per_class {
            for j in 0..FEATURE_COLUMNS {
                // Distinct per-column location and scale so standardization matters.
                let x: f64 = (j as f64 + 1.0) * (shift + unit.sample(rng)) + 10.0 * j as f64;
                write!(out, "{x:.17e},").expect("write to string");
            }
            writeln!(out, "{label}").expect("write to string");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic() -> ReplayDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        ReplayDataset::from_reader(synthetic_dataset_csv(60, 2.0, &mut rng).as_bytes()).unwrap()
    }

    #[test]
    fn standardized_columns() {
        let d = synthetic();
        assert_eq!(d.len(), 120);
        for j in 0..FEATURE_COLUMNS {
            let col: Vec<f64> = (0..d.len()).map(|i| d.standardized(i)[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
        assert_eq!(d.action_vector(0).len(), 9);
        assert_eq!(d.action_vector(0)[8], 1.0);
    }

    #[test]
    fn inversion_flips_rewarded_arm() {
        let d = synthetic();
        for seed in 0..20 {
            let before = replay_round(&d, 999, 1000, &mut ChaCha8Rng::seed_from_u64(seed));
            let after = replay_round(&d, 1001, 1000, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(before.rows, after.rows);
            assert_eq!(before.rewarded_index, 1 - after.rewarded_index);
            assert!(d.label(before.rows[before.rewarded_index]));
            assert!(!d.label(after.rows[after.rewarded_index]));
            assert_eq!(before.rewards().iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn csv_errors() {
        let header = "a,b,c,d,e,f,g,h,y\n";
        let short = "a,b,c\n1,2,3\n";
        assert!(matches!(
            ReplayDataset::from_reader(short.as_bytes()),
            Err(BanditError::MissingColumns { found: 3, .. })
        ));
        let missing = format!("{header}1,2,3,4,5,6,7,8,1\n1,2,,4,5,6,7,8,0\n");
        assert!(matches!(
            ReplayDataset::from_reader(missing.as_bytes()),
            Err(BanditError::MalformedCsv { row: 3, .. })
        ));
        let text = format!("{header}1,2,3,4,5,6,7,8,1\n1,x,3,4,5,6,7,8,0\n");
        assert!(matches!(
            ReplayDataset::from_reader(text.as_bytes()),
            Err(BanditError::MalformedCsv { row: 3, .. })
        ));
        let label = format!("{header}1,2,3,4,5,6,7,8,2\n");
        assert!(ReplayDataset::from_reader(label.as_bytes()).is_err());
        let constant = format!("{header}1,2,3,4,5,6,7,8,1\n1,3,4,5,6,7,8,9,0\n");
        assert!(matches!(
            ReplayDataset::from_reader(constant.as_bytes()),
            Err(BanditError::ZeroVarianceColumn { column }) if column == "a"
        ));
        let ok = format!("{header}1,2,3,4,5,6,7,8,1\n2,3,4,5,6,7,8,9,0\n");
        let d = ReplayDataset::from_reader(ok.as_bytes()).unwrap();
        assert_eq!(d.standardization().0[0], 1.5);
        assert!(load_replay_dataset("/nonexistent/pima.csv").is_err());
    }
}
