use serde::{Deserialize, Serialize};

use super::{Dataset, Table};
use crate::error::{Error, Result};

/// Per-feature mean and the range of the centered column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationRecord {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let d = first.len();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let min = (0..d)
            .map(|j| {
                rows.iter()
                    .map(|r| r[j] - mean[j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let max = (0..d)
            .map(|j| {
                rows.iter()
                    .map(|r| r[j] - mean[j])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Ok(NormalizationRecord { mean, min, max })
    }

    fn constant(&self, j: usize) -> bool {
        self.max[j] - self.min[j] <= 0.0
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.constant(j) {
                    0.5
                } else {
                    (v - self.mean[j] - self.min[j]) / (self.max[j] - self.min[j])
                }
            })
            .collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.constant(j) {
                    self.mean[j]
                } else {
                    v * (self.max[j] - self.min[j]) + self.min[j] + self.mean[j]
                }
            })
            .collect()
    }
}

/// Mean-center each feature, then map its range onto `[0, 1]`; constant features become 0.5.
pub fn normalize(table: &Table) -> Result<Dataset> {
    let record = NormalizationRecord::fit(&table.rows)?;
    Ok(normalize_with(table, &record))
}

/// Normalize with statistics computed elsewhere, e.g. on a training subset.
pub fn normalize_with(table: &Table, record: &NormalizationRecord) -> Dataset {
    Dataset {
        names: table.names.clone(),
        features: table.rows.iter().map(|r| record.apply(r)).collect(),
        targets: table.targets.clone(),
        record: Some(record.clone()),
        ground_truth: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: Vec<Vec<f64>>) -> Table {
        let n = rows.len();
        Table {
            names: (0..rows[0].len()).map(|i| format!("x{i}")).collect(),
            rows,
            targets: vec![0.0; n],
        }
    }

    #[test]
    fn examples() {
        let d = normalize(&table(vec![vec![1.0, 4.0], vec![2.0, 4.0], vec![3.0, 4.0]])).unwrap();
        assert_eq!(
            d.features,
            vec![vec![0.0, 0.5], vec![0.5, 0.5], vec![1.0, 0.5]]
        );
    }

    proptest! {
        #[test]
        fn round_trip_and_range(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..30)) {
            let t = table(rows.clone());
            let d = normalize(&t).unwrap();
            let rec = d.record.clone().unwrap();
            for (orig, z) in rows.iter().zip(&d.features) {
                for v in z {
                    prop_assert!((0.0..=1.0).contains(v));
                }
                for (a, b) in rec.inverse(z).iter().zip(orig) {
                    prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0) * 1e3);
                }
            }
        }

        #[test]
        fn idempotent(rows in prop::collection::vec(prop::collection::vec(-10f64..10.0, 2), 2..30)) {
            let once = normalize(&table(rows)).unwrap();
            let twice = normalize(&table(once.features.clone())).unwrap();
            for (a, b) in once.features.iter().flatten().zip(twice.features.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
