//! Dataset ingestion and preprocessing.

mod csvio;
mod impute;
mod normalize;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::RandomStream;

pub use csvio::{load_csv, read_csv, write_csv, RawTable};
pub use impute::knn_impute;
pub use normalize::{normalize, normalize_with, NormalizationRecord};
pub use synth::{synth_generate, GroundTruth, SynthKind};

/// A complete table without missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub record: Option<NormalizationRecord>,
    pub ground_truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            record: self.record.clone(),
            ground_truth: self.ground_truth.clone(),
        }
    }
}

/// Seeded shuffle of `0..n` cut into train and test index sets.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "splitting needs at least 2 rows, got {n}"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0,1), got {fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    RandomStream::new(seed).fork("split").shuffle(&mut idx);
    let n_train = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
