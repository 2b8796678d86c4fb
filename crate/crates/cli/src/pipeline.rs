use lfa_core::dataio::{
    knn_impute, load_csv, normalize, normalize_with, split, split_indices, synth_generate,
    NormalizationRecord,
};
use lfa_core::models::{train_sgd, TrainReport};
use lfa_core::{Dataset, Model, PredictiveModel};

use crate::config::{DatasetSource, ModelSource, PointSelection, RunConfig};
use crate::CliError;

/// Dataset split, fitted model and the points to explain.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub model: Model,
    pub training: Option<TrainReport>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, Dataset), CliError> {
    match &cfg.dataset {
        DatasetSource::Synth {
            generator,
            n,
            d,
            noise,
        } => {
            let data = synth_generate(*generator, *n, *d, *noise, cfg.seed)?;
            Ok(split(&data, cfg.train_fraction, cfg.seed)?)
        }
        DatasetSource::Csv {
            path,
            target,
            missing,
            knn_k,
            train_only_normalization,
        } => {
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "dataset file {} does not exist",
                    path.display()
                )));
            }
            let raw = load_csv(path, target, missing)?;
            let table = knn_impute(&raw, *knn_k)?;
            if *train_only_normalization {
                let (tr, te) = split_indices(table.rows.len(), cfg.train_fraction, cfg.seed)?;
                let rows: Vec<Vec<f64>> = tr.iter().map(|&i| table.rows[i].clone()).collect();
                let data = normalize_with(&table, &NormalizationRecord::fit(&rows)?);
                Ok((data.subset(&tr), data.subset(&te)))
            } else {
                Ok(split(&normalize(&table)?, cfg.train_fraction, cfg.seed)?)
            }
        }
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let (train, test) = load_dataset(cfg)?;
    let (model, training) = match &cfg.model {
        ModelSource::Train {
            architecture,
            train: tc,
        } => {
            let (m, r) = train_sgd(&train.features, &train.targets, architecture, tc)?;
            (m, Some(r))
        }
        ModelSource::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read model {}: {e}", path.display()))
            })?;
            (Model::from_json(&text)?, None)
        }
    };
    if model.input_dim() != train.dim() {
        return Err(CliError::Runtime(format!(
            "model expects {} features but the dataset has {}",
            model.input_dim(),
            train.dim()
        )));
    }
    Ok(Prepared {
        train,
        test,
        model,
        training,
    })
}

pub fn select_points(cfg: &RunConfig, prepared: &Prepared) -> Result<Vec<Vec<f64>>, CliError> {
    let d = prepared.model.input_dim();
    let points = match &cfg.points {
        PointSelection::Test { count } => prepared
            .test
            .features
            .iter()
            .take(*count)
            .cloned()
            .collect(),
        PointSelection::Explicit { points } => points.clone(),
    };
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(CliError::Runtime(format!(
            "point has {} coordinates, model expects {d}",
            p.len()
        )));
    }
    Ok(points)
}

pub fn mse(model: &Model, data: &Dataset) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    data.features
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| (model.value(x) - y).powi(2))
        .sum::<f64>()
        / data.len() as f64
}
