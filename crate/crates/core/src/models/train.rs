//! Minibatch SGD with optional cosine annealing.

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Layer, MlpModel};
use super::{LinearModel, LogisticModel, Model, OutputKind, PredictiveModel};
use crate::error::{Error, Result};
use crate::math::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Linear,
    Logistic,
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        output: OutputKind,
    },
}

impl Architecture {
    /// Three hidden layers of 8 tanh units with a linear head.
    pub fn default_regression_mlp() -> Self {
        Architecture::Mlp {
            hidden: vec![8, 8, 8],
            activation: Activation::Tanh,
            output: OutputKind::Regression,
        }
    }

    fn output_kind(&self) -> OutputKind {
        match self {
            Architecture::Linear => OutputKind::Regression,
            Architecture::Logistic => OutputKind::Probability,
            Architecture::Mlp { output, .. } => *output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub cosine_annealing: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 64,
            learning_rate: 0.05,
            cosine_annealing: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss over the full data after each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

fn sample_loss(kind: OutputKind, prediction: f64, target: f64) -> f64 {
    match kind {
        OutputKind::Regression => 0.5 * (prediction - target).powi(2),
        OutputKind::Probability => {
            let p = prediction.clamp(1e-12, 1.0 - 1e-12);
            -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
        }
    }
}

fn mean_loss(net: &MlpModel, kind: OutputKind, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    rows.iter()
        .zip(targets)
        .map(|(x, y)| sample_loss(kind, net.value(x), *y))
        .sum::<f64>()
        / rows.len() as f64
}

/// Trains a zoo model on `(rows, targets)`. Regression heads minimize squared
/// error, probability heads minimize binary cross-entropy.
pub fn train_sgd(
    rows: &[Vec<f64>],
    targets: &[f64],
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if targets.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: targets.len(),
        });
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || cfg.learning_rate <= 0.0 {
        return Err(Error::InvalidParameter(
            "epochs, batch size and learning rate must be positive".into(),
        ));
    }

    let kind = arch.output_kind();
    let out_act = match kind {
        OutputKind::Regression => Activation::Identity,
        OutputKind::Probability => Activation::Sigmoid,
    };
    let mut rng = RandomStream::new(cfg.seed);
    let mut init_rng = rng.fork("init");
    let mut net = match arch {
        Architecture::Linear | Architecture::Logistic => MlpModel::new(vec![Layer {
            weights: vec![vec![0.0; d]],
            bias: vec![0.0],
            activation: out_act,
        }]),
        Architecture::Mlp {
            hidden, activation, ..
        } => {
            let mut sizes = vec![d];
            sizes.extend(hidden);
            sizes.push(1);
            MlpModel::random(&sizes, *activation, out_act, &mut init_rng)
        }
    };

    let n = rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut grad_w: Vec<Vec<Vec<f64>>> = net
        .layers
        .iter()
        .map(|l| vec![vec![0.0; l.inputs()]; l.outputs()])
        .collect();
    let mut grad_b: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.outputs()]).collect();

    for epoch in 0..cfg.epochs {
        let lr = if cfg.cosine_annealing {
            0.5 * cfg.learning_rate
                * (1.0 + (std::f64::consts::PI * epoch as f64 / cfg.epochs as f64).cos())
        } else {
            cfg.learning_rate
        };
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            grad_w.iter_mut().flatten().flatten().for_each(|g| *g = 0.0);
            grad_b.iter_mut().flatten().for_each(|g| *g = 0.0);
            for &i in batch {
                let trace = net.trace(&rows[i]);
                let last = net.layers.len() - 1;
                let out = trace.post[last][0];
                let seed = match kind {
                    OutputKind::Regression => out - targets[i],
                    OutputKind::Probability => out - targets[i],
                };
                let deltas = net.deltas(&trace, seed);
                for (l, delta) in deltas.iter().enumerate() {
                    for (j, dj) in delta.iter().enumerate() {
                        grad_b[l][j] += dj;
                        for (g, x) in grad_w[l][j].iter_mut().zip(&trace.inputs[l]) {
                            *g += dj * x;
                        }
                    }
                }
            }
            let step = lr / batch.len() as f64;
            for (l, layer) in net.layers.iter_mut().enumerate() {
                for (j, row) in layer.weights.iter_mut().enumerate() {
                    for (w, g) in row.iter_mut().zip(&grad_w[l][j]) {
                        *w -= step * g;
                    }
                    layer.bias[j] -= step * grad_b[l][j];
                }
            }
        }
        let loss = mean_loss(&net, kind, rows, targets);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: format!("training loss is {loss}"),
            });
        }
        epoch_losses.push(loss);
    }

    let model = match arch {
        Architecture::Linear => {
            let layer = &net.layers[0];
            Model::Linear(LinearModel::new(layer.weights[0].clone(), layer.bias[0]))
        }
        Architecture::Logistic => {
            let layer = &net.layers[0];
            Model::Logistic(LogisticModel::new(layer.weights[0].clone(), layer.bias[0]))
        }
        Architecture::Mlp { .. } => Model::Mlp(net),
    };
    Ok((model, TrainReport { epoch_losses }))
}
