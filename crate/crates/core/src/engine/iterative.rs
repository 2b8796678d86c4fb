use serde::{Deserialize, Serialize};

use super::fit::{prox_coordinate, Diagnostics, Explanation, Rows, SolverKind};
use super::instance::{InterceptRule, LfaInstance};
use super::loss::LossSpec;
use crate::error::{Error, Result};
use crate::math::{dot, RandomStream};
use crate::models::PredictiveModel;
use crate::neighborhood::{sample_perturbations, PerturbationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub test_fraction: f64,
    /// Share of the non-test perturbations held out for early stopping.
    pub validation_fraction: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub cosine_annealing: bool,
    pub patience: usize,
    /// Minibatch size; `None` runs full-batch gradient descent.
    pub batch_size: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            test_fraction: 0.2,
            validation_fraction: 0.2,
            epochs: 500,
            learning_rate: 0.05,
            cosine_annealing: true,
            patience: 50,
            batch_size: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| (0.0..1.0).contains(&v);
        if !frac(self.test_fraction) || !frac(self.validation_fraction) {
            return Err(Error::InvalidParameter(
                "split fractions must lie in [0,1)".into(),
            ));
        }
        if self.epochs == 0 || !(self.learning_rate > 0.0) || self.batch_size == Some(0) {
            return Err(Error::InvalidParameter(
                "epochs, learning rate and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Train / validation / test index partition of a perturbation set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl PsetSplit {
    pub fn new(n: usize, cfg: &FitConfig, rng: &mut RandomStream) -> Result<Self> {
        if n < 10 {
            return Err(Error::InvalidParameter(format!(
                "iterative fitting needs at least 10 perturbations, got {n}"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut idx);
        let n_test = (n as f64 * cfg.test_fraction).round() as usize;
        let n_val = ((n - n_test) as f64 * cfg.validation_fraction).round() as usize;
        let test = idx[..n_test].to_vec();
        let validation = idx[n_test..n_test + n_val].to_vec();
        let train = idx[n_test + n_val..].to_vec();
        if train.is_empty() {
            return Err(Error::InvalidParameter(
                "split leaves no training perturbations".into(),
            ));
        }
        Ok(PsetSplit {
            train,
            validation,
            test,
        })
    }
}

/// Linear surrogate in whitened coordinates: `g = v·z + c`, `z = (u − m)/s`.
struct Whitened {
    m: Vec<f64>,
    s: Vec<f64>,
    /// Observation rows in whitened coordinates.
    z: Vec<Vec<f64>>,
}

impl Whitened {
    fn new(rows: &Rows, intercept: InterceptRule) -> Self {
        let total: f64 = rows.weights.iter().sum();
        let dim = rows.dim();
        let m = match intercept {
            InterceptRule::FixedF0 => rows.u_zero.clone(),
            InterceptRule::Free => (0..dim)
                .map(|j| {
                    rows.u
                        .iter()
                        .zip(&rows.weights)
                        .map(|(u, p)| p * u[j])
                        .sum::<f64>()
                        / total
                })
                .collect(),
        };
        let s: Vec<f64> = (0..dim)
            .map(|j| {
                let var = rows
                    .u
                    .iter()
                    .zip(&rows.weights)
                    .map(|(u, p)| p * (u[j] - m[j]).powi(2))
                    .sum::<f64>()
                    / total;
                if var.sqrt() > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z = rows
            .u
            .iter()
            .map(|u| (0..dim).map(|j| (u[j] - m[j]) / s[j]).collect())
            .collect();
        Whitened { m, s, z }
    }

    fn to_original(&self, v: &[f64], c: f64) -> (Vec<f64>, f64) {
        let w: Vec<f64> = v.iter().zip(&self.s).map(|(vi, si)| vi / si).collect();
        let b = c - dot(&w, &self.m);
        (w, b)
    }
}

fn learning_rate(cfg: &FitConfig, epoch: usize) -> f64 {
    if cfg.cosine_annealing {
        let t = epoch as f64 / cfg.epochs as f64;
        cfg.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    } else {
        cfg.learning_rate
    }
}

fn batches(n: usize, cfg: &FitConfig, rng: &mut RandomStream) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    match cfg.batch_size {
        None => vec![idx],
        Some(size) => {
            rng.shuffle(&mut idx);
            idx.chunks(size).map(<[usize]>::to_vec).collect()
        }
    }
}

/// Gradient-descent fit of the empirical LFA objective on a fixed split of `pset`.
///
/// Early stopping watches the validation loss; the last iterate is returned.
pub fn fit_iterative_on(
    instance: &LfaInstance,
    pset: &PerturbationSet,
    split: &PsetSplit,
    cfg: &FitConfig,
) -> Result<Explanation> {
    instance.validate()?;
    cfg.validate()?;
    let train = Rows::build(instance, &pset.select(&split.train))?;
    let validation = if split.validation.is_empty() {
        None
    } else {
        Some(Rows::build(instance, &pset.select(&split.validation))?)
    };
    let test = if split.test.is_empty() {
        None
    } else {
        Some(Rows::build(instance, &pset.select(&split.test))?)
    };
    let gm = matches!(instance.loss.base(), LossSpec::GradientMatching);
    let penalty = instance.loss.penalty();
    let dim = train.dim();
    let whitened = (!gm).then(|| Whitened::new(&train, instance.intercept));
    let free = !gm && instance.intercept == InterceptRule::Free;

    // Parameters: v (whitened weights, or ∇ξ g for gradient matching) and c.
    let mut v = vec![0.0; dim];
    let mut c = if free {
        let total: f64 = train.weights.iter().sum();
        train
            .y
            .iter()
            .zip(&train.weights)
            .map(|(y, p)| p * y)
            .sum::<f64>()
            / total
    } else {
        train.y_zero
    };
    let current = |v: &[f64], c: f64| -> (Vec<f64>, f64) {
        match &whitened {
            Some(wh) => wh.to_original(v, c),
            None => {
                let w: Vec<f64> = v.iter().zip(&train.scale).map(|(vi, d)| vi / d).collect();
                let b = train.anchored_intercept(&w);
                (w, b)
            }
        }
    };

    let mut batch_rng = RandomStream::new(pset.seed).fork("minibatch");
    let mut best_val = f64::INFINITY;
    let mut since_best = 0;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        let lr = learning_rate(cfg, epoch);
        for batch in batches(train.len(), cfg, &mut batch_rng) {
            let total: f64 = batch.iter().map(|&i| train.weights[i]).sum();
            let mut grad_v = vec![0.0; dim];
            let mut grad_c = 0.0;
            for &i in &batch {
                let p = train.weights[i] / total;
                if gm {
                    for ((g, vj), gj) in grad_v.iter_mut().zip(&v).zip(&train.grads[i]) {
                        *g += p * (vj - gj);
                    }
                } else {
                    let z = &whitened.as_ref().expect("whitened rows").z[i];
                    let r = dot(&v, z) + c - train.y[i];
                    for (g, zj) in grad_v.iter_mut().zip(z) {
                        *g += p * r * zj;
                    }
                    grad_c += p * r;
                }
            }
            for (j, (vj, g)) in v.iter_mut().zip(&grad_v).enumerate() {
                let step = *vj - lr * g;
                // Penalties act on w = v / s (or v / d); rescale the threshold accordingly.
                let d = match &whitened {
                    Some(wh) => 1.0 / wh.s[j],
                    None => 1.0 / train.scale[j],
                };
                *vj = prox_coordinate(
                    step,
                    1.0,
                    penalty.map(|(l, p)| (lr * l * scale_for(p, d), p)),
                );
            }
            if free {
                c -= lr * grad_c;
            }
        }
        epochs_run = epoch + 1;
        let (w, b) = current(&v, c);
        let train_loss = train.loss(&instance.loss, &w, b);
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: format!("training loss became {train_loss}"),
            });
        }
        if let Some(val) = &validation {
            let loss = val.loss(&instance.loss, &w, b);
            if !best_val.is_finite() || loss < best_val - 1e-12 * best_val.abs() {
                best_val = loss;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    let (w, b) = current(&v, c);
    let diagnostics = Diagnostics {
        solver: SolverKind::Iterative,
        n_used: train.len(),
        seed: pset.seed,
        ridge: 0.0,
        train_loss: train.loss(&instance.loss, &w, b),
        validation_loss: validation.as_ref().map(|r| r.loss(&instance.loss, &w, b)),
        test_loss: test.as_ref().map(|r| r.loss(&instance.loss, &w, b)),
        epochs_run: Some(epochs_run),
    };
    Explanation::new(instance, &pset.x0, (w, b), diagnostics)
}

/// Threshold multiplier turning a penalty on `w = d·v` into one on `v`.
fn scale_for(penalty: super::loss::Penalty, d: f64) -> f64 {
    match penalty {
        super::loss::Penalty::L0 => 1.0,
        super::loss::Penalty::L1 => d.abs(),
    }
}

/// The closed-form solution restricted to the training part of `split`,
/// with losses reported on all three parts.
pub fn fit_closed_form_on(
    instance: &LfaInstance,
    pset: &PerturbationSet,
    split: &PsetSplit,
) -> Result<Explanation> {
    let mut e = super::fit::fit_closed_form(instance, &pset.select(&split.train))?;
    let (w, b) = (e.weights.clone(), e.intercept);
    let part = |idx: &[usize]| -> Result<Option<f64>> {
        if idx.is_empty() {
            return Ok(None);
        }
        Ok(Some(Rows::build(instance, &pset.select(idx))?.loss(
            &instance.loss,
            &w,
            b,
        )))
    };
    e.diagnostics.validation_loss = part(&split.validation)?;
    e.diagnostics.test_loss = part(&split.test)?;
    Ok(e)
}

/// Sample a neighborhood of `x0` and fit it iteratively.
pub fn fit_iterative<M: PredictiveModel + ?Sized>(
    instance: &LfaInstance,
    f: &M,
    x0: &[f64],
    rng: &mut RandomStream,
    cfg: &FitConfig,
) -> Result<Explanation> {
    let pset = sample_perturbations(
        &instance.neighborhood,
        f,
        x0,
        &mut rng.fork("perturbations"),
        instance.loss.needs_gradients(),
    )?;
    let split = PsetSplit::new(pset.len(), cfg, &mut rng.fork("split"))?;
    fit_iterative_on(instance, &pset, &split, cfg)
}
