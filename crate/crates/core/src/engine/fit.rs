use serde::{Deserialize, Serialize};

use super::instance::{InterceptRule, LfaInstance, RegressionTarget, Scale, SurrogateParam};
use super::loss::{LossSpec, Penalty};
use crate::error::{Error, Result};
use crate::math::{dot, weighted_ridge_ls, WlsProblem};
use crate::neighborhood::{CombineOp, PerturbationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Analytic,
    ClosedForm,
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: SolverKind,
    pub n_used: usize,
    pub seed: u64,
    pub ridge: f64,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub epochs_run: Option<usize>,
}

/// A fitted linear surrogate `g(u) = w·u + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: String,
    pub x0: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub scale: Scale,
    pub diagnostics: Diagnostics,
    pub instance: LfaInstance,
}

impl Explanation {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub(crate) fn new(
        instance: &LfaInstance,
        x0: &[f64],
        (weights, intercept): (Vec<f64>, f64),
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() {
            return Err(Error::NonFinite("surrogate weights"));
        }
        Ok(Explanation {
            method: instance
                .method
                .map_or_else(|| "custom".to_string(), |m| m.id().to_string()),
            x0: x0.to_vec(),
            weights,
            intercept,
            scale: instance.scale(),
            diagnostics,
            instance: instance.clone(),
        })
    }
}

/// Regression view of a perturbation set under one instance.
#[derive(Debug, Clone)]
pub(crate) struct Rows {
    /// Surrogate inputs: `ξ` or `x_ξ`.
    pub u: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// `∇ξ f`, empty for squared-error losses.
    pub grads: Vec<Vec<f64>>,
    /// Kernel weights scaled to mean 1.
    pub weights: Vec<f64>,
    /// `∂u/∂ξ` per coordinate, so that `∇ξ g = scale ⊙ w`.
    pub scale: Vec<f64>,
    pub u_zero: Vec<f64>,
    pub y_zero: f64,
}

impl Rows {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn build(instance: &LfaInstance, pset: &PerturbationSet) -> Result<Rows> {
        let spec = &instance.neighborhood;
        if pset.spec.noise != spec.noise
            || pset.spec.combine != spec.combine
            || pset.spec.kernel != spec.kernel
        {
            return Err(Error::FamilyMismatch(
                "perturbation set was drawn from a different neighborhood".into(),
            ));
        }
        if pset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = pset.dim();
        let x0 = &pset.x0;
        let multiplicative = spec.combine.is_multiplicative();
        let reparam = instance.param == SurrogateParam::OfPerturbedInput;
        if reparam && multiplicative {
            if let Some(i) = x0.iter().position(|v| *v == 0.0) {
                return Err(Error::DegenerateCoordinate(i));
            }
        }
        let scale = if reparam && multiplicative {
            x0.clone()
        } else {
            vec![1.0; dim]
        };
        let u_zero = if reparam && spec.combine == CombineOp::Add {
            x0.clone()
        } else {
            vec![0.0; dim]
        };
        let y_zero = match instance.target {
            RegressionTarget::OcclusionDelta => 0.0,
            RegressionTarget::Value if multiplicative => pset.value_at_origin,
            RegressionTarget::Value => pset.value_at_x0,
        };
        let u = pset
            .entries
            .iter()
            .map(|e| {
                if reparam {
                    e.point.clone()
                } else {
                    e.noise.coordinates(dim)
                }
            })
            .collect();
        let y = pset
            .entries
            .iter()
            .map(|e| match instance.target {
                RegressionTarget::Value => Ok(e.value),
                RegressionTarget::OcclusionDelta => e
                    .complement_value
                    .map(|c| pset.value_at_x0 - c)
                    .ok_or_else(|| {
                        Error::InvalidParameter("occlusion target needs one-hot masks".into())
                    }),
            })
            .collect::<Result<Vec<_>>>()?;
        let grads = if instance.loss.needs_gradients() {
            pset.entries
                .iter()
                .map(|e| {
                    e.noise_gradient.clone().ok_or_else(|| {
                        Error::InvalidParameter("perturbation set has no cached gradients".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let total: f64 = pset.entries.iter().map(|e| e.weight).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::DegenerateVector("kernel weights"));
        }
        let mean = total / pset.len() as f64;
        Ok(Rows {
            u,
            y,
            grads,
            weights: pset.entries.iter().map(|e| e.weight / mean).collect(),
            scale,
            u_zero,
            y_zero,
        })
    }

    /// Weighted mean of the per-perturbation loss plus any penalty.
    pub fn loss(&self, loss: &LossSpec, w: &[f64], b: f64) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let data: f64 = match loss.base() {
            LossSpec::GradientMatching => self
                .grads
                .iter()
                .zip(&self.weights)
                .map(|(g, p)| {
                    p * 0.5
                        * g.iter()
                            .zip(&self.scale)
                            .zip(w)
                            .map(|((gi, di), wi)| (gi - di * wi).powi(2))
                            .sum::<f64>()
                })
                .sum(),
            _ => self
                .u
                .iter()
                .zip(&self.y)
                .zip(&self.weights)
                .map(|((u, y), p)| p * 0.5 * (y - dot(w, u) - b).powi(2))
                .sum(),
        };
        let penalty = loss
            .penalty()
            .map_or(0.0, |(lambda, pen)| lambda * pen.value(w));
        data / total + penalty
    }

    /// Weighted mean of `∇ξ f`.
    pub fn mean_gradient(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let mut mean = vec![0.0; self.dim()];
        for (g, p) in self.grads.iter().zip(&self.weights) {
            for (m, gi) in mean.iter_mut().zip(g) {
                *m += p * gi;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        mean
    }

    pub fn anchored_intercept(&self, w: &[f64]) -> f64 {
        self.y_zero - dot(w, &self.u_zero)
    }
}

/// Exact minimizer of `½ d²(w − w̄)² + pen(w)` for one coordinate.
pub(crate) fn prox_coordinate(unpenalized: f64, d: f64, penalty: Option<(f64, Penalty)>) -> f64 {
    match penalty {
        None => unpenalized,
        Some((lambda, Penalty::L0)) => {
            if (d * unpenalized).powi(2) > 2.0 * lambda {
                unpenalized
            } else {
                0.0
            }
        }
        Some((lambda, Penalty::L1)) => {
            let t = lambda / (d * d);
            unpenalized.signum() * (unpenalized.abs() - t).max(0.0)
        }
    }
}

pub(crate) fn solve_closed_form(instance: &LfaInstance, rows: &Rows) -> Result<(Vec<f64>, f64)> {
    match instance.loss.base() {
        LossSpec::GradientMatching => {
            let mean = rows.mean_gradient();
            let penalty = instance.loss.penalty();
            let w: Vec<f64> = mean
                .iter()
                .zip(&rows.scale)
                .map(|(g, d)| prox_coordinate(g / d, *d, penalty))
                .collect();
            let b = rows.anchored_intercept(&w);
            Ok((w, b))
        }
        _ if instance.loss.penalty().is_some() => Err(Error::NoClosedForm(
            "penalized squared error has no closed form; use the iterative fitter".into(),
        )),
        _ => match instance.intercept {
            InterceptRule::Free => {
                let fit = weighted_ridge_ls(&WlsProblem {
                    rows: &rows.u,
                    targets: &rows.y,
                    weights: &rows.weights,
                    ridge: instance.ridge,
                    fit_intercept: true,
                })?;
                Ok((fit.weights, fit.intercept))
            }
            InterceptRule::FixedF0 => {
                let shifted: Vec<Vec<f64>> = rows
                    .u
                    .iter()
                    .map(|u| u.iter().zip(&rows.u_zero).map(|(a, z)| a - z).collect())
                    .collect();
                let targets: Vec<f64> = rows.y.iter().map(|y| y - rows.y_zero).collect();
                let fit = weighted_ridge_ls(&WlsProblem {
                    rows: &shifted,
                    targets: &targets,
                    weights: &rows.weights,
                    ridge: instance.ridge,
                    fit_intercept: false,
                })?;
                let b = rows.anchored_intercept(&fit.weights);
                Ok((fit.weights, b))
            }
        },
    }
}

/// Solve the empirical LFA objective exactly on `pset`.
pub fn fit_closed_form(instance: &LfaInstance, pset: &PerturbationSet) -> Result<Explanation> {
    instance.validate()?;
    let rows = Rows::build(instance, pset)?;
    let (w, b) = solve_closed_form(instance, &rows)?;
    let diagnostics = Diagnostics {
        solver: SolverKind::ClosedForm,
        n_used: rows.len(),
        seed: pset.seed,
        ridge: instance.ridge,
        train_loss: rows.loss(&instance.loss, &w, b),
        validation_loss: None,
        test_loss: None,
        epochs_run: None,
    };
    Explanation::new(instance, &pset.x0, (w, b), diagnostics)
}
