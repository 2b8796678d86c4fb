use serde::{Deserialize, Serialize};

use super::fit::{fit_closed_form, Explanation, Rows, SolverKind};
use super::instance::{registry, LfaInstance, Method, MethodParams};
use super::iterative::{fit_iterative, FitConfig};
use super::loss::{LossSpec, Penalty};
use crate::error::{Error, Result};
use crate::math::{hadamard, RandomStream};
use crate::models::{check_dim, PredictiveModel};
use crate::neighborhood::{sample_perturbations, Noise, Perturbation, PerturbationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    ClosedForm,
    Iterative,
}

/// Fit `instance` around `x0`, sampling its neighborhood from `rng`.
pub fn explain_instance<M: PredictiveModel + ?Sized>(
    instance: &LfaInstance,
    f: &M,
    x0: &[f64],
    rng: &mut RandomStream,
    solver: Solver,
    fit: &FitConfig,
) -> Result<Explanation> {
    match solver {
        Solver::Iterative => fit_iterative(instance, f, x0, rng, fit),
        Solver::ClosedForm => {
            let pset = sample_perturbations(
                &instance.neighborhood,
                f,
                x0,
                &mut rng.fork("perturbations"),
                instance.loss.needs_gradients(),
            )?;
            fit_closed_form(instance, &pset)
        }
    }
}

/// Explain `f` at `x0` with one of the eight registered methods.
///
/// Vanilla Gradients and Gradient×Input use their analytic limits unless
/// `params.use_limit_path` is set.
pub fn explain<M: PredictiveModel + ?Sized>(
    method: Method,
    params: &MethodParams,
    f: &M,
    x0: &[f64],
    rng: &mut RandomStream,
) -> Result<Explanation> {
    check_dim(f.input_dim(), x0)?;
    let instance = registry(method, params, x0.len())?;
    let shortcut =
        matches!(method, Method::VanillaGradients | Method::GradXInput) && !params.use_limit_path;
    if shortcut {
        analytic_limit(&instance, f, x0, rng.seed())
    } else {
        explain_instance(
            &instance,
            f,
            x0,
            rng,
            Solver::ClosedForm,
            &FitConfig::default(),
        )
    }
}

/// The σ → 0 or a → 1 limit: a single perturbation at the unperturbed input.
fn analytic_limit<M: PredictiveModel + ?Sized>(
    instance: &LfaInstance,
    f: &M,
    x0: &[f64],
    seed: u64,
) -> Result<Explanation> {
    let grad = f.gradient(x0)?;
    let (noise, noise_gradient) = if instance.neighborhood.combine.is_multiplicative() {
        (Noise::Scalar(1.0), hadamard(&grad, x0))
    } else {
        (Noise::Vector(vec![0.0; x0.len()]), grad)
    };
    let value_at_x0 = f.value(x0);
    let pset = PerturbationSet {
        x0: x0.to_vec(),
        spec: instance.neighborhood.clone(),
        seed,
        value_at_x0,
        value_at_origin: f.value(&vec![0.0; x0.len()]),
        entries: vec![Perturbation {
            noise,
            point: x0.to_vec(),
            weight: 1.0,
            value: value_at_x0,
            noise_gradient: Some(noise_gradient),
            complement_value: None,
        }],
    };
    let mut e = fit_closed_form(instance, &pset)?;
    e.diagnostics.solver = SolverKind::Analytic;
    e.diagnostics.n_used = 0;
    Ok(e)
}

/// SmoothGrad with an `L0` penalty: hard-thresholded average gradient.
pub fn sparse_smoothgrad<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    sigma: f64,
    lambda: f64,
    n_samples: usize,
    rng: &mut RandomStream,
) -> Result<Explanation> {
    check_dim(f.input_dim(), x0)?;
    let params = MethodParams {
        sigma: Some(sigma),
        n_samples: Some(n_samples),
        ..Default::default()
    };
    let mut instance = registry(Method::SmoothGrad, &params, x0.len())?;
    instance.loss = LossSpec::regularized(LossSpec::GradientMatching, lambda, Penalty::L0);
    instance.method = None;
    let pset = sample_perturbations(
        &instance.neighborhood,
        f,
        x0,
        &mut rng.fork("perturbations"),
        true,
    )?;
    let mut e = fit_closed_form(&instance, &pset)?;
    e.method = "sparse_smooth_grad".into();
    Ok(e)
}

/// Re-evaluate an explanation's loss on a perturbation set.
pub fn evaluate_loss(explanation: &Explanation, pset: &PerturbationSet) -> Result<f64> {
    let rows = Rows::build(&explanation.instance, pset)?;
    if rows.dim() != explanation.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.dim(),
            actual: explanation.weights.len(),
        });
    }
    Ok(rows.loss(
        &explanation.instance.loss,
        &explanation.weights,
        explanation.intercept,
    ))
}
