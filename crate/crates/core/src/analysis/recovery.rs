use serde::{Deserialize, Serialize};

use crate::engine::{explain, Method, MethodParams, SurrogateParam};
use crate::error::{Error, Result};
use crate::math::{cosine_distance, hadamard, l1_distance, l1_norm, linf_distance, RandomStream};
use crate::models::{Model, PredictiveModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryTarget {
    /// `w_f`.
    ModelWeights,
    /// `w_f ⊙ x0`.
    WeightsTimesInput,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub method: Method,
    pub family: String,
    pub param: SurrogateParam,
    pub x0: Vec<f64>,
    pub target: RecoveryTarget,
    pub target_weights: Vec<f64>,
    pub weights: Vec<f64>,
    pub l1: f64,
    pub relative_l1: f64,
    pub linf: f64,
    /// Undefined when either vector is zero.
    pub cosine: Option<f64>,
    pub threshold: f64,
    pub recovered: bool,
}

fn model_weights(f: &Model) -> Result<Vec<f64>> {
    match f {
        Model::Linear(m) => Ok(m.weights.clone()),
        Model::Logistic(m) => Ok(m.weights.clone()),
        Model::Sinusoid(m) => Ok(m.frequencies.clone()),
        other => Err(Error::FamilyMismatch(format!(
            "recovery needs a linear, logistic or sinusoid model, got {}",
            other.family()
        ))),
    }
}

fn report(
    method: Method,
    f: &Model,
    param: SurrogateParam,
    x0: &[f64],
    target: RecoveryTarget,
    target_weights: Vec<f64>,
    weights: Vec<f64>,
    threshold: f64,
) -> Result<RecoveryReport> {
    let l1 = l1_distance(&weights, &target_weights)?;
    let scale = l1_norm(&target_weights);
    let relative_l1 = if scale > 0.0 { l1 / scale } else { l1 };
    let linf = linf_distance(&weights, &target_weights)?;
    let cosine = cosine_distance(&weights, &target_weights).ok();
    let recovered = match (target, f) {
        (RecoveryTarget::Zero, _) => linf < threshold,
        // Probability outputs rescale the gradient by p(1 − p); only the direction is comparable.
        (_, Model::Logistic(_)) => cosine.is_some_and(|c| c < threshold),
        _ => relative_l1 < threshold,
    };
    Ok(RecoveryReport {
        method,
        family: f.family().to_string(),
        param,
        x0: x0.to_vec(),
        target,
        target_weights,
        weights,
        l1,
        relative_l1,
        linf,
        cosine,
        threshold,
        recovered,
    })
}

/// Explain a model with known weights and compare with what the method should recover.
pub fn check_recovery(
    method: Method,
    params: &MethodParams,
    f: &Model,
    x0: &[f64],
    rng: &mut RandomStream,
) -> Result<RecoveryReport> {
    let wf = model_weights(f)?;
    let param = params.param.unwrap_or_default();
    let (target, target_weights, threshold) = match f {
        Model::Sinusoid(_) => {
            if !method.is_mask() {
                return Err(Error::FamilyMismatch(
                    "the sinusoid case applies to binary-mask methods only".into(),
                ));
            }
            (RecoveryTarget::Zero, vec![0.0; wf.len()], 1e-8)
        }
        _ if method.is_additive() || param == SurrogateParam::OfPerturbedInput => {
            let tol = if method.is_additive() { 1e-3 } else { 1e-2 };
            (RecoveryTarget::ModelWeights, wf.clone(), tol)
        }
        _ => (RecoveryTarget::WeightsTimesInput, hadamard(&wf, x0), 1e-2),
    };
    let e = explain(method, params, f, x0, rng)?;
    report(
        method,
        f,
        param,
        x0,
        target,
        target_weights,
        e.weights,
        threshold,
    )
}

/// Refit a multiplicative method with the surrogate applied to `x_ξ` and compare with `w_f`.
pub fn reparam_recovery_check(
    method: Method,
    params: &MethodParams,
    f: &Model,
    x0: &[f64],
    rng: &mut RandomStream,
) -> Result<RecoveryReport> {
    if !matches!(f, Model::Linear(_)) {
        return Err(Error::FamilyMismatch(
            "reparameterized recovery expects a linear model".into(),
        ));
    }
    if method.is_additive() {
        return Err(Error::FamilyMismatch(format!(
            "{method} already recovers the model without reparameterization"
        )));
    }
    if let Some(i) = x0.iter().position(|v| *v == 0.0) {
        return Err(Error::DegenerateCoordinate(i));
    }
    f.predict(x0)?;
    let params = MethodParams {
        param: Some(SurrogateParam::OfPerturbedInput),
        ..params.clone()
    };
    let wf = model_weights(f)?;
    let e = explain(method, &params, f, x0, rng)?;
    let mut r = report(
        method,
        f,
        SurrogateParam::OfPerturbedInput,
        x0,
        RecoveryTarget::ModelWeights,
        wf,
        e.weights,
        1e-3,
    )?;
    r.recovered = r.linf < 1e-3;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearModel, LogisticModel, SinusoidModel};
    use std::f64::consts::PI;

    fn linear(w: Vec<f64>) -> Model {
        Model::Linear(LinearModel::new(w, 0.2))
    }

    #[test]
    fn smoothgrad_recovers_linear() {
        let r = check_recovery(
            Method::SmoothGrad,
            &MethodParams::default(),
            &linear(vec![2.0, -1.0, 0.5]),
            &[1.0, 1.0, 1.0],
            &mut RandomStream::new(0),
        )
        .unwrap();
        assert_eq!(r.target, RecoveryTarget::ModelWeights);
        assert!(r.l1 < 1e-6 && r.recovered);
    }

    #[test]
    fn grad_x_input_recovers_scaled_weights() {
        let r = check_recovery(
            Method::GradXInput,
            &MethodParams::default(),
            &linear(vec![2.0, -1.0, 0.5]),
            &[3.0, 2.0, 1.0],
            &mut RandomStream::new(0),
        )
        .unwrap();
        assert_eq!(r.target_weights, vec![6.0, -2.0, 0.5]);
        assert!(r.recovered);
        assert!(l1_distance(&r.weights, &[2.0, -1.0, 0.5]).unwrap() > 1.0);
    }

    #[test]
    fn lime_fails_on_vanishing_sinusoid() {
        let f = Model::Sinusoid(SinusoidModel::new(vec![PI]));
        let r = check_recovery(
            Method::Lime,
            &MethodParams::default(),
            &f,
            &[1.0],
            &mut RandomStream::new(0),
        )
        .unwrap();
        assert_eq!(r.target, RecoveryTarget::Zero);
        assert!(r.linf < 1e-8 && r.recovered);
        assert!(check_recovery(
            Method::SmoothGrad,
            &MethodParams::default(),
            &f,
            &[1.0],
            &mut RandomStream::new(0)
        )
        .is_err());
    }

    #[test]
    fn logistic_direction_is_recovered() {
        let f = Model::Logistic(LogisticModel::new(vec![1.0, -2.0], 0.1));
        let r = check_recovery(
            Method::SmoothGrad,
            &MethodParams::default(),
            &f,
            &[0.5, 0.5],
            &mut RandomStream::new(0),
        )
        .unwrap();
        assert!(r.recovered, "{r:?}");
    }

    #[test]
    fn reparameterization_recovers_model_weights() {
        let f = linear(vec![2.0, -1.0]);
        let r = reparam_recovery_check(
            Method::GradXInput,
            &MethodParams::default(),
            &f,
            &[3.0, 2.0],
            &mut RandomStream::new(0),
        )
        .unwrap();
        assert!(r.linf < 1e-9, "{:?}", r.weights);
        let f = linear(vec![1.0, 1.0, 1.0]);
        let r = reparam_recovery_check(
            Method::Lime,
            &MethodParams::default(),
            &f,
            &[1.0, 2.0, 3.0],
            &mut RandomStream::new(0),
        )
        .unwrap();
        assert!(r.recovered, "{:?}", r.weights);
        assert!(matches!(
            reparam_recovery_check(
                Method::Lime,
                &MethodParams::default(),
                &f,
                &[1.0, 0.0, 3.0],
                &mut RandomStream::new(0)
            ),
            Err(Error::DegenerateCoordinate(1))
        ));
    }
}
