//! Self-contained differentiable model zoo with analytic input gradients.

mod decimal;
mod fd;
mod mlp;
mod simple;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fd::{fd_gradient, DEFAULT_FD_STEP};
pub use mlp::{Activation, Layer, MlpModel};
pub use simple::{LinearModel, LogisticModel, QuadraticModel, SinusoidModel};
pub use train::{train_sgd, Architecture, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Regression,
    Probability,
}

/// Scalar-output black box with an analytic input gradient.
///
/// Implementors provide the unchecked `value`/`grad`; callers at API
/// boundaries use `predict`/`gradient`, which validate the dimension.
pub trait PredictiveModel: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output_kind(&self) -> OutputKind {
        OutputKind::Regression
    }

    fn value(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64>;

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x)?;
        Ok(self.value(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x)?;
        Ok(self.grad(x))
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

impl<M: PredictiveModel + ?Sized> PredictiveModel for &M {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_kind(&self) -> OutputKind {
        (**self).output_kind()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad(x)
    }
}

/// Any zoo model, serializable as a tagged JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearModel),
    Logistic(LogisticModel),
    Mlp(MlpModel),
    Sinusoid(SinusoidModel),
    Quadratic(QuadraticModel),
}

impl Model {
    pub fn family(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Logistic(_) => "logistic",
            Model::Mlp(_) => "mlp",
            Model::Sinusoid(_) => "sinusoid",
            Model::Quadratic(_) => "quadratic",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn inner(&self) -> &dyn PredictiveModel {
        match self {
            Model::Linear(m) => m,
            Model::Logistic(m) => m,
            Model::Mlp(m) => m,
            Model::Sinusoid(m) => m,
            Model::Quadratic(m) => m,
        }
    }
}

impl PredictiveModel for Model {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn output_kind(&self) -> OutputKind {
        self.inner().output_kind()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner().value(x)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.inner().grad(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RandomStream;

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = RandomStream::new(17);
        let mlp = MlpModel::random(
            &[3, 8, 8, 1],
            Activation::Tanh,
            Activation::Identity,
            &mut rng,
        );
        let models = vec![
            Model::Linear(LinearModel::new(vec![0.1, 1.0 / 3.0, -2e-300], 1e300)),
            Model::Mlp(mlp),
            Model::Sinusoid(SinusoidModel::new(vec![std::f64::consts::PI])),
        ];
        for m in models {
            let text = m.to_json().unwrap();
            let back = Model::from_json(&text).unwrap();
            assert_eq!(m, back);
            assert_eq!(text, back.to_json().unwrap());
        }
    }

    #[test]
    fn parameters_are_decimal_strings() {
        let m = Model::Linear(LinearModel::new(vec![0.1], 2.0));
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["kind"], "linear");
        assert_eq!(v["weights"][0], "0.1");
        assert_eq!(v["intercept"], "2.0");
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = LinearModel::new(vec![2.0, -1.0], 0.0);
        assert!(matches!(
            m.predict(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(m.gradient(&[1.0, 2.0, 3.0]).is_err());
    }
}
