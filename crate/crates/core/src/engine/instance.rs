use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::loss::LossSpec;
use crate::error::{Error, Result};
use crate::math::DEFAULT_RIDGE;
use crate::neighborhood::{
    CombineOp, Distance, NeighborhoodSpec, NoiseFamily, WeightKernel, DEFAULT_SAMPLES,
    DEFAULT_SHAPLEY_CLAMP,
};

/// Noise scale of the Vanilla Gradients limit instance.
pub const VANILLA_SIGMA: f64 = 1e-6;
/// Lower bound of the Gradient×Input limit instance.
pub const GRAD_X_INPUT_LOW: f64 = 1.0 - 1e-6;
pub const DEFAULT_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CLime,
    SmoothGrad,
    VanillaGradients,
    IntegratedGradients,
    GradXInput,
    Lime,
    KernelShap,
    Occlusion,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::CLime,
        Method::SmoothGrad,
        Method::VanillaGradients,
        Method::IntegratedGradients,
        Method::GradXInput,
        Method::Lime,
        Method::KernelShap,
        Method::Occlusion,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::CLime => "c_lime",
            Method::SmoothGrad => "smooth_grad",
            Method::VanillaGradients => "vanilla_gradients",
            Method::IntegratedGradients => "integrated_gradients",
            Method::GradXInput => "grad_x_input",
            Method::Lime => "lime",
            Method::KernelShap => "kernel_shap",
            Method::Occlusion => "occlusion",
        }
    }

    /// Additive-noise methods; the rest perturb multiplicatively.
    pub fn is_additive(self) -> bool {
        matches!(
            self,
            Method::CLime | Method::SmoothGrad | Method::VanillaGradients
        )
    }

    pub fn is_mask(self) -> bool {
        matches!(self, Method::Lime | Method::KernelShap | Method::Occlusion)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.id().replace('_', "") == key)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Which argument the linear surrogate is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateParam {
    /// `g(ξ)`.
    #[default]
    OfNoise,
    /// `g(x_ξ)`.
    OfPerturbedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptRule {
    Free,
    /// `g` reproduces the target at the zero-noise point.
    FixedF0,
}

/// Regression target for squared-error fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    /// `f(x_ξ)`.
    #[default]
    Value,
    /// `f(x0) − f(x0 ⊙ (1 − ξ))`.
    OcclusionDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Gradient,
    GradientTimesInput,
}

/// Neighborhood, loss, parameterization and intercept rule of a linear-surrogate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfaInstance {
    pub method: Option<Method>,
    pub neighborhood: NeighborhoodSpec,
    pub loss: LossSpec,
    pub param: SurrogateParam,
    pub intercept: InterceptRule,
    pub target: RegressionTarget,
    pub ridge: f64,
}

impl LfaInstance {
    pub fn validate(&self) -> Result<()> {
        self.neighborhood.validate()?;
        self.loss.validate()?;
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be >= 0, got {}",
                self.ridge
            )));
        }
        if self.target == RegressionTarget::OcclusionDelta
            && self.neighborhood.noise != NoiseFamily::OneHotMask
        {
            return Err(Error::InvalidPairing(
                "the occlusion target needs one-hot mask noise".into(),
            ));
        }
        Ok(())
    }

    pub fn scale(&self) -> Scale {
        match (self.param, self.neighborhood.combine) {
            (SurrogateParam::OfPerturbedInput, _) | (_, CombineOp::Add) => Scale::Gradient,
            _ => Scale::GradientTimesInput,
        }
    }

    pub fn with_param(mut self, param: SurrogateParam) -> Self {
        self.param = param;
        self
    }
}

/// Per-method hyperparameters; anything left unset takes the method default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodParams {
    pub sigma: Option<f64>,
    /// Lower bound `a` of `Uniform(a, 1)` for the scaling methods.
    pub low: Option<f64>,
    pub n_samples: Option<usize>,
    pub kernel_width: Option<f64>,
    pub kernel_distance: Option<Distance>,
    pub shapley_clamp: Option<f64>,
    pub param: Option<SurrogateParam>,
    pub ridge: Option<f64>,
    /// Fit the limit instance instead of the analytic shortcut.
    pub use_limit_path: bool,
}

/// The linear-surrogate instance behind `method` for inputs of dimension `dim`.
pub fn registry(method: Method, params: &MethodParams, dim: usize) -> Result<LfaInstance> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let n_samples = params.n_samples.unwrap_or(DEFAULT_SAMPLES);
    let gaussian = |sigma: f64| NeighborhoodSpec {
        noise: NoiseFamily::GaussianAdditive { sigma },
        combine: CombineOp::Add,
        kernel: WeightKernel::Uniform,
        n_samples,
    };
    let scaling = |low: f64| NeighborhoodSpec {
        noise: NoiseFamily::UniformScalarMultiplicative { low },
        combine: CombineOp::ScalarMultiply,
        kernel: WeightKernel::Uniform,
        n_samples,
    };
    let mask = |noise: NoiseFamily, kernel: WeightKernel| NeighborhoodSpec {
        noise,
        combine: CombineOp::ElementwiseMultiply,
        kernel,
        n_samples,
    };
    let sigma = params.sigma.unwrap_or(DEFAULT_SIGMA);
    let (neighborhood, loss, intercept, target) = match method {
        Method::CLime => (
            gaussian(sigma),
            LossSpec::SquaredError,
            InterceptRule::Free,
            RegressionTarget::Value,
        ),
        Method::SmoothGrad => (
            gaussian(sigma),
            LossSpec::GradientMatching,
            InterceptRule::FixedF0,
            RegressionTarget::Value,
        ),
        Method::VanillaGradients => (
            gaussian(params.sigma.unwrap_or(VANILLA_SIGMA)),
            LossSpec::GradientMatching,
            InterceptRule::FixedF0,
            RegressionTarget::Value,
        ),
        Method::IntegratedGradients => (
            scaling(params.low.unwrap_or(0.0)),
            LossSpec::GradientMatching,
            InterceptRule::FixedF0,
            RegressionTarget::Value,
        ),
        Method::GradXInput => (
            scaling(params.low.unwrap_or(GRAD_X_INPUT_LOW)),
            LossSpec::GradientMatching,
            InterceptRule::FixedF0,
            RegressionTarget::Value,
        ),
        Method::Lime => {
            let default = WeightKernel::default_exponential(dim);
            let kernel = match default {
                WeightKernel::Exponential { width, distance } => WeightKernel::Exponential {
                    width: params.kernel_width.unwrap_or(width),
                    distance: params.kernel_distance.unwrap_or(distance),
                },
                other => other,
            };
            (
                mask(NoiseFamily::BernoulliMask, kernel),
                LossSpec::SquaredError,
                InterceptRule::Free,
                RegressionTarget::Value,
            )
        }
        Method::KernelShap => (
            mask(
                NoiseFamily::BernoulliMask,
                WeightKernel::Shapley {
                    clamp: params.shapley_clamp.unwrap_or(DEFAULT_SHAPLEY_CLAMP),
                },
            ),
            LossSpec::SquaredError,
            InterceptRule::Free,
            RegressionTarget::Value,
        ),
        Method::Occlusion => (
            mask(NoiseFamily::OneHotMask, WeightKernel::Uniform),
            LossSpec::SquaredError,
            InterceptRule::FixedF0,
            RegressionTarget::OcclusionDelta,
        ),
    };
    let instance = LfaInstance {
        method: Some(method),
        neighborhood,
        loss,
        param: params.param.unwrap_or_default(),
        intercept,
        target,
        ridge: params.ridge.unwrap_or(DEFAULT_RIDGE),
    };
    instance.validate()?;
    Ok(instance)
}
