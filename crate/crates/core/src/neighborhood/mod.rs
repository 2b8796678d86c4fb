//! Perturbation neighborhoods: noise family, combination operator and weighting kernel.

mod kernel;
pub(crate) mod sample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::{kernel_weight, Distance, WeightKernel, DEFAULT_SHAPLEY_CLAMP};
pub use sample::{sample_perturbations, Perturbation, PerturbationSet};

/// Number of perturbations drawn unless configured otherwise.
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `ξ ~ Normal(0, σ²I)`.
    GaussianAdditive { sigma: f64 },
    /// Scalar `ξ ~ Uniform(a, 1)`.
    UniformScalarMultiplicative { low: f64 },
    /// `ξ ∈ {0,1}^d`, each coordinate Bernoulli(0.5).
    BernoulliMask,
    /// One-hot `ξ`, cycling over coordinates.
    OneHotMask,
}

impl NoiseFamily {
    pub fn is_mask(&self) -> bool {
        matches!(self, NoiseFamily::BernoulliMask | NoiseFamily::OneHotMask)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, NoiseFamily::UniformScalarMultiplicative { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseFamily::GaussianAdditive { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::InvalidParameter(format!("gaussian sigma must be > 0, got {sigma}")),
            ),
            NoiseFamily::UniformScalarMultiplicative { low } if !(0.0..1.0).contains(&low) => {
                Err(Error::InvalidParameter(format!(
                    "uniform lower bound must lie in [0,1), got {low}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The noise value that leaves `x0` "unperturbed" in the surrogate's own
    /// coordinates: zero for every family.
    pub fn zero(&self, dim: usize) -> Noise {
        if self.is_scalar() {
            Noise::Scalar(0.0)
        } else {
            Noise::Vector(vec![0.0; dim])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Add,
    ElementwiseMultiply,
    ScalarMultiply,
}

impl CombineOp {
    pub fn is_multiplicative(self) -> bool {
        !matches!(self, CombineOp::Add)
    }
}

/// A single noise draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Noise {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Noise {
    /// Noise expressed per input coordinate; a scalar `α` becomes `α·1`.
    pub fn coordinates(&self, dim: usize) -> Vec<f64> {
        match self {
            Noise::Scalar(a) => vec![*a; dim],
            Noise::Vector(v) => v.clone(),
        }
    }
}

/// `x0 ⊕ ξ`.
pub fn combine(x0: &[f64], noise: &Noise, op: CombineOp) -> Result<Vec<f64>> {
    match (op, noise) {
        (CombineOp::Add, Noise::Vector(v)) => {
            check_len(x0, v)?;
            Ok(x0.iter().zip(v).map(|(a, b)| a + b).collect())
        }
        (CombineOp::ElementwiseMultiply, Noise::Vector(v)) => {
            check_len(x0, v)?;
            Ok(x0.iter().zip(v).map(|(a, b)| a * b).collect())
        }
        (CombineOp::ScalarMultiply, Noise::Scalar(a)) => Ok(x0.iter().map(|x| a * x).collect()),
        (op, noise) => Err(Error::InvalidPairing(format!(
            "{op:?} cannot combine {} noise",
            if matches!(noise, Noise::Scalar(_)) {
                "scalar"
            } else {
                "vector"
            }
        ))),
    }
}

fn check_len(x0: &[f64], v: &[f64]) -> Result<()> {
    if x0.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// The full neighborhood `Z` around a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodSpec {
    pub noise: NoiseFamily,
    pub combine: CombineOp,
    pub kernel: WeightKernel,
    pub n_samples: usize,
}

impl NeighborhoodSpec {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.kernel.validate()?;
        let ok = match self.combine {
            CombineOp::ScalarMultiply => self.noise.is_scalar(),
            CombineOp::ElementwiseMultiply => self.noise.is_mask(),
            CombineOp::Add => !self.noise.is_scalar(),
        };
        if !ok {
            return Err(Error::InvalidPairing(format!(
                "{:?} noise cannot be combined with {:?}",
                self.noise, self.combine
            )));
        }
        if matches!(self.kernel, WeightKernel::Shapley { .. }) && !self.noise.is_mask() {
            return Err(Error::InvalidPairing(
                "the Shapley kernel is defined on binary masks only".into(),
            ));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_samples must be >= 2, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }
}
