use serde::{Deserialize, Serialize};

use super::{decimal, OutputKind, PredictiveModel};
use crate::math::dot;

/// `f(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(with = "decimal::vector")]
    pub weights: Vec<f64>,
    #[serde(with = "decimal::scalar")]
    pub intercept: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, intercept: f64) -> Self {
        Self { weights, intercept }
    }
}

impl PredictiveModel for LinearModel {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }

    fn grad(&self, _x: &[f64]) -> Vec<f64> {
        self.weights.clone()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `f(x) = σ(w·x + b)`; the gradient is that of the probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    #[serde(with = "decimal::vector")]
    pub weights: Vec<f64>,
    #[serde(with = "decimal::scalar")]
    pub intercept: f64,
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, intercept: f64) -> Self {
        Self { weights, intercept }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }
}

impl PredictiveModel for LogisticModel {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn output_kind(&self) -> OutputKind {
        OutputKind::Probability
    }

    fn value(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let p = self.value(x);
        let s = p * (1.0 - p);
        self.weights.iter().map(|w| s * w).collect()
    }
}

/// `f(x) = Σᵢ sin(wᵢ·xᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidModel {
    #[serde(with = "decimal::vector")]
    pub frequencies: Vec<f64>,
}

impl SinusoidModel {
    pub fn new(frequencies: Vec<f64>) -> Self {
        Self { frequencies }
    }

    /// Frequencies `wᵢ = n·π / x0ᵢ`, which make every binary mask of `x0`
    /// evaluate to zero. Zero coordinates get frequency `n·π`.
    pub fn vanishing_on_masks(x0: &[f64], n: u32) -> Self {
        let k = f64::from(n) * std::f64::consts::PI;
        Self::new(
            x0.iter()
                .map(|&x| if x == 0.0 { k } else { k / x })
                .collect(),
        )
    }
}

impl PredictiveModel for SinusoidModel {
    fn input_dim(&self) -> usize {
        self.frequencies.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.frequencies
            .iter()
            .zip(x)
            .map(|(w, xi)| (w * xi).sin())
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.frequencies
            .iter()
            .zip(x)
            .map(|(w, xi)| w * (w * xi).cos())
            .collect()
    }
}

/// `f(x) = Σᵢ cᵢ·xᵢ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    #[serde(with = "decimal::vector")]
    pub coefficients: Vec<f64>,
}

impl QuadraticModel {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }
}

impl PredictiveModel for QuadraticModel {
    fn input_dim(&self) -> usize {
        self.coefficients.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(x)
            .map(|(c, xi)| c * xi * xi)
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(x)
            .map(|(c, xi)| 2.0 * c * xi)
            .collect()
    }
}
