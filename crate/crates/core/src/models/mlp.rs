use serde::{Deserialize, Serialize};

use super::simple::sigmoid;
use super::{decimal, OutputKind, PredictiveModel};
use crate::math::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative in terms of the pre-activation `z` and output `a`.
    /// ReLU's derivative at 0 is taken as 0.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Dense layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(with = "decimal::matrix")]
    pub weights: Vec<Vec<f64>>,
    #[serde(with = "decimal::vector")]
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    fn preactivate(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| crate::math::dot(row, input) + b)
            .collect()
    }
}

/// Feed-forward network with a single output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Cached forward pass: pre-activations and outputs per layer.
pub(crate) struct Trace {
    pub inputs: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Self {
        assert!(!layers.is_empty(), "MLP needs at least one layer");
        assert_eq!(
            layers.last().unwrap().outputs(),
            1,
            "MLP must have a scalar output"
        );
        for pair in layers.windows(2) {
            assert_eq!(
                pair[0].outputs(),
                pair[1].inputs(),
                "layer shapes do not chain"
            );
        }
        Self { layers }
    }

    /// Glorot-uniform initialization, zero biases. `sizes` includes input and output
    /// widths, e.g. `[d, 8, 8, 8, 1]`.
    pub fn random(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut RandomStream,
    ) -> Self {
        assert!(sizes.len() >= 2 && *sizes.last().unwrap() == 1);
        let n_layers = sizes.len() - 1;
        let layers = (0..n_layers)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| rng.uniform(-limit, limit)).collect())
                        .collect(),
                    bias: vec![0.0; fan_out],
                    activation: if l + 1 == n_layers { output } else { hidden },
                }
            })
            .collect();
        Self::new(layers)
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let z = layer.preactivate(&current);
            let a: Vec<f64> = z.iter().map(|v| layer.activation.apply(*v)).collect();
            inputs.push(std::mem::replace(&mut current, a.clone()));
            pre.push(z);
            post.push(a);
        }
        Trace { inputs, pre, post }
    }

    /// Back-propagates `d(output)/d(pre-activation)` of each layer, starting
    /// from `seed` at the output pre-activation.
    pub(crate) fn deltas(&self, trace: &Trace, seed: f64) -> Vec<Vec<f64>> {
        let n = self.layers.len();
        let mut deltas = vec![Vec::new(); n];
        deltas[n - 1] = vec![seed];
        for l in (0..n - 1).rev() {
            let next = &self.layers[l + 1];
            let act = self.layers[l].activation;
            deltas[l] = (0..self.layers[l].outputs())
                .map(|j| {
                    let back: f64 = next
                        .weights
                        .iter()
                        .zip(&deltas[l + 1])
                        .map(|(row, d)| row[j] * d)
                        .sum();
                    back * act.derivative(trace.pre[l][j], trace.post[l][j])
                })
                .collect();
        }
        deltas
    }

    /// Smallest |pre-activation| over ReLU units at `x`, if any.
    pub fn min_abs_relu_preactivation(&self, x: &[f64]) -> Option<f64> {
        let trace = self.trace(x);
        self.layers
            .iter()
            .zip(&trace.pre)
            .filter(|(layer, _)| layer.activation == Activation::Relu)
            .flat_map(|(_, z)| z.iter().map(|v| v.abs()))
            .reduce(f64::min)
    }
}

impl PredictiveModel for MlpModel {
    fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    fn output_kind(&self) -> OutputKind {
        match self.layers.last().map(|l| l.activation) {
            Some(Activation::Sigmoid) => OutputKind::Probability,
            _ => OutputKind::Regression,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut current = x.to_vec();
        for layer in &self.layers {
            current = layer
                .preactivate(&current)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        current[0]
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let trace = self.trace(x);
        let last = self.layers.len() - 1;
        let out_act = self.layers[last].activation;
        let seed = out_act.derivative(trace.pre[last][0], trace.post[last][0]);
        let deltas = self.deltas(&trace, seed);
        let first = &self.layers[0];
        (0..first.inputs())
            .map(|i| {
                first
                    .weights
                    .iter()
                    .zip(&deltas[0])
                    .map(|(row, d)| row[i] * d)
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fd_gradient;

    #[test]
    fn hand_computed_forward() {
        // one hidden tanh unit: f(x) = 2·tanh(x0 − x1) + 1
        let mlp = MlpModel::new(vec![
            Layer {
                weights: vec![vec![1.0, -1.0]],
                bias: vec![0.0],
                activation: Activation::Tanh,
            },
            Layer {
                weights: vec![vec![2.0]],
                bias: vec![1.0],
                activation: Activation::Identity,
            },
        ]);
        let x = [0.3, 0.1];
        let expected = 2.0 * (0.2f64).tanh() + 1.0;
        assert!((mlp.value(&x) - expected).abs() < 1e-15);
        let t = (0.2f64).tanh();
        let g = mlp.grad(&x);
        assert!((g[0] - 2.0 * (1.0 - t * t)).abs() < 1e-15);
        assert!((g[1] + 2.0 * (1.0 - t * t)).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RandomStream::new(31);
        for (hidden, out) in [
            (Activation::Tanh, Activation::Identity),
            (Activation::Sigmoid, Activation::Sigmoid),
            (Activation::Relu, Activation::Sigmoid),
        ] {
            let mlp = MlpModel::random(&[4, 8, 8, 8, 1], hidden, out, &mut rng);
            let mut checked = 0;
            while checked < 5 {
                let x: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
                if mlp.min_abs_relu_preactivation(&x).is_some_and(|m| m < 1e-3) {
                    continue;
                }
                let analytic = mlp.grad(&x);
                let numeric = fd_gradient(&mlp, &x, crate::models::DEFAULT_FD_STEP);
                let scale = crate::math::l1_norm(&analytic).max(1e-8);
                let err = crate::math::l1_distance(&analytic, &numeric).unwrap() / scale;
                assert!(err < 1e-4, "{hidden:?}: relative error {err}");
                checked += 1;
            }
        }
    }

    #[test]
    fn output_kind_follows_last_activation() {
        let mut rng = RandomStream::new(1);
        let reg = MlpModel::random(&[2, 3, 1], Activation::Tanh, Activation::Identity, &mut rng);
        let prob = MlpModel::random(&[2, 3, 1], Activation::Relu, Activation::Sigmoid, &mut rng);
        assert_eq!(reg.output_kind(), OutputKind::Regression);
        assert_eq!(prob.output_kind(), OutputKind::Probability);
        let p = prob.value(&[0.3, -0.2]);
        assert!(p > 0.0 && p < 1.0);
    }
}
