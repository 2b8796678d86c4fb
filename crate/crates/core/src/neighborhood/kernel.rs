use serde::{Deserialize, Serialize};

use super::Noise;
use crate::error::{Error, Result};
use crate::math::{cosine_distance, dot};

/// Finite stand-in for the infinite Shapley weight of the empty and full coalitions.
pub const DEFAULT_SHAPLEY_CLAMP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    L2Squared,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKernel {
    Uniform,
    /// `exp(−D(x0, x_ξ)/width²)`.
    Exponential {
        width: f64,
        distance: Distance,
    },
    /// `(M−1) / (C(M,k)·k·(M−k))` for masks with `k` ones, clamped at the ends.
    Shapley {
        clamp: f64,
    },
}

impl WeightKernel {
    /// LIME-style defaults: squared L2 distance, width `0.75·√d`.
    pub fn default_exponential(dim: usize) -> Self {
        WeightKernel::Exponential {
            width: 0.75 * (dim as f64).sqrt(),
            distance: Distance::L2Squared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightKernel::Exponential { width, .. } if !(width > 0.0 && width.is_finite()) => Err(
                Error::InvalidParameter(format!("kernel width must be > 0, got {width}")),
            ),
            WeightKernel::Shapley { clamp } if !(clamp > 0.0 && clamp.is_finite()) => Err(
                Error::InvalidParameter(format!("shapley clamp must be > 0, got {clamp}")),
            ),
            _ => Ok(()),
        }
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    let k = k.min(m - k);
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

pub(crate) fn shapley_weight(m: usize, k: usize, clamp: f64) -> f64 {
    if k == 0 || k >= m {
        return clamp;
    }
    let w = (m - 1) as f64 / (binomial(m, k) * k as f64 * (m - k) as f64);
    w.min(clamp)
}

/// Unnormalized kernel weight of one perturbation.
///
/// A cosine distance involving a zero vector is taken as 1.
pub fn kernel_weight(
    kernel: &WeightKernel,
    x0: &[f64],
    noise: &Noise,
    point: &[f64],
) -> Result<f64> {
    match *kernel {
        WeightKernel::Uniform => Ok(1.0),
        WeightKernel::Exponential { width, distance } => {
            let dist = match distance {
                Distance::L2Squared => {
                    let diff: Vec<f64> = x0.iter().zip(point).map(|(a, b)| a - b).collect();
                    dot(&diff, &diff)
                }
                Distance::Cosine => cosine_distance(x0, point).unwrap_or(1.0),
            };
            Ok((-dist / (width * width)).exp())
        }
        WeightKernel::Shapley { clamp } => match noise {
            Noise::Vector(mask) => {
                let k = mask.iter().filter(|v| **v != 0.0).count();
                Ok(shapley_weight(mask.len(), k, clamp))
            }
            Noise::Scalar(_) => Err(Error::InvalidPairing(
                "the Shapley kernel needs a binary mask".into(),
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapley_examples() {
        assert!((shapley_weight(4, 1, 1e6) - 0.25).abs() < 1e-15);
        assert!((shapley_weight(4, 2, 1e6) - 0.125).abs() < 1e-15);
        assert_eq!(shapley_weight(4, 0, 1e6), 1e6);
        assert_eq!(shapley_weight(4, 4, 1e6), 1e6);
    }

    #[test]
    fn shapley_symmetric_in_k() {
        for m in 2..12 {
            for k in 0..=m {
                assert!((shapley_weight(m, k, 1e6) - shapley_weight(m, m - k, 1e6)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exponential_peaks_at_full_mask() {
        let x0 = [0.3, 0.9, 0.5];
        let kernel = WeightKernel::default_exponential(3);
        let full = kernel_weight(&kernel, &x0, &Noise::Vector(vec![1.0; 3]), &x0).unwrap();
        assert_eq!(full, 1.0);
        for mask in 0..7u32 {
            let m: Vec<f64> = (0..3).map(|i| f64::from(mask >> i & 1)).collect();
            let x: Vec<f64> = x0.iter().zip(&m).map(|(a, b)| a * b).collect();
            let w = kernel_weight(&kernel, &x0, &Noise::Vector(m), &x).unwrap();
            assert!(w < full && w > 0.0);
        }
    }

    #[test]
    fn cosine_kernel_handles_zero_point() {
        let kernel = WeightKernel::Exponential {
            width: 1.0,
            distance: Distance::Cosine,
        };
        let w = kernel_weight(
            &kernel,
            &[1.0, 2.0],
            &Noise::Vector(vec![0.0, 0.0]),
            &[0.0, 0.0],
        );
        assert!((w.unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }
}
