use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{normalize, Dataset, Table};
use crate::error::{Error, Result};
use crate::math::{dot, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    LinearRegression,
    LogisticBlobs {
        separation: f64,
    },
    /// Sine interaction, quadratic and linear terms over cycling features.
    FriedmanLike,
}

/// The generating function, stated on the normalized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundTruth {
    Linear {
        weights: Vec<f64>,
        intercept: f64,
    },
    /// Labels are `1[w·x + b > 0]` before label noise.
    Logistic {
        weights: Vec<f64>,
        intercept: f64,
    },
    FriedmanLike,
}

impl GroundTruth {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            GroundTruth::Linear { weights, intercept } => dot(weights, x) + intercept,
            GroundTruth::Logistic { weights, intercept } => {
                f64::from(u8::from(dot(weights, x) + intercept > 0.0))
            }
            GroundTruth::FriedmanLike => friedman(x),
        }
    }
}

fn friedman(x: &[f64]) -> f64 {
    let d = x.len();
    let v = |i: usize| x[i % d];
    let mut y =
        10.0 * (PI * v(0) * v(1)).sin() + 20.0 * (v(2) - 0.5).powi(2) + 10.0 * v(3) + 5.0 * v(4);
    for (i, xi) in x.iter().enumerate().skip(5) {
        y += xi / (i as f64);
    }
    y / 10.0
}

/// Reproducible synthetic dataset whose features are already normalized.
pub fn synth_generate(
    kind: SynthKind,
    n: usize,
    d: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be positive".into()));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise must be >= 0, got {noise}"
        )));
    }
    let mut rng = RandomStream::new(seed).fork("synth");
    let names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let (raw, truth) = match kind {
        SynthKind::LinearRegression | SynthKind::FriedmanLike => {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.uniform(0.0, 1.0)).collect())
                .collect();
            let truth = if kind == SynthKind::FriedmanLike {
                GroundTruth::FriedmanLike
            } else {
                GroundTruth::Linear {
                    weights: (0..d)
                        .map(|_| {
                            let m = rng.uniform(0.5, 2.0);
                            if rng.bernoulli(0.5) {
                                m
                            } else {
                                -m
                            }
                        })
                        .collect(),
                    intercept: rng.uniform(-0.5, 0.5),
                }
            };
            (rows, truth)
        }
        SynthKind::LogisticBlobs { separation } => {
            let mut dir: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let norm = dot(&dir, &dir).sqrt().max(1e-12);
            dir.iter_mut().for_each(|v| *v /= norm);
            let rows = (0..n)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    dir.iter()
                        .map(|u| sign * 0.5 * separation * u + rng.normal())
                        .collect()
                })
                .collect();
            (
                rows,
                GroundTruth::Logistic {
                    weights: dir,
                    intercept: 0.0,
                },
            )
        }
    };
    let table = Table {
        names,
        rows: raw.clone(),
        targets: vec![0.0; n],
    };
    let mut data = normalize(&table)?;
    let record = data.record.clone().expect("normalize stores its record");
    // Restate the generator in normalized coordinates.
    let truth = match truth {
        GroundTruth::Logistic { weights, .. } => {
            let span: Vec<f64> = record
                .max
                .iter()
                .zip(&record.min)
                .map(|(a, b)| (a - b).max(1e-12))
                .collect();
            let w: Vec<f64> = weights.iter().zip(&span).map(|(u, s)| u * s).collect();
            let b = weights
                .iter()
                .zip(record.mean.iter().zip(&record.min))
                .map(|(u, (m, lo))| u * (m + lo))
                .sum();
            GroundTruth::Logistic {
                weights: w,
                intercept: b,
            }
        }
        other => other,
    };
    data.targets = data
        .features
        .iter()
        .enumerate()
        .map(|(i, x)| match &truth {
            GroundTruth::Logistic { .. } => f64::from(u8::from(i % 2 == 0)),
            t => t.evaluate(x) + noise * rng.normal(),
        })
        .collect();
    data.ground_truth = Some(truth);
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        for kind in [
            SynthKind::LinearRegression,
            SynthKind::FriedmanLike,
            SynthKind::LogisticBlobs { separation: 4.0 },
        ] {
            assert_eq!(
                synth_generate(kind, 50, 3, 0.1, 9).unwrap(),
                synth_generate(kind, 50, 3, 0.1, 9).unwrap()
            );
        }
    }

    #[test]
    fn noiseless_linear_targets_match_truth() {
        let d = synth_generate(SynthKind::LinearRegression, 100, 4, 0.0, 1).unwrap();
        let t = d.ground_truth.clone().unwrap();
        for (x, y) in d.features.iter().zip(&d.targets) {
            assert_eq!(t.evaluate(x), *y);
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn blob_truth_separates_labels() {
        let d = synth_generate(
            SynthKind::LogisticBlobs { separation: 12.0 },
            400,
            2,
            0.0,
            2,
        )
        .unwrap();
        let t = d.ground_truth.clone().unwrap();
        let correct = d
            .features
            .iter()
            .zip(&d.targets)
            .filter(|(x, y)| t.evaluate(x) == **y)
            .count();
        assert!(correct as f64 / 400.0 > 0.99);
    }
}
