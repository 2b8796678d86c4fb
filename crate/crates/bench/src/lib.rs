//! Shared fixtures for the criterion benches.

use lfa_core::models::{Activation, MlpModel};
use lfa_core::RandomStream;

pub fn mlp(dim: usize, seed: u64) -> MlpModel {
    MlpModel::random(
        &[dim, 8, 8, 8, 1],
        Activation::Tanh,
        Activation::Identity,
        &mut RandomStream::new(seed),
    )
}

pub fn point(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = RandomStream::new(seed).fork("point");
    (0..dim).map(|_| rng.uniform(0.0, 1.0)).collect()
}

/// Random design matrix, targets and positive weights.
pub fn wls_data(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = RandomStream::new(seed).fork("wls");
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.normal()).collect())
        .collect();
    let targets = rows
        .iter()
        .map(|r| r.iter().sum::<f64>() + 0.1 * rng.normal())
        .collect();
    let weights = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
    (rows, targets, weights)
}
