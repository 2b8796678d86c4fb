//! Deterministic numeric primitives shared across the crate.

mod metrics;
mod rng;
mod vector;
mod wls;

pub use metrics::{cosine_distance, l1_distance, linf_distance, relative_l1};
pub use rng::RandomStream;
pub use vector::VectorD;
pub use wls::{weighted_ridge_ls, WlsFit, WlsProblem, DEFAULT_RIDGE};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn l1_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub(crate) fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}
