//! Distances between attribution vectors.

use crate::error::{Error, Result};

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Sum of absolute coordinate differences.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `‖a − b‖₁ / max(‖b‖₁, 1e-12)`, with `b` the reference.
pub fn relative_l1(a: &[f64], reference: &[f64]) -> Result<f64> {
    let num = l1_distance(a, reference)?;
    let den: f64 = reference.iter().map(|v| v.abs()).sum();
    Ok(num / den.max(1e-12))
}

/// `1 − a·b / (‖a‖‖b‖)`, in `[0, 2]`. Zero-norm inputs are an error.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let na = super::norm2(a);
    let nb = super::norm2(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateVector(
            "cosine distance of a zero-norm vector",
        ));
    }
    let cos = super::dot(a, b) / (na * nb);
    Ok((1.0 - cos).clamp(0.0, 2.0))
}
