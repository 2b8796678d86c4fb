use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-empty vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct VectorD(Vec<f64>);

impl VectorD {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateVector("vector must have dimension > 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("VectorD"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "VectorD dimension must be positive");
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for VectorD {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for VectorD {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<VectorD> for Vec<f64> {
    fn from(v: VectorD) -> Self {
        v.0
    }
}

impl TryFrom<&[f64]> for VectorD {
    type Error = Error;

    fn try_from(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(VectorD::new(vec![]).is_err());
        assert!(VectorD::new(vec![1.0, f64::NAN]).is_err());
        assert!(VectorD::new(vec![f64::INFINITY]).is_err());
        assert_eq!(VectorD::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }

    #[test]
    fn serde_rejects_nan_free_but_empty() {
        let err = serde_json::from_str::<VectorD>("[]");
        assert!(err.is_err());
        let v: VectorD = serde_json::from_str("[1.5,-2]").unwrap();
        assert_eq!(v.as_slice(), &[1.5, -2.0]);
    }
}
