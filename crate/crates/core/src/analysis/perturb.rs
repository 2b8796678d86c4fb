use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::RandomStream;
use crate::models::PredictiveModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbNoise {
    /// Set the selected features to zero.
    BinaryZero,
    /// Add `N(0, σ²)` to the selected features.
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbCurve {
    pub method: String,
    pub noise: PerturbNoise,
    pub k_values: Vec<usize>,
    /// Mean over points of `|Δf|` for each `k`.
    pub mean_abs_delta: Vec<f64>,
    /// `per_point[p][i]` is `|Δf|` at point `p` for `k_values[i]`.
    pub per_point: Vec<Vec<f64>>,
}

impl PerturbCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,noise,k,mean_abs_delta\n");
        let noise = match self.noise {
            PerturbNoise::BinaryZero => "binary_zero".to_string(),
            PerturbNoise::Gaussian { sigma } => format!("gaussian_{sigma}"),
        };
        for (k, v) in self.k_values.iter().zip(&self.mean_abs_delta) {
            out.push_str(&format!("{},{noise},{k},{v:?}\n", self.method));
        }
        out
    }
}

/// Indices of the `k` smallest `|w_i|`, lower index first on ties.
pub fn bottom_k(weights: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| {
        weights[a]
            .abs()
            .total_cmp(&weights[b].abs())
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Mean `|f(x̃) − f(x0)|` after perturbing `features`.
///
/// Gaussian trials draw a full noise vector each time, so callers sharing
/// `rng` seeds see common random numbers regardless of the feature set.
pub fn perturbation_delta<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    features: &[usize],
    noise: PerturbNoise,
    trials: usize,
    rng: &mut RandomStream,
) -> Result<f64> {
    let base = f.predict(x0)?;
    if features.is_empty() {
        return Ok(0.0);
    }
    match noise {
        PerturbNoise::BinaryZero => {
            let mut x = x0.to_vec();
            features.iter().for_each(|&i| x[i] = 0.0);
            Ok((f.value(&x) - base).abs())
        }
        PerturbNoise::Gaussian { sigma } => {
            if trials == 0 || !(sigma > 0.0) {
                return Err(Error::InvalidParameter(
                    "gaussian tests need trials >= 1 and sigma > 0".into(),
                ));
            }
            let mut total = 0.0;
            for _ in 0..trials {
                let eps: Vec<f64> = (0..x0.len()).map(|_| sigma * rng.normal()).collect();
                let mut x = x0.to_vec();
                features.iter().for_each(|&i| x[i] += eps[i]);
                total += (f.value(&x) - base).abs();
            }
            Ok(total / trials as f64)
        }
    }
}

/// Perturb the bottom-`k` features of each point's attribution.
pub fn perturbation_test<M: PredictiveModel + ?Sized>(
    f: &M,
    method: &str,
    points: &[Vec<f64>],
    attributions: &[Vec<f64>],
    k_values: &[usize],
    noise: PerturbNoise,
    trials: usize,
    rng: &RandomStream,
) -> Result<PerturbCurve> {
    if points.len() != attributions.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: attributions.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "k values must be strictly increasing".into(),
        ));
    }
    let dim = points[0].len();
    if let Some(k) = k_values.iter().find(|k| **k >= dim) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be smaller than the dimension {dim}"
        )));
    }
    let mut per_point = Vec::with_capacity(points.len());
    for (p, (x0, w)) in points.iter().zip(attributions).enumerate() {
        if w.len() != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: x0.len(),
                actual: w.len(),
            });
        }
        let row = k_values
            .iter()
            .map(|&k| {
                let mut stream = rng
                    .fork_indexed("point", p as u64)
                    .fork_indexed("k", k as u64);
                perturbation_delta(f, x0, &bottom_k(w, k), noise, trials, &mut stream)
            })
            .collect::<Result<Vec<_>>>()?;
        per_point.push(row);
    }
    let mean_abs_delta = (0..k_values.len())
        .map(|i| per_point.iter().map(|r| r[i]).sum::<f64>() / per_point.len() as f64)
        .collect();
    Ok(PerturbCurve {
        method: method.to_string(),
        noise,
        k_values: k_values.to_vec(),
        mean_abs_delta,
        per_point,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub k: usize,
    /// Points where the first group's mean `|Δf|` is at most the second's.
    pub wins: usize,
    pub n_points: usize,
}

/// Per-point comparison of group-mean curves at each `k`.
pub fn crossover_sign_test(
    first: &[&PerturbCurve],
    second: &[&PerturbCurve],
) -> Result<Vec<SignTest>> {
    let all: Vec<&&PerturbCurve> = first.iter().chain(second).collect();
    let Some(head) = all.first() else {
        return Err(Error::EmptyDataset);
    };
    if first.is_empty() || second.is_empty() {
        return Err(Error::InvalidParameter(
            "both groups need at least one curve".into(),
        ));
    }
    if all
        .iter()
        .any(|c| c.k_values != head.k_values || c.per_point.len() != head.per_point.len())
    {
        return Err(Error::InvalidParameter(
            "curves must share points and k values".into(),
        ));
    }
    let group_mean = |group: &[&PerturbCurve], p: usize, i: usize| {
        group.iter().map(|c| c.per_point[p][i]).sum::<f64>() / group.len() as f64
    };
    Ok(head
        .k_values
        .iter()
        .enumerate()
        .map(|(i, &k)| SignTest {
            k,
            wins: (0..head.per_point.len())
                .filter(|&p| group_mean(first, p, i) <= group_mean(second, p, i))
                .count(),
            n_points: head.per_point.len(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;

    #[test]
    fn bottom_k_ties_prefer_lower_index() {
        assert_eq!(bottom_k(&[1.0, -0.5, 0.5, 3.0], 2), vec![1, 2]);
        assert_eq!(bottom_k(&[1.0, 2.0], 0), Vec::<usize>::new());
    }

    #[test]
    fn zeroing_the_weakest_feature() {
        let f = LinearModel::new(vec![5.0, 0.1, 3.0], 0.0);
        let x0 = vec![1.0, 1.0, 1.0];
        let c = perturbation_test(
            &f,
            "exact",
            std::slice::from_ref(&x0),
            std::slice::from_ref(&f.weights),
            &[0, 1],
            PerturbNoise::BinaryZero,
            1,
            &RandomStream::new(0),
        )
        .unwrap();
        assert_eq!(c.mean_abs_delta[0], 0.0);
        assert!((c.mean_abs_delta[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn k_must_be_below_dimension() {
        let f = LinearModel::new(vec![1.0, 1.0], 0.0);
        let r = perturbation_test(
            &f,
            "m",
            &[vec![1.0, 1.0]],
            &[vec![1.0, 1.0]],
            &[2],
            PerturbNoise::BinaryZero,
            1,
            &RandomStream::new(0),
        );
        assert!(r.is_err());
    }

    #[test]
    fn sign_test_counts() {
        let mk = |v: Vec<f64>| PerturbCurve {
            method: "m".into(),
            noise: PerturbNoise::BinaryZero,
            k_values: vec![1],
            mean_abs_delta: vec![0.0],
            per_point: v.into_iter().map(|x| vec![x]).collect(),
        };
        let a = mk(vec![0.1, 0.5, 0.2]);
        let b = mk(vec![0.2, 0.4, 0.2]);
        let t = crossover_sign_test(&[&a], &[&b]).unwrap();
        assert_eq!((t[0].wins, t[0].n_points), (2, 3));
    }
}
