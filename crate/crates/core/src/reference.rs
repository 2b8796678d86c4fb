//! Direct implementations of the eight attribution methods, independent of the engine.

use serde::{Deserialize, Serialize};

use crate::engine::{Method, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::math::{dot, hadamard, weighted_ridge_ls, RandomStream, WlsProblem, DEFAULT_RIDGE};
use crate::models::{check_dim, PredictiveModel};
use crate::neighborhood::{Distance, DEFAULT_SHAPLEY_CLAMP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub sigma: f64,
    pub n_samples: usize,
    pub ig_steps: usize,
    /// Exponential kernel width; `None` means `0.75·√d`.
    pub kernel_width: Option<f64>,
    pub kernel_distance: Distance,
    pub shapley_clamp: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            sigma: DEFAULT_SIGMA,
            n_samples: 1000,
            ig_steps: 1000,
            kernel_width: None,
            kernel_distance: Distance::L2Squared,
            shapley_clamp: DEFAULT_SHAPLEY_CLAMP,
        }
    }
}

impl ReferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 || self.ig_steps < 1 {
            return Err(Error::InvalidParameter(
                "n_samples and ig_steps must be >= 1".into(),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

pub fn ref_vanilla_gradients<M: PredictiveModel + ?Sized>(f: &M, x0: &[f64]) -> Result<Vec<f64>> {
    f.gradient(x0)
}

pub fn ref_grad_x_input<M: PredictiveModel + ?Sized>(f: &M, x0: &[f64]) -> Result<Vec<f64>> {
    Ok(hadamard(x0, &f.gradient(x0)?))
}

/// Average gradient over `x0 + σε`, `ε ~ N(0, I)`.
pub fn ref_smoothgrad<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    sigma: f64,
    n: usize,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    check_dim(f.input_dim(), x0)?;
    let mut acc = vec![0.0; x0.len()];
    for _ in 0..n {
        let x: Vec<f64> = x0.iter().map(|v| v + sigma * rng.normal()).collect();
        for (a, g) in acc.iter_mut().zip(f.grad(&x)) {
            *a += g;
        }
    }
    Ok(acc.into_iter().map(|a| a / n as f64).collect())
}

/// Left Riemann sum of the straight-line path integral from the zero baseline.
pub fn ref_integrated_gradients<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    check_dim(f.input_dim(), x0)?;
    let mut acc = vec![0.0; x0.len()];
    for t in 0..steps {
        let alpha = t as f64 / steps as f64;
        let x: Vec<f64> = x0.iter().map(|v| alpha * v).collect();
        for (a, g) in acc.iter_mut().zip(f.grad(&x)) {
            *a += g;
        }
    }
    Ok(acc
        .iter()
        .zip(x0)
        .map(|(a, x)| x * a / steps as f64)
        .collect())
}

/// `f(x0) − f(x0 with feature i set to 0)` for each `i`.
pub fn ref_occlusion<M: PredictiveModel + ?Sized>(f: &M, x0: &[f64]) -> Result<Vec<f64>> {
    let base = f.predict(x0)?;
    Ok((0..x0.len())
        .map(|i| {
            let mut x = x0.to_vec();
            x[i] = 0.0;
            base - f.value(&x)
        })
        .collect())
}

/// Linear regression of `f(x0 + ξ)` on Gaussian `ξ`.
pub fn ref_clime<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    sigma: f64,
    n: usize,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    check_dim(f.input_dim(), x0)?;
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: Vec<f64> = x0.iter().map(|_| sigma * rng.normal()).collect();
        let x: Vec<f64> = x0.iter().zip(&xi).map(|(a, b)| a + b).collect();
        ys.push(f.value(&x));
        rows.push(xi);
    }
    least_squares(&rows, &ys, &vec![1.0; n])
}

/// Exponential-kernel weighted regression on uniformly random binary masks.
pub fn ref_lime<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    width: Option<f64>,
    distance: Distance,
    n: usize,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    check_dim(f.input_dim(), x0)?;
    let d = x0.len();
    let width = width.unwrap_or(0.75 * (d as f64).sqrt());
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for _ in 0..n {
        let mask: Vec<f64> = (0..d)
            .map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 })
            .collect();
        let x = hadamard(x0, &mask);
        let dist = match distance {
            Distance::L2Squared => x0.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum(),
            Distance::Cosine => {
                let (na, nb) = (dot(x0, x0).sqrt(), dot(&x, &x).sqrt());
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot(x0, &x) / (na * nb)
                }
            }
        };
        ws.push((-dist / (width * width)).exp());
        ys.push(f.value(&x));
        rows.push(mask);
    }
    least_squares(&rows, &ys, &ws)
}

/// Regression on masks drawn from the Shapley kernel itself, with the empty and
/// full coalitions added as heavily weighted rows.
pub fn ref_kernelshap<M: PredictiveModel + ?Sized>(
    f: &M,
    x0: &[f64],
    n: usize,
    clamp: f64,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    check_dim(f.input_dim(), x0)?;
    let m = x0.len();
    if m < 2 {
        // Only the two endpoint coalitions exist.
        return Ok(vec![f.value(x0) - f.value(&vec![0.0; m]); m]);
    }
    // Mass of all coalitions of size k is (M−1)/(k(M−k)).
    let mass: Vec<f64> = (1..m)
        .map(|k| (m - 1) as f64 / (k * (m - k)) as f64)
        .collect();
    let total: f64 = mass.iter().sum();
    let mut rows = Vec::with_capacity(n + 2);
    let mut ys = Vec::with_capacity(n + 2);
    let mut ws = Vec::with_capacity(n + 2);
    for _ in 0..n {
        let mut u = rng.uniform(0.0, total);
        let mut k = m - 1;
        for (i, w) in mass.iter().enumerate() {
            if u < *w {
                k = i + 1;
                break;
            }
            u -= w;
        }
        let mut order: Vec<usize> = (0..m).collect();
        rng.shuffle(&mut order);
        let mut mask = vec![0.0; m];
        for &i in &order[..k] {
            mask[i] = 1.0;
        }
        ys.push(f.value(&hadamard(x0, &mask)));
        rows.push(mask);
        ws.push(1.0);
    }
    let end_weight = n as f64 * clamp / total;
    for ones in [0.0, 1.0] {
        let mask = vec![ones; m];
        ys.push(f.value(&hadamard(x0, &mask)));
        rows.push(mask);
        ws.push(end_weight);
    }
    least_squares(&rows, &ys, &ws)
}

fn least_squares(rows: &[Vec<f64>], ys: &[f64], ws: &[f64]) -> Result<Vec<f64>> {
    Ok(weighted_ridge_ls(&WlsProblem {
        rows,
        targets: ys,
        weights: ws,
        ridge: DEFAULT_RIDGE,
        fit_intercept: true,
    })?
    .weights)
}

/// Run the reference implementation of `method`.
pub fn run_reference<M: PredictiveModel + ?Sized>(
    method: Method,
    cfg: &ReferenceConfig,
    f: &M,
    x0: &[f64],
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    match method {
        Method::VanillaGradients => ref_vanilla_gradients(f, x0),
        Method::GradXInput => ref_grad_x_input(f, x0),
        Method::SmoothGrad => ref_smoothgrad(f, x0, cfg.sigma, cfg.n_samples, rng),
        Method::IntegratedGradients => ref_integrated_gradients(f, x0, cfg.ig_steps),
        Method::Occlusion => ref_occlusion(f, x0),
        Method::CLime => ref_clime(f, x0, cfg.sigma, cfg.n_samples, rng),
        Method::Lime => ref_lime(
            f,
            x0,
            cfg.kernel_width,
            cfg.kernel_distance,
            cfg.n_samples,
            rng,
        ),
        Method::KernelShap => ref_kernelshap(f, x0, cfg.n_samples, cfg.shapley_clamp, rng),
    }
}
