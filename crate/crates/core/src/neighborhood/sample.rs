use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{combine, kernel_weight, CombineOp, NeighborhoodSpec, Noise, NoiseFamily};
use crate::error::{Error, Result};
use crate::math::{hadamard, RandomStream};
use crate::models::{check_dim, PredictiveModel};

/// One sampled perturbation with its cached model queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub noise: Noise,
    /// `x_ξ = x0 ⊕ ξ`.
    pub point: Vec<f64>,
    /// Unnormalized kernel weight.
    pub weight: f64,
    /// `f(x_ξ)`.
    pub value: f64,
    /// `∇ξ f(x0 ⊕ ξ)`, present when gradients were requested.
    pub noise_gradient: Option<Vec<f64>>,
    /// `f(x0 ⊙ (1 − ξ))`, present for one-hot masks.
    pub complement_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSet {
    pub x0: Vec<f64>,
    pub spec: NeighborhoodSpec,
    pub seed: u64,
    pub value_at_x0: f64,
    pub value_at_origin: f64,
    pub entries: Vec<Perturbation>,
}

fn draw_noise(noise: &NoiseFamily, dim: usize, index: usize, rng: &mut RandomStream) -> Noise {
    match *noise {
        NoiseFamily::GaussianAdditive { sigma } => {
            Noise::Vector((0..dim).map(|_| sigma * rng.normal()).collect())
        }
        NoiseFamily::UniformScalarMultiplicative { low } => Noise::Scalar(rng.uniform(low, 1.0)),
        NoiseFamily::BernoulliMask => Noise::Vector(
            (0..dim)
                .map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 })
                .collect(),
        ),
        NoiseFamily::OneHotMask => {
            let mut v = vec![0.0; dim];
            v[index % dim] = 1.0;
            Noise::Vector(v)
        }
    }
}

/// Chain rule from `∇x f(x_ξ)` to `∇ξ f(x0 ⊕ ξ)`.
pub(crate) fn noise_gradient(op: CombineOp, x0: &[f64], grad_x: Vec<f64>) -> Vec<f64> {
    match op {
        CombineOp::Add => grad_x,
        CombineOp::ElementwiseMultiply | CombineOp::ScalarMultiply => hadamard(&grad_x, x0),
    }
}

/// Draw `spec.n_samples` perturbations around `x0` and query `f` on each.
///
/// Noise is drawn sequentially from `rng`; model evaluation runs in parallel
/// and is stored by sample index.
pub fn sample_perturbations<M: PredictiveModel + ?Sized>(
    spec: &NeighborhoodSpec,
    f: &M,
    x0: &[f64],
    rng: &mut RandomStream,
    need_gradients: bool,
) -> Result<PerturbationSet> {
    spec.validate()?;
    check_dim(f.input_dim(), x0)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x0"));
    }
    let seed = rng.seed();
    let dim = x0.len();
    let mut drawn = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let noise = draw_noise(&spec.noise, dim, i, rng);
        let point = combine(x0, &noise, spec.combine)?;
        let weight = kernel_weight(&spec.kernel, x0, &noise, &point)?;
        drawn.push((noise, point, weight));
    }
    let one_hot = matches!(spec.noise, NoiseFamily::OneHotMask);
    let entries: Vec<Perturbation> = drawn
        .into_par_iter()
        .map(|(noise, point, weight)| {
            let value = f.value(&point);
            let noise_gradient =
                need_gradients.then(|| noise_gradient(spec.combine, x0, f.grad(&point)));
            let complement_value = one_hot.then(|| {
                let keep: Vec<f64> = noise.coordinates(dim).iter().map(|m| 1.0 - m).collect();
                f.value(&hadamard(x0, &keep))
            });
            Perturbation {
                noise,
                point,
                weight,
                value,
                noise_gradient,
                complement_value,
            }
        })
        .collect();
    if entries.iter().any(|e| !e.value.is_finite()) {
        return Err(Error::NonFinite("model output on a perturbation"));
    }
    Ok(PerturbationSet {
        x0: x0.to_vec(),
        spec: spec.clone(),
        seed,
        value_at_x0: f.value(x0),
        value_at_origin: f.value(&vec![0.0; dim]),
        entries,
    })
}

impl PerturbationSet {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_gradients(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.noise_gradient.is_some())
    }

    /// A copy holding only the entries at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PerturbationSet {
        PerturbationSet {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> PerturbationSet {
        PerturbationSet {
            x0: self.x0.clone(),
            spec: self.spec.clone(),
            seed: self.seed,
            value_at_x0: self.value_at_x0,
            value_at_origin: self.value_at_origin,
            entries: Vec::new(),
        }
    }

    /// Debug export: `sample, xi_*, x_*, weight, f`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.dim();
        let scalar = self.spec.noise.is_scalar();
        let mut header = vec!["sample".to_string()];
        if scalar {
            header.push("xi".into());
        } else {
            header.extend((0..dim).map(|i| format!("xi_{i}")));
        }
        header.extend((0..dim).map(|i| format!("x_{i}")));
        header.push("weight".into());
        header.push("f".into());
        w.write_record(&header)?;
        for (i, e) in self.entries.iter().enumerate() {
            let mut row = vec![i.to_string()];
            match &e.noise {
                Noise::Scalar(a) => row.push(format!("{a:?}")),
                Noise::Vector(v) => row.extend(v.iter().map(|x| format!("{x:?}"))),
            }
            row.extend(e.point.iter().map(|x| format!("{x:?}")));
            row.push(format!("{:?}", e.weight));
            row.push(format!("{:?}", e.value));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
