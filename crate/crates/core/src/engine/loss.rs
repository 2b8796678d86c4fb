use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{l1_norm, RandomStream};
use crate::models::PredictiveModel;
use crate::neighborhood::{sample_perturbations, NeighborhoodSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `λ‖w‖₀`, handled by an exact hard threshold.
    L0,
    /// `λ‖w‖₁`, handled by soft thresholding.
    L1,
}

impl Penalty {
    pub fn value(self, w: &[f64]) -> f64 {
        match self {
            Penalty::L0 => w.iter().filter(|v| **v != 0.0).count() as f64,
            Penalty::L1 => l1_norm(w),
        }
    }
}

/// Per-perturbation loss between black box and surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// `½ (f(x_ξ) − g(ξ))²`.
    SquaredError,
    /// `½ ‖∇ξ f(x0 ⊕ ξ) − ∇ξ g(ξ)‖²`.
    GradientMatching,
    Regularized {
        base: Box<LossSpec>,
        lambda: f64,
        penalty: Penalty,
    },
}

impl LossSpec {
    pub fn regularized(base: LossSpec, lambda: f64, penalty: Penalty) -> Self {
        LossSpec::Regularized {
            base: Box::new(base),
            lambda,
            penalty,
        }
    }

    /// The unpenalized loss underneath any regularization.
    pub fn base(&self) -> &LossSpec {
        match self {
            LossSpec::Regularized { base, .. } => base.base(),
            other => other,
        }
    }

    pub fn penalty(&self) -> Option<(f64, Penalty)> {
        match self {
            LossSpec::Regularized {
                lambda, penalty, ..
            } => Some((*lambda, *penalty)),
            _ => None,
        }
    }

    pub fn needs_gradients(&self) -> bool {
        matches!(self.base(), LossSpec::GradientMatching)
    }

    pub fn validate(&self) -> Result<()> {
        if let LossSpec::Regularized { base, lambda, .. } = self {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "regularization strength must be > 0, got {lambda}"
                )));
            }
            if matches!(**base, LossSpec::Regularized { .. }) {
                return Err(Error::InvalidParameter(
                    "nested regularization is not supported".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub mean_loss: f64,
    pub vanishes: bool,
    /// Offset allowed by the loss: `f(x0) − g(x0)` for gradient matching, 0 otherwise.
    pub offset: f64,
    pub max_deviation: f64,
    /// False only when the loss vanishes although `f − g` is not the allowed constant.
    pub consistent: bool,
}

/// Monte Carlo witness that `ℓ = 0` forces `f = g` (up to the loss's constant) on `spec`.
///
/// Both `f` and `g` are evaluated at the perturbed inputs `x_ξ`.
pub fn loss_is_valid_check<F, G>(
    loss: &LossSpec,
    f: &F,
    g: &G,
    spec: &NeighborhoodSpec,
    x0: &[f64],
    rng: &mut RandomStream,
) -> Result<ValidityReport>
where
    F: PredictiveModel + ?Sized,
    G: PredictiveModel + ?Sized,
{
    loss.validate()?;
    let gm = loss.needs_gradients();
    let fp = sample_perturbations(spec, f, x0, rng, gm)?;
    let offset = if gm { f.value(x0) - g.value(x0) } else { 0.0 };
    let mut total = 0.0;
    let mut max_deviation: f64 = 0.0;
    for e in &fp.entries {
        let gv = g.value(&e.point);
        total += if gm {
            let gg =
                crate::neighborhood::sample::noise_gradient(spec.combine, x0, g.grad(&e.point));
            let fg = e.noise_gradient.as_ref().expect("gradients requested");
            0.5 * fg
                .iter()
                .zip(&gg)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        } else {
            0.5 * (e.value - gv).powi(2)
        };
        max_deviation = max_deviation.max((e.value - gv - offset).abs());
    }
    let mean_loss = total / fp.len() as f64;
    let vanishes = mean_loss < 1e-12;
    Ok(ValidityReport {
        mean_loss,
        vanishes,
        offset,
        max_deviation,
        consistent: !vanishes || max_deviation < 1e-6,
    })
}
