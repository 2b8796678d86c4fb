use serde::{Deserialize, Serialize};

use crate::engine::{
    fit_closed_form, InterceptRule, LfaInstance, LossSpec, RegressionTarget, SurrogateParam,
};
use crate::error::{Error, Result};
use crate::math::{dot, weighted_ridge_ls, RandomStream, WlsProblem};
use crate::models::{check_dim, PredictiveModel};
use crate::neighborhood::{sample_perturbations, CombineOp, NeighborhoodSpec};

/// Axis-aligned box `[low_i, high_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Domain {
    pub fn cube(dim: usize, low: f64, high: f64) -> Self {
        Domain {
            low: vec![low; dim],
            high: vec![high; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.low.is_empty() || self.low.len() != self.high.len() {
            return Err(Error::InvalidParameter(
                "domain bounds must be non-empty and of equal length".into(),
            ));
        }
        for (l, h) in self.low.iter().zip(&self.high) {
            if !(l.is_finite() && h.is_finite()) || l >= h {
                return Err(Error::InvalidParameter(format!(
                    "domain must be a bounded box with low < high, got [{l}, {h}]"
                )));
            }
        }
        Ok(())
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.low)
            .zip(&self.high)
            .all(|((v, l), h)| v >= l && v <= h)
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, l), h) in x.iter_mut().zip(&self.low).zip(&self.high) {
            *v = v.clamp(*l, *h);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Grid points per axis for dimensions 1 and 2.
    pub grid_points: usize,
    /// Uniform random candidates for dimension 3 and above.
    pub random_points: usize,
    /// Reweighting iterations of the minimax fit.
    pub max_iterations: usize,
    /// Candidate maxima refined by gradient ascent.
    pub ascent_starts: usize,
    pub ascent_steps: usize,
    /// Rounds of (fit, refine maxima, add them to the candidate set).
    pub rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_points: 2001,
            random_points: 10_000,
            max_iterations: 2000,
            ascent_starts: 5,
            ascent_steps: 200,
            rounds: 3,
        }
    }
}

/// Estimated `min_g max_x ½(f(x) − g(x))²` over linear `g` on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistance {
    pub d_hat: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub argmax: Vec<f64>,
    /// False when the minimax reweighting had not stabilized within budget.
    pub converged: bool,
}

fn candidates(domain: &Domain, cfg: &SearchConfig, rng: &mut RandomStream) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let axis = |j: usize, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| domain.low[j] + (domain.high[j] - domain.low[j]) * i as f64 / (n - 1) as f64)
            .collect()
    };
    match dim {
        1 => axis(0, cfg.grid_points.max(2))
            .into_iter()
            .map(|v| vec![v])
            .collect(),
        2 => {
            let n = (cfg.grid_points as f64).sqrt().ceil().max(2.0) as usize;
            let n = n.max(101);
            let (a, b) = (axis(0, n), axis(1, n));
            a.iter()
                .flat_map(|x| b.iter().map(move |y| vec![*x, *y]))
                .collect()
        }
        _ => {
            let mut pts: Vec<Vec<f64>> = (0..cfg.random_points)
                .map(|_| {
                    (0..dim)
                        .map(|j| rng.uniform(domain.low[j], domain.high[j]))
                        .collect()
                })
                .collect();
            // Box corners carry the extremes of many smooth residuals.
            if dim <= 10 {
                for mask in 0..(1usize << dim) {
                    pts.push(
                        (0..dim)
                            .map(|j| {
                                if mask >> j & 1 == 1 {
                                    domain.high[j]
                                } else {
                                    domain.low[j]
                                }
                            })
                            .collect(),
                    );
                }
            }
            pts
        }
    }
}

/// Lawson's iteratively reweighted least squares for the discrete minimax linear fit.
fn minimax_linear(
    points: &[Vec<f64>],
    ys: &[f64],
    max_iterations: usize,
) -> Result<(Vec<f64>, f64, bool)> {
    let n = points.len();
    let mut omega = vec![1.0 / n as f64; n];
    let mut last = f64::INFINITY;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut converged = false;
    for _ in 0..max_iterations {
        let fit = weighted_ridge_ls(&WlsProblem {
            rows: points,
            targets: ys,
            weights: &omega,
            ridge: 1e-12,
            fit_intercept: true,
        })?;
        let residuals: Vec<f64> = points
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - dot(&fit.weights, x) - fit.intercept).abs())
            .collect();
        let max = residuals.iter().cloned().fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| max < b.2) {
            best = Some((fit.weights.clone(), fit.intercept, max));
        }
        if max < 1e-14 || (last - max).abs() <= 1e-10 * max {
            converged = true;
            break;
        }
        last = max;
        let total: f64 = omega.iter().zip(&residuals).map(|(o, r)| o * r).sum();
        if !(total > 0.0) {
            converged = true;
            break;
        }
        for (o, r) in omega.iter_mut().zip(&residuals) {
            *o = *o * r / total;
        }
    }
    let (w, b, _) = best.expect("at least one iteration");
    Ok((w, b, converged))
}

fn loss_at<M: PredictiveModel + ?Sized>(f: &M, w: &[f64], b: f64, x: &[f64]) -> f64 {
    0.5 * (f.value(x) - dot(w, x) - b).powi(2)
}

/// Projected gradient ascent on `½(f − g)²` from `start`.
fn ascend<M: PredictiveModel + ?Sized>(
    f: &M,
    w: &[f64],
    b: f64,
    domain: &Domain,
    start: &[f64],
    steps: usize,
) -> Vec<f64> {
    let width = domain
        .low
        .iter()
        .zip(&domain.high)
        .map(|(l, h)| h - l)
        .fold(0.0, f64::max);
    let mut x = start.to_vec();
    let mut step = 1e-2 * width;
    let mut current = loss_at(f, w, b, &x);
    for _ in 0..steps {
        let r = f.value(&x) - dot(w, &x) - b;
        let grad: Vec<f64> = f
            .grad(&x)
            .iter()
            .zip(w)
            .map(|(g, wi)| r * (g - wi))
            .collect();
        let norm = dot(&grad, &grad).sqrt();
        if norm < 1e-15 {
            break;
        }
        let mut next: Vec<f64> = x
            .iter()
            .zip(&grad)
            .map(|(v, g)| v + step * g / norm)
            .collect();
        domain.clamp(&mut next);
        let value = loss_at(f, w, b, &next);
        if value > current {
            x = next;
            current = value;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-12 * width {
                break;
            }
        }
    }
    x
}

/// Largest loss of `g = w·x + b` over the box: candidate scan plus gradient ascent.
fn inner_max<M: PredictiveModel + ?Sized>(
    f: &M,
    w: &[f64],
    b: f64,
    domain: &Domain,
    points: &[Vec<f64>],
    cfg: &SearchConfig,
) -> (Vec<f64>, f64) {
    let mut scored: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, x)| (loss_at(f, w, b, x), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = (points[scored[0].1].clone(), scored[0].0);
    for &(_, i) in scored.iter().take(cfg.ascent_starts) {
        let x = ascend(f, w, b, domain, &points[i], cfg.ascent_steps);
        let v = loss_at(f, w, b, &x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Estimate the distance from `f` to the linear surrogate class on `domain`.
pub fn estimate_class_distance<M: PredictiveModel + ?Sized>(
    f: &M,
    domain: &Domain,
    cfg: &SearchConfig,
    rng: &mut RandomStream,
) -> Result<ClassDistance> {
    domain.validate()?;
    if domain.dim() != f.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.input_dim(),
            actual: domain.dim(),
        });
    }
    let mut points = candidates(domain, cfg, rng);
    let mut result = None;
    for _ in 0..cfg.rounds.max(1) {
        let ys: Vec<f64> = points.iter().map(|x| f.value(x)).collect();
        let (w, b, converged) = minimax_linear(&points, &ys, cfg.max_iterations)?;
        let (argmax, d_hat) = inner_max(f, &w, b, domain, &points, cfg);
        let grid_max = points
            .iter()
            .map(|x| loss_at(f, &w, b, x))
            .fold(0.0, f64::max);
        let gained = d_hat > grid_max * (1.0 + 1e-9) + 1e-15;
        result = Some(ClassDistance {
            d_hat,
            weights: w,
            intercept: b,
            argmax: argmax.clone(),
            converged,
        });
        if !gained {
            break;
        }
        points.push(argmax);
    }
    Ok(result.expect("at least one round"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NflConfig {
    pub search: SearchConfig,
    /// Samples drawn from the adversarial neighborhood (its endpoint is always added).
    pub adversarial_samples: usize,
    /// Relative slack on the inequality `maxloss(Z₂) ≥ d̂`.
    pub tolerance: f64,
}

impl Default for NflConfig {
    fn default() -> Self {
        NflConfig {
            search: SearchConfig::default(),
            adversarial_samples: 10_000,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NflReport {
    pub x0: Vec<f64>,
    pub benign: NeighborhoodSpec,
    /// Largest loss of the benign fit over its own neighborhood samples.
    pub eps_hat: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub x_adv: Vec<f64>,
    /// `x0 + ξ`, `ξ_i ~ Uniform` between 0 and `(x_adv − x0)_i`.
    pub adversarial_low: Vec<f64>,
    pub adversarial_high: Vec<f64>,
    pub adversarial_max_loss: f64,
    pub class_distance: ClassDistance,
    pub inequality_held: bool,
}

/// Fit a surrogate on a benign neighborhood, then build one on which it does badly.
pub fn nfl_construct<M: PredictiveModel + ?Sized>(
    f: &M,
    domain: &Domain,
    x0: &[f64],
    benign: &NeighborhoodSpec,
    cfg: &NflConfig,
    rng: &mut RandomStream,
) -> Result<NflReport> {
    domain.validate()?;
    check_dim(f.input_dim(), x0)?;
    if domain.dim() != x0.len() || !domain.contains(x0) {
        return Err(Error::InvalidParameter(
            "x0 must lie inside the domain box".into(),
        ));
    }
    if benign.combine != CombineOp::Add {
        return Err(Error::InvalidPairing(
            "the benign neighborhood must be additive".into(),
        ));
    }
    let instance = LfaInstance {
        method: None,
        neighborhood: benign.clone(),
        loss: LossSpec::SquaredError,
        param: SurrogateParam::OfPerturbedInput,
        intercept: InterceptRule::Free,
        target: RegressionTarget::Value,
        ridge: crate::math::DEFAULT_RIDGE,
    };
    let pset = sample_perturbations(benign, f, x0, &mut rng.fork("benign"), false)?;
    let g = fit_closed_form(&instance, &pset)?;
    let (w, b) = (g.weights.clone(), g.intercept);
    let eps_hat = pset
        .entries
        .iter()
        .map(|e| loss_at(f, &w, b, &e.point))
        .fold(0.0, f64::max);

    let class_distance = estimate_class_distance(f, domain, &cfg.search, &mut rng.fork("class"))?;
    let points = candidates(domain, &cfg.search, &mut rng.fork("adversary"));
    let (x_adv, _) = inner_max(f, &w, b, domain, &points, &cfg.search);

    let mut z2 = rng.fork("adversarial-neighborhood");
    let endpoint: Vec<f64> = x_adv.iter().zip(x0).map(|(a, o)| a - o).collect();
    let mut adversarial_max_loss = loss_at(f, &w, b, &x_adv);
    for _ in 0..cfg.adversarial_samples {
        let x: Vec<f64> = x0
            .iter()
            .zip(&endpoint)
            .map(|(o, e)| o + e * z2.uniform(0.0, 1.0))
            .collect();
        adversarial_max_loss = adversarial_max_loss.max(loss_at(f, &w, b, &x));
    }
    let inequality_held = adversarial_max_loss >= class_distance.d_hat * (1.0 - cfg.tolerance);
    Ok(NflReport {
        x0: x0.to_vec(),
        benign: benign.clone(),
        eps_hat,
        weights: w,
        intercept: b,
        adversarial_low: x0.to_vec(),
        adversarial_high: x_adv.clone(),
        x_adv,
        adversarial_max_loss,
        class_distance,
        inequality_held,
    })
}
