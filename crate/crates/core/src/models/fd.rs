use super::PredictiveModel;

/// Default relative step for [`fd_gradient`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

const ABSOLUTE_FLOOR: f64 = 1e-7;

/// Central finite differences with step `h·max(1, |xᵢ|)`, floored at 1e-7.
pub fn fd_gradient<M: PredictiveModel + ?Sized>(model: &M, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = (h * x[i].abs().max(1.0)).max(ABSOLUTE_FLOOR);
            probe[i] = x[i] + step;
            let up = model.value(&probe);
            probe[i] = x[i] - step;
            let down = model.value(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearModel, QuadraticModel};

    #[test]
    fn linear_model_is_exact() {
        let m = LinearModel::new(vec![2.0, -1.0, 0.5], 3.0);
        let g = fd_gradient(&m, &[0.3, -1.2, 4.0], DEFAULT_FD_STEP);
        for (a, b) in g.iter().zip(&m.weights) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn quadratic_derivative() {
        let m = QuadraticModel::new(vec![1.0]);
        let g = fd_gradient(&m, &[3.0], DEFAULT_FD_STEP);
        assert!((g[0] - 6.0).abs() < 1e-6);
    }
}
