//! Weighted ridge least squares via the normal equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge applied to every surrogate fit unless overridden.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// `min_{w,b} Σ π̂ᵢ (yᵢ − w·xᵢ − b)² + ε‖w‖²` with `π̂ = π · n / Σπ`.
///
/// Normalizing the weights to mean one makes the solution invariant to a
/// uniform rescaling of `π`. The intercept is never penalized.
#[derive(Debug, Clone)]
pub struct WlsProblem<'a> {
    pub rows: &'a [Vec<f64>],
    pub targets: &'a [f64],
    pub weights: &'a [f64],
    pub ridge: f64,
    pub fit_intercept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

pub fn weighted_ridge_ls(p: &WlsProblem<'_>) -> Result<WlsFit> {
    let n = p.rows.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = p.rows[0].len();
    for len in [p.targets.len(), p.weights.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if let Some(row) = p.rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: row.len(),
        });
    }
    if p.ridge < 0.0 || !p.ridge.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge {} must be >= 0",
            p.ridge
        )));
    }
    if p.weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter(
            "sample weights must be finite and >= 0".into(),
        ));
    }
    let total: f64 = p.weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("sample weights sum to zero".into()));
    }
    let scale = n as f64 / total;
    let pi: Vec<f64> = p.weights.iter().map(|w| w * scale).collect();

    let (x_mean, y_mean) = if p.fit_intercept {
        let mut xm = vec![0.0; d];
        let mut ym = 0.0;
        for ((row, y), w) in p.rows.iter().zip(p.targets).zip(&pi) {
            for (m, v) in xm.iter_mut().zip(row) {
                *m += w * v;
            }
            ym += w * y;
        }
        let sw = n as f64;
        xm.iter_mut().for_each(|m| *m /= sw);
        (xm, ym / sw)
    } else {
        (vec![0.0; d], 0.0)
    };

    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut centered = vec![0.0; d];
    for ((row, y), w) in p.rows.iter().zip(p.targets).zip(&pi) {
        if *w == 0.0 {
            continue;
        }
        for j in 0..d {
            centered[j] = row[j] - x_mean[j];
        }
        let yc = y - y_mean;
        for j in 0..d {
            let wj = w * centered[j];
            rhs[j] += wj * yc;
            for k in j..d {
                gram[(j, k)] += wj * centered[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            gram[(j, k)] = gram[(k, j)];
        }
        gram[(j, j)] += p.ridge;
    }

    let max_diag = (0..d).map(|j| gram[(j, j)]).fold(0.0, f64::max);
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    if p.ridge == 0.0 {
        let l = chol.l_dirty();
        let min_pivot = (0..d)
            .map(|j| l[(j, j)] * l[(j, j)])
            .fold(f64::INFINITY, f64::min);
        if max_diag == 0.0 || min_pivot <= 1e-13 * max_diag {
            return Err(Error::RankDeficient);
        }
    }
    let w = chol.solve(&rhs);
    let weights: Vec<f64> = w.iter().copied().collect();
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("weighted least squares solution"));
    }
    let intercept = if p.fit_intercept {
        y_mean - super::dot(&weights, &x_mean)
    } else {
        0.0
    };
    Ok(WlsFit { weights, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RandomStream;

    /// Gaussian elimination with partial pivoting on the explicit normal equations
    /// `[XᵀΠX + εI', XᵀΠ1; 1ᵀΠX, 1ᵀΠ1] [w; b] = [XᵀΠy; 1ᵀΠy]`.
    fn normal_equations_oracle(
        rows: &[Vec<f64>],
        y: &[f64],
        pi: &[f64],
        ridge: f64,
    ) -> (Vec<f64>, f64) {
        let total: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|w| w * rows.len() as f64 / total).collect();
        let d = rows[0].len();
        let m = d + 1;
        let mut a = vec![vec![0.0; m + 1]; m];
        for ((row, yi), w) in rows.iter().zip(y).zip(&pi) {
            let mut aug = row.clone();
            aug.push(1.0);
            for j in 0..m {
                for k in 0..m {
                    a[j][k] += w * aug[j] * aug[k];
                }
                a[j][m] += w * aug[j] * yi;
            }
        }
        for j in 0..d {
            a[j][j] += ridge;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            for r in 0..m {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        let sol: Vec<f64> = (0..m).map(|j| a[j][m] / a[j][j]).collect();
        (sol[..d].to_vec(), sol[d])
    }

    #[test]
    fn exact_linear_fit_without_intercept() {
        let rows = vec![vec![1.0], vec![2.0]];
        let fit = weighted_ridge_ls(&WlsProblem {
            rows: &rows,
            targets: &[2.0, 4.0],
            weights: &[1.0, 1.0],
            ridge: 0.0,
            fit_intercept: false,
        })
        .unwrap();
        assert!((fit.weights[0] - 2.0).abs() < 1e-14);
        assert_eq!(fit.intercept, 0.0);
    }

    #[test]
    fn weight_scale_invariance() {
        let mut rng = RandomStream::new(4);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.normal()).collect())
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
        let pi: Vec<f64> = (0..30).map(|_| rng.uniform(0.1, 2.0)).collect();
        let pi10: Vec<f64> = pi.iter().map(|w| w * 10.0).collect();
        let solve = |w: &[f64]| {
            weighted_ridge_ls(&WlsProblem {
                rows: &rows,
                targets: &y,
                weights: w,
                ridge: 1e-8,
                fit_intercept: true,
            })
            .unwrap()
        };
        let a = solve(&pi);
        let b = solve(&pi10);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.intercept - b.intercept).abs() < 1e-12);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = RandomStream::new(20);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.normal()).collect())
            .collect();
        let y: Vec<f64> = (0..20).map(|_| rng.normal()).collect();
        let pi: Vec<f64> = (0..20).map(|_| rng.uniform(0.0, 1.0)).collect();
        let fit = weighted_ridge_ls(&WlsProblem {
            rows: &rows,
            targets: &y,
            weights: &pi,
            ridge: 1e-8,
            fit_intercept: true,
        })
        .unwrap();
        let (w, b) = normal_equations_oracle(&rows, &y, &pi, 1e-8);
        for (x, o) in fit.weights.iter().zip(&w) {
            assert!((x - o).abs() < 1e-8, "{x} vs {o}");
        }
        assert!((fit.intercept - b).abs() < 1e-8);
    }

    #[test]
    fn residual_gradient_vanishes_without_ridge() {
        let mut rng = RandomStream::new(9);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect();
        let y: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
        let pi: Vec<f64> = (0..50).map(|_| rng.uniform(0.2, 1.0)).collect();
        let fit = weighted_ridge_ls(&WlsProblem {
            rows: &rows,
            targets: &y,
            weights: &pi,
            ridge: 0.0,
            fit_intercept: true,
        })
        .unwrap();
        let total: f64 = pi.iter().sum();
        let mut grad = [0.0; 5];
        for ((row, yi), w) in rows.iter().zip(&y).zip(&pi) {
            let w = w * 50.0 / total;
            let r = yi - crate::math::dot(&fit.weights, row) - fit.intercept;
            for j in 0..4 {
                grad[j] += w * row[j] * r;
            }
            grad[4] += w * r;
        }
        assert!(grad.iter().all(|g| g.abs() < 1e-8), "{grad:?}");
    }

    #[test]
    fn row_permutation_invariance() {
        let mut rng = RandomStream::new(21);
        let mut rows: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..2).map(|_| rng.normal()).collect())
            .collect();
        let mut y: Vec<f64> = (0..25).map(|_| rng.normal()).collect();
        let mut pi: Vec<f64> = (0..25).map(|_| rng.uniform(0.1, 1.0)).collect();
        let solve = |rows: &[Vec<f64>], y: &[f64], pi: &[f64]| {
            weighted_ridge_ls(&WlsProblem {
                rows,
                targets: y,
                weights: pi,
                ridge: 1e-8,
                fit_intercept: true,
            })
            .unwrap()
        };
        let a = solve(&rows, &y, &pi);
        rows.reverse();
        y.reverse();
        pi.reverse();
        let b = solve(&rows, &y, &pi);
        for (x, z) in a.weights.iter().zip(&b.weights) {
            assert!((x - z).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let err = weighted_ridge_ls(&WlsProblem {
            rows: &rows,
            targets: &[1.0, 2.0, 3.0],
            weights: &[1.0, 1.0, 1.0],
            ridge: 0.0,
            fit_intercept: false,
        });
        assert!(matches!(err, Err(Error::RankDeficient)));
        let ok = weighted_ridge_ls(&WlsProblem {
            rows: &rows,
            targets: &[1.0, 2.0, 3.0],
            weights: &[1.0, 1.0, 1.0],
            ridge: 1e-8,
            fit_intercept: false,
        });
        assert!(ok.is_ok());
    }
}
