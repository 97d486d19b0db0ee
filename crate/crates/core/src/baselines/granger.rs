use ndarray::{Array1, Array2, Array3, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::lasso::{center_moments, solve_gram_lasso, LassoOptions};
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// `y_t^i = a_i + Σ_{l,j} coef[[i, j, l]] y_{t-l-1}^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LaggedLinear<T> {
    pub intercept: Vec<T>,
    pub coef: Array3<T>,
}

impl<T: Scalar> LaggedLinear<T> {
    pub fn lag(&self) -> usize {
        self.coef.dim().2
    }

    pub fn n_series(&self) -> usize {
        self.intercept.len()
    }

    /// Next value from an L × P history, row 0 at lag 1.
    pub fn predict_next(&self, history: ArrayView2<'_, T>) -> Result<Vec<T>> {
        let (p, lag) = (self.n_series(), self.lag());
        if history.dim() != (lag, p) {
            return Err(Error::Dimension(format!("history is {:?}, expected ({lag}, {p})", history.dim())));
        }
        Ok((0..p)
            .map(|i| {
                let mut acc = self.intercept[i];
                for l in 0..lag {
                    for j in 0..p {
                        acc = acc + self.coef[[i, j, l]] * history[[l, j]];
                    }
                }
                acc
            })
            .collect())
    }

    /// Prediction for the step after the last row of `values` (T × P).
    pub fn predict_after(&self, values: ArrayView2<'_, T>) -> Result<Vec<T>> {
        let lag = self.lag();
        let len = values.nrows();
        if len < lag {
            return Err(Error::Domain(format!("need {lag} rows of history, got {len}")));
        }
        let mut h = Array2::zeros((lag, values.ncols()));
        for l in 0..lag {
            h.row_mut(l).assign(&values.row(len - 1 - l));
        }
        self.predict_next(h.view())
    }
}

/// Per-target L1 regression of each column of `values` on all columns' lags.
///
/// Minimizes `Σ_t (y_t^i - a_i - Σ coef y_lag)² + λ ||coef_i||_1` with an
/// unpenalized intercept. Returns the fit and the per-target KKT residuals.
pub fn lagged_lasso<T: Scalar>(values: ArrayView2<'_, T>, lambda: T, lag: usize) -> Result<(LaggedLinear<T>, Vec<T>)> {
    let (len, p) = values.dim();
    if lag == 0 || len <= lag {
        return Err(Error::Domain(format!("need lag >= 1 and more than {lag} rows, got {len}")));
    }
    let d = lag * p;
    let n = len - lag;
    // design: row t - lag holds (y_{t-1}, ..., y_{t-L}) in blocks of P
    let mut h = Array2::zeros((n, d));
    for t in lag..len {
        for l in 0..lag {
            h.row_mut(t - lag)
                .slice_mut(ndarray::s![l * p..(l + 1) * p])
                .assign(&values.row(t - 1 - l));
        }
    }
    let y = values.slice(ndarray::s![lag.., ..]);
    let sum_h = h.sum_axis(ndarray::Axis(0));
    let shh = h.t().dot(&h);
    let shy = h.t().dot(&y);
    let sum_y = y.sum_axis(ndarray::Axis(0));
    let nt = T::from_count(n);
    let opts = LassoOptions::default();

    let fits: Vec<Result<(T, Array1<T>, T)>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let (g, r) = center_moments(nt, sum_h.view(), sum_y[i], shh.view(), shy.column(i));
            let sol = solve_gram_lasso(g.view(), r.view(), lambda, None, &opts)?;
            let a = (sum_y[i] - sol.coef.dot(&sum_h)) / nt;
            Ok((a, sol.coef, sol.kkt_residual))
        })
        .collect();
    let mut intercept = Vec::with_capacity(p);
    let mut coef = Array3::zeros((p, p, lag));
    let mut kkt = Vec::with_capacity(p);
    for (i, f) in fits.into_iter().enumerate() {
        let (a, b, k) = f?;
        intercept.push(a);
        kkt.push(k);
        for l in 0..lag {
            for j in 0..p {
                coef[[i, j, l]] = b[l * p + j];
            }
        }
    }
    Ok((LaggedLinear { intercept, coef }, kkt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrangerFit<T> {
    pub graph: DependencyGraph<T>,
    pub predictor: LaggedLinear<T>,
    pub kkt: Vec<T>,
}

/// Lasso-Granger on the observed values.
pub fn lasso_granger<T: Scalar>(panel: &TimeSeriesPanel<T>, lambda: T, lag: usize) -> Result<GrangerFit<T>> {
    panel.require_longer_than(lag)?;
    let (predictor, kkt) = lagged_lasso(panel.values(), lambda, lag)?;
    Ok(GrangerFit {
        graph: DependencyGraph::from_lag_coefficients(&predictor.coef),
        predictor,
        kkt,
    })
}
