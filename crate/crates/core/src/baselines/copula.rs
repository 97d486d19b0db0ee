use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::baselines::granger::{lagged_lasso, LaggedLinear};
use crate::error::{Error, Result};
use crate::evd::{fit_gumbel_mle, GumbelParams};
use crate::graph::DependencyGraph;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;
use crate::special::{normal_cdf, normal_cdf_inv};

/// Probabilities are kept inside `[CLAMP, 1 - CLAMP]` before the normal quantile.
pub const CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalKind {
    /// Gumbel maximum-likelihood fit.
    #[default]
    #[serde(alias = "gumbel")]
    Gev,
    /// Piecewise-linear empirical cdf through `(x_(r), r / (n + 1))`.
    Empirical,
}

/// A fitted per-series marginal distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Marginal<T> {
    Gumbel(GumbelParams<T>),
    Empirical(Vec<T>),
}

impl<T: Scalar> Marginal<T> {
    pub fn fit(samples: &[T], kind: MarginalKind) -> Result<Self> {
        match kind {
            MarginalKind::Gev => Ok(Marginal::Gumbel(fit_gumbel_mle(samples)?.params)),
            MarginalKind::Empirical => {
                if samples.len() < 2 || samples.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("empirical marginal needs at least 2 finite samples".into()));
                }
                let mut s = samples.to_vec();
                s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                if s[0] == s[s.len() - 1] {
                    return Err(Error::Degenerate("constant series".into()));
                }
                Ok(Marginal::Empirical(s))
            }
        }
    }

    pub fn cdf(&self, x: T) -> T {
        match self {
            Marginal::Gumbel(g) => (-(-(x - g.mu) / g.sigma).exp()).exp(),
            Marginal::Empirical(s) => {
                let n = s.len();
                let np1 = T::from_count(n + 1);
                if x <= s[0] {
                    return T::one() / np1;
                }
                if x >= s[n - 1] {
                    return T::from_count(n) / np1;
                }
                let j = s.partition_point(|v| *v <= x) - 1;
                let frac = (x - s[j]) / (s[j + 1] - s[j]);
                (T::from_count(j + 1) + frac) / np1
            }
        }
    }

    pub fn quantile(&self, q: T) -> T {
        match self {
            Marginal::Gumbel(g) => g.quantile_unchecked(q),
            Marginal::Empirical(s) => {
                let n = s.len();
                let pos = (q * T::from_count(n + 1) - T::one()).max(T::zero()).min(T::from_count(n - 1));
                let j = pos.floor().to_usize().expect("bounded").min(n - 2);
                let frac = pos - T::from_count(j);
                s[j] + frac * (s[j + 1] - s[j])
            }
        }
    }

    /// `Φ⁻¹(F(x))` with `F(x)` clamped away from 0 and 1.
    pub fn to_normal(&self, x: T) -> T {
        let lo = T::lit(CLAMP);
        let q = self.cdf(x).max(lo).min(T::one() - lo);
        normal_cdf_inv(q).expect("clamped into (0, 1)")
    }

    /// `F⁻¹(Φ(u))`.
    pub fn from_normal(&self, u: T) -> T {
        let lo = T::lit(CLAMP);
        self.quantile(normal_cdf(u).max(lo).min(T::one() - lo))
    }
}

/// Marginals plus a lagged linear model in normal-scores space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CopulaPredictor<T> {
    pub marginals: Vec<Marginal<T>>,
    pub linear: LaggedLinear<T>,
}

impl<T: Scalar> CopulaPredictor<T> {
    pub fn transform(&self, values: ArrayView2<'_, T>) -> Array2<T> {
        Array2::from_shape_fn(values.dim(), |(t, i)| self.marginals[i].to_normal(values[[t, i]]))
    }

    /// Predicts in normal-scores space and maps back through the marginals.
    pub fn predict_after(&self, values: ArrayView2<'_, T>) -> Result<Vec<T>> {
        if values.ncols() != self.marginals.len() {
            return Err(Error::Dimension(format!("expected {} series, got {}", self.marginals.len(), values.ncols())));
        }
        let u = self.linear.predict_after(self.transform(values).view())?;
        Ok(u.iter().zip(&self.marginals).map(|(&u, m)| m.from_normal(u)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaFit<T> {
    pub graph: DependencyGraph<T>,
    pub predictor: CopulaPredictor<T>,
}

/// Gaussian-copula baseline: marginal fits, normal scores, lagged Lasso.
pub fn copula_method<T: Scalar>(panel: &TimeSeriesPanel<T>, lambda: T, lag: usize, marginal: MarginalKind) -> Result<CopulaFit<T>> {
    panel.require_longer_than(lag)?;
    let marginals = (0..panel.n_series())
        .map(|i| {
            Marginal::fit(&panel.series(i).to_vec(), marginal).map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("series '{}': {msg}", panel.names()[i])),
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut predictor = CopulaPredictor {
        marginals,
        linear: LaggedLinear {
            intercept: Vec::new(),
            coef: ndarray::Array3::zeros((0, 0, 0)),
        },
    };
    let u = predictor.transform(panel.values());
    let (linear, _) = lagged_lasso(u.view(), lambda, lag)?;
    predictor.linear = linear;
    Ok(CopulaFit {
        graph: DependencyGraph::from_lag_coefficients(&predictor.linear.coef),
        predictor,
    })
}
