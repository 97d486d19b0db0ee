//! The latent location model: observations are Gumbel around a latent location
//! that follows a sparse linear autoregression across all series.

mod simulate;
mod synthetic;

use ndarray::{Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, GroundTruthGraph};
use crate::scalar::{Scalar, EULER_GAMMA};

pub use simulate::{simulate, LatentPath, DEFAULT_BURN_IN};
pub use synthetic::{
    companion_spectral_radius, draw_stationary_beta, make_synthetic_suite, seeded_dataset, SyntheticDataset,
    SyntheticRecipe,
};

/// Parameters of the sparse latent model.
///
/// `beta[[i, j, l]]` is the weight of series `j` at lag `l + 1` in the
/// location of series `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "ModelDoc<T>",
    into = "ModelDoc<T>",
    bound = "T: Scalar"
)]
pub struct SparseGevModel<T> {
    c: Vec<T>,
    beta: Array3<T>,
    sigma: Vec<T>,
    tau: T,
}

impl<T: Scalar> SparseGevModel<T> {
    pub fn new(c: Vec<T>, beta: Array3<T>, sigma: Vec<T>, tau: T) -> Result<Self> {
        let p = c.len();
        let (bi, bj, lag) = beta.dim();
        if bi != p || bj != p {
            return Err(Error::Dimension(format!(
                "beta is {bi}x{bj}x{lag}, expected {p}x{p}xL"
            )));
        }
        if lag == 0 {
            return Err(Error::Domain("lag must be at least 1".into()));
        }
        if sigma.len() != p {
            return Err(Error::Dimension(format!("{} scales for {p} series", sigma.len())));
        }
        if let Some(s) = sigma.iter().find(|s| !(**s > T::zero() && s.is_finite())) {
            return Err(Error::Domain(format!("scales must be positive, got {s}")));
        }
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        if c.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("offsets and coefficients must be finite".into()));
        }
        Ok(Self { c, beta, sigma, tau })
    }

    /// Model with no cross-series dependence.
    pub fn independent(c: Vec<T>, sigma: Vec<T>, tau: T, lag: usize) -> Result<Self> {
        let p = c.len();
        Self::new(c, Array3::zeros((p, p, lag)), sigma, tau)
    }

    pub fn n_series(&self) -> usize {
        self.c.len()
    }

    pub fn lag(&self) -> usize {
        self.beta.dim().2
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn beta(&self) -> &Array3<T> {
        &self.beta
    }

    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn with_tau(&self, tau: T) -> Result<Self> {
        Self::new(self.c.clone(), self.beta.clone(), self.sigma.clone(), tau)
    }

    fn check_history(&self, history: &ArrayView2<'_, T>) -> Result<()> {
        if history.dim() != (self.lag(), self.n_series()) {
            return Err(Error::Dimension(format!(
                "history is {:?}, expected ({}, {}) with row 0 at lag 1",
                history.dim(),
                self.lag(),
                self.n_series()
            )));
        }
        Ok(())
    }

    /// Mean of the next latent location of series `i`.
    ///
    /// `history` is L × P with row 0 holding the lag-1 values.
    pub fn transition_mean(&self, i: usize, history: ArrayView2<'_, T>) -> Result<T> {
        self.check_history(&history)?;
        if i >= self.n_series() {
            return Err(Error::Dimension(format!("series index {i} out of range")));
        }
        Ok(self.transition_mean_with(i, |l, j| history[[l, j]]))
    }

    /// Transition mean with lagged values supplied by `lagged(l, j)`, `l` zero-based.
    #[inline]
    pub(crate) fn transition_mean_with(&self, i: usize, lagged: impl Fn(usize, usize) -> T) -> T {
        let mut acc = self.c[i];
        for l in 0..self.lag() {
            for j in 0..self.n_series() {
                let b = self.beta[[i, j, l]];
                if b != T::zero() {
                    acc = acc + b * lagged(l, j);
                }
            }
        }
        acc
    }

    /// Next latent means for all series, from an L × P history of posterior means.
    pub fn latent_forecast(&self, history: ArrayView2<'_, T>) -> Result<Vec<T>> {
        self.check_history(&history)?;
        Ok((0..self.n_series())
            .map(|i| self.transition_mean_with(i, |l, j| history[[l, j]]))
            .collect())
    }

    /// One-step forecast of the observations: the Gumbel mean around the forecast location.
    pub fn predict_next(&self, history: ArrayView2<'_, T>) -> Result<Vec<T>> {
        let gamma = T::lit(EULER_GAMMA);
        Ok(self
            .latent_forecast(history)?
            .into_iter()
            .zip(&self.sigma)
            .map(|(mu, &s)| mu + gamma * s)
            .collect())
    }

    /// Edge `j -> i` for every nonzero `beta[[i, j, ·]]`, scored by the largest magnitude.
    pub fn extract_graph(&self) -> DependencyGraph<T> {
        DependencyGraph::from_lag_coefficients(&self.beta)
    }

    pub fn ground_truth(&self) -> GroundTruthGraph {
        let p = self.n_series();
        let mut adjacency = Array2::from_elem((p, p), false);
        for ((i, j, _), &b) in self.beta.indexed_iter() {
            if b != T::zero() {
                adjacency[[j, i]] = true;
            }
        }
        GroundTruthGraph { adjacency }
    }

    /// Sum of absolute coefficients for series `i`.
    pub fn l1_norm(&self, i: usize) -> T {
        self.beta
            .slice(ndarray::s![i, .., ..])
            .iter()
            .fold(T::zero(), |acc, b| acc + b.abs())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct ModelDoc<T> {
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "L")]
    lag: usize,
    c: Vec<T>,
    sigma: Vec<T>,
    tau: T,
    beta: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> From<SparseGevModel<T>> for ModelDoc<T> {
    fn from(m: SparseGevModel<T>) -> Self {
        let (p, lag) = (m.n_series(), m.lag());
        let beta = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| (0..lag).map(|l| m.beta[[i, j, l]]).collect())
                    .collect()
            })
            .collect();
        ModelDoc {
            p,
            lag,
            c: m.c,
            sigma: m.sigma,
            tau: m.tau,
            beta,
        }
    }
}

impl<T: Scalar> TryFrom<ModelDoc<T>> for SparseGevModel<T> {
    type Error = Error;

    fn try_from(d: ModelDoc<T>) -> Result<Self> {
        let mut beta = Array3::zeros((d.p, d.p, d.lag));
        if d.beta.len() != d.p {
            return Err(Error::Dimension(format!("beta has {} target rows, P = {}", d.beta.len(), d.p)));
        }
        for (i, row) in d.beta.iter().enumerate() {
            if row.len() != d.p {
                return Err(Error::Dimension(format!("beta[{i}] has {} sources", row.len())));
            }
            for (j, lags) in row.iter().enumerate() {
                if lags.len() != d.lag {
                    return Err(Error::Dimension(format!("beta[{i}][{j}] has {} lags", lags.len())));
                }
                for (l, &b) in lags.iter().enumerate() {
                    beta[[i, j, l]] = b;
                }
            }
        }
        SparseGevModel::new(d.c, beta, d.sigma, d.tau)
    }
}
