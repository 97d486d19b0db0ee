use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::baselines::{copula_method, lasso_granger, te_method, CopulaFit, GrangerFit, MarginalKind, TeConfig, TeFit};
use crate::em::{self, EmConfig, EmFit, TRAIN_FRACTION};
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// A method and its settings. A penalty grid with two or more entries is
/// resolved by forward-chaining validation on the training panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", bound = "T: Scalar", deny_unknown_fields)]
pub enum MethodSpec<T> {
    SparseGev {
        em: EmConfig<T>,
        #[serde(default)]
        lambda_grid: Vec<T>,
    },
    Granger {
        lambda: T,
        #[serde(default)]
        lambda_grid: Vec<T>,
        lag: usize,
    },
    #[serde(rename = "te")]
    TransferEntropy { te: TeConfig },
    Copula {
        lambda: T,
        #[serde(default)]
        lambda_grid: Vec<T>,
        lag: usize,
        #[serde(default)]
        marginal: MarginalKind,
    },
}

impl<T: Scalar> MethodSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::SparseGev { .. } => "Sparse-GEV",
            MethodSpec::Granger { .. } => "Granger",
            MethodSpec::TransferEntropy { .. } => "TE",
            MethodSpec::Copula { .. } => "Copula",
        }
    }

    pub fn lag(&self) -> usize {
        match self {
            MethodSpec::SparseGev { em, .. } => em.lag,
            MethodSpec::Granger { lag, .. } | MethodSpec::Copula { lag, .. } => *lag,
            MethodSpec::TransferEntropy { te } => te.lag,
        }
    }

    pub fn lambda(&self) -> Option<T> {
        match self {
            MethodSpec::SparseGev { em, .. } => Some(em.lambda),
            MethodSpec::Granger { lambda, .. } | MethodSpec::Copula { lambda, .. } => Some(*lambda),
            MethodSpec::TransferEntropy { .. } => None,
        }
    }

    fn grid(&self) -> &[T] {
        match self {
            MethodSpec::SparseGev { lambda_grid, .. }
            | MethodSpec::Granger { lambda_grid, .. }
            | MethodSpec::Copula { lambda_grid, .. } => lambda_grid,
            MethodSpec::TransferEntropy { .. } => &[],
        }
    }

    /// The same method with a fixed penalty and no grid.
    pub fn with_lambda(&self, value: T) -> Self {
        let mut out = self.clone();
        match &mut out {
            MethodSpec::SparseGev { em, lambda_grid } => {
                em.lambda = value;
                lambda_grid.clear();
            }
            MethodSpec::Granger { lambda, lambda_grid, .. } | MethodSpec::Copula { lambda, lambda_grid, .. } => {
                *lambda = value;
                lambda_grid.clear();
            }
            MethodSpec::TransferEntropy { .. } => {}
        }
        out
    }

    /// Resolves a penalty grid to a single penalty using `panel`.
    pub fn resolve(&self, panel: &TimeSeriesPanel<T>) -> Result<Self> {
        let grid = self.grid();
        match grid {
            [] => Ok(self.clone()),
            [only] => Ok(self.with_lambda(*only)),
            _ => select_penalty(self, grid, panel),
        }
    }
}

/// A fitted method.
#[derive(Debug, Clone)]
pub enum Fitted<T> {
    SparseGev { fit: EmFit<T>, particles: usize, seed: u64 },
    Granger(GrangerFit<T>),
    TransferEntropy(TeFit<T>),
    Copula(CopulaFit<T>),
}

impl<T: Scalar> Fitted<T> {
    pub fn graph(&self) -> DependencyGraph<T> {
        match self {
            Fitted::SparseGev { fit, .. } => fit.model.extract_graph(),
            Fitted::Granger(f) => f.graph.clone(),
            Fitted::TransferEntropy(f) => f.graph.clone(),
            Fitted::Copula(f) => f.graph.clone(),
        }
    }

    /// Prediction for the step after the end of `panel`.
    pub fn predict_after(&self, panel: &TimeSeriesPanel<T>) -> Result<Vec<T>> {
        match self {
            Fitted::SparseGev { fit, particles, seed } => {
                let f = em::forecast_observations(&fit.model, panel, *particles, *seed)?;
                Ok(f.row(f.nrows() - 1).to_vec())
            }
            Fitted::Granger(f) => f.predictor.predict_after(panel.values()),
            Fitted::TransferEntropy(f) => f.predictor.predict_after(panel.values()),
            Fitted::Copula(f) => f.predictor.predict_after(panel.values()),
        }
    }

    /// One-step predictions of rows `from..T` of `panel`, each using only earlier rows.
    pub fn predict_range(&self, panel: &TimeSeriesPanel<T>, from: usize) -> Result<Array2<T>> {
        let (len, p) = panel.values().dim();
        if let Fitted::SparseGev { fit, particles, seed } = self {
            let lag = fit.model.lag();
            if from < lag {
                return Err(Error::Domain(format!("cannot predict before step {lag}")));
            }
            let f = em::forecast_observations(&fit.model, panel, *particles, *seed)?;
            return Ok(f.slice(ndarray::s![from - lag..len - lag, ..]).to_owned());
        }
        let mut out = Array2::zeros((len.saturating_sub(from), p));
        for t in from..len {
            let prefix = panel.slice_time(0..t)?;
            let pred = self.predict_after(&prefix)?;
            out.row_mut(t - from).assign(&ndarray::Array1::from(pred));
        }
        Ok(out)
    }
}

impl<T: Scalar> Fitted<T> {
    pub fn lag(&self) -> usize {
        match self {
            Fitted::SparseGev { fit, .. } => fit.model.lag(),
            Fitted::Granger(f) => f.predictor.lag(),
            Fitted::TransferEntropy(f) => f.predictor.lag,
            Fitted::Copula(f) => f.predictor.linear.lag(),
        }
    }

    /// Predictions for steps `L..=T`: every row of the panel after the first
    /// `L`, plus the step after the panel ends.
    pub fn one_step_forecasts(&self, panel: &TimeSeriesPanel<T>) -> Result<Array2<T>> {
        if let Fitted::SparseGev { fit, particles, seed } = self {
            return em::forecast_observations(&fit.model, panel, *particles, *seed);
        }
        let lag = self.lag();
        let head = self.predict_range(panel, lag)?;
        let last = ndarray::Array1::from(self.predict_after(panel)?);
        let mut out = Array2::zeros((head.nrows() + 1, panel.n_series()));
        out.slice_mut(ndarray::s![..head.nrows(), ..]).assign(&head);
        out.row_mut(head.nrows()).assign(&last);
        Ok(out)
    }
}

/// Penalties tried by the benchmark's forward-chaining selection.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.01, 0.03, 0.1, 0.3, 1.0];

/// The four methods with a shared lag and penalty grid: Sparse-GEV (from
/// `em`), Granger, transfer entropy and the copula with `marginal`.
pub fn standard_methods<T: Scalar>(em: &EmConfig<T>, lambda_grid: &[T], te: &TeConfig, marginal: MarginalKind) -> Vec<MethodSpec<T>> {
    let te = TeConfig { lag: em.lag, ..te.clone() };
    vec![
        MethodSpec::SparseGev {
            em: em.clone(),
            lambda_grid: lambda_grid.to_vec(),
        },
        MethodSpec::Granger {
            lambda: em.lambda,
            lambda_grid: lambda_grid.to_vec(),
            lag: em.lag,
        },
        MethodSpec::TransferEntropy { te },
        MethodSpec::Copula {
            lambda: em.lambda,
            lambda_grid: lambda_grid.to_vec(),
            lag: em.lag,
            marginal,
        },
    ]
}

/// Fits `spec` on `panel`, resolving any penalty grid first.
pub fn fit_method<T: Scalar>(spec: &MethodSpec<T>, panel: &TimeSeriesPanel<T>) -> Result<(Fitted<T>, MethodSpec<T>)> {
    let resolved = spec.resolve(panel)?;
    Ok((fit_fixed(&resolved, panel)?, resolved))
}

fn fit_fixed<T: Scalar>(spec: &MethodSpec<T>, panel: &TimeSeriesPanel<T>) -> Result<Fitted<T>> {
    Ok(match spec {
        MethodSpec::SparseGev { em, .. } => Fitted::SparseGev {
            fit: em::fit(panel, em)?,
            particles: em.particles,
            seed: em.seed,
        },
        MethodSpec::Granger { lambda, lag, .. } => Fitted::Granger(lasso_granger(panel, *lambda, *lag)?),
        MethodSpec::TransferEntropy { te } => Fitted::TransferEntropy(te_method(panel, te)?),
        MethodSpec::Copula {
            lambda, lag, marginal, ..
        } => Fitted::Copula(copula_method(panel, *lambda, *lag, *marginal)?),
    })
}

/// Forward-chaining choice of penalty: fit on the first 80% of rows, score
/// one-step RMSE on the rest, lowest wins and ties go to the larger penalty.
fn select_penalty<T: Scalar>(spec: &MethodSpec<T>, grid: &[T], panel: &TimeSeriesPanel<T>) -> Result<MethodSpec<T>> {
    let len = panel.len();
    let n_train = (TRAIN_FRACTION * len as f64).floor() as usize;
    if n_train <= spec.lag() + 2 || n_train >= len {
        return Err(Error::Domain(format!("panel of length {len} is too short to hold out a validation block")));
    }
    let train = panel.slice_time(0..n_train)?;
    let mut best: Option<(MethodSpec<T>, T)> = None;
    let mut failures = Vec::new();
    for &lambda in grid {
        let cand = spec.with_lambda(lambda);
        let score = fit_fixed(&cand, &train).and_then(|f| {
            let pred = f.predict_range(panel, n_train)?;
            let actual = panel.values().slice(ndarray::s![n_train.., ..]).to_owned();
            let mse = (&pred - &actual).mapv(|e| e * e).mean().expect("non-empty");
            Ok(mse.sqrt())
        });
        match score {
            Ok(r) if r.is_finite() => {
                let better = match &best {
                    None => true,
                    Some((b, br)) => {
                        let tie = (r - *br).abs() <= T::lit(1e-12) * br.abs().max(T::one());
                        if tie {
                            lambda > b.lambda().expect("penalized method")
                        } else {
                            r < *br
                        }
                    }
                };
                if better {
                    best = Some((cand, r));
                }
            }
            Ok(r) => failures.push(format!("lambda {lambda}: non-finite score {r}")),
            Err(e) => failures.push(format!("lambda {lambda}: {e}")),
        }
    }
    best.map(|(s, _)| s).ok_or(Error::AllFailed(failures))
}
