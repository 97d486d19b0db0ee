//! Generalized EM for the sparse latent model.
//!
//! Each iteration runs the particle filter (E-step), solves the expected
//! Lasso for the coefficients and offsets, then updates the Gumbel scales.

mod mstep;
mod objective;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evd::fit_gumbel_mle;
use crate::inference::{run_filter, PosteriorSummary};
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::{Scalar, EULER_GAMMA};

pub use mstep::{m_step_beta_c, m_step_sigma, CoefUpdate};
pub use objective::{penalized_q, q_value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields, default)]
pub struct EmConfig<T> {
    /// L1 penalty on the coefficients.
    pub lambda: T,
    pub max_iters: usize,
    /// Relative change in the penalized objective that counts as converged.
    pub tol: T,
    pub particles: usize,
    /// Transition noise standard deviation, held fixed.
    pub tau: T,
    pub lag: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for EmConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::lit(0.1),
            max_iters: 30,
            tol: T::lit(1e-4),
            particles: 1000,
            // the latent noise of a unit-range panel; see `roughness_ratio`
            tau: T::lit(0.2),
            lag: 2,
            seed: 0,
        }
    }
}

impl<T: Scalar> EmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol > T::zero()) {
            return bad(format!("tol must be > 0, got {}", self.tol));
        }
        if self.particles < 2 {
            return bad(format!("need at least 2 particles, got {}", self.particles));
        }
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return bad(format!("tau must be finite and > 0, got {}", self.tau));
        }
        if self.lag == 0 {
            return bad("lag must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EmIteration<T> {
    pub iter: usize,
    pub q: T,
    pub penalized_q: T,
    pub max_dbeta: T,
    pub sigma: Vec<T>,
    /// Smallest effective sample size seen by the filter in this E-step.
    pub min_ess: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EmTrace<T> {
    pub iterations: Vec<EmIteration<T>>,
    pub converged: bool,
}

impl<T: Scalar> EmTrace<T> {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn penalized_q(&self) -> Vec<T> {
        self.iterations.iter().map(|r| r.penalized_q).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EmFit<T> {
    pub model: SparseGevModel<T>,
    pub trace: EmTrace<T>,
    /// Posterior from the last E-step.
    pub posterior: PosteriorSummary<T>,
}

/// Starting point: no coupling, offsets and scales from each series' marginal Gumbel fit.
pub fn initial_model<T: Scalar>(panel: &TimeSeriesPanel<T>, config: &EmConfig<T>) -> Result<SparseGevModel<T>> {
    let mut c = Vec::with_capacity(panel.n_series());
    let mut sigma = Vec::with_capacity(panel.n_series());
    for i in 0..panel.n_series() {
        let xs = panel.series(i).to_vec();
        let fit = fit_gumbel_mle(&xs).map_err(|e| match e {
            Error::Degenerate(msg) => Error::Degenerate(format!("series '{}': {msg}", panel.names()[i])),
            e => e,
        })?;
        c.push(fit.params.mu);
        sigma.push(fit.params.sigma);
    }
    SparseGevModel::independent(c, sigma, config.tau, config.lag)
}

/// Fits the model by generalized EM.
pub fn fit<T: Scalar>(panel: &TimeSeriesPanel<T>, config: &EmConfig<T>) -> Result<EmFit<T>> {
    config.validate()?;
    panel.require_longer_than(config.lag)?;
    let mut model = initial_model(panel, config)?;
    let mut trace = EmTrace::default();
    let mut posterior = None;
    let mut prev: Option<T> = None;

    for it in 1..=config.max_iters {
        let step = || -> Result<(SparseGevModel<T>, EmIteration<T>, PosteriorSummary<T>)> {
            // the same stream every iteration, so Q moves only with the parameters
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let summary = run_filter(panel, &model, config.particles, &mut rng)?;
            let coef = m_step_beta_c(&summary, config.lambda, Some(&model))?;
            let max_dbeta = coef
                .beta
                .iter()
                .zip(model.beta().iter())
                .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
            let half = SparseGevModel::new(coef.c, coef.beta, model.sigma().to_vec(), config.tau)?;
            let sigma = m_step_sigma(&summary, panel, half.sigma())?;
            let next = SparseGevModel::new(half.c().to_vec(), half.beta().clone(), sigma, config.tau)?;
            let q = q_value(&summary, panel, &next)?;
            let pq = penalized_q(&summary, panel, &next, config.lambda)?;
            let record = EmIteration {
                iter: it,
                q,
                penalized_q: pq,
                max_dbeta,
                sigma: next.sigma().to_vec(),
                min_ess: summary.diagnostics.iter().map(|d| d.ess).fold(f64::INFINITY, f64::min),
            };
            Ok((next, record, summary))
        };
        let (next, record, summary) = step().map_err(|e| e.at_iteration(it))?;
        let pq = record.penalized_q;
        model = next;
        trace.iterations.push(record);
        posterior = Some(summary);
        if let Some(p) = prev {
            if (pq - p).abs() <= config.tol * p.abs() {
                trace.converged = true;
                break;
            }
        }
        prev = Some(pq);
    }
    Ok(EmFit {
        model,
        trace,
        posterior: posterior.expect("at least one iteration runs"),
    })
}

/// One-step observation forecasts `E[x_t | x_0..x_{t-1}]` for `t = L..=T`.
///
/// Row `T - L` predicts the step after the panel ends. Filtering is causal, so
/// every row uses only observations before its target time.
pub fn forecast_observations<T: Scalar>(
    model: &SparseGevModel<T>,
    panel: &TimeSeriesPanel<T>,
    particles: usize,
    seed: u64,
) -> Result<Array2<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let summary = run_filter(panel, model, particles, &mut rng)?;
    let mut out = summary.forecast;
    for mut row in out.rows_mut() {
        for (v, s) in row.iter_mut().zip(model.sigma()) {
            *v = *v + T::lit(EULER_GAMMA) * *s;
        }
    }
    Ok(out)
}

/// Mean absolute step of the posterior mean path over that of the observations.
///
/// Values well below 1 mean the latent path is smoother than the data.
pub fn roughness_ratio<T: Scalar>(posterior: &PosteriorSummary<T>, panel: &TimeSeriesPanel<T>) -> T {
    let mean_abs_diff = |a: ndarray::ArrayView2<'_, T>| {
        let (len, p) = a.dim();
        let mut acc = T::zero();
        for t in 1..len {
            for i in 0..p {
                acc = acc + (a[[t, i]] - a[[t - 1, i]]).abs();
            }
        }
        acc / T::from_count((len.saturating_sub(1) * p).max(1))
    };
    mean_abs_diff(posterior.mean_mu.view()) / mean_abs_diff(panel.values())
}

/// Fraction of time steps used for training when choosing the penalty.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Validation score of one candidate configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScore<T> {
    pub config: EmConfig<T>,
    pub rmse: Option<T>,
    pub error: Option<String>,
}

/// Scores every configuration by forward-chaining validation: fit on the
/// first 80% of steps, one-step RMSE on the rest.
pub fn score_lambda_grid<T: Scalar>(panel: &TimeSeriesPanel<T>, grid: &[EmConfig<T>]) -> Result<Vec<LambdaScore<T>>> {
    let len = panel.len();
    let n_train = (TRAIN_FRACTION * len as f64).floor() as usize;
    let max_lag = grid.iter().map(|c| c.lag).max().unwrap_or(0);
    if n_train <= max_lag + 2 || n_train >= len {
        return Err(Error::Domain(format!(
            "panel of length {len} is too short to hold out a validation block"
        )));
    }
    let train = panel.slice_time(0..n_train)?;
    Ok(grid
        .par_iter()
        .map(|cfg| {
            let run = || -> Result<T> {
                let fitted = fit(&train, cfg)?;
                let pred = forecast_observations(&fitted.model, panel, cfg.particles, cfg.seed)?;
                let mut sq = T::zero();
                let mut count = 0;
                for t in n_train..len {
                    for (a, b) in pred.row(t - cfg.lag).iter().zip(panel.row(t)) {
                        sq = sq + (*a - *b) * (*a - *b);
                        count += 1;
                    }
                }
                Ok((sq / T::from_count(count)).sqrt())
            };
            match run() {
                Ok(r) => LambdaScore {
                    config: cfg.clone(),
                    rmse: Some(r),
                    error: None,
                },
                Err(e) => LambdaScore {
                    config: cfg.clone(),
                    rmse: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Picks the configuration with the lowest validation RMSE, preferring the
/// larger penalty on ties.
pub fn select_lambda<T: Scalar>(panel: &TimeSeriesPanel<T>, grid: &[EmConfig<T>]) -> Result<EmConfig<T>> {
    match grid {
        [] => Err(Error::Config("empty penalty grid".into())),
        [only] => Ok(only.clone()),
        _ => {
            let scores = score_lambda_grid(panel, grid)?;
            pick_best(&scores)
        }
    }
}

pub(crate) fn pick_best<T: Scalar>(scores: &[LambdaScore<T>]) -> Result<EmConfig<T>> {
    let mut best: Option<(&EmConfig<T>, T)> = None;
    for s in scores {
        let Some(r) = s.rmse.filter(|r| r.is_finite()) else {
            continue;
        };
        best = match best {
            None => Some((&s.config, r)),
            Some((b, br)) => {
                let tie = (r - br).abs() <= T::lit(1e-12) * br.abs().max(T::one());
                if (tie && s.config.lambda > b.lambda) || (!tie && r < br) {
                    Some((&s.config, r))
                } else {
                    Some((b, br))
                }
            }
        };
    }
    best.map(|(c, _)| c.clone()).ok_or_else(|| {
        Error::AllFailed(
            scores
                .iter()
                .map(|s| format!("lambda {}: {}", s.config.lambda, s.error.as_deref().unwrap_or("non-finite score")))
                .collect(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_synthetic_suite, simulate, SyntheticRecipe};
    use ndarray::Array3;

    fn small_panel(seed: u64) -> (TimeSeriesPanel<f64>, SparseGevModel<f64>) {
        let mut beta = Array3::zeros((3, 3, 1));
        beta[[1, 0, 0]] = 0.7;
        beta[[2, 1, 0]] = -0.6;
        beta[[0, 0, 0]] = 0.5;
        let model = SparseGevModel::new(vec![0.5, 0.4, 0.6], beta, vec![0.05; 3], 0.1).unwrap();
        let (panel, _) = simulate(&model, 60, None, 20, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        (panel, model)
    }

    fn cfg(lambda: f64) -> EmConfig<f64> {
        EmConfig {
            lambda,
            max_iters: 8,
            particles: 200,
            tau: 0.1,
            lag: 1,
            seed: 11,
            ..EmConfig::default()
        }
    }

    #[test]
    fn initial_state_uses_marginal_fits() {
        let (panel, _) = small_panel(1);
        let m = initial_model(&panel, &cfg(0.1)).unwrap();
        assert!(m.beta().iter().all(|b| *b == 0.0));
        for i in 0..3 {
            let fit = fit_gumbel_mle(&panel.series(i).to_vec()).unwrap();
            assert_eq!(m.c()[i], fit.params.mu);
            assert_eq!(m.sigma()[i], fit.params.sigma);
        }
    }

    #[test]
    fn fit_is_deterministic_and_bounded() {
        let (panel, _) = small_panel(2);
        let a = fit(&panel, &cfg(0.05)).unwrap();
        let b = fit(&panel, &cfg(0.05)).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.len() <= 8 && !a.trace.is_empty());
    }

    #[test]
    fn strong_edges_are_recovered() {
        let (panel, truth) = small_panel(3);
        let fitted = fit(&panel, &cfg(0.05)).unwrap();
        let g = fitted.model.extract_graph();
        assert!(g.score(0, 1) > 0.3, "{}", g.score(0, 1));
        assert!(g.score(1, 2) > 0.3, "{}", g.score(1, 2));
        assert!(truth.ground_truth().has_edge(0, 1));
    }

    #[test]
    fn huge_penalty_zeroes_coefficients() {
        let (panel, _) = small_panel(4);
        let fitted = fit(&panel, &cfg(1e6)).unwrap();
        assert!(fitted.model.beta().iter().all(|b| *b == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(0.1);
        c.max_iters = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let json = r#"{"lambda": 0.2, "bogus": 1}"#;
        assert!(serde_json::from_str::<EmConfig<f64>>(json).is_err());
        let parsed: EmConfig<f64> = serde_json::from_str(r#"{"lambda": 0.2}"#).unwrap();
        assert_eq!(parsed.lambda, 0.2);
        assert_eq!(parsed.max_iters, 30);
    }

    #[test]
    fn selection_prefers_signal_over_full_shrinkage() {
        let (panel, _) = small_panel(5);
        let grid = vec![cfg(0.0), cfg(1e6)];
        assert_eq!(select_lambda(&panel, &grid).unwrap().lambda, 0.0);
        assert_eq!(select_lambda(&panel, &grid[1..]).unwrap().lambda, 1e6);
    }

    #[test]
    fn ties_go_to_larger_penalty() {
        let s = |l: f64, r: Option<f64>| LambdaScore {
            config: cfg(l),
            rmse: r,
            error: None,
        };
        let scores = vec![s(0.1, Some(0.5)), s(0.3, Some(0.5)), s(0.2, Some(0.6)), s(0.9, None)];
        assert_eq!(pick_best(&scores).unwrap().lambda, 0.3);
        assert!(matches!(pick_best(&[s(0.1, None)]), Err(Error::AllFailed(_))));
    }

    #[test]
    fn forecasts_are_causal() {
        let (panel, model) = small_panel(6);
        let full = forecast_observations(&model, &panel, 100, 3).unwrap();
        let mut tampered = panel.values().to_owned();
        tampered[[59, 0]] += 5.0;
        let tampered = TimeSeriesPanel::from_values(tampered).unwrap();
        let other = forecast_observations(&model, &tampered, 100, 3).unwrap();
        assert_eq!(full.nrows(), 60);
        // rows up to the prediction of step 59 see nothing of step 59
        for r in 0..59 {
            assert_eq!(full.row(r), other.row(r));
        }
        assert_ne!(full.row(59), other.row(59));
    }

    #[test]
    fn synthetic_suite_runs() {
        let recipe = SyntheticRecipe::default();
        let suite = make_synthetic_suite::<f64, _>(1, &recipe, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let fitted = fit(&suite[0].panel, &EmConfig { max_iters: 3, particles: 100, ..EmConfig::default() }).unwrap();
        assert_eq!(fitted.model.n_series(), 9);
        assert!(roughness_ratio(&fitted.posterior, &suite[0].panel) > 0.0);
    }
}
