use ndarray::{s, Array1, Array2, Array3, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evd::GumbelParams;
use crate::inference::proposal::proposal_params;
use crate::inference::resample::{effective_sample_size, normalize_log_weights, systematic_resample};
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Weighted particles at one time step.
///
/// `window[[k, l, i]]` is particle `k`'s value of series `i` at lag `l`
/// (lag 0 is the current step), so each particle carries its own ancestral
/// path over the last `L + 1` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<T> {
    pub t: usize,
    pub window: Array3<T>,
    pub weights: Array1<T>,
    pub ess: T,
}

impl<T: Scalar> ParticleEnsemble<T> {
    pub fn n_particles(&self) -> usize {
        self.weights.len()
    }

    /// Current latent values, N × P.
    pub fn particles(&self) -> ndarray::ArrayView2<'_, T> {
        self.window.slice(s![.., 0, ..])
    }

    /// Weighted mean of the current latent values.
    pub fn mean(&self) -> Array1<T> {
        self.particles().t().dot(&self.weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: usize,
    pub ess: f64,
    pub min_weight: f64,
    pub max_weight: f64,
}

/// Particle values and weights at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<T> {
    pub weights: Array1<T>,
    /// N × P latent values.
    pub mu: Array2<T>,
}

/// Posterior expectations of the stacked vector
/// `z_t = (mu_t, mu_{t-1}, ..., mu_{t-L})` (blocks of P), summed over the
/// modelled steps `t = L..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedMoments<T> {
    pub count: usize,
    /// `Σ_t E[z_t]`.
    pub sum: Array1<T>,
    /// `Σ_t E[z_t z_t']`.
    pub gram: Array2<T>,
}

impl<T: Scalar> LaggedMoments<T> {
    fn zeros(dim: usize) -> Self {
        Self {
            count: 0,
            sum: Array1::zeros(dim),
            gram: Array2::zeros((dim, dim)),
        }
    }

    /// Accumulates one step from N stacked particle vectors (rows of `z`).
    fn accumulate(&mut self, z: &Array2<T>, w: ArrayView1<'_, T>) {
        let zw = z * &w.insert_axis(Axis(1));
        self.sum = &self.sum + &zw.sum_axis(Axis(0));
        self.gram = &self.gram + &zw.t().dot(z);
        self.count += 1;
    }
}

/// Posterior moments needed by the M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<T> {
    pub lag: usize,
    /// `E[mu_t^i | X]`, T × P (filtered at each step).
    pub mean_mu: Array2<T>,
    /// `E[(mu_t^i)^2 | X]`, T × P.
    pub second_moment: Array2<T>,
    pub cross_terms: LaggedMoments<T>,
    /// One-step latent forecasts `E[mu_t | x_0..x_{t-1}]` for `t = L..=T`.
    /// Empty when the summary was built from explicit paths.
    pub forecast: Array2<T>,
    /// Particle draws for `t = L..T`, used for expectations that are
    /// nonlinear in the latent values.
    pub samples: Vec<WeightedSample<T>>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl<T: Scalar> PosteriorSummary<T> {
    pub fn n_series(&self) -> usize {
        self.mean_mu.ncols()
    }

    pub fn len(&self) -> usize {
        self.mean_mu.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_mu.nrows() == 0
    }

    /// Posterior means of the last `L` steps, row 0 being the most recent.
    pub fn last_means(&self) -> Array2<T> {
        let t = self.len();
        let mut h = Array2::zeros((self.lag, self.n_series()));
        for l in 0..self.lag {
            h.row_mut(l).assign(&self.mean_mu.row(t - 1 - l));
        }
        h
    }

    /// Summary from explicit weighted latent paths (each T × P).
    ///
    /// Useful for checking the M-step against hand-built posteriors.
    pub fn from_weighted_paths(weights: &[T], paths: &[Array2<T>], lag: usize) -> Result<Self> {
        if weights.len() != paths.len() || paths.is_empty() {
            return Err(Error::Dimension("one weight per path required".into()));
        }
        let (len, p) = paths[0].dim();
        if paths.iter().any(|q| q.dim() != (len, p)) || len <= lag {
            return Err(Error::Dimension("paths must share a T × P shape with T > L".into()));
        }
        let w = Array1::from(weights.to_vec());
        let total = w.sum();
        let w = w / total;
        let n = paths.len();
        let mut mean_mu = Array2::zeros((len, p));
        let mut second_moment = Array2::zeros((len, p));
        for (k, path) in paths.iter().enumerate() {
            mean_mu = mean_mu + path * w[k];
            second_moment = second_moment + &path.mapv(|v| v * v) * w[k];
        }
        let mut cross = LaggedMoments::zeros((lag + 1) * p);
        let mut samples = Vec::new();
        for t in lag..len {
            let mut z = Array2::zeros((n, (lag + 1) * p));
            let mut mu = Array2::zeros((n, p));
            for (k, path) in paths.iter().enumerate() {
                for l in 0..=lag {
                    z.slice_mut(s![k, l * p..(l + 1) * p]).assign(&path.row(t - l));
                }
                mu.row_mut(k).assign(&path.row(t));
            }
            cross.accumulate(&z, w.view());
            samples.push(WeightedSample { weights: w.clone(), mu });
        }
        Ok(Self {
            lag,
            mean_mu,
            second_moment,
            cross_terms: cross,
            forecast: Array2::zeros((0, p)),
            samples,
            diagnostics: Vec::new(),
        })
    }
}

fn substream(seed: u64, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Initial ensemble at step `L - 1`: each of the first `L` latent values is
/// drawn from `N(x_t, tau^2)` around its observation. Lag `L` is zero-filled.
pub fn init_ensemble<T: Scalar, R: Rng + ?Sized>(
    panel: &TimeSeriesPanel<T>,
    model: &SparseGevModel<T>,
    n_particles: usize,
    rng: &mut R,
) -> Result<ParticleEnsemble<T>> {
    let (p, lag) = (model.n_series(), model.lag());
    check_inputs(panel, model, n_particles)?;
    let seed: u64 = rng.random();
    let mut window = Array3::zeros((n_particles, lag + 1, p));
    for i in 0..p {
        let mut stream = substream(seed, i);
        for k in 0..n_particles {
            for t in 0..lag {
                // window lag index for time t, seen from step lag - 1
                let l = lag - 1 - t;
                window[[k, l, i]] = panel.row(t)[i] + model.tau() * T::standard_normal(&mut stream);
            }
        }
    }
    let n = T::from_count(n_particles);
    Ok(ParticleEnsemble {
        t: lag - 1,
        window,
        weights: Array1::from_elem(n_particles, n.recip()),
        ess: n,
    })
}

fn check_inputs<T: Scalar>(panel: &TimeSeriesPanel<T>, model: &SparseGevModel<T>, n_particles: usize) -> Result<()> {
    if panel.n_series() != model.n_series() {
        return Err(Error::Dimension(format!(
            "panel has {} series, model has {}",
            panel.n_series(),
            model.n_series()
        )));
    }
    panel.require_longer_than(model.lag())?;
    if n_particles < 2 {
        return Err(Error::Domain(format!("need at least 2 particles, got {n_particles}")));
    }
    Ok(())
}

/// Advances the ensemble by one step.
///
/// Resamples systematically, proposes every series from its Lambert-W
/// Gaussian, and reweights by `p(x | mu) p(mu | history) / q(mu)`. Each
/// series draws from its own counter-based substream, so results do not depend
/// on the order in which series are processed.
pub fn pf_step<T: Scalar, R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble<T>,
    x_t: ArrayView1<'_, T>,
    model: &SparseGevModel<T>,
    rng: &mut R,
) -> Result<(ParticleEnsemble<T>, StepDiagnostics)> {
    let (p, lag) = (model.n_series(), model.lag());
    let n = ensemble.n_particles();
    if x_t.len() != p || ensemble.window.dim() != (n, lag + 1, p) {
        return Err(Error::Dimension("ensemble, observation and model shapes disagree".into()));
    }
    let t = ensemble.t + 1;

    let u = T::lit(rng.random::<f64>());
    let ancestors = systematic_resample(ensemble.weights.view(), u);
    let prev = ensemble.window.select(Axis(0), &ancestors);

    let seed: u64 = rng.random();
    let tau = model.tau();
    let half_ln_2pi = T::lit(0.5) * (T::lit(2.0) * T::PI()).ln();
    let ln_normal = |v: T, m: T, var: T| -> T {
        let d = v - m;
        -half_ln_2pi - T::lit(0.5) * var.ln() - d * d / (T::lit(2.0) * var)
    };

    let mut window = Array3::zeros((n, lag + 1, p));
    window.slice_mut(s![.., 1.., ..]).assign(&prev.slice(s![.., ..lag, ..]));
    let mut log_w = Array1::from_elem(n, -T::from_count(n).ln());
    for i in 0..p {
        let mut stream = substream(seed, i);
        let obs = GumbelParams {
            mu: T::zero(),
            sigma: model.sigma()[i],
        };
        for k in 0..n {
            let mu_tilde = model.transition_mean_with(i, |l, j| prev[[k, l, j]]);
            let q = proposal_params(x_t[i], mu_tilde, obs.sigma, tau)?;
            let draw = q.mean + q.variance.sqrt() * T::standard_normal(&mut stream);
            // likelihood of x given location `draw`
            let ll = obs.ln_pdf_unchecked(x_t[i] - draw);
            let ratio = if q.variance > T::zero() {
                ln_normal(draw, mu_tilde, tau * tau) - ln_normal(draw, q.mean, q.variance)
            } else {
                T::zero()
            };
            let inc = ll + ratio;
            log_w[k] = log_w[k] + if inc.is_nan() { T::neg_infinity() } else { inc };
            window[[k, 0, i]] = draw;
        }
    }

    let weights = normalize_log_weights(log_w.view()).ok_or_else(|| Error::WeightDegeneracy {
        t,
        min_log_weight: log_w.iter().copied().fold(T::infinity(), T::min).as_f64(),
        max_log_weight: log_w.iter().copied().fold(T::neg_infinity(), T::max).as_f64(),
        ess_trace: Vec::new(),
    })?;
    let ess = effective_sample_size(weights.view());
    let diag = StepDiagnostics {
        t,
        ess: ess.as_f64(),
        min_weight: weights.iter().copied().fold(T::infinity(), T::min).as_f64(),
        max_weight: weights.iter().copied().fold(T::neg_infinity(), T::max).as_f64(),
    };
    Ok((
        ParticleEnsemble {
            t,
            window,
            weights,
            ess,
        },
        diag,
    ))
}

/// Runs the filter over the whole panel and collects the posterior moments.
pub fn run_filter<T: Scalar, R: Rng + ?Sized>(
    panel: &TimeSeriesPanel<T>,
    model: &SparseGevModel<T>,
    n_particles: usize,
    rng: &mut R,
) -> Result<PosteriorSummary<T>> {
    let (p, lag, len) = (model.n_series(), model.lag(), panel.len());
    let mut ens = init_ensemble(panel, model, n_particles, rng)?;
    let mut mean_mu = Array2::zeros((len, p));
    let mut second_moment = Array2::zeros((len, p));
    for t in 0..lag {
        let vals = ens.window.slice(s![.., lag - 1 - t, ..]);
        mean_mu.row_mut(t).assign(&vals.t().dot(&ens.weights));
        second_moment
            .row_mut(t)
            .assign(&vals.mapv(|v| v * v).t().dot(&ens.weights));
    }

    let mut forecast = Array2::zeros((len - lag + 1, p));
    forecast.row_mut(0).assign(&ensemble_forecast(&ens, model));

    let dim = (lag + 1) * p;
    let mut cross = LaggedMoments::zeros(dim);
    let mut samples = Vec::with_capacity(len - lag);
    let mut diagnostics = Vec::with_capacity(len - lag);
    for t in lag..len {
        let (next, diag) = pf_step(&ens, panel.row(t), model, rng).map_err(|e| match e {
            Error::WeightDegeneracy {
                t,
                min_log_weight,
                max_log_weight,
                ..
            } => Error::WeightDegeneracy {
                t,
                min_log_weight,
                max_log_weight,
                ess_trace: diagnostics.iter().map(|d: &StepDiagnostics| d.ess).collect(),
            },
            e => e,
        })?;
        ens = next;
        diagnostics.push(diag);

        let cur = ens.particles();
        mean_mu.row_mut(t).assign(&cur.t().dot(&ens.weights));
        second_moment
            .row_mut(t)
            .assign(&cur.mapv(|v| v * v).t().dot(&ens.weights));
        let z = ens
            .window
            .view()
            .into_shape_with_order((n_particles, dim))
            .expect("window is contiguous")
            .to_owned();
        cross.accumulate(&z, ens.weights.view());
        forecast.row_mut(t - lag + 1).assign(&ensemble_forecast(&ens, model));
        samples.push(WeightedSample {
            weights: ens.weights.clone(),
            mu: cur.to_owned(),
        });
    }
    Ok(PosteriorSummary {
        lag,
        mean_mu,
        second_moment,
        cross_terms: cross,
        forecast,
        samples,
        diagnostics,
    })
}

/// Weighted transition mean of the next step, from each particle's own path.
pub fn ensemble_forecast<T: Scalar>(ens: &ParticleEnsemble<T>, model: &SparseGevModel<T>) -> Array1<T> {
    let p = model.n_series();
    let mut out = Array1::zeros(p);
    for (k, &w) in ens.weights.iter().enumerate() {
        for i in 0..p {
            out[i] = out[i] + w * model.transition_mean_with(i, |l, j| ens.window[[k, l, j]]);
        }
    }
    out
}
