use ndarray::Array1;

use crate::error::{Error, Result};
use crate::inference::PosteriorSummary;
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

pub(crate) fn check_shapes<T: Scalar>(
    summary: &PosteriorSummary<T>,
    panel: &TimeSeriesPanel<T>,
    lag: usize,
    p: usize,
) -> Result<()> {
    if summary.len() != panel.len()
        || summary.n_series() != p
        || panel.n_series() != p
        || summary.lag != lag
        || summary.samples.len() != panel.len() - lag
        || summary.cross_terms.sum.len() != (lag + 1) * p
    {
        return Err(Error::Dimension(format!(
            "posterior summary ({} x {}, lag {}) does not match panel ({} x {}) and lag {lag}",
            summary.len(),
            summary.n_series(),
            summary.lag,
            panel.len(),
            panel.n_series()
        )));
    }
    Ok(())
}

/// Monte Carlo expectation of the complete-data log-likelihood, additive
/// constants dropped:
///
/// `Σ_i Σ_t [-ln σ_i - E((x - mu)/σ_i + exp(-(x - mu)/σ_i)) - E(mu_t - c - Σ β mu_lag)² / (2 τ²)]`
///
/// over the modelled steps `t = L..T`. The Gumbel terms average over the
/// particle draws; the transition term is exact given the stacked moments.
pub fn q_value<T: Scalar>(summary: &PosteriorSummary<T>, panel: &TimeSeriesPanel<T>, model: &SparseGevModel<T>) -> Result<T> {
    let (p, lag) = (model.n_series(), model.lag());
    check_shapes(summary, panel, lag, p)?;
    let mut q = T::zero();
    for i in 0..p {
        q = q + gumbel_terms(summary, panel, i, model.sigma()[i]) - transition_sq(summary, model, i) / (T::lit(2.0) * model.tau() * model.tau());
    }
    Ok(q)
}

/// `Q - λ / (2 τ²) Σ_i ||β_i||_1`, the quantity each EM iteration increases.
pub fn penalized_q<T: Scalar>(
    summary: &PosteriorSummary<T>,
    panel: &TimeSeriesPanel<T>,
    model: &SparseGevModel<T>,
    lambda: T,
) -> Result<T> {
    let q = q_value(summary, panel, model)?;
    let l1 = (0..model.n_series()).map(|i| model.l1_norm(i)).sum::<T>();
    Ok(q - lambda * l1 / (T::lit(2.0) * model.tau() * model.tau()))
}

/// `-T' ln σ - Σ_t E[u + exp(-u)]` with `u = (x_t - mu_t) / σ`.
pub(crate) fn gumbel_terms<T: Scalar>(summary: &PosteriorSummary<T>, panel: &TimeSeriesPanel<T>, i: usize, sigma: T) -> T {
    let lag = summary.lag;
    let mut acc = T::zero();
    for (s, sample) in summary.samples.iter().enumerate() {
        let x = panel.row(lag + s)[i];
        let mut e = T::zero();
        for (k, &w) in sample.weights.iter().enumerate() {
            let u = (x - sample.mu[[k, i]]) / sigma;
            e = e + w * (u + (-u).exp());
        }
        acc = acc + e;
    }
    -T::from_count(summary.samples.len()) * sigma.ln() - acc
}

/// `Σ_t E(mu_t^i - c_i - Σ β mu_lag)²` from the stacked moments.
pub(crate) fn transition_sq<T: Scalar>(summary: &PosteriorSummary<T>, model: &SparseGevModel<T>, i: usize) -> T {
    let (p, lag) = (model.n_series(), model.lag());
    let m = &summary.cross_terms;
    let mut a = Array1::zeros((lag + 1) * p);
    a[i] = T::one();
    for l in 0..lag {
        for j in 0..p {
            a[(l + 1) * p + j] = -model.beta()[[i, j, l]];
        }
    }
    let c = model.c()[i];
    let quad = a.dot(&m.gram.dot(&a));
    quad - T::lit(2.0) * c * a.dot(&m.sum) + T::from_count(m.count) * c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::PosteriorSummary;
    use ndarray::{array, Array2, Array3};

    #[test]
    fn hand_expanded_two_particle_case() {
        // P = 1, T = 3, L = 1, two paths with weights 0.25 / 0.75
        let x = array![[0.5], [0.9], [0.2]];
        let panel = TimeSeriesPanel::from_values(x).unwrap();
        let pa = array![[0.4], [0.6], [0.1]];
        let pb = array![[0.3], [1.0], [0.5]];
        let s = PosteriorSummary::from_weighted_paths(&[1.0, 3.0], &[pa, pb], 1).unwrap();
        let mut beta = Array3::zeros((1, 1, 1));
        beta[[0, 0, 0]] = 0.5;
        let (c, sigma, tau) = (0.1f64, 0.4f64, 0.3f64);
        let model = SparseGevModel::new(vec![c], beta, vec![sigma], tau).unwrap();

        let g = |x: f64, mu: f64| {
            let u = (x - mu) / sigma;
            u + (-u).exp()
        };
        let tr = |m: f64, prev: f64| (m - c - 0.5 * prev).powi(2);
        let expected = -2.0 * sigma.ln()
            - (0.25 * g(0.9, 0.6) + 0.75 * g(0.9, 1.0))
            - (0.25 * g(0.2, 0.1) + 0.75 * g(0.2, 0.5))
            - (0.25 * (tr(0.6, 0.4) + tr(0.1, 0.6)) + 0.75 * (tr(1.0, 0.3) + tr(0.5, 1.0))) / (2.0 * tau * tau);
        let q = q_value(&s, &panel, &model).unwrap();
        assert!((q - expected).abs() < 1e-12, "{q} vs {expected}");

        let pq = penalized_q(&s, &panel, &model, 0.2).unwrap();
        assert!((pq - (expected - 0.2 * 0.5 / (2.0 * tau * tau))).abs() < 1e-12);
    }

    #[test]
    fn unit_scale_drops_log_term() {
        let panel = TimeSeriesPanel::from_values(array![[0.1], [0.4]]).unwrap();
        let path = array![[0.0], [0.3]];
        let s = PosteriorSummary::from_weighted_paths(&[1.0], &[path], 1).unwrap();
        let model = SparseGevModel::independent(vec![0.0], vec![1.0], 1.0, 1).unwrap();
        let u = 0.4f64 - 0.3;
        let expected = -(u + (-u).exp()) - 0.3f64.powi(2) / 2.0;
        assert!((q_value(&s, &panel, &model).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let panel = TimeSeriesPanel::from_values(Array2::<f64>::zeros((4, 1))).unwrap();
        let s = PosteriorSummary::from_weighted_paths(&[1.0], &[Array2::zeros((3, 1))], 1).unwrap();
        let model = SparseGevModel::independent(vec![0.0], vec![1.0], 1.0, 1).unwrap();
        assert!(matches!(q_value(&s, &panel, &model), Err(Error::Dimension(_))));
    }
}
