use std::collections::VecDeque;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evd::GumbelParams;
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Steps generated and discarded before the emitted window.
pub const DEFAULT_BURN_IN: usize = 20;

/// Latent locations behind a panel, T × P.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPath<T> {
    pub mu: Array2<T>,
}

/// Draws a latent path and Gumbel observations from the model.
///
/// `init` is an L × P block of starting latent values (row 0 = most recent);
/// when absent every starting value is the series offset. `burn_in` steps are
/// generated and dropped before the `len` emitted steps.
pub fn simulate<T: Scalar, R: Rng + ?Sized>(
    model: &SparseGevModel<T>,
    len: usize,
    init: Option<ArrayView2<'_, T>>,
    burn_in: usize,
    rng: &mut R,
) -> Result<(TimeSeriesPanel<T>, LatentPath<T>)> {
    let (p, lag) = (model.n_series(), model.lag());
    if len <= lag {
        return Err(Error::Domain(format!("simulation length {len} must exceed lag {lag}")));
    }
    let mut window: VecDeque<Array1<T>> = match init {
        Some(h) => {
            if h.dim() != (lag, p) {
                return Err(Error::Dimension(format!("init is {:?}, expected ({lag}, {p})", h.dim())));
            }
            h.rows().into_iter().map(|r| r.to_owned()).collect()
        }
        None => (0..lag).map(|_| Array1::from(model.c().to_vec())).collect(),
    };

    let total = burn_in + len;
    let mut mu = Array2::zeros((len, p));
    let mut x = Array2::zeros((len, p));
    for step in 0..total {
        let next: Array1<T> = (0..p)
            .map(|i| {
                let mean = model.transition_mean_with(i, |l, j| window[l][j]);
                mean + model.tau() * T::standard_normal(rng)
            })
            .collect();
        if step >= burn_in {
            let t = step - burn_in;
            for i in 0..p {
                let g = GumbelParams {
                    mu: next[i],
                    sigma: model.sigma()[i],
                };
                mu[[t, i]] = next[i];
                x[[t, i]] = g.sample(rng);
            }
        }
        window.pop_back();
        window.push_front(next);
    }
    Ok((TimeSeriesPanel::from_values(x)?, LatentPath { mu }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_runs_are_identical() {
        let mut beta = Array3::zeros((2, 2, 1));
        beta[[0, 1, 0]] = 0.4;
        beta[[1, 1, 0]] = 0.5;
        let m = SparseGevModel::new(vec![0.2, 0.1], beta, vec![0.05, 0.05], 0.3).unwrap();
        let a = simulate(&m, 30, None, 20, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = simulate(&m, 30, None, 20, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.values().dim(), (30, 2));
    }

    #[test]
    fn noise_free_limit_follows_recursion() {
        let mut beta = Array3::zeros((2, 2, 2));
        beta[[0, 0, 0]] = 0.5;
        beta[[0, 1, 1]] = -0.3;
        beta[[1, 0, 0]] = 0.2;
        let tiny = 1e-12;
        let m = SparseGevModel::new(vec![0.2, 0.1], beta, vec![tiny, tiny], tiny).unwrap();
        let init = ndarray::array![[1.0, -1.0], [0.5, 2.0]];
        let (panel, latent) = simulate(&m, 6, Some(init.view()), 0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        // deterministic recursion, row 0 is lag 1
        let mut hist: Vec<[f64; 2]> = vec![[1.0, -1.0], [0.5, 2.0]];
        for t in 0..6 {
            let m0 = 0.2 + 0.5 * hist[0][0] - 0.3 * hist[1][1];
            let m1 = 0.1 + 0.2 * hist[0][0];
            for (i, v) in [m0, m1].into_iter().enumerate() {
                assert!((latent.mu[[t, i]] - v).abs() < 1e-9);
                assert!((panel.values()[[t, i]] - v).abs() < 1e-9);
            }
            hist.insert(0, [m0, m1]);
            hist.pop();
        }
    }

    #[test]
    fn rejects_short_runs() {
        let m = SparseGevModel::independent(vec![0.0], vec![1.0], 1.0, 2).unwrap();
        assert!(simulate(&m, 2, None, 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
