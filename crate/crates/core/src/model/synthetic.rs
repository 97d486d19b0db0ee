use nalgebra::DMatrix;
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::GroundTruthGraph;
use crate::model::simulate::{simulate, LatentPath, DEFAULT_BURN_IN};
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Recipe for the synthetic benchmark panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticRecipe {
    pub n_series: usize,
    pub len: usize,
    pub lag: usize,
    pub offset_mean: f64,
    /// Variance of the offset draw.
    pub offset_var: f64,
    /// Transition noise variance.
    pub tau_sq: f64,
    pub sigma: f64,
    /// Expected number of incoming edges per node, self edges included.
    pub expected_in_degree: f64,
    pub coef_bound: f64,
    pub max_spectral_radius: f64,
    pub burn_in: usize,
}

impl Default for SyntheticRecipe {
    fn default() -> Self {
        Self {
            n_series: 9,
            len: 40,
            lag: 2,
            offset_mean: 0.2,
            offset_var: 0.05,
            tau_sq: 0.1,
            sigma: 0.05,
            expected_in_degree: 2.0,
            coef_bound: 0.8,
            max_spectral_radius: 0.95,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SyntheticDataset<T> {
    pub panel: TimeSeriesPanel<T>,
    pub truth: GroundTruthGraph,
    pub model: SparseGevModel<T>,
    pub latent: LatentPath<T>,
}

/// Spectral radius of the VAR companion matrix built from `beta`.
pub fn companion_spectral_radius<T: Scalar>(beta: &Array3<T>) -> f64 {
    let (p, _, lag) = beta.dim();
    let n = p * lag;
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 0..p {
        for j in 0..p {
            for l in 0..lag {
                comp[(i, l * p + j)] = beta[[i, j, l]].as_f64();
            }
        }
    }
    for k in p..n {
        comp[(k, k - p)] = 1.0;
    }
    comp.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Random sparse coefficient tensor whose VAR is stationary.
///
/// Each ordered pair is an edge with probability `expected_in_degree / P`, at a
/// single uniformly drawn lag, with a coefficient uniform in `[-bound, bound]`.
/// The tensor is then shrunk by 0.9 until the companion radius is below the cap.
pub fn draw_stationary_beta<T: Scalar, R: Rng + ?Sized>(recipe: &SyntheticRecipe, rng: &mut R) -> Array3<T> {
    let (p, lag) = (recipe.n_series, recipe.lag);
    let prob = (recipe.expected_in_degree / p as f64).min(1.0);
    loop {
        let mut beta = Array3::<f64>::zeros((p, p, lag));
        for i in 0..p {
            for j in 0..p {
                if rng.random::<f64>() < prob {
                    let l = rng.random_range(0..lag);
                    let coef = rng.random_range(-recipe.coef_bound..=recipe.coef_bound);
                    beta[[i, j, l]] = coef;
                }
            }
        }
        let off_diag: usize = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && (0..lag).any(|l| beta[[i, j, l]] != 0.0))
            .count();
        // the edge-ranking score needs both positives and negatives
        if off_diag == 0 || off_diag == p * (p - 1) {
            continue;
        }
        while companion_spectral_radius(&beta) >= recipe.max_spectral_radius {
            beta.mapv_inplace(|b| b * 0.9);
        }
        return beta.mapv(T::lit);
    }
}

/// Generates `n_datasets` panels, each from its own random sparse stationary model.
pub fn make_synthetic_suite<T: Scalar, R: Rng + ?Sized>(
    n_datasets: usize,
    recipe: &SyntheticRecipe,
    rng: &mut R,
) -> Result<Vec<SyntheticDataset<T>>> {
    (0..n_datasets)
        .map(|_| {
            let beta = draw_stationary_beta::<T, _>(recipe, rng);
            let offset_sd = recipe.offset_var.sqrt();
            let c = (0..recipe.n_series)
                .map(|_| T::lit(recipe.offset_mean + offset_sd * f64::standard_normal(rng)))
                .collect();
            let sigma = vec![T::lit(recipe.sigma); recipe.n_series];
            let model = SparseGevModel::new(c, beta, sigma, T::lit(recipe.tau_sq.sqrt()))?;
            let (panel, latent) = simulate(&model, recipe.len, None, recipe.burn_in, rng)?;
            Ok(SyntheticDataset {
                truth: model.ground_truth(),
                panel,
                model,
                latent,
            })
        })
        .collect()
}

/// The first dataset of the suite seeded by `seed`.
pub fn seeded_dataset<T: Scalar>(recipe: &SyntheticRecipe, seed: u64) -> Result<SyntheticDataset<T>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok(make_synthetic_suite(1, recipe, &mut rng)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radius_of_known_var() {
        // x_t = 0.5 x_{t-1} + 0.3 x_{t-2}: roots of z^2 - 0.5 z - 0.3
        let mut beta = Array3::<f64>::zeros((1, 1, 2));
        beta[[0, 0, 0]] = 0.5;
        beta[[0, 0, 1]] = 0.3;
        let expected = (0.5 + (0.25f64 + 1.2).sqrt()) / 2.0;
        assert!((companion_spectral_radius(&beta) - expected).abs() < 1e-12);
    }

    #[test]
    fn suite_shapes_and_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(2012);
        let suite = make_synthetic_suite::<f64, _>(8, &SyntheticRecipe::default(), &mut rng).unwrap();
        assert_eq!(suite.len(), 8);
        for d in &suite {
            assert_eq!(d.panel.values().dim(), (40, 9));
            assert!(companion_spectral_radius(d.model.beta()) < 0.95);
            for ((i, j, _), &b) in d.model.beta().indexed_iter() {
                if b != 0.0 {
                    assert!(d.truth.has_edge(j, i));
                }
            }
            let nonzero_pairs = (0..9)
                .flat_map(|i| (0..9).map(move |j| (i, j)))
                .filter(|&(i, j)| (0..2).any(|l| d.model.beta()[[i, j, l]] != 0.0))
                .count();
            assert_eq!(d.truth.n_edges(true), nonzero_pairs);
        }
        // distinct patterns
        assert_ne!(suite[0].truth, suite[1].truth);
    }
}
