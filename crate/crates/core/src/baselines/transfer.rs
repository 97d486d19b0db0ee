use std::collections::HashMap;

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::entropy::{hstack, knn_entropy};
use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, Edge};
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeConfig {
    /// Neighbour count for the entropy estimates.
    pub k: usize,
    pub lag: usize,
    /// Parents (by TE score) used by the predictor.
    pub parents: usize,
    /// Neighbour count of the predictor's regression.
    pub neighbors: usize,
}

impl Default for TeConfig {
    fn default() -> Self {
        Self {
            k: 4,
            lag: 2,
            parents: 3,
            neighbors: 5,
        }
    }
}

impl TeConfig {
    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.neighbors == 0 {
            return Err(Error::Config("neighbour counts must be at least 1".into()));
        }
        if self.lag == 0 {
            return Err(Error::Config("lag must be at least 1".into()));
        }
        Ok(())
    }
}

/// `n × L` block of lags 1..L of series `i` for targets `t = lag..T`.
fn lag_block<T: Scalar>(values: ArrayView2<'_, T>, i: usize, lag: usize) -> Array2<T> {
    let len = values.nrows();
    Array2::from_shape_fn((len - lag, lag), |(r, l)| values[[r + lag - 1 - l, i]])
}

fn standardized<T: Scalar>(values: ArrayView2<'_, T>, cols: &[usize]) -> Array2<T> {
    let mut out = Array2::zeros((values.nrows(), cols.len()));
    for (k, &i) in cols.iter().enumerate() {
        let col = values.column(i);
        let n = T::from_usize(col.len()).unwrap();
        let mean = col.iter().fold(T::zero(), |a, &x| a + x) / n;
        let var = col.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)) / n;
        let sd = if var > T::zero() { var.sqrt() } else { T::one() };
        out.column_mut(k).assign(&col.mapv(|x| (x - mean) / sd));
    }
    out
}

/// Transfer entropy `src -> dst` in nats. Invariant to per-series affine maps
/// with positive scale.
///
/// `H(y | own past) - H(y | own past, source past)`, each conditional entropy
/// a difference of joint kNN entropies.
pub fn transfer_entropy<T: Scalar>(panel: &TimeSeriesPanel<T>, src: usize, dst: usize, cfg: &TeConfig) -> Result<T> {
    cfg.validate()?;
    let p = panel.n_series();
    if src >= p || dst >= p {
        return Err(Error::Dimension(format!("series index out of range for {p} series")));
    }
    if src == dst {
        return Err(Error::Domain("source and target must differ".into()));
    }
    panel.require_longer_than(cfg.lag + 1)?;
    // z-scored so the max-norm neighbour search ignores the units of each series
    let v = standardized(panel.values(), &[dst, src]);
    let v = v.view();
    let y = v.slice(s![cfg.lag.., 0..1]);
    let own = lag_block(v, 0, cfg.lag);
    let other = lag_block(v, 1, cfg.lag);
    let h_y_own = knn_entropy(hstack(&[y, own.view()]).view(), cfg.k)?;
    let h_own = knn_entropy(own.view(), cfg.k)?;
    let h_all = knn_entropy(hstack(&[y, own.view(), other.view()]).view(), cfg.k)?;
    let h_own_other = knn_entropy(hstack(&[own.view(), other.view()]).view(), cfg.k)?;
    Ok(h_y_own - h_own - h_all + h_own_other)
}

/// All ordered-pair TE scores, clipped at zero.
pub fn te_graph<T: Scalar>(panel: &TimeSeriesPanel<T>, cfg: &TeConfig) -> Result<DependencyGraph<T>> {
    let p = panel.n_series();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
    let scores: Vec<Result<T>> = pairs.par_iter().map(|&(a, b)| transfer_entropy(panel, a, b, cfg)).collect();
    let mut g = DependencyGraph::new(p, false);
    for (&(src, dst), score) in pairs.iter().zip(scores) {
        g.insert(Edge {
            src,
            dst,
            score: score?.max(T::zero()),
            lag_weights: None,
        })?;
    }
    Ok(g)
}

/// k-nearest-neighbour regression of each series on the lags of itself and
/// its chosen parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnRegressor {
    pub lag: usize,
    pub k: usize,
    /// Input series per target, the target itself first.
    pub inputs: Vec<Vec<usize>>,
}

impl KnnRegressor {
    /// Predicts the step after the last row of `values`, using the rows
    /// themselves as the training set.
    pub fn predict_after<T: Scalar>(&self, values: ArrayView2<'_, T>) -> Result<Vec<T>> {
        let (len, p) = values.dim();
        if p != self.inputs.len() {
            return Err(Error::Dimension(format!("expected {} series, got {p}", self.inputs.len())));
        }
        if len <= self.lag {
            return Err(Error::Domain(format!("need more than {} rows, got {len}", self.lag)));
        }
        let features = |t: usize, cols: &[usize]| -> Vec<f64> {
            // lags 1..L before time t
            cols.iter()
                .flat_map(|&j| (1..=self.lag).map(move |l| values[[t - l, j]].as_f64()))
                .collect()
        };
        Ok(self
            .inputs
            .iter()
            .enumerate()
            .map(|(i, cols)| {
                let query = features(len, cols);
                let mut dist: Vec<(f64, usize)> = (self.lag..len)
                    .map(|t| {
                        let f = features(t, cols);
                        let d = f.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                        (d, t)
                    })
                    .collect();
                dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let k = self.k.min(dist.len());
                let sum = dist[..k].iter().map(|&(_, t)| values[[t, i]]).sum::<T>();
                sum / T::from_count(k)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeFit<T> {
    pub graph: DependencyGraph<T>,
    pub predictor: KnnRegressor,
}

/// TE graph plus a predictor over each target's top-scoring parents.
pub fn te_method<T: Scalar>(panel: &TimeSeriesPanel<T>, cfg: &TeConfig) -> Result<TeFit<T>> {
    let graph = te_graph(panel, cfg)?;
    let p = panel.n_series();
    let inputs = (0..p)
        .map(|i| {
            let mut cands: Vec<(T, usize)> = (0..p).filter(|&j| j != i).map(|j| (graph.score(j, i), j)).filter(|(s, _)| *s > T::zero()).collect();
            cands.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores").then(a.1.cmp(&b.1)));
            std::iter::once(i).chain(cands.into_iter().take(cfg.parents).map(|(_, j)| j)).collect()
        })
        .collect();
    Ok(TeFit {
        graph,
        predictor: KnnRegressor {
            lag: cfg.lag,
            k: cfg.neighbors,
            inputs,
        },
    })
}

/// Plug-in transfer entropy for symbol sequences, in nats.
pub fn plugin_transfer_entropy(src: &[usize], dst: &[usize], lag: usize) -> Result<f64> {
    if src.len() != dst.len() {
        return Err(Error::Dimension("sequences differ in length".into()));
    }
    if lag == 0 || dst.len() <= lag {
        return Err(Error::Domain(format!("need lag >= 1 and more than {lag} symbols")));
    }
    let entropy = |key: &dyn Fn(usize) -> Vec<usize>| -> f64 {
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for t in lag..dst.len() {
            *counts.entry(key(t)).or_default() += 1;
        }
        let n = (dst.len() - lag) as f64;
        -counts.values().map(|&c| c as f64 / n * (c as f64 / n).ln()).sum::<f64>()
    };
    let past = |s: &[usize], t: usize| (1..=lag).map(|l| s[t - l]).collect::<Vec<_>>();
    let h_y_own = entropy(&|t| [vec![dst[t]], past(dst, t)].concat());
    let h_own = entropy(&|t| past(dst, t));
    let h_all = entropy(&|t| [vec![dst[t]], past(dst, t), past(src, t)].concat());
    let h_own_other = entropy(&|t| [past(dst, t), past(src, t)].concat());
    Ok(h_y_own - h_own - h_all + h_own_other)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coupled(len: usize, coupling: f64, rng: &mut ChaCha8Rng) -> TimeSeriesPanel<f64> {
        use rand_distr::StandardNormal;
        let mut x = ndarray::Array2::<f64>::zeros((len, 2));
        for t in 1..len {
            x[[t, 0]] = 0.5 * x[[t - 1, 0]] + rng.sample::<f64, _>(StandardNormal);
            x[[t, 1]] = 0.3 * x[[t - 1, 1]] + coupling * x[[t - 1, 0]] + rng.sample::<f64, _>(StandardNormal);
        }
        TimeSeriesPanel::from_values(x).unwrap()
    }

    #[test]
    fn iid_panel_scores_are_symmetric() {
        let cfg = TeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d: Vec<f64> = (0..40)
            .map(|_| {
                let panel = coupled(300, 0.0, &mut rng);
                transfer_entropy(&panel, 0, 1, &cfg).unwrap() - transfer_entropy(&panel, 1, 0, &cfg).unwrap()
            })
            .collect();
        // sign-flip permutation test on the mean direction difference
        let stat = d.iter().sum::<f64>().abs();
        let flips = 2000;
        let extreme = (0..flips)
            .filter(|_| {
                let s: f64 = d.iter().map(|v| if rng.random::<bool>() { *v } else { -v }).sum();
                s.abs() >= stat
            })
            .count();
        let p_value = (extreme + 1) as f64 / (flips + 1) as f64;
        assert!(p_value > 0.01, "p = {p_value}");
    }

    #[test]
    fn affine_rescaling_moves_te_within_noise() {
        let cfg = TeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut base = Vec::new();
        let mut shifts = Vec::new();
        for _ in 0..20 {
            let panel = coupled(300, 0.6, &mut rng);
            let mut scaled = panel.values().to_owned();
            scaled.column_mut(0).mapv_inplace(|v| 3.0 * v - 2.0);
            scaled.column_mut(1).mapv_inplace(|v| 0.2 * v + 5.0);
            let scaled = TimeSeriesPanel::from_values(scaled).unwrap();
            let a = transfer_entropy(&panel, 0, 1, &cfg).unwrap();
            shifts.push(transfer_entropy(&scaled, 0, 1, &cfg).unwrap() - a);
            base.push(a);
        }
        let n = base.len() as f64;
        let m = base.iter().sum::<f64>() / n;
        let sd = (base.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(m > 3.0 * sd / n.sqrt(), "coupling not detected: {m} +- {sd}");
        for sh in shifts {
            assert!(sh.abs() < 3.0 * sd, "shift {sh} vs sd {sd}");
        }
    }

    #[test]
    fn plugin_matches_enumerated_conditional_form() {
        // 3-symbol chain where dst copies src with noise
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 3000;
        let src: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let mut dst = vec![0usize; n];
        for t in 1..n {
            dst[t] = if rng.random::<f64>() < 0.7 { src[t - 1] } else { rng.random_range(0..3) };
        }
        let te = plugin_transfer_entropy(&src, &dst, 1).unwrap();

        // Σ p(y, a, b) ln[p(y | a, b) / p(y | a)] over the empirical joint
        let mut joint = [[[0f64; 3]; 3]; 3];
        for t in 1..n {
            joint[dst[t]][dst[t - 1]][src[t - 1]] += 1.0;
        }
        let total = (n - 1) as f64;
        let mut oracle = 0.0;
        for y in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    let pyab = joint[y][a][b] / total;
                    if pyab == 0.0 {
                        continue;
                    }
                    let pab: f64 = (0..3).map(|yy| joint[yy][a][b]).sum::<f64>() / total;
                    let pya: f64 = (0..3).map(|bb| joint[y][a][bb]).sum::<f64>() / total;
                    let pa: f64 = (0..3).flat_map(|yy| (0..3).map(move |bb| (yy, bb))).map(|(yy, bb)| joint[yy][a][bb]).sum::<f64>() / total;
                    oracle += pyab * ((pyab / pab) / (pya / pa)).ln();
                }
            }
        }
        assert!((te - oracle).abs() < 1e-12, "{te} vs {oracle}");
        assert!(te > 0.3);
    }

    #[test]
    fn two_series_give_two_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = Array2::from_shape_fn((60, 2), |_| f64::standard_normal(&mut rng));
        let panel = TimeSeriesPanel::from_values(v).unwrap();
        let g = te_graph(&panel, &TeConfig::default()).unwrap();
        assert!(g.edges().len() <= 2);
        assert!(!g.includes_self_loops);
        assert!(transfer_entropy(&panel, 0, 0, &TeConfig::default()).is_err());
    }

    #[test]
    fn knn_regressor_averages_nearest_responses() {
        // x_t = x_{t-1} pattern; query after the final 0.9 should pick rows whose previous value is near 0.9
        let v = ndarray::array![[0.1], [0.9], [0.2], [0.9], [0.3], [0.9]];
        let r = KnnRegressor { lag: 1, k: 2, inputs: vec![vec![0]] };
        // rows with previous 0.9 are t = 2, 4 -> mean(0.2, 0.3)
        let pred = r.predict_after(v.view()).unwrap();
        assert!((pred[0] - 0.25f64).abs() < 1e-15);
    }
}
