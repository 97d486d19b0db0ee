//! Evaluation protocol: normalization, block maxima, edge-ranking AUC,
//! sliding-window prediction error and the benchmark runner.

mod methods;
mod protocol;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, GroundTruthGraph};
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

pub use methods::{fit_method, standard_methods, Fitted, MethodSpec, DEFAULT_LAMBDA_GRID};
pub use protocol::{
    render_table, run_benchmark, sliding_window_rmse, synthetic_suite, BenchmarkConfig, BenchmarkDataset, BenchmarkReport, EvalReport,
    MethodSummary, DEFAULT_WINDOWS,
};

/// Per-series min/max used to map a panel into `[0, 1]` and back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Normalization<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Scalar> Normalization<T> {
    pub fn apply(&self, i: usize, x: T) -> T {
        (x - self.min[i]) / (self.max[i] - self.min[i])
    }

    pub fn invert(&self, i: usize, y: T) -> T {
        self.min[i] + y * (self.max[i] - self.min[i])
    }

    pub fn invert_row(&self, row: &[T]) -> Vec<T> {
        row.iter().enumerate().map(|(i, &y)| self.invert(i, y)).collect()
    }
}

/// Min-max scales every series into `[0, 1]`.
pub fn normalize_panel<T: Scalar>(panel: &TimeSeriesPanel<T>) -> Result<(TimeSeriesPanel<T>, Normalization<T>)> {
    let p = panel.n_series();
    let mut min = Vec::with_capacity(p);
    let mut max = Vec::with_capacity(p);
    for i in 0..p {
        let s = panel.series(i);
        let lo = s.iter().copied().fold(T::infinity(), T::min);
        let hi = s.iter().copied().fold(T::neg_infinity(), T::max);
        if !(hi > lo) {
            return Err(Error::Degenerate(format!("series '{}' is constant", panel.names()[i])));
        }
        min.push(lo);
        max.push(hi);
    }
    let norm = Normalization { min, max };
    let values = Array2::from_shape_fn(panel.values().dim(), |(t, i)| {
        // pin the extremes exactly
        let v = panel.values()[[t, i]];
        if v == norm.min[i] {
            T::zero()
        } else if v == norm.max[i] {
            T::one()
        } else {
            norm.apply(i, v)
        }
    });
    let mut out = TimeSeriesPanel::new(panel.names().to_vec(), values)?;
    out.t0 = panel.t0;
    out.interval = panel.interval;
    Ok((out, norm))
}

/// Maximum of each complete block of `block` values; a trailing partial block is dropped.
pub fn block_maxima<T: Scalar>(raw: &[T], block: usize) -> Result<Vec<T>> {
    if raw.is_empty() {
        return Err(Error::Domain("empty input".into()));
    }
    if block == 0 {
        return Err(Error::Domain("block length must be at least 1".into()));
    }
    if raw.len() < block {
        return Err(Error::Domain(format!("input of length {} is shorter than one block of {block}", raw.len())));
    }
    Ok(raw
        .chunks_exact(block)
        .map(|c| c.iter().copied().fold(T::neg_infinity(), T::max))
        .collect())
}

/// Probability that a random true edge outscores a random non-edge, ties
/// counting half. Absent edges score zero. Self pairs count only when
/// `self_loops` is set.
pub fn edge_auc<T: Scalar>(scores: &DependencyGraph<T>, truth: &GroundTruthGraph, self_loops: bool) -> Result<f64> {
    let p = truth.n_nodes();
    if scores.n_nodes() != p {
        return Err(Error::Dimension(format!("graph has {} nodes, truth has {p}", scores.n_nodes())));
    }
    let m = scores.score_matrix();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for src in 0..p {
        for dst in 0..p {
            if src == dst && !self_loops {
                continue;
            }
            let s = m[[src, dst]].as_f64();
            if truth.has_edge(src, dst) {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedAuc(format!("{} positive and {} negative pairs", pos.len(), neg.len())));
    }
    // rank-sum form of the Mann-Whitney statistic with midranks for ties
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalization_examples() {
        let panel = TimeSeriesPanel::<f64>::from_values(array![[2.0, 0.0], [4.0, 0.3], [6.0, 1.0]]).unwrap();
        let (n, rec) = normalize_panel(&panel).unwrap();
        assert_eq!(n.series(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.series(1).to_vec(), vec![0.0, 0.3, 1.0]);
        assert!((rec.invert(0, 0.37) - 3.48).abs() < 1e-12);
        let constant = TimeSeriesPanel::from_values(array![[1.0], [1.0]]).unwrap();
        assert!(matches!(normalize_panel(&constant), Err(Error::Degenerate(_))));
    }

    #[test]
    fn block_maxima_examples() {
        assert_eq!(block_maxima(&[1.0, 5.0, 3.0], 3).unwrap(), vec![5.0]);
        assert_eq!(block_maxima(&[1.0, 5.0, 3.0, 2.0], 3).unwrap(), vec![5.0]);
        assert_eq!(block_maxima(&[1.0, 5.0, 3.0], 1).unwrap(), vec![1.0, 5.0, 3.0]);
        assert!(block_maxima::<f64>(&[], 1).is_err());
    }

    fn truth(adj: Array2<bool>) -> GroundTruthGraph {
        GroundTruthGraph { adjacency: adj }
    }

    #[test]
    fn perfect_and_reversed_rankings() {
        let t = truth(array![[false, true], [false, false]]);
        let good = DependencyGraph::from_scores(&array![[0.0, 0.9], [0.1, 0.0]], true).unwrap();
        let bad = DependencyGraph::from_scores(&array![[0.0, 0.1], [0.9, 0.0]], true).unwrap();
        assert_eq!(edge_auc(&good, &t, false).unwrap(), 1.0);
        assert_eq!(edge_auc(&bad, &t, false).unwrap(), 0.0);
        let none = truth(Array2::from_elem((2, 2), false));
        assert!(matches!(edge_auc(&good, &none, false), Err(Error::UndefinedAuc(_))));
    }

    #[test]
    fn matches_brute_force_pair_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = 6;
            let adj = Array2::from_shape_fn((p, p), |_| rng.random::<f64>() < 0.3);
            // coarse scores so ties occur
            let s = Array2::from_shape_fn((p, p), |_| (rng.random::<f64>() * 4.0).floor() / 4.0);
            let g = DependencyGraph::from_scores(&s, true).unwrap();
            let t = truth(adj.clone());
            for self_loops in [false, true] {
                let (mut num, mut np, mut nn) = (0.0, 0usize, 0usize);
                let pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).filter(|(a, b)| self_loops || a != b).collect();
                for &(a, b) in &pairs {
                    if !adj[[a, b]] {
                        continue;
                    }
                    np += 1;
                    for &(c, d) in &pairs {
                        if adj[[c, d]] {
                            continue;
                        }
                        num += match s[[a, b]].total_cmp(&s[[c, d]]) {
                            std::cmp::Ordering::Greater => 1.0,
                            std::cmp::Ordering::Equal => 0.5,
                            std::cmp::Ordering::Less => 0.0,
                        };
                    }
                }
                for &(c, d) in &pairs {
                    if !adj[[c, d]] {
                        nn += 1;
                    }
                }
                match edge_auc(&g, &t, self_loops) {
                    Ok(auc) => assert!((auc - num / (np * nn) as f64).abs() < 1e-12),
                    Err(_) => assert!(np == 0 || nn == 0),
                }
            }
        }
    }
}
