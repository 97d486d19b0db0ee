use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::digamma;

const JITTER: f64 = 1e-10;

/// Kozachenko–Leonenko differential entropy estimate in nats.
///
/// `Ĥ = ψ(n) - ψ(k) + d · mean(ln 2ε_i)` where `ε_i` is the max-norm distance
/// from sample `i` to its `k`-th nearest neighbour. Duplicate rows are
/// separated by a deterministic jitter of relative size 1e-10 first.
pub fn knn_entropy<T: Scalar>(samples: ArrayView2<'_, T>, k: usize) -> Result<T> {
    let (n, d) = samples.dim();
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if n <= k {
        return Err(Error::Domain(format!("need more than k = {k} samples, got {n}")));
    }
    if d == 0 {
        return Err(Error::Dimension("samples have no columns".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    let pts: Vec<Vec<f64>> = samples.rows().into_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
    let pts = dejitter(pts)?;
    let eps = kth_distances(&pts, k);
    let mean_ln = eps.iter().map(|e| (2.0 * e).ln()).sum::<f64>() / n as f64;
    let h = digamma(n as f64) - digamma(k as f64) + d as f64 * mean_ln;
    Ok(T::lit(h))
}

fn dejitter(mut pts: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).expect("finite"));
    let has_dup = order.windows(2).any(|w| pts[w[0]] == pts[w[1]]);
    if !has_dup {
        return Ok(pts);
    }
    if pts.iter().all(|p| *p == pts[0]) {
        return Err(Error::Degenerate("all samples are identical".into()));
    }
    let scale = pts.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs())) * JITTER;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a17);
    for p in &mut pts {
        for v in p.iter_mut() {
            *v += scale * (rng.random::<f64>() - 0.5);
        }
    }
    Ok(pts)
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(PartialEq, PartialOrd)]
struct Dist(f64);

impl Eq for Dist {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Max-norm distance from each point to its k-th neighbour.
///
/// Points are swept in order of the first coordinate; the search around each
/// point stops once that coordinate alone exceeds the current k-th distance.
pub(crate) fn kth_distances(pts: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = pts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]));
    let mut out = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        let mut heap: BinaryHeap<Dist> = BinaryHeap::with_capacity(k + 1);
        let bound = |heap: &BinaryHeap<Dist>| if heap.len() < k { f64::INFINITY } else { heap.peek().expect("non-empty").0 };
        let (mut left, mut right) = (pos, pos + 1);
        loop {
            let dl = if left > 0 { pts[i][0] - pts[order[left - 1]][0] } else { f64::INFINITY };
            let dr = if right < n { pts[order[right]][0] - pts[i][0] } else { f64::INFINITY };
            let (gap, idx) = if dl <= dr {
                (dl, left.wrapping_sub(1))
            } else {
                (dr, right)
            };
            if !gap.is_finite() || gap > bound(&heap) {
                break;
            }
            if dl <= dr {
                left -= 1;
            } else {
                right += 1;
            }
            let dist = max_dist(&pts[i], &pts[order[idx]]);
            if heap.len() < k {
                heap.push(Dist(dist));
            } else if dist < bound(&heap) {
                heap.pop();
                heap.push(Dist(dist));
            }
        }
        out[i] = heap.peek().expect("n > k").0;
    }
    out
}

/// Stacks columns of several `n × d_i` blocks side by side.
pub(crate) fn hstack<T: Scalar>(blocks: &[ArrayView2<'_, T>]) -> Array2<T> {
    let n = blocks[0].nrows();
    let d: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Array2::zeros((n, d));
    let mut c = 0;
    for b in blocks {
        out.slice_mut(ndarray::s![.., c..c + b.ncols()]).assign(b);
        c += b.ncols();
    }
    out
}
