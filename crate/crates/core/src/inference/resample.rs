use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::scalar::Scalar;

/// `1 / Σ w²` for normalized weights.
pub fn effective_sample_size<T: Scalar>(weights: ArrayView1<'_, T>) -> T {
    T::one() / weights.iter().map(|&w| w * w).sum::<T>()
}

/// Normalizes log-weights with log-sum-exp. NaN counts as zero weight.
/// Returns `None` when no weight is finite.
pub fn normalize_log_weights<T: Scalar>(log_w: ArrayView1<'_, T>) -> Option<Array1<T>> {
    let log_w = log_w.mapv(|v| if v.is_nan() { T::neg_infinity() } else { v });
    let max = log_w.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return None;
    }
    let mut w = log_w.mapv(|lw| (lw - max).exp());
    let total: T = w.sum();
    w.mapv_inplace(|v| v / total);
    Some(w)
}

/// Systematic resampling: one uniform offset `u` in [0, 1), N evenly spaced pointers.
pub fn systematic_resample<T: Scalar>(weights: ArrayView1<'_, T>, u: T) -> Vec<usize> {
    let n = weights.len();
    let step = T::one() / T::from_count(n);
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut j = 0;
    for k in 0..n {
        let pointer = (T::from_count(k) + u) * step;
        while pointer > cum && j + 1 < n {
            j += 1;
            cum = cum + weights[j];
        }
        out.push(j);
    }
    out
}

/// Multinomial resampling by inverse-cdf lookup of N independent uniforms.
pub fn multinomial_resample<T: Scalar, R: Rng + ?Sized>(weights: ArrayView1<'_, T>, rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let mut cdf = Vec::with_capacity(n);
    let mut acc = T::zero();
    for &w in weights {
        acc = acc + w;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u = T::open01(rng) * acc;
            cdf.partition_point(|&c| c < u).min(n - 1)
        })
        .collect()
}
