use ndarray::{s, Array1, Array3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::PosteriorSummary;
use crate::lasso::{center_moments, solve_gram_lasso, LassoOptions};
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Result of the coefficient half of the M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefUpdate<T> {
    pub c: Vec<T>,
    /// P × P × L, indexed `[target, source, lag - 1]`.
    pub beta: Array3<T>,
    /// KKT residual of each per-series Lasso.
    pub kkt: Vec<T>,
}

/// Expected-Lasso update of `(β_i, c_i)` for every series.
///
/// Minimizes `Σ_t E(mu_t^i - c_i - Σ_{l,j} β_{i,j,l} mu_{t-l}^j)² + λ ||β_i||_1`
/// using the posterior cross-moments, with `c_i` unpenalized. `warm` supplies
/// starting coefficients.
pub fn m_step_beta_c<T: Scalar>(
    summary: &PosteriorSummary<T>,
    lambda: T,
    warm: Option<&SparseGevModel<T>>,
) -> Result<CoefUpdate<T>> {
    let (p, lag) = (summary.n_series(), summary.lag);
    let m = &summary.cross_terms;
    if m.count == 0 {
        return Err(Error::Dimension("posterior summary has no modelled steps".into()));
    }
    let d = lag * p;
    let n = T::from_count(m.count);
    let sum_h = m.sum.slice(s![p..]);
    let shh = m.gram.slice(s![p.., p..]);
    let opts = LassoOptions::default();

    let per_series: Vec<Result<(T, Array1<T>, T)>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let shy = m.gram.slice(s![p.., i]);
            let (g, r) = center_moments(n, sum_h, m.sum[i], shh, shy);
            let start = warm.map(|w| {
                let mut b = Array1::zeros(d);
                for l in 0..lag {
                    for j in 0..p {
                        b[l * p + j] = w.beta()[[i, j, l]];
                    }
                }
                b
            });
            let sol = solve_gram_lasso(g.view(), r.view(), lambda, start.as_ref().map(|b| b.view()), &opts)?;
            let c = (m.sum[i] - sol.coef.dot(&sum_h)) / n;
            Ok((c, sol.coef, sol.kkt_residual))
        })
        .collect();

    let mut c = Vec::with_capacity(p);
    let mut beta = Array3::zeros((p, p, lag));
    let mut kkt = Vec::with_capacity(p);
    for (i, res) in per_series.into_iter().enumerate() {
        let (ci, b, k) = res?;
        c.push(ci);
        kkt.push(k);
        for l in 0..lag {
            for j in 0..p {
                beta[[i, j, l]] = b[l * p + j];
            }
        }
    }
    Ok(CoefUpdate { c, beta, kkt })
}

/// Newton update of the Gumbel scales.
///
/// For each series maximizes `-T' ln σ - Σ_t E[u + exp(-u)]`, `u = (x - mu) / σ`,
/// over `s = ln σ`. The score `-T' + Σ E[u (1 - exp(-u))]` is strictly
/// decreasing in `s`, so a bracketed Newton iteration finds the unique root.
pub fn m_step_sigma<T: Scalar>(summary: &PosteriorSummary<T>, panel: &TimeSeriesPanel<T>, sigma_old: &[T]) -> Result<Vec<T>> {
    let (p, lag) = (summary.n_series(), summary.lag);
    if sigma_old.len() != p || panel.n_series() != p || summary.samples.len() + lag != panel.len() {
        return Err(Error::Dimension("sigma, panel and posterior summary disagree".into()));
    }
    if sigma_old.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
        return Err(Error::Domain("previous scales must be positive and finite".into()));
    }
    (0..p)
        .into_par_iter()
        .map(|i| {
            let mut resid = Vec::new();
            for (s, sample) in summary.samples.iter().enumerate() {
                let x = panel.row(lag + s)[i];
                for (k, &w) in sample.weights.iter().enumerate() {
                    if w > T::zero() {
                        resid.push((x - sample.mu[[k, i]], w));
                    }
                }
            }
            solve_scale(&resid, T::from_count(summary.samples.len()), sigma_old[i])
                .map_err(|e| match e {
                    Error::Degenerate(msg) => Error::Degenerate(format!("series {i}: {msg}")),
                    e => e,
                })
        })
        .collect()
}

/// Root of `-n + Σ w u (1 - exp(-u))`, `u = r / σ`, in `s = ln σ`.
pub(crate) fn solve_scale<T: Scalar>(resid: &[(T, T)], n: T, start: T) -> Result<T> {
    if resid.iter().all(|(r, _)| *r == T::zero()) {
        return Err(Error::Degenerate("all residuals are zero; the scale sits on the boundary".into()));
    }
    if resid.iter().any(|(r, w)| !r.is_finite() || !w.is_finite()) {
        return Err(Error::Domain("non-finite residual".into()));
    }
    let tol = T::lit(1e-8).max(T::solver_tol());
    let eval = |s: T| -> (T, T) {
        let inv = (-s).exp();
        let (mut f, mut df) = (-n, T::zero());
        for &(r, w) in resid {
            let u = r * inv;
            let e = (-u).exp();
            f = f + w * u * (T::one() - e);
            df = df - w * (u * (T::one() - e) + u * u * e);
        }
        (f, df)
    };

    let mut s = start.ln();
    let (mut f, mut df) = eval(s);
    // bracket [lo, hi] with score(lo) > 0 > score(hi)
    let (mut lo, mut hi) = (s, s);
    let mut step = T::one();
    let mut expansions = 0;
    if f > T::zero() {
        while eval(hi).0 > T::zero() {
            lo = hi;
            hi = hi + step;
            step = step + step;
            expansions += 1;
            if expansions > 200 {
                return Err(bracket_failure(s, f));
            }
        }
    } else {
        while !(eval(lo).0 > T::zero()) {
            hi = lo;
            lo = lo - step;
            step = step + step;
            expansions += 1;
            if expansions > 200 {
                return Err(bracket_failure(s, f));
            }
        }
    }

    for iter in 0..200 {
        if f.abs() <= tol {
            return Ok(s.exp());
        }
        if f > T::zero() {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - f / df;
        s = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
        (f, df) = eval(s);
        if !f.is_finite() {
            s = (lo + hi) * T::lit(0.5);
            (f, df) = eval(s);
        }
        if hi - lo <= T::epsilon() * T::lit(4.0) * s.abs().max(T::one()) {
            // the bracket cannot shrink further; accept only a tiny residual
            if f.abs() <= tol * n.max(T::one()) {
                return Ok(s.exp());
            }
            return Err(Error::Convergence {
                what: "scale update",
                iterations: iter + 1,
                residual: f.abs().as_f64(),
                last: vec![s.exp().as_f64()],
            });
        }
    }
    Err(Error::Convergence {
        what: "scale update",
        iterations: 200,
        residual: f.abs().as_f64(),
        last: vec![s.exp().as_f64()],
    })
}

fn bracket_failure<T: Scalar>(s: T, f: T) -> Error {
    Error::Convergence {
        what: "scale update bracketing",
        iterations: 200,
        residual: f.abs().as_f64(),
        last: vec![s.exp().as_f64()],
    }
}
