//! Cyclic coordinate descent for the Lasso in Gram form.
//!
//! Minimizes `b' G b - 2 b' r + lambda ||b||_1` for a positive semi-definite
//! `G` (the centered second-moment matrix of the covariates) and `r` (their
//! centered cross-moment with the response). Every L1 regression in the crate
//! reduces to this form, whether the moments come from data or from posterior
//! expectations.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct LassoOptions<T> {
    /// Stop once the KKT residual is at or below this value.
    pub tol: T,
    pub max_sweeps: usize,
}

impl<T: Scalar> Default for LassoOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::solver_tol(),
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution<T> {
    pub coef: Array1<T>,
    pub sweeps: usize,
    pub kkt_residual: T,
}

/// Objective `b' G b - 2 b' r + lambda ||b||_1`.
pub fn gram_lasso_objective<T: Scalar>(gram: ArrayView2<'_, T>, cross: ArrayView1<'_, T>, lambda: T, coef: ArrayView1<'_, T>) -> T {
    let quad = coef.dot(&gram.dot(&coef));
    quad - T::lit(2.0) * coef.dot(&cross) + lambda * coef.iter().fold(T::zero(), |a, b| a + b.abs())
}

/// Largest KKT violation at `coef`: `|g_j| - lambda` on zero coordinates and
/// `|g_j + lambda sign(b_j)|` on active ones, with `g = 2 (G b - r)`.
pub fn kkt_residual<T: Scalar>(gram: ArrayView2<'_, T>, cross: ArrayView1<'_, T>, lambda: T, coef: ArrayView1<'_, T>) -> T {
    let grad = (gram.dot(&coef) - &cross) * T::lit(2.0);
    let inactive = inactive_mask(gram);
    grad.iter()
        .zip(coef.iter())
        .zip(inactive.iter())
        .filter(|(_, &skip)| !skip)
        .map(|((&g, &b), _)| {
            if b == T::zero() {
                (g.abs() - lambda).max(T::zero())
            } else {
                (g + lambda * b.signum()).abs()
            }
        })
        .fold(T::zero(), T::max)
}

/// Smallest penalty for which the solution is identically zero.
pub fn lambda_max<T: Scalar>(cross: ArrayView1<'_, T>) -> T {
    cross.iter().fold(T::zero(), |m, r| m.max(T::lit(2.0) * r.abs()))
}

// Covariates with (numerically) zero variance are pinned at zero.
fn inactive_mask<T: Scalar>(gram: ArrayView2<'_, T>) -> Vec<bool> {
    let scale = gram.diag().iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let floor = scale * T::epsilon() * T::lit(16.0);
    gram.diag().iter().map(|&d| !(d > floor)).collect()
}

#[inline]
fn soft_threshold<T: Scalar>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

pub fn solve_gram_lasso<T: Scalar>(
    gram: ArrayView2<'_, T>,
    cross: ArrayView1<'_, T>,
    lambda: T,
    warm_start: Option<ArrayView1<'_, T>>,
    opts: &LassoOptions<T>,
) -> Result<LassoSolution<T>> {
    let d = cross.len();
    if gram.dim() != (d, d) {
        return Err(Error::Dimension(format!("gram is {:?}, cross has {d} entries", gram.dim())));
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::Domain(format!("penalty must be finite and >= 0, got {lambda}")));
    }
    if gram.iter().chain(cross.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite lasso moments".into()));
    }
    let inactive = inactive_mask(gram);
    let mut coef = match warm_start {
        Some(w) if w.len() == d => w.to_owned(),
        _ => Array1::zeros(d),
    };
    for (b, &skip) in coef.iter_mut().zip(&inactive) {
        if skip {
            *b = T::zero();
        }
    }
    // resid = r - G b
    let mut resid: Array1<T> = &cross - &gram.dot(&coef);
    let half_lambda = lambda * T::lit(0.5);
    let mut kkt = kkt_residual(gram, cross, lambda, coef.view());
    let mut sweeps = 0;
    while kkt > opts.tol {
        if sweeps >= opts.max_sweeps {
            return Err(Error::Convergence {
                what: "lasso coordinate descent",
                iterations: sweeps,
                residual: kkt.as_f64(),
                last: coef.iter().map(|b| b.as_f64()).collect(),
            });
        }
        sweeps += 1;
        for j in 0..d {
            if inactive[j] {
                continue;
            }
            let gjj = gram[[j, j]];
            let old = coef[j];
            let z = resid[j] + gjj * old;
            let new = soft_threshold(z, half_lambda) / gjj;
            if new != old {
                let delta = new - old;
                coef[j] = new;
                for k in 0..d {
                    resid[k] = resid[k] - gram[[k, j]] * delta;
                }
            }
        }
        // refresh against drift before measuring optimality
        resid = &cross - &gram.dot(&coef);
        kkt = kkt_residual(gram, cross, lambda, coef.view());
    }
    Ok(LassoSolution {
        coef,
        sweeps,
        kkt_residual: kkt,
    })
}

/// Centered moments for an L1 regression with an unpenalized intercept.
///
/// Inputs are the raw sums over `n` samples: `sum_z`, `sum_y`, `szz = Σ z z'`
/// and `szy = Σ z y`. Returns `(G, r)` with the intercept profiled out.
pub fn center_moments<T: Scalar>(
    n: T,
    sum_z: ArrayView1<'_, T>,
    sum_y: T,
    szz: ArrayView2<'_, T>,
    szy: ArrayView1<'_, T>,
) -> (Array2<T>, Array1<T>) {
    let d = sum_z.len();
    let mut g = szz.to_owned();
    let mut r = szy.to_owned();
    for a in 0..d {
        for b in 0..d {
            g[[a, b]] = g[[a, b]] - sum_z[a] * sum_z[b] / n;
        }
        r[a] = r[a] - sum_z[a] * sum_y / n;
    }
    // symmetrize away rounding asymmetry
    for a in 0..d {
        for b in 0..a {
            let m = (g[[a, b]] + g[[b, a]]) * T::lit(0.5);
            g[[a, b]] = m;
            g[[b, a]] = m;
        }
    }
    (g, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn unpenalized_solution_solves_normal_equations() {
        let g: Array2<f64> = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let r = array![1.0, -2.0, 0.7];
        let sol = solve_gram_lasso(g.view(), r.view(), 0.0, None, &LassoOptions::default()).unwrap();
        let back = g.dot(&sol.coef);
        for k in 0..3 {
            assert!((back[k] - r[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn above_lambda_max_is_zero() {
        let g = array![[2.0, 0.3], [0.3, 1.0]];
        let r = array![0.8, -1.1];
        let lmax = lambda_max(r.view());
        assert_eq!(lmax, 2.2);
        let sol = solve_gram_lasso(g.view(), r.view(), lmax, None, &LassoOptions::default()).unwrap();
        assert!(sol.coef.iter().all(|&b| b == 0.0));
        let sol = solve_gram_lasso(g.view(), r.view(), 0.99 * lmax, None, &LassoOptions::default()).unwrap();
        assert!(sol.coef.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn orthogonal_design_soft_thresholds() {
        // G = I: b_j = soft(r_j, lambda / 2)
        let g = Array2::<f64>::eye(3);
        let r = array![1.0, -0.2, 0.5];
        let sol = solve_gram_lasso(g.view(), r.view(), 0.6, None, &LassoOptions::default()).unwrap();
        assert_eq!(sol.coef, array![0.7, 0.0, 0.2]);
    }

    #[test]
    fn zero_variance_covariate_stays_inactive() {
        let g: Array2<f64> = array![[0.0, 0.0], [0.0, 2.0]];
        let r = array![0.0, 1.0];
        let sol = solve_gram_lasso(g.view(), r.view(), 0.0, None, &LassoOptions::default()).unwrap();
        assert_eq!(sol.coef[0], 0.0);
        assert!((sol.coef[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn input_validation() {
        let g = Array2::<f64>::eye(2);
        let r = array![1.0, 2.0, 3.0];
        assert!(solve_gram_lasso(g.view(), r.view(), 0.1, None, &LassoOptions::default()).is_err());
        let r = array![1.0, 2.0];
        assert!(solve_gram_lasso(g.view(), r.view(), -0.1, None, &LassoOptions::default()).is_err());
    }
}
