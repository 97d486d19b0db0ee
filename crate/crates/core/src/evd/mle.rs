use crate::error::{Error, Result};
use crate::evd::GumbelParams;
use crate::scalar::Scalar;

const MAX_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelFit<T> {
    pub params: GumbelParams<T>,
    pub iterations: usize,
    /// Euclidean norm of the per-sample mean log-likelihood gradient at the solution.
    pub gradient_norm: T,
}

/// Maximum-likelihood Gumbel fit.
///
/// The location has a closed form given the scale, so only the one-dimensional
/// profile equation in `sigma` is iterated (Newton with a bisection safeguard,
/// started from the method-of-moments scale).
pub fn fit_gumbel_mle<T: Scalar>(samples: &[T]) -> Result<GumbelFit<T>> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::Domain(format!("gumbel fit needs at least 3 samples, got {n}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("gumbel fit received non-finite samples".into()));
    }
    let min = samples.iter().copied().fold(T::infinity(), T::min);
    let max = samples.iter().copied().fold(T::neg_infinity(), T::max);
    if min == max {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let nf = T::from_count(n);
    // shift so the profile sums stay in range
    let d: Vec<T> = samples.iter().map(|&x| x - min).collect();
    let mean_d = d.iter().copied().sum::<T>() / nf;
    let var_d = d.iter().map(|&v| (v - mean_d) * (v - mean_d)).sum::<T>() / nf;

    // g(sigma) = sigma - mean(d) + E_w[d], w ∝ exp(-d / sigma); g is increasing with a single root
    let profile = |sigma: T| -> (T, T) {
        let mut sw = T::zero();
        let mut swd = T::zero();
        let mut swd2 = T::zero();
        for &v in &d {
            let w = (-v / sigma).exp();
            sw = sw + w;
            swd = swd + w * v;
            swd2 = swd2 + w * v * v;
        }
        let ed = swd / sw;
        let vard = (swd2 / sw - ed * ed).max(T::zero());
        (sigma - mean_d + ed, T::one() + vard / (sigma * sigma))
    };

    let mut lo = T::zero();
    let mut hi = mean_d;
    let mom = var_d.sqrt() * T::lit(6.0).sqrt() / T::PI();
    let mut sigma = if mom > lo && mom < hi { mom } else { T::lit(0.5) * hi };
    let tol = T::solver_tol() * mean_d.max(T::min_positive_value());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERS {
        iterations += 1;
        let (g, dg) = profile(sigma);
        if g < T::zero() {
            lo = sigma;
        } else {
            hi = sigma;
        }
        let newton = sigma - g / dg;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
        let step = (next - sigma).abs();
        sigma = next;
        if step <= tol || g == T::zero() {
            converged = true;
            break;
        }
    }

    let mu = location_given_scale(&d, sigma) + min;
    let params = GumbelParams { mu, sigma };
    let gradient_norm = mean_gradient(samples, &params);
    if !converged && gradient_norm > T::solver_tol() {
        return Err(Error::Convergence {
            what: "gumbel mle",
            iterations,
            residual: gradient_norm.as_f64(),
            last: vec![mu.as_f64(), sigma.as_f64()],
        });
    }
    Ok(GumbelFit {
        params,
        iterations,
        gradient_norm,
    })
}

fn location_given_scale<T: Scalar>(d: &[T], sigma: T) -> T {
    let nf = T::from_count(d.len());
    let s = d.iter().map(|&v| (-v / sigma).exp()).sum::<T>() / nf;
    -sigma * s.ln()
}

/// Gradient of the mean Gumbel log-likelihood with respect to (mu, sigma).
pub(crate) fn mean_gradient<T: Scalar>(samples: &[T], p: &GumbelParams<T>) -> T {
    let nf = T::from_count(samples.len());
    let mut e = T::zero();
    let mut u_sum = T::zero();
    let mut ue = T::zero();
    for &x in samples {
        let u = (x - p.mu) / p.sigma;
        let eu = (-u).exp();
        e = e + eu;
        u_sum = u_sum + u;
        ue = ue + u * eu;
    }
    let d_mu = (T::one() - e / nf) / p.sigma;
    let d_sigma = (-T::one() + u_sum / nf - ue / nf) / p.sigma;
    (d_mu * d_mu + d_sigma * d_sigma).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_degenerate_samples() {
        assert!(matches!(fit_gumbel_mle(&[1.0, 1.0, 1.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_gumbel_mle(&[1.0, 2.0]), Err(Error::Domain(_))));
        assert!(fit_gumbel_mle(&[1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn recovers_parameters() {
        let truth = GumbelParams::new(2.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| truth.sample(&mut rng)).collect();
        let fit = fit_gumbel_mle(&xs).unwrap();
        assert!((1.98..=2.02).contains(&fit.params.mu), "{:?}", fit);
        assert!((0.49..=0.51).contains(&fit.params.sigma), "{:?}", fit);
        assert!(fit.gradient_norm <= 1e-8);
    }

    #[test]
    fn small_sample_is_stationary_point() {
        let xs = [0.3, 1.7, -0.4, 2.2, 0.9, 1.1];
        let fit = fit_gumbel_mle(&xs).unwrap();
        assert!(fit.gradient_norm <= 1e-10);
        let ll = |mu: f64, s: f64| {
            let p = GumbelParams::new(mu, s).unwrap();
            xs.iter().map(|&x| p.ln_pdf(x).unwrap()).sum::<f64>()
        };
        let best = ll(fit.params.mu, fit.params.sigma);
        for (dm, ds) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(ll(fit.params.mu + dm, fit.params.sigma + ds) < best);
        }
    }
}
