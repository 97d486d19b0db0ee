use crate::error::{Error, Result};
use crate::evd::lambert_w0_exp;
use crate::scalar::Scalar;

/// Gaussian proposal for one latent location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal<T> {
    pub mean: T,
    pub variance: T,
}

/// Gaussian centred on the mode of `Gumbel(x; mu, sigma) * N(mu; mu_tilde, tau^2)`.
///
/// With `g = tau / sigma` the mode is
/// `mu_tilde + g tau - sigma W0(g^2 exp((mu_tilde - x) / sigma + g^2))`;
/// the variance `tau^2 / (g^2 + 1)` is the curvature at the Gumbel mode.
/// The Lambert-W argument is passed in log form so it cannot overflow.
pub fn proposal_params<T: Scalar>(x: T, mu_tilde: T, sigma: T, tau: T) -> Result<Proposal<T>> {
    if !(sigma > T::zero()) || !(tau > T::zero()) {
        return Err(Error::Domain(format!("proposal needs sigma, tau > 0 (got {sigma}, {tau})")));
    }
    if !x.is_finite() || !mu_tilde.is_finite() {
        return Err(Error::Domain("proposal needs finite x and transition mean".into()));
    }
    let g = tau / sigma;
    let g2 = g * g;
    let log_arg = T::lit(2.0) * g.ln() + (mu_tilde - x) / sigma + g2;
    let w = lambert_w0_exp(log_arg)?;
    Ok(Proposal {
        mean: mu_tilde + g * tau - sigma * w,
        variance: tau * tau / (g2 + T::one()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cancellation_at_unit_ratio() {
        let p = proposal_params(0.7f64, 0.7, 1.0, 1.0).unwrap();
        assert!((p.mean - 0.7).abs() < 1e-15);
        assert_eq!(p.variance, 0.5);
    }

    #[test]
    fn small_tau_is_prior_dominated() {
        let p = proposal_params(3.0f64, 1.0, 0.5, 1e-6).unwrap();
        assert!((p.mean - 1.0).abs() < 1e-9);
        assert!(p.variance < 1e-11);
    }

    #[test]
    fn huge_exponent_stays_finite() {
        // (mu_tilde - x) / sigma far beyond exp overflow
        let p = proposal_params(0.0f64, 50.0, 0.01, 0.1).unwrap();
        assert!(p.mean.is_finite());
        assert!(p.mean > 0.0 && p.mean < 50.0);
    }

    #[test]
    fn invalid_scales() {
        assert!(proposal_params(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(proposal_params(0.0, 0.0, 1.0, -1.0).is_err());
    }
}
