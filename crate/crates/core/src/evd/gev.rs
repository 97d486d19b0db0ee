use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evd::GumbelParams;
use crate::scalar::Scalar;

/// Generalized extreme value distribution. `xi == 0` is the Gumbel branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams<T> {
    pub mu: T,
    pub sigma: T,
    pub xi: T,
}

impl<T: Scalar> GevParams<T> {
    pub fn new(mu: T, sigma: T, xi: T) -> Result<Self> {
        if !mu.is_finite() || !xi.is_finite() {
            return Err(Error::Domain("gev location and shape must be finite".into()));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Domain(format!("gev scale must be positive, got {sigma}")));
        }
        Ok(Self { mu, sigma, xi })
    }

    pub fn is_gumbel(&self) -> bool {
        self.xi == T::zero()
    }

    fn gumbel(&self) -> GumbelParams<T> {
        GumbelParams {
            mu: self.mu,
            sigma: self.sigma,
        }
    }

    /// `1 + xi (z - mu) / sigma`; positive exactly on the support.
    pub fn support_term(&self, z: T) -> T {
        T::one() + self.xi * (z - self.mu) / self.sigma
    }

    pub fn in_support(&self, z: T) -> bool {
        self.is_gumbel() || self.support_term(z) > T::zero()
    }

    /// `-ln(-ln G(z))`, i.e. the reduced variate, evaluated stably for small `xi`.
    fn reduced(&self, z: T) -> T {
        let s = (z - self.mu) / self.sigma;
        (self.xi * s).ln_1p() / self.xi
    }

    pub fn cdf(&self, z: T) -> Result<T> {
        if z.is_nan() {
            return Err(Error::Domain("gev cdf of NaN".into()));
        }
        if self.is_gumbel() {
            return self.gumbel().cdf(z);
        }
        if !self.in_support(z) {
            // below the lower endpoint (xi > 0) or above the upper one (xi < 0)
            return Ok(if self.xi > T::zero() { T::zero() } else { T::one() });
        }
        Ok((-(-self.reduced(z)).exp()).exp())
    }

    pub fn pdf(&self, z: T) -> Result<T> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {z}")));
        }
        if self.is_gumbel() {
            return self.gumbel().pdf(z);
        }
        if !self.in_support(z) {
            return Ok(T::zero());
        }
        let y = self.reduced(z);
        // t = (1 + xi s)^(-1/xi) = exp(-y); density = t^(xi + 1) e^{-t} / sigma
        let ln_t = -y;
        let ln_pdf = -self.sigma.ln() + (self.xi + T::one()) * ln_t - ln_t.exp();
        Ok(ln_pdf.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_zero_is_gumbel() {
        let gev = GevParams::new(1.0, 2.0, 0.0).unwrap();
        let gum = GumbelParams::new(1.0, 2.0).unwrap();
        for z in [-3.0, 0.0, 1.0, 4.5, 20.0] {
            assert_eq!(gev.cdf(z).unwrap(), gum.cdf(z).unwrap());
            assert_eq!(gev.pdf(z).unwrap(), gum.pdf(z).unwrap());
        }
    }

    #[test]
    fn support_is_enforced() {
        // xi > 0: lower endpoint mu - sigma / xi = -2
        let frechet = GevParams::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(frechet.cdf(-2.5).unwrap(), 0.0);
        assert_eq!(frechet.pdf(-2.5).unwrap(), 0.0);
        // xi < 0: upper endpoint mu + sigma / |xi| = 2
        let weibull = GevParams::new(0.0, 1.0, -0.5).unwrap();
        assert_eq!(weibull.cdf(2.5).unwrap(), 1.0);
        assert_eq!(weibull.pdf(2.5).unwrap(), 0.0);
        assert!(GevParams::new(0.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn known_frechet_value() {
        // xi = 1: G(z) = exp(-1 / (1 + z))
        let p = GevParams::new(0.0, 1.0, 1.0).unwrap();
        assert!((p.cdf(1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        // g(z) = (1 + z)^-2 exp(-1 / (1 + z))
        assert!((p.pdf(1.0).unwrap() - 0.25 * (-0.5f64).exp()).abs() < 1e-15);
    }
}
