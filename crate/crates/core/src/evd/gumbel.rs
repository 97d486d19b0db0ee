use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, EULER_GAMMA};

/// Gumbel (type I extreme value) distribution. The mode sits at `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams<T> {
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> GumbelParams<T> {
    pub fn new(mu: T, sigma: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Domain(format!("gumbel location must be finite, got {mu}")));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Domain(format!("gumbel scale must be positive, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn standard() -> Self {
        Self {
            mu: T::zero(),
            sigma: T::one(),
        }
    }

    /// Log density without argument checks.
    #[inline]
    pub fn ln_pdf_unchecked(&self, z: T) -> T {
        let u = (z - self.mu) / self.sigma;
        -self.sigma.ln() - u - (-u).exp()
    }

    pub fn pdf(&self, z: T) -> Result<T> {
        check_finite(z)?;
        Ok(self.ln_pdf_unchecked(z).exp())
    }

    pub fn ln_pdf(&self, z: T) -> Result<T> {
        check_finite(z)?;
        Ok(self.ln_pdf_unchecked(z))
    }

    pub fn cdf(&self, z: T) -> Result<T> {
        if z.is_nan() {
            return Err(Error::Domain("gumbel cdf of NaN".into()));
        }
        Ok((-(-(z - self.mu) / self.sigma).exp()).exp())
    }

    /// Inverse cdf, `mu - sigma * ln(-ln q)`.
    pub fn quantile(&self, q: T) -> Result<T> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::Domain(format!("gumbel quantile needs 0 < q < 1, got {q}")));
        }
        Ok(self.quantile_unchecked(q))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, q: T) -> T {
        self.mu - self.sigma * (-q.ln()).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile_unchecked(T::open01(rng))
    }

    pub fn mean(&self) -> T {
        self.mu + T::lit(EULER_GAMMA) * self.sigma
    }

    pub fn variance(&self) -> T {
        let pi = T::PI();
        pi * pi / T::lit(6.0) * self.sigma * self.sigma
    }
}

fn check_finite<T: Scalar>(z: T) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite argument {z}")))
    }
}
