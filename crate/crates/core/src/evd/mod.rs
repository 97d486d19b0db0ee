//! Extreme-value distribution primitives.
//!
//! The Gumbel family is the workhorse of the model; the general GEV is kept
//! for completeness and for checking the ξ → 0 limit.

mod gev;
mod gumbel;
mod lambert;
mod mle;

pub use gev::GevParams;
pub use gumbel::GumbelParams;
pub use lambert::{lambert_w0, lambert_w0_exp};
pub use mle::{fit_gumbel_mle, GumbelFit};
