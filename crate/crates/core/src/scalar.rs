//! Floating-point abstraction shared by every numeric routine in the crate.
//!
//! All model, inference and baseline code is written against [`Scalar`], so the
//! same algorithms run in `f64` (the default, used by the CLI) or `f32`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type: f32 or f64.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; lossy for `f32`.
    fn lit(x: f64) -> Self;

    /// Draws from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws from the open interval (0, 1).
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Default absolute tolerance for iterative solvers at this precision.
    fn solver_tol() -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }

    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::Open01)
    }

    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    fn solver_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }

    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::Open01)
    }

    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    fn solver_tol() -> Self {
        1e-4
    }
}

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
