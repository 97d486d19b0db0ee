use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITERS: usize = 50;

/// Principal branch of the Lambert W function: the `w >= -1` solving `w e^w = x`.
///
/// Halley iteration from a branch-aware starting point.
pub fn lambert_w0<T: Scalar>(x: T) -> Result<T> {
    let inv_e = (-T::one()).exp();
    if x.is_nan() || x < -inv_e {
        return Err(Error::Domain(format!("lambert_w0 needs x >= -1/e, got {x}")));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(x);
    }
    let mut w = initial_guess(x);
    if w <= -T::one() {
        return Ok(-T::one());
    }
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for _ in 0..MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - x;
        if f == T::zero() {
            return Ok(w);
        }
        let wp1 = w + T::one();
        let denom = ew * wp1 - (w + two) * f / (two * wp1);
        if denom == T::zero() || !denom.is_finite() {
            return Ok(w);
        }
        let step = f / denom;
        let next = (w - step).max(-T::one());
        if (next - w).abs() <= T::lit(4.0) * eps * next.abs().max(T::one()) {
            return Ok(next);
        }
        w = next;
    }
    let residual = (w * w.exp() - x).abs();
    if residual <= T::lit(1e3) * eps * x.abs().max(T::one()) {
        return Ok(w);
    }
    Err(Error::Convergence {
        what: "lambert_w0",
        iterations: MAX_ITERS,
        residual: residual.as_f64(),
        last: vec![w.as_f64()],
    })
}

fn initial_guess<T: Scalar>(x: T) -> T {
    let one = T::one();
    if x < T::lit(-0.25) {
        // series about the branch point
        let p = (T::lit(2.0) * (T::E() * x + one)).max(T::zero()).sqrt();
        -one + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p
    } else if x <= T::lit(3.0) {
        let l = x.ln_1p();
        l * (one - (one + l).ln() / (T::lit(2.0) + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// `W0(e^y)` without forming `e^y`, so arguments beyond the overflow threshold stay exact.
///
/// Above the threshold the equation is solved in log form, `w + ln w = y`.
pub fn lambert_w0_exp<T: Scalar>(y: T) -> Result<T> {
    if y.is_nan() {
        return Err(Error::Domain("lambert_w0_exp of NaN".into()));
    }
    let threshold = T::max_value().ln() - T::lit(9.0);
    if y < threshold {
        return lambert_w0(y.exp());
    }
    if y.is_infinite() {
        return Ok(y);
    }
    let ly = y.ln();
    let mut w = y - ly + ly / y;
    for _ in 0..MAX_ITERS {
        let f = w + w.ln() - y;
        let step = f / (T::one() + w.recip());
        w = w - step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * w.abs() {
            return Ok(w);
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_oracle(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, x.ln().max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn reference_points() {
        assert_eq!(lambert_w0(0.0f64).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        let omega = bisect_oracle(1.0);
        assert!((omega - 0.567_143_290_4).abs() < 1e-10);
        assert!((lambert_w0(1.0f64).unwrap() - omega).abs() < 1e-14);
    }

    #[test]
    fn branch_point_and_domain() {
        let inv_e = (-1.0f64).exp();
        let w = lambert_w0(-inv_e).unwrap();
        assert!((w + 1.0).abs() < 1e-7);
        assert!(lambert_w0(-inv_e - 1e-6).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn matches_bisection_on_a_spread() {
        for &x in &[-0.3, -0.1, 1e-12, 0.5, 2.0, 10.0, 1e3, 1e8, 1e150] {
            let w = lambert_w0(x).unwrap();
            let oracle = bisect_oracle(x);
            assert!((w - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "x={x}: {w} vs {oracle}");
        }
    }

    #[test]
    fn log_form_agrees_and_survives_overflow() {
        for &y in &[-50.0, -1.0, 0.0, 1.0, 10.0, 300.0, 699.0] {
            let direct = lambert_w0(f64::exp(y)).unwrap();
            assert!((lambert_w0_exp(y).unwrap() - direct).abs() <= 1e-12 * direct.max(1.0));
        }
        for &y in &[701.0f64, 1e3, 1e5, 1e12] {
            let w: f64 = lambert_w0_exp(y).unwrap();
            assert!(w.is_finite());
            assert!((w + w.ln() - y).abs() <= 1e-12 * y);
        }
    }

    #[test]
    fn f32_roundtrip() {
        for &x in &[0.1f32, 1.0, 5.0, 100.0] {
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-5 * x.max(1.0));
        }
    }
}
