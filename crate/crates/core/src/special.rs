//! Standard normal cdf/quantile and the digamma function.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Standard normal cdf.
pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * (-z / T::SQRT_2()).erfc()
}

pub fn normal_pdf<T: Scalar>(z: T) -> T {
    (-(z * z) / T::lit(2.0)).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

// Wichura's AS 241 (PPND16) rational approximations.
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Inverse of the standard normal cdf on (0, 1).
pub fn normal_cdf_inv<T: Scalar>(q: T) -> Result<T> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::Domain(format!("normal quantile needs 0 < q < 1, got {q}")));
    }
    let p = q.as_f64();
    let dq = p - 0.5;
    let x0 = if dq.abs() <= 0.425 {
        let r = 0.180_625 - dq * dq;
        dq * horner(&A, r) / horner(&B, r)
    } else {
        let tail = if dq < 0.0 { p } else { 1.0 - p };
        let mut r = (-tail.ln()).sqrt();
        let v = if r <= 5.0 {
            r -= 1.6;
            horner(&C, r) / horner(&D, r)
        } else {
            r -= 5.0;
            horner(&E, r) / horner(&F, r)
        };
        if dq < 0.0 {
            -v
        } else {
            v
        }
    };
    // one Newton polish against the tail that keeps precision
    let x = T::lit(x0);
    let err = if q < T::lit(0.5) {
        normal_cdf(x) - q
    } else {
        (T::one() - q) - normal_cdf(-x)
    };
    let dens = normal_pdf(x);
    if dens > T::zero() {
        Ok(x - err / dens)
    } else {
        Ok(x)
    }
}

/// Digamma function for positive arguments.
pub fn digamma<T: Scalar>(x: T) -> T {
    let mut x = x;
    let mut acc = T::zero();
    while x < T::lit(10.0) {
        acc = acc - x.recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2
                                * (T::lit(1.0 / 240.0)
                                    - inv2 * (T::lit(1.0 / 132.0) - inv2 * T::lit(691.0 / 32760.0))))));
    acc + x.ln() - T::lit(0.5) * inv - series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0f64), 0.5);
        assert!((normal_cdf(1.959_963_984_540_054f64) - 0.975).abs() < 1e-15);
        for z in [0.1f64, 0.7, 1.5, 3.0, 6.0, 9.0] {
            assert!((normal_cdf(-z) - (1.0 - normal_cdf(z))).abs() <= 1e-15, "z={z}");
        }
    }

    #[test]
    fn quantile_reference_values() {
        assert!((normal_cdf_inv(0.975f64).unwrap() - 1.959_964).abs() < 1e-6);
        assert!((normal_cdf_inv(0.975f64).unwrap() - 1.959_963_984_540_054).abs() < 1e-13);
        assert_eq!(normal_cdf_inv(0.5f64).unwrap(), 0.0);
        assert!(normal_cdf_inv(0.0f64).is_err());
        assert!(normal_cdf_inv(1.0f64).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let mut q = 1e-12f64;
        while q < 0.5 {
            for p in [q, 1.0 - q] {
                if p > 0.0 && p < 1.0 && p <= 1.0 - 1e-12 {
                    let back = normal_cdf(normal_cdf_inv(p).unwrap());
                    assert!((back - p).abs() <= 1e-9, "p={p}");
                }
            }
            q *= 1.7;
        }
    }

    #[test]
    fn digamma_values() {
        let euler = crate::scalar::EULER_GAMMA;
        assert!((digamma(1.0f64) + euler).abs() < 1e-14);
        // psi(n) = H_{n-1} - gamma
        let h: f64 = (1..10).map(|k| 1.0 / k as f64).sum();
        assert!((digamma(10.0f64) - (h - euler)).abs() < 1e-14);
        assert!((digamma(0.5f64) - (-euler - 2.0 * 2f64.ln())).abs() < 1e-13);
    }
}
