//! Standard normal CDF and quantile.
//!
//! The quantile is Wichura's AS241 (PPND16), accurate to about 1e-16
//! relative over the full open interval.

use std::f64::consts::FRAC_1_SQRT_2;

/// Φ(z).
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Φ(z) − 0.5, accurate near z = 0.
pub fn cdf_centered(z: f64) -> f64 {
    0.5 * libm::erf(z * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(z).
pub fn sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1). Returns ±∞ at the endpoints and NaN outside.
pub fn ppf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    ppf_split(p - 0.5, p.min(1.0 - p))
}

/// Φ⁻¹(0.5 + q) for q in (−0.5, 0.5). Keeps full precision for tiny |q|,
/// where forming `0.5 + q` first would round away the offset.
pub fn ppf_centered(q: f64) -> f64 {
    if q.is_nan() || q <= -0.5 {
        return if q == -0.5 { f64::NEG_INFINITY } else { f64::NAN };
    }
    if q >= 0.5 {
        return if q == 0.5 { f64::INFINITY } else { f64::NAN };
    }
    ppf_split(q, 0.5 - q.abs())
}

// q = p - 0.5, tail = min(p, 1 - p)
#[allow(clippy::inconsistent_digit_grouping)]
pub(crate) fn ppf_split(q: f64, tail: f64) -> f64 {
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.080_928_730_122_7 + 33_430.575_583_588_13) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13_731.693_765_509_46)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((r * 5226.495_278_852_545 + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent route: bisection on Φ.
    fn ppf_bisect(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // mpmath at 40 digits, evaluated at the exact f64 argument
    const TABLE: &[(f64, f64)] = &[
        (1e-9, -5.997_807_015_007_686_5),
        (1e-6, -4.753_424_308_822_899),
        (0.001, -3.090_232_306_167_813_6),
        (0.025, -1.959_963_984_540_054_3),
        (0.25, -0.674_489_750_196_081_7),
        (0.5005, 0.001_253_314_465_432_416_5),
        (0.501, 0.002_506_630_899_571_766),
        (0.75, 0.674_489_750_196_081_7),
        (0.875, 1.150_349_380_376_008),
        (0.975, 1.959_963_984_540_053_8),
        (0.999, 3.090_232_306_167_813),
        (0.999_999_999, 5.997_807_019_601_637_5),
    ];

    #[test]
    fn matches_high_precision_table() {
        for &(p, z) in TABLE {
            assert!((ppf(p) - z).abs() < 1e-9, "ppf({p}) = {} want {z}", ppf(p));
        }
    }

    #[test]
    fn matches_bisection_over_range() {
        let mut p = 1e-9;
        while p < 1.0 - 1e-9 {
            let err = (ppf(p) - ppf_bisect(p)).abs();
            assert!(err < 1e-9, "p={p} err={err}");
            p += 0.000_731;
        }
        for k in 1..=9 {
            let p = 10f64.powi(-k);
            assert!((ppf(p) - ppf_bisect(p)).abs() < 1e-9);
            assert!((ppf(1.0 - p) - ppf_bisect(1.0 - p)).abs() < 1e-8);
        }
    }

    #[test]
    fn centered_form_keeps_tiny_offsets() {
        let q = 2f64.powi(-60);
        let z = ppf_centered(q);
        assert!(z > 0.0);
        assert!((z - q * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-30);
        assert_eq!(ppf_centered(-0.25), ppf(0.25));
        assert_eq!(ppf(0.0), f64::NEG_INFINITY);
        assert!(ppf(1.5).is_nan());
    }

    #[test]
    fn cdf_roundtrip_and_symmetry() {
        for i in -60..=60 {
            let z = i as f64 / 10.0;
            assert!((ppf(cdf(z)) - z).abs() < 1e-7 * (1.0 + z.abs()));
            assert!((cdf(z) + cdf(-z) - 1.0).abs() < 1e-15);
            assert!((cdf_centered(z) - (cdf(z) - 0.5)).abs() < 1e-15);
            assert!((sf(z) - cdf(-z)).abs() < 1e-16);
        }
    }
}
