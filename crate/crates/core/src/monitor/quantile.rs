//! Standard normal quantiles (Wichura's AS 241, PPND16; about 16 digits).

// Coefficients are quoted as published.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

fn rational(r: f64, num: &[f64; 8], den: &[f64; 8]) -> f64 {
    let n = num.iter().rev().fold(0.0, |acc, c| acc * r + c);
    let d = den.iter().rev().fold(0.0, |acc, c| acc * r + c);
    n / d
}

const CENTRAL_NUM: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];
const NEAR_NUM: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
const NEAR_DEN: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const TAIL_NUM: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const TAIL_DEN: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// `Phi^{-1}(prob)` for `prob` in `(0, 1)`.
pub fn normal_quantile(prob: f64) -> f64 {
    let q = prob - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * rational(r, &CENTRAL_NUM, &CENTRAL_DEN);
    }
    let tail = if q < 0.0 { prob } else { 1.0 - prob };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        rational(r - 1.6, &NEAR_NUM, &NEAR_DEN)
    } else {
        rational(r - 5.0, &TAIL_NUM, &TAIL_DEN)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// Two-sided alarm threshold `Phi^{-1}(1 - alpha / 2)`.
pub fn threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "false-alarm level must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(normal_quantile(1.0 - alpha / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// erf by the all-positive series erf(x) = 2/sqrt(pi) e^{-x^2} sum 2^k x^{2k+1} / (2k+1)!!,
    /// which avoids cancellation for the moderate arguments used here.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= 2.0 * x * x / (2.0 * k + 1.0);
            sum += term;
        }
        2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
    }

    fn phi(x: f64) -> f64 {
        0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
    }

    fn bisect_quantile(prob: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn alpha_one_is_the_median() {
        assert_eq!(threshold(1.0).unwrap(), 0.0);
    }

    #[test]
    fn frozen_reference_values() {
        // Values from the bisection oracle, frozen.
        assert!((threshold(0.05).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((threshold(1e-3).unwrap() - 3.290_526_731_491_926).abs() < 1e-12);
        assert!((threshold(0.05).unwrap() - 1.959964).abs() < 1e-5);
        assert!((threshold(1e-3).unwrap() - 3.290527).abs() < 1e-5);
    }

    #[test]
    fn agrees_with_bisection_oracle() {
        for &alpha in &[0.5, 0.2, 0.1, 0.05, 0.01, 1e-3, 2e-4, 1e-4, 1e-5] {
            let oracle = bisect_quantile(1.0 - alpha / 2.0);
            let got = threshold(alpha).unwrap();
            assert!((got - oracle).abs() < 1e-9, "alpha {alpha}: {got} vs {oracle}");
        }
        for &prob in &[0.01, 0.3, 0.5, 0.7, 0.99] {
            let oracle = bisect_quantile(prob);
            assert!((normal_quantile(prob) - oracle).abs() < 1e-9, "p {prob}");
        }
        // Deep lower tail, from published tables.
        assert!((normal_quantile(1e-6) + 4.753_424).abs() < 1e-6);
        assert!((normal_quantile(1e-12) + 7.034_484).abs() < 1e-6);
    }

    #[test]
    fn rejects_out_of_range_alpha() {
        for a in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(threshold(a).is_err());
        }
    }
}
