//! Standard normal distribution function and its inverse.
//!
//! `cdf` uses Hart's double-precision rational approximation (1968, as
//! rearranged by G. West, "Better approximations to cumulative normal
//! functions", 2005), with a continued fraction beyond |x| = 7.07.
//! `quantile` is Wichura's AS241 (PPND16), accurate to about 1e-16.
//! Both are pure floating-point code with no platform dependencies beyond
//! `exp`, `ln` and `sqrt`.

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal distribution function Φ(x).
pub fn cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let tail = if ax > 37.0 {
        0.0
    } else {
        let e = (-0.5 * ax * ax).exp();
        if ax < 7.071_067_811_865_47 {
            let mut num = 3.526_249_659_989_11e-2 * ax + 0.700_383_064_443_688;
            num = num * ax + 6.373_962_203_531_65;
            num = num * ax + 33.912_866_078_383;
            num = num * ax + 112.079_291_497_871;
            num = num * ax + 221.213_596_169_931;
            num = num * ax + 220.206_867_912_376;
            let mut den = 8.838_834_764_831_84e-2 * ax + 1.755_667_163_182_64;
            den = den * ax + 16.064_177_579_207;
            den = den * ax + 86.780_732_202_946_1;
            den = den * ax + 296.564_248_779_674;
            den = den * ax + 637.333_633_378_831;
            den = den * ax + 793.826_512_519_948;
            den = den * ax + 440.413_735_824_752;
            e * num / den
        } else {
            let mut cf = ax + 0.65;
            cf = ax + 4.0 / cf;
            cf = ax + 3.0 / cf;
            cf = ax + 2.0 / cf;
            cf = ax + 1.0 / cf;
            e / cf / SQRT_2PI
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Φ⁻¹ extended to the closed unit interval: 0 maps to -∞ and 1 to +∞.
///
/// Used where an infinite quantile is a meaningful outcome (the bootstrap
/// bias correction). Arguments outside [0, 1] give NaN.
pub fn quantile_extended(p: f64) -> f64 {
    if p == 0.0 {
        f64::NEG_INFINITY
    } else if p == 1.0 {
        f64::INFINITY
    } else if !(0.0..=1.0).contains(&p) || p.is_nan() {
        f64::NAN
    } else {
        ppnd16(p)
    }
}

/// Standard normal quantile Φ⁻¹(p) for p in the open unit interval.
pub fn quantile(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(ppnd16(p))
    } else {
        Err(Error::Domain(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )))
    }
}

#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    const SPLIT1: f64 = 0.425;
    const SPLIT2: f64 = 5.0;
    const CONST1: f64 = 0.180625;
    const CONST2: f64 = 1.6;

    const A: [f64; 8] = [
        3.387_132_872_796_366_608_0e0,
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
        6.871_870_074_920_579_083_0e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061_0e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561_0e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34e0,
        4.630_337_846_156_545_295_90e0,
        5.769_497_221_460_691_405_50e0,
        3.647_848_324_763_204_605_04e0,
        1.270_458_252_452_368_382_58e0,
        2.417_807_251_774_506_117_70e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87e0,
        1.676_384_830_183_803_849_40e0,
        6.897_673_349_851_000_045_50e-1,
        1.481_039_764_274_800_745_90e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20e0,
        5.463_784_911_164_114_369_90e0,
        1.784_826_539_917_291_335_80e0,
        2.965_605_718_285_048_912_30e-1,
        2.653_218_952_657_612_309_30e-2,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_90e-1,
        1.369_298_809_227_358_053_10e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= SPLIT1 {
        let r = CONST1 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= SPLIT2 {
        r -= CONST2;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= SPLIT2;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
