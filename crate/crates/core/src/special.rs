//! Zeroth-order Bessel functions: `I0` for real and complex arguments, `J0` for real.
//!
//! Small arguments use the power series `sum (z^2/4)^k / (k!)^2`; large ones use
//! the Hankel expansion
//!
//! ```text
//! I0(z) ~ e^z / sqrt(2 pi z) sum_k c_k / z^k  +/-  i e^-z / sqrt(2 pi z) sum_k (-1)^k c_k / z^k
//! c_k = (1^2 3^2 ... (2k-1)^2) / (k! 8^k)
//! ```
//!
//! with `+` for `Im z >= 0`. The exponential prefactor is combined with a
//! caller-supplied exponent so products like `e^{-x} I0(x)` never overflow.

use std::f64::consts::PI;

use num_complex::Complex64;

const SERIES_LIMIT: f64 = 15.0;
const REAL_SERIES_LIMIT: f64 = 25.0;

fn series(z: Complex64) -> Complex64 {
    let q = z * z * 0.25;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200 {
        term = term * q / (k * k) as f64;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// `sum_k s^k c_k / z^k`, truncated at the smallest term.
fn hankel_sum(z: Complex64, alternate: bool) -> Complex64 {
    let inv = 1.0 / z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let mut next = term * inv * (odd * odd / (8.0 * k as f64));
        if alternate {
            next = -next;
        }
        let size = next.norm();
        if size >= last {
            break;
        }
        term = next;
        sum += term;
        last = size;
        if size <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// `e^a I0(z)` evaluated without forming `e^a` and `I0(z)` separately.
pub fn exp_i0(a: Complex64, z: Complex64) -> Complex64 {
    // I0 is even; work in the right half plane.
    let z = if z.re < 0.0 { -z } else { z };
    if z.norm() < SERIES_LIMIT {
        return a.exp() * series(z);
    }
    let root = (2.0 * PI * z).sqrt();
    let grow = (a + z).exp() * hankel_sum(z, false);
    let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
    let decay = (a - z).exp() * hankel_sum(z, true) * Complex64::new(0.0, sign);
    (grow + decay) / root
}

pub fn i0(z: Complex64) -> Complex64 {
    exp_i0(Complex64::new(0.0, 0.0), z)
}

/// Exponentially scaled `e^{-|x|} I0(x)` for real `x`.
pub fn i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x < REAL_SERIES_LIMIT {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / (k * k) as f64;
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
        }
        return (-x).exp() * sum;
    }
    // e^{-2x} correction is below double precision here.
    let inv = 1.0 / x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..100 {
        let odd = (2 * k - 1) as f64;
        let next = term * inv * odd * odd / (8.0 * k as f64);
        if next >= last || next <= 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
        last = next;
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Bessel function of the first kind `J0(x) = I0(i x)`.
pub fn j0(x: f64) -> f64 {
    i0(Complex64::new(0.0, x)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from 40-digit arbitrary-precision evaluation.
    #[test]
    fn scaled_i0_matches_reference() {
        let cases = [
            (0.5, 0.645_035_270_449_150_1),
            (5.0, 0.183_540_812_609_328_35),
            (12.0, 0.116_426_221_213_440_44),
            (20.0, 0.089_780_311_884_826_02),
            (35.0, 0.067_678_378_350_413_63),
            (100.0, 0.039_944_379_299_096_68),
            (700.0, 0.015_081_295_651_531_358),
        ];
        for (x, want) in cases {
            assert_relative_eq!(i0_scaled(x), want, max_relative = 1e-14);
            let c = exp_i0(Complex64::new(-x, 0.0), Complex64::new(x, 0.0));
            assert_relative_eq!(c.re, want, max_relative = 1e-13);
            assert!(c.im.abs() < 1e-15);
        }
    }

    #[test]
    fn complex_i0_matches_reference() {
        let cases = [
            ((3.0, 4.0), (-3.392_487_788_275_519_6, -1.323_945_891_628_726_5)),
            ((0.0, 20.0), (0.167_024_664_340_583_15, 0.0)),
            ((1.0, -30.0), (-0.130_934_905_038_925_1, 0.140_033_541_665_182_4)),
            ((0.2, -0.9), (0.814_670_240_479_286, -0.081_591_712_550_117_8)),
            ((15.0, 15.0), (-127_711.894_557_877_44, 254_040.282_817_858_83)),
        ];
        for ((re, im), (wr, wi)) in cases {
            let v = i0(Complex64::new(re, im));
            let want = Complex64::new(wr, wi);
            assert!(
                (v - want).norm() <= 1e-11 * want.norm().max(1.0),
                "I0({re}+{im}i) = {v}, want {want}"
            );
        }
    }

    #[test]
    fn j0_matches_reference() {
        let cases = [
            (0.0, 1.0),
            (1.0, 0.765_197_686_557_966_6),
            (10.0, -0.245_935_764_451_348_35),
            (25.0, 0.096_266_783_275_958_12),
            (126.0, 0.064_001_635_366_180_07),
        ];
        for (x, want) in cases {
            assert!((j0(x) - want).abs() < 1e-11, "J0({x})");
        }
    }

    #[test]
    fn series_and_asymptotic_agree_at_the_switch() {
        for phase in [0.0, 0.4, 1.0, 1.5, -1.2] {
            let z = Complex64::from_polar(SERIES_LIMIT, phase);
            let a = series(z);
            let root = (2.0 * PI * z).sqrt();
            let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
            let b = (z.exp() * hankel_sum(z, false)
                + (-z).exp() * hankel_sum(z, true) * Complex64::new(0.0, sign))
                / root;
            assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0), "phase {phase}");
        }
    }

    #[test]
    fn integral_representation_oracle() {
        // e^{-x} I0(x) = (1/pi) int_0^pi e^{x (cos t - 1)} dt, trapezoid is spectral here.
        for x in [0.3f64, 7.0, 31.0, 250.0] {
            let n = 4000;
            let h = PI / n as f64;
            let mut s = 0.5 * (1.0 + (-2.0 * x).exp());
            for k in 1..n {
                s += (x * ((k as f64 * h).cos() - 1.0)).exp();
            }
            assert_relative_eq!(i0_scaled(x), s * h / PI, max_relative = 1e-12);
        }
    }
}
