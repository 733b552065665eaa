//! Gamma function and generalized hypergeometric series.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real x; infinite at the poles 0, −1, −2, ….
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesSum {
    pub value: f64,
    /// Bound on the neglected tail.
    pub error_bound: f64,
    pub terms: usize,
}

pub const SERIES_RTOL: f64 = 1e-14;
pub const SERIES_MAX_TERMS: usize = 20_000_000;

/// Σ_k Π(a_i)_k / Π(b_j)_k · x^k / k! for 0 ≤ x < 1.
///
/// Terms are summed until the tail, bounded geometrically by the largest
/// term ratio still possible, drops below `SERIES_RTOL` relative to the sum.
pub fn hypergeometric_series(upper: &[f64], lower: &[f64], x: f64) -> Result<SeriesSum> {
    if let Some(&b) = lower.iter().find(|&&b| b <= 0.0 && b == b.floor()) {
        return Err(Error::HypergeometricPole(b));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("hypergeometric argument {x} outside [0, 1)")));
    }
    let ratio = |k: f64| -> f64 {
        let num: f64 = upper.iter().map(|a| a + k).product();
        let den: f64 = lower.iter().map(|b| b + k).product::<f64>() * (k + 1.0);
        num / den * x
    };
    // beyond this index every ratio is monotone in k and tends to x
    let settle = upper.iter().chain(lower).fold(0.0f64, |m, v| m.max(v.abs())) * 2.0 + 8.0;
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut k = 0usize;
    loop {
        sum += term;
        let r = ratio(k as f64);
        if r == 0.0 {
            return Ok(SeriesSum { value: sum, error_bound: 0.0, terms: k + 1 });
        }
        let next = term * r;
        if k as f64 > settle {
            let rho = r.abs().max(x);
            let tail = next.abs() / (1.0 - rho);
            if tail <= SERIES_RTOL * sum.abs() {
                return Ok(SeriesSum { value: sum, error_bound: tail, terms: k + 1 });
            }
            if k >= SERIES_MAX_TERMS {
                return Err(Error::SeriesTolerance { bound: tail, terms: k + 1 });
            }
        }
        term = next;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!((gamma(1.0 / 3.0) - 2.678_938_534_707_747_6).abs() < 1e-13);
        assert!((gamma(-4.0 / 3.0) - 3.046_765_363_709_401).abs() < 1e-12);
        assert!(gamma(-2.0).is_infinite());
    }

    #[test]
    fn leading_term() {
        let s = hypergeometric_series(&[0.3, -1.7], &[0.25], 0.0).unwrap();
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn binomial_closed_form() {
        let s = hypergeometric_series(&[0.5], &[], 0.25).unwrap();
        assert!((s.value - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(s.error_bound <= 1e-14);
    }

    #[test]
    fn gauss_closed_form() {
        // 2F1(1, 1; 2; x) = −ln(1 − x)/x
        let x = 0.9;
        let s = hypergeometric_series(&[1.0, 1.0], &[2.0], x).unwrap();
        assert!((s.value + (1.0 - x).ln() / x).abs() < 1e-11);
    }

    #[test]
    fn brute_force_partial_sum() {
        // p = 3, n = 1 parameters at x = 1/2
        let a = [1.0 / 3.0, -1.0 / 6.0];
        let b = [2.0 / 3.0];
        let s = hypergeometric_series(&a, &b, 0.5).unwrap();
        let mut brute = 0.0;
        let mut t = 1.0;
        for k in 0..1_000_000 {
            brute += t;
            let kf = k as f64;
            t *= (a[0] + kf) * (a[1] + kf) / ((b[0] + kf) * (kf + 1.0)) * 0.5;
        }
        assert!((s.value - brute).abs() <= s.error_bound + 1e-15, "{s:?} vs {brute}");
        assert!(s.error_bound < 1e-12);
    }

    #[test]
    fn terminating_series() {
        // 2F1(−2, 1; 1; x) = (1 − x)²
        let s = hypergeometric_series(&[-2.0, 1.0], &[1.0], 0.3).unwrap();
        assert!((s.value - 0.49).abs() < 1e-15);
        assert_eq!(s.error_bound, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(hypergeometric_series(&[1.0], &[-2.0], 0.5), Err(Error::HypergeometricPole(_))));
        assert!(hypergeometric_series(&[1.0], &[], 1.0).is_err());
    }
}
