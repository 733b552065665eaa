//! Coefficient rings used by the Grassmann engine.
//!
//! Exact work uses complex rationals; Monte Carlo uses `Complex64`. Both go
//! through the same algebra so the float path is checked against the exact one.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact complex rational.
pub type Exact = Complex<BigRational>;

pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn conj(&self) -> Self;
}

impl Coeff for Exact {
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
}

impl Coeff for Complex64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn exact_real(r: BigRational) -> Exact {
    Complex::new(r, BigRational::zero())
}

pub fn exact_int(v: i64) -> Exact {
    exact_real(BigRational::from_integer(BigInt::from(v)))
}

/// Exact rational value of a finite `f64` (every finite double is dyadic).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
}

pub fn exact_from_c64(z: Complex64) -> Result<Exact> {
    Ok(Complex::new(rational_from_f64(z.re)?, rational_from_f64(z.im)?))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    // Fall back to logs for values outside the f64 exponent range.
    let ln = ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom());
    let mag = ln.exp();
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

pub fn exact_to_c64(z: &Exact) -> Complex64 {
    Complex64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))
}

/// Natural log of |x| for an arbitrarily large integer.
pub fn ln_abs_bigint(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// ln |r| for a rational.
pub fn ln_abs_rational(r: &BigRational) -> f64 {
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

/// Parses "a/b", "a", or a decimal float into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
        let d: BigInt = d.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    let v: f64 = s.parse().map_err(|_| Error::Parse(s.to_string()))?;
    rational_from_f64(v)
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(format_rational(&parse_rational("6/8").unwrap()), "3/4");
        assert_eq!(format_rational(&parse_rational("-5").unwrap()), "-5");
        assert_eq!(format_rational(&parse_rational("0.25").unwrap()), "1/4");
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn huge_rational_to_f64_uses_logs() {
        let big = BigRational::from_integer(BigInt::from(10).pow(400));
        let tiny = BigRational::new(BigInt::from(1), BigInt::from(10).pow(400));
        assert!(rational_to_f64(&big).is_infinite());
        assert_eq!(rational_to_f64(&tiny), 0.0);
        let ratio = rat(1, 3) * BigRational::from_integer(BigInt::from(10).pow(400))
            / BigRational::from_integer(BigInt::from(10).pow(399));
        assert!((rational_to_f64(&ratio) - 10.0 / 3.0).abs() < 1e-12);
        assert!((ln_abs_rational(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }
}
