//! Binary floating point with a BigInt mantissa: value = mant · 2^exp.
//!
//! Only what the root finder needs: exact conversion from rationals and
//! doubles, add/mul rounded to a working precision, and conversion back to
//! a (mantissa, exponent) double pair.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::scalar::Exact;

#[derive(Clone, Debug, PartialEq)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat { mant: BigInt::zero(), exp: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// Exact value of a finite double.
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 || !x.is_finite() {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
        BigFloat { mant: BigInt::from(m) * sign, exp: e }
    }

    /// m · 2^e for a finite double m.
    pub fn from_f64_exp(m: f64, e: i64) -> Self {
        let mut x = Self::from_f64(m);
        if !x.is_zero() {
            x.exp += e;
        }
        x
    }

    /// `r` rounded toward zero to `prec` significant bits.
    pub fn from_rational(r: &BigRational, prec: u64) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        let num = r.numer();
        let den = r.denom();
        let shift = prec as i64 + den.bits() as i64 - num.bits() as i64 + 1;
        let mant = if shift >= 0 { (num << shift as u64) / den } else { (num >> (-shift) as u64) / den };
        BigFloat { mant, exp: -shift }.rounded(prec)
    }

    /// Position of the leading bit: |x| ∈ [2^{top−1}, 2^top).
    pub fn top(&self) -> i64 {
        self.mant.bits() as i64 + self.exp
    }

    /// Truncates the mantissa to at most `prec` bits.
    pub fn rounded(mut self, prec: u64) -> Self {
        let bits = self.mant.bits();
        if bits > prec {
            let drop = bits - prec;
            // shift the magnitude so negative values also truncate toward zero
            let negative = self.mant.sign() == Sign::Minus;
            let mag = self.mant.magnitude() >> drop;
            self.mant = BigInt::from_biguint(if negative { Sign::Minus } else { Sign::Plus }, mag);
            self.exp += drop as i64;
        }
        self
    }

    pub fn neg(&self) -> Self {
        BigFloat { mant: -self.mant.clone(), exp: self.exp }
    }

    pub fn mul(&self, other: &Self, prec: u64) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        BigFloat { mant: &self.mant * &other.mant, exp: self.exp + other.exp }.rounded(prec)
    }

    pub fn add(&self, other: &Self, prec: u64) -> Self {
        if self.is_zero() {
            return other.clone().rounded(prec);
        }
        if other.is_zero() {
            return self.clone().rounded(prec);
        }
        // a term more than prec + 2 bits below the other cannot change it
        let gap = self.top() - other.top();
        if gap > prec as i64 + 2 {
            return self.clone().rounded(prec);
        }
        if -gap > prec as i64 + 2 {
            return other.clone().rounded(prec);
        }
        let (lo, hi) = if self.exp <= other.exp { (self, other) } else { (other, self) };
        let shifted = &hi.mant << (hi.exp - lo.exp) as u64;
        BigFloat { mant: shifted + &lo.mant, exp: lo.exp }.rounded(prec)
    }

    /// (m, e) with value ≈ m · 2^e and 0.5 ≤ |m| < 1 (m = 0 for zero).
    pub fn to_f64_exp(&self) -> (f64, i64) {
        if self.is_zero() {
            return (0.0, 0);
        }
        let bits = self.mant.bits();
        let drop = bits.saturating_sub(60);
        let top = (&self.mant >> drop).to_f64().unwrap_or(0.0);
        let e = self.exp + drop as i64;
        // top has at most 60 bits
        let tb = 64 - (top.abs() as u64).leading_zeros() as i64;
        (top / 2f64.powi(tb as i32), e + tb)
    }

    pub fn to_f64(&self) -> f64 {
        let (m, e) = self.to_f64_exp();
        scale_pow2(m, e)
    }

    /// log2 |x|, −∞ for zero.
    pub fn log2_abs(&self) -> f64 {
        let (m, e) = self.to_f64_exp();
        if m == 0.0 {
            f64::NEG_INFINITY
        } else {
            m.abs().log2() + e as f64
        }
    }

    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        self.log2_abs().partial_cmp(&other.log2_abs()).unwrap_or(Ordering::Equal)
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }
}

/// m · 2^e without intermediate overflow for moderate results.
pub fn scale_pow2(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let e = e.clamp(-2200, 2200) as i32;
    // split so each factor stays representable
    let half = e / 2;
    m * 2f64.powi(half) * 2f64.powi(e - half)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    pub fn zero() -> Self {
        BigComplex { re: BigFloat::zero(), im: BigFloat::zero() }
    }

    pub fn from_c64(z: Complex64) -> Self {
        BigComplex { re: BigFloat::from_f64(z.re), im: BigFloat::from_f64(z.im) }
    }

    pub fn from_exact(z: &Exact, prec: u64) -> Self {
        BigComplex { re: BigFloat::from_rational(&z.re, prec), im: BigFloat::from_rational(&z.im, prec) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &Self, prec: u64) -> Self {
        BigComplex { re: self.re.add(&other.re, prec), im: self.im.add(&other.im, prec) }
    }

    pub fn mul(&self, other: &Self, prec: u64) -> Self {
        let rr = self.re.mul(&other.re, prec + 4);
        let ii = self.im.mul(&other.im, prec + 4);
        let ri = self.re.mul(&other.im, prec + 4);
        let ir = self.im.mul(&other.re, prec + 4);
        BigComplex { re: rr.add(&ii.neg(), prec), im: ri.add(&ir, prec) }
    }

    /// log2 |z| (max-component estimate refined by the smaller component).
    pub fn log2_abs(&self) -> f64 {
        let a = self.re.log2_abs();
        let b = self.im.log2_abs();
        let hi = a.max(b);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        let lo = a.min(b);
        hi + 0.5 * (1.0 + 2f64.powf(2.0 * (lo - hi))).log2()
    }

    /// z / w as a double-precision complex number.
    pub fn ratio(&self, w: &Self) -> Complex64 {
        let (ar, ae_r) = self.re.to_f64_exp();
        let (ai, ae_i) = self.im.to_f64_exp();
        let (br, be_r) = w.re.to_f64_exp();
        let (bi, be_i) = w.im.to_f64_exp();
        // bring both numbers to a common exponent, then divide in f64
        let ea = if ar == 0.0 { ae_i } else if ai == 0.0 { ae_r } else { ae_r.max(ae_i) };
        let eb = if br == 0.0 { be_i } else if bi == 0.0 { be_r } else { be_r.max(be_i) };
        let a = Complex64::new(scale_pow2(ar, ae_r - ea), scale_pow2(ai, ae_i - ea));
        let b = Complex64::new(scale_pow2(br, be_r - eb), scale_pow2(bi, be_i - eb));
        let q = a / b;
        Complex64::new(scale_pow2(q.re, ea - eb), scale_pow2(q.im, ea - eb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn double_roundtrip() {
        for x in [1.0, -3.5, 1e-300, 6.02e23, -0.1, 5e-324] {
            assert_eq!(BigFloat::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn rational_conversion() {
        let third = BigFloat::from_rational(&rat(1, 3), 200);
        assert!((third.to_f64() - 1.0 / 3.0).abs() < 1e-17);
        let neg = BigFloat::from_rational(&rat(-22, 7), 80);
        assert!((neg.to_f64() + 22.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_needs_precision() {
        // (1 + 2^-100) − 1 survives at 128 bits and vanishes at 64
        let one = BigFloat::from_f64(1.0);
        let tiny = BigFloat::from_rational(&BigRational::new(1.into(), BigInt::from(1) << 100u32), 64);
        let sum = one.add(&tiny, 128).add(&one.neg(), 128);
        assert!((sum.log2_abs() + 100.0).abs() < 1e-9);
        let sum = one.add(&tiny, 64).add(&one.neg(), 64);
        assert!(sum.is_zero());
    }

    #[test]
    fn huge_exponents() {
        let big = BigFloat::from_rational(&BigRational::from_integer(BigInt::from(10).pow(3000)), 100);
        assert!((big.log2_abs() - 3000.0 * 10f64.log2()).abs() < 1e-9);
        let z = BigComplex { re: big.clone(), im: BigFloat::zero() };
        let w = BigComplex { re: big.mul(&BigFloat::from_f64(4.0), 100), im: BigFloat::zero() };
        assert!((z.ratio(&w) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn complex_multiplication() {
        let a = BigComplex::from_c64(Complex64::new(1.5, -2.0));
        let b = BigComplex::from_c64(Complex64::new(-0.25, 3.0));
        let c = a.mul(&b, 64);
        let expect = Complex64::new(1.5, -2.0) * Complex64::new(-0.25, 3.0);
        assert_eq!(c.re.to_f64(), expect.re);
        assert_eq!(c.im.to_f64(), expect.im);
    }
}
