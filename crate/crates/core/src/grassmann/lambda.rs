use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::{exact_to_c64, Coeff, Exact};
use num_complex::Complex64;

/// Univariate polynomial in λ, coefficients indexed by power.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPoly<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> LambdaPoly<C> {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        LambdaPoly { coeffs }
    }

    pub fn constant(c: C) -> Self {
        Self::new(vec![c])
    }

    /// λ^k.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![C::zero(); k + 1];
        coeffs[k] = C::one();
        LambdaPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    /// Coefficient of λ^k (zero past the end).
    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::zero)
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &C) -> C {
        self.coeffs
            .iter()
            .rev()
            .fold(C::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }
}

impl LambdaPoly<Exact> {
    pub fn to_c64(&self) -> LambdaPoly<Complex64> {
        LambdaPoly::new(self.coeffs.iter().map(exact_to_c64).collect())
    }
}

impl<C: Coeff> Add for LambdaPoly<C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<C: Coeff> Sub for LambdaPoly<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<C: Coeff> Neg for LambdaPoly<C> {
    type Output = Self;
    fn neg(self) -> Self {
        LambdaPoly {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl<C: Coeff> Mul for LambdaPoly<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![C::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }
}

impl<C: Coeff> Zero for LambdaPoly<C> {
    fn zero() -> Self {
        LambdaPoly { coeffs: Vec::new() }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<C: Coeff> One for LambdaPoly<C> {
    fn one() -> Self {
        Self::constant(C::one())
    }
}

impl<C: Coeff> Coeff for LambdaPoly<C> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(C::from_ratio(num, den))
    }
    fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(Coeff::conj).collect())
    }
}
