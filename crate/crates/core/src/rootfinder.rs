//! Roots of the averaged characteristic polynomial at large N.
//!
//! Z(λ) = λ^m W(λ^p), so only the ⌊N/p⌋ roots of W are solved for. W is
//! evaluated with a BigInt-mantissa Horner scheme at a working precision that
//! doubles until the Newton corrections are resolved to double precision;
//! the Aberth–Ehrlich sweep itself runs in f64.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bigfloat::{BigComplex, BigFloat};
use crate::closed::AvgCharPoly;
use crate::error::{Error, Result};
use crate::grassmann::LambdaPoly;
use crate::scalar::{exact_from_c64, exact_to_c64, ln_abs_rational, Exact};

/// Polynomial stored as (phase, ln|c|) per power, lowest power first, with
/// the exact coefficients kept when available.
#[derive(Clone, Debug)]
pub struct ScaledPoly {
    coeffs: Vec<(Complex64, f64)>,
    exact: Option<Vec<Exact>>,
    /// Roots crowd towards zero like u^fold when the polynomial came from
    /// folding λ^p into s; used only to place starting points.
    fold: usize,
}

/// (phase, ln|z|) of an exact complex number without overflow.
pub fn exact_polar(z: &Exact) -> (Complex64, f64) {
    let lr = if z.re.is_zero() { f64::NEG_INFINITY } else { ln_abs_rational(&z.re) };
    let li = if z.im.is_zero() { f64::NEG_INFINITY } else { ln_abs_rational(&z.im) };
    let hi = lr.max(li);
    if hi == f64::NEG_INFINITY {
        return (Complex64::zero(), f64::NEG_INFINITY);
    }
    let sr = if z.re < num_rational::BigRational::zero() { -1.0 } else { 1.0 };
    let si = if z.im < num_rational::BigRational::zero() { -1.0 } else { 1.0 };
    let v = Complex64::new(sr * (lr - hi).exp(), si * (li - hi).exp());
    let norm = v.norm();
    (v / norm, hi + norm.ln())
}

impl ScaledPoly {
    pub fn from_exact(coeffs: Vec<Exact>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ScaledPoly { coeffs: coeffs.iter().map(exact_polar).collect(), exact: Some(coeffs), fold: 1 }
    }

    pub fn from_c64(coeffs: &[Complex64]) -> Self {
        let mut polar: Vec<(Complex64, f64)> = coeffs
            .iter()
            .map(|c| if c.norm() == 0.0 { (Complex64::zero(), f64::NEG_INFINITY) } else { (c / c.norm(), c.norm().ln()) })
            .collect();
        while polar.len() > 1 && polar.last().is_some_and(|c| c.1 == f64::NEG_INFINITY) {
            polar.pop();
        }
        ScaledPoly { coeffs: polar, exact: None, fold: 1 }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[(Complex64, f64)] {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&[Exact]> {
        self.exact.as_deref()
    }

    /// Coefficients rounded to `prec` bits.
    fn big_coeffs(&self, prec: u64) -> Vec<BigComplex> {
        match &self.exact {
            Some(ex) => ex.iter().map(|c| BigComplex::from_exact(c, prec)).collect(),
            None => self
                .coeffs
                .iter()
                .map(|&(ph, ln)| {
                    if ln == f64::NEG_INFINITY {
                        return BigComplex::zero();
                    }
                    let l2 = ln / LN_2;
                    let e = l2.floor();
                    let m = ph * 2f64.powf(l2 - e);
                    BigComplex { re: BigFloat::from_f64_exp(m.re, e as i64), im: BigFloat::from_f64_exp(m.im, e as i64) }
                })
                .collect(),
        }
    }

    /// log2 Σ_i |c_i| |s|^i.
    pub fn log2_scale(&self, s_abs: f64) -> f64 {
        let ls = s_abs.ln();
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.1 > f64::NEG_INFINITY)
            .map(|(i, c)| c.1 + if i == 0 { 0.0 } else { i as f64 * ls })
            .collect();
        log_sum_exp(&terms) / LN_2
    }

    /// Number of zero coefficients at the low end (roots at s = 0).
    fn zero_prefix(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.1 == f64::NEG_INFINITY).count()
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Z(λ) = λ^m W(λ^p) with m = N mod p; W has the ⌊N/p⌋ + 1 nonzero
/// coefficients of Z, with W(s) = Σ_k (−μ)^k N!/(k!(N−pk)!) s^{K−k}.
pub fn reduce_by_symmetry(z: &AvgCharPoly) -> (usize, ScaledPoly) {
    let m = z.n() % z.p();
    let mut terms = z.terms_exact();
    terms.reverse();
    let mut w = ScaledPoly::from_exact(terms);
    w.fold = z.p();
    (m, w)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// Backward error |P(s)| / Σ|c_i||s|^i per root.
    pub residual: Vec<f64>,
    pub multiplicity_at_zero: usize,
    /// Working precision the solve finished at.
    pub precision_bits: u64,
    pub iterations: usize,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.norm()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct RootOptions {
    /// Starting working precision in bits.
    pub precision_bits: u64,
    /// Backward-error tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_precision_bits: u64,
    pub seed: u64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { precision_bits: 64, tol: 1e-12, max_iterations: 2000, max_precision_bits: 1 << 16, seed: 0x5eed }
    }
}

struct Evaluator<'a> {
    poly: &'a ScaledPoly,
    prec: u64,
    coeffs: Vec<BigComplex>,
}

struct Eval {
    newton: Complex64,
    /// log2 of the Horner rounding noise relative to |P'(s)| |s|.
    noise: f64,
    residual: f64,
}

impl<'a> Evaluator<'a> {
    fn new(poly: &'a ScaledPoly, prec: u64) -> Self {
        Evaluator { poly, prec, coeffs: poly.big_coeffs(prec) }
    }

    fn raise(&mut self) {
        self.prec *= 2;
        self.coeffs = self.poly.big_coeffs(self.prec);
    }

    fn eval(&self, s: Complex64) -> Eval {
        let prec = self.prec;
        let x = BigComplex::from_c64(s);
        let mut p = BigComplex::zero();
        let mut dp = BigComplex::zero();
        for c in self.coeffs.iter().rev() {
            dp = dp.mul(&x, prec).add(&p, prec);
            p = p.mul(&x, prec).add(c, prec);
        }
        let deg = self.coeffs.len() as f64;
        let log_scale = self.poly.log2_scale(s.norm());
        let log_dp = dp.log2_abs();
        let log_s = s.norm().max(f64::MIN_POSITIVE).log2();
        let noise = (4.0 * deg).log2() - prec as f64 + log_scale - log_dp - log_s;
        let newton = if dp.is_zero() { Complex64::new(f64::INFINITY, 0.0) } else { p.ratio(&dp) };
        let residual = if p.is_zero() { 0.0 } else { 2f64.powf(p.log2_abs() - log_scale) };
        Eval { newton, noise, residual }
    }
}

/// All roots of `w` by Aberth–Ehrlich iteration with adaptive precision.
///
/// `precision_bits` is the starting working precision; it doubles whenever a
/// Newton correction is not resolved to double precision.
pub fn find_roots(w: &ScaledPoly, precision_bits: u64, tol: f64) -> Result<RootSet> {
    find_roots_with(w, &RootOptions { precision_bits, tol, ..RootOptions::default() })
}

pub fn find_roots_with(w: &ScaledPoly, opts: &RootOptions) -> Result<RootSet> {
    let deg = w.degree();
    if deg == 0 {
        return Err(Error::InvalidArgument("polynomial has degree 0".into()));
    }
    let zeros = w.zero_prefix();
    let reduced = ScaledPoly {
        coeffs: w.coeffs[zeros..].to_vec(),
        exact: w.exact.as_ref().map(|e| e[zeros..].to_vec()),
        fold: w.fold,
    };
    let mut out = if reduced.degree() == 0 {
        RootSet { roots: vec![], residual: vec![], multiplicity_at_zero: 0, precision_bits: opts.precision_bits, iterations: 0 }
    } else {
        let first = match segment_guesses(&reduced, opts.seed) {
            Some(g) => aberth(&reduced, g, opts),
            None => Err(Error::RootsNotConverged { failed: reduced.degree(), total: reduced.degree() }),
        };
        match first {
            Ok(rs) => rs,
            Err(_) => match aberth(&reduced, circle_guesses(&reduced, opts.seed), opts) {
                Ok(rs) => rs,
                Err(err) if reduced.degree() <= 200 => {
                    let guesses = companion_guesses(&reduced).ok_or(err)?;
                    aberth(&reduced, guesses, opts)?
                }
                Err(err) => return Err(err),
            },
        }
    };
    out.roots.extend(std::iter::repeat(Complex64::zero()).take(zeros));
    out.residual.extend(std::iter::repeat(0.0).take(zeros));
    out.multiplicity_at_zero = zeros;
    Ok(out)
}

/// Circle of radius |c_0/c_deg|^{1/deg} with seeded angular jitter.
fn circle_guesses(w: &ScaledPoly, seed: u64) -> Vec<Complex64> {
    let deg = w.degree();
    let radius = ((w.coeffs[0].1 - w.coeffs[deg].1) / deg as f64).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..deg)
        .map(|j| {
            let jitter: f64 = rng.gen_range(-0.25..0.25);
            let theta = 2.0 * PI * (j as f64 + 0.5 + jitter) / deg as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect()
}

/// Points on the segment from 0 towards the root centroid,
/// staggered slightly off it. The segment length |Σ s^k|^{1/k} (exact, k = 64)
/// exceeds the largest root modulus by at most deg^{1/k}. Suited to the
/// averaged polynomials, whose reduced roots lie on a single ray.
fn segment_guesses(w: &ScaledPoly, seed: u64) -> Option<Vec<Complex64>> {
    let deg = w.degree();
    let exact = w.exact.as_ref()?;
    let (ph_lead, _) = w.coeffs[deg];
    let (ph_next, ln_next) = w.coeffs[deg - 1];
    if ln_next == f64::NEG_INFINITY {
        return None;
    }
    let dir = -ph_next / ph_lead;
    let lead = exact[deg].clone();
    let monic = LambdaPoly::new(exact.iter().map(|c| c.clone() / lead.clone()).collect());
    let k = 64;
    let sums = newton_power_sums(&monic, k).ok()?;
    let (_, ln_pk) = exact_polar(&sums[k]);
    let outer = (ln_pk / k as f64).exp();
    if !outer.is_finite() || outer == 0.0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // radial quantiles with a square-root edge, then folded
    let fold = w.fold.max(1) as i32;
    let node = |j: f64| {
        let u = 1.0 - (1.0 - (j + 0.5).clamp(0.0, deg as f64) / deg as f64).powf(2.0 / 3.0);
        outer * u.powi(fold)
    };
    Some(
        (0..deg)
            .map(|j| {
                let t = node(j as f64);
                let spacing = node(j as f64 + 0.5) - node(j as f64 - 0.5);
                let off: f64 = rng.gen_range(0.1..0.3) * if j % 2 == 0 { 1.0 } else { -1.0 };
                dir * Complex64::new(t, off * spacing)
            })
            .collect(),
    )
}

/// Eigenvalues of the companion matrix of the radius-normalized polynomial.
fn companion_guesses(w: &ScaledPoly) -> Option<Vec<Complex64>> {
    let deg = w.degree();
    let ln_r = (w.coeffs[0].1 - w.coeffs[deg].1) / deg as f64;
    // c_i r^i / (c_deg r^deg), in logs to stay in range
    let lead = w.coeffs[deg];
    let norm: Vec<Complex64> = (0..deg)
        .map(|i| {
            let (ph, ln) = w.coeffs[i];
            if ln == f64::NEG_INFINITY {
                Complex64::zero()
            } else {
                ph / lead.0 * (ln - lead.1 + (i as f64 - deg as f64) * ln_r).exp()
            }
        })
        .collect();
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::one();
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -norm[i];
    }
    let eig = m.schur().eigenvalues()?;
    let r = ln_r.exp();
    Some(eig.iter().map(|e| e * r).collect())
}

fn aberth(w: &ScaledPoly, mut roots: Vec<Complex64>, opts: &RootOptions) -> Result<RootSet> {
    let deg = roots.len();
    let mut ev = Evaluator::new(w, opts.precision_bits.max(16));
    let mut done = vec![false; deg];
    let mut residual = vec![f64::INFINITY; deg];
    let eps = f64::EPSILON;
    for iter in 0..opts.max_iterations {
        let active: Vec<usize> = (0..deg).filter(|&j| !done[j]).collect();
        if active.is_empty() {
            return Ok(RootSet { roots, residual, multiplicity_at_zero: 0, precision_bits: ev.prec, iterations: iter });
        }
        let evals: Vec<Eval> = loop {
            let evals: Vec<Eval> = active.par_iter().map(|&j| ev.eval(roots[j])).collect();
            // every correction must be resolved to double precision
            if evals.iter().any(|e| e.noise > -60.0) && ev.prec < opts.max_precision_bits {
                ev.raise();
                continue;
            }
            break evals;
        };
        let old = roots.clone();
        for (&j, e) in active.iter().zip(&evals) {
            residual[j] = e.residual;
            let n = e.newton;
            if !n.re.is_finite() || !n.im.is_finite() {
                // sitting on a critical point: nudge off it
                roots[j] = old[j] * Complex64::new(1.0 + 1e-3, 1e-3);
                continue;
            }
            let sum: Complex64 = (0..deg).filter(|&i| i != j).map(|i| (old[j] - old[i]).inv()).sum();
            let step = n / (Complex64::one() - n * sum);
            let step = if step.re.is_finite() && step.im.is_finite() { step } else { n };
            roots[j] = old[j] - step;
            if step.norm() <= 4.0 * eps * old[j].norm().max(f64::MIN_POSITIVE) && e.residual <= opts.tol {
                done[j] = true;
                roots[j] = old[j];
            }
        }
    }
    let failed = done.iter().filter(|d| !**d).count();
    Err(Error::RootsNotConverged { failed, total: deg })
}

/// Each s-root contributes its p p-th roots; m zeros are appended.
pub fn lift_roots(sroots: &RootSet, p: usize, m: usize) -> RootSet {
    let mut roots = Vec::with_capacity(sroots.len() * p + m);
    let mut residual = Vec::with_capacity(roots.capacity());
    let mut zeros = m;
    for (s, res) in sroots.roots.iter().zip(&sroots.residual) {
        if s.norm() == 0.0 {
            zeros += p;
            continue;
        }
        let r = s.norm().powf(1.0 / p as f64);
        let base = s.arg() / p as f64;
        for j in 0..p {
            let theta = base + 2.0 * PI * j as f64 / p as f64;
            roots.push(Complex64::new(r * theta.cos(), r * theta.sin()));
            residual.push(*res);
        }
    }
    roots.extend(std::iter::repeat(Complex64::zero()).take(zeros));
    residual.extend(std::iter::repeat(0.0).take(zeros));
    RootSet { roots, residual, multiplicity_at_zero: zeros, precision_bits: sroots.precision_bits, iterations: sroots.iterations }
}

/// Roots in λ of the averaged characteristic polynomial.
pub fn solve_avg(z: &AvgCharPoly, opts: &RootOptions) -> Result<RootSet> {
    let (m, w) = reduce_by_symmetry(z);
    let s = find_roots_with(&w, opts)?;
    Ok(lift_roots(&s, z.p(), m))
}

/// Ξ_N(k) = Σ_j λ_j^k for k = 0..=kmax.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerSumTable {
    pub values: Vec<Complex64>,
}

pub fn power_sums(rs: &RootSet, kmax: usize) -> PowerSumTable {
    let mut values = vec![Complex64::zero(); kmax + 1];
    for r in &rs.roots {
        let mut x = Complex64::one();
        for v in values.iter_mut() {
            *v += x;
            x *= r;
        }
    }
    PowerSumTable { values }
}

/// Ξ_N(k) from the coefficients of a monic polynomial by Newton's identities.
pub fn newton_power_sums(z: &LambdaPoly<Exact>, kmax: usize) -> Result<Vec<Exact>> {
    let n = z.degree().ok_or(Error::EmptyInput)?;
    if z.coeff(n) != Exact::one() {
        return Err(Error::InvalidArgument("polynomial is not monic".into()));
    }
    // e_j = (−1)^j b_{N−j}
    let e = |j: usize| -> Exact {
        if j > n {
            return Exact::zero();
        }
        let b = z.coeff(n - j);
        if j % 2 == 1 {
            -b
        } else {
            b
        }
    };
    let mut p: Vec<Exact> = vec![Exact::new(num_rational::BigRational::from_integer(n.into()), Zero::zero())];
    for k in 1..=kmax {
        let mut acc = Exact::zero();
        for j in 1..k {
            let term = e(j) * p[k - j].clone();
            acc = if j % 2 == 1 { acc + term } else { acc - term };
        }
        let last = e(k) * Exact::new(num_rational::BigRational::from_integer(k.into()), Zero::zero());
        acc = if k % 2 == 1 { acc + last } else { acc - last };
        p.push(acc);
    }
    Ok(p)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratingCheck {
    /// |Σ_{k ≤ kmax} Ξ(k) λ0^{−k} − λ0 Z'(λ0)/Z(λ0)|
    pub gap: f64,
    /// Truncation bound N q^{kmax+1}/(1 − q), q = max|λ_j| / |λ0|.
    pub bound: f64,
}

/// Compares the truncated power-sum series against λ0 Z'(λ0)/Z(λ0).
pub fn verify_generating_identity(
    z: &LambdaPoly<Exact>,
    roots: &RootSet,
    lambda0: Complex64,
    kmax: usize,
) -> Result<GeneratingCheck> {
    let n = z.degree().ok_or(Error::EmptyInput)?;
    let rmax = roots.roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if lambda0.norm() <= rmax {
        return Err(Error::InvalidArgument(format!("|λ0| = {} is inside the root disk of radius {rmax}", lambda0.norm())));
    }
    let x = exact_from_c64(lambda0)?;
    let value = z.eval(&x);
    let deriv_coeffs: Vec<Exact> = (1..=n)
        .map(|k| z.coeff(k) * Exact::new(num_rational::BigRational::from_integer(k.into()), Zero::zero()))
        .collect();
    let deriv = LambdaPoly::new(deriv_coeffs).eval(&x);
    if value.is_zero() {
        return Err(Error::InvalidArgument("Z(λ0) = 0".into()));
    }
    let exact_rhs = exact_to_c64(&(x * deriv / value));
    let table = power_sums(roots, kmax);
    let inv = lambda0.inv();
    let mut lhs = Complex64::zero();
    let mut w = Complex64::one();
    for v in &table.values {
        lhs += v * w;
        w *= inv;
    }
    let q = rmax / lambda0.norm();
    let bound = n as f64 * q.powi(kmax as i32 + 1) / (1.0 - q);
    Ok(GeneratingCheck { gap: (lhs - exact_rhs).norm(), bound })
}

/// Re-expands ∏(λ − λ_j) in f64 (for reconstruction checks at modest degree).
pub fn expand_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::one()];
    for r in roots {
        let mut next = vec![Complex64::zero(); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i + 1] += v;
            next[i] -= v * r;
        }
        c = next;
    }
    c
}
