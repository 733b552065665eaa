//! Fuss–Catalan numbers, the branch q(z) of q = 1 + z q^p, the density P_p
//! whose moments they are, and the radial density of the averaged
//! characteristic-polynomial roots.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::{gamma, hypergeometric_series};

/// F_p(k) = C(pk + 1, k)/(pk + 1).
pub fn fc_number(p: usize, k: usize) -> BigRational {
    let top = p * k + 1;
    let mut binom = BigInt::one();
    for i in 0..k {
        binom = binom * BigInt::from(top - i) / BigInt::from(i + 1);
    }
    BigRational::new(binom, BigInt::from(top))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FCParams {
    pub p: usize,
}

impl FCParams {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidOrder { p, n: 0, reason: "p must be at least 2" });
        }
        Ok(FCParams { p })
    }

    /// (p−1)^{p−1}/p^p, the radius of convergence of Σ F_p(k) z^k.
    pub fn z_c(&self) -> f64 {
        let p = self.p as f64;
        (p - 1.0).powf(p - 1.0) / p.powf(p)
    }

    pub fn x_max(&self) -> f64 {
        1.0 / self.z_c()
    }

    /// w_c = √x_max, the edge of the generalized semicircle.
    pub fn w_c(&self) -> f64 {
        self.x_max().sqrt()
    }
}

const BRANCH_STEPS: usize = 64;
const NEWTON_TOL: f64 = 1e-14;

/// The solution of q = 1 + z q^p continued from q(0) = 1 along [0, z].
pub fn fc_branch_solve(p: usize, z: Complex64) -> Result<Complex64> {
    FCParams::new(p)?;
    let mut q = Complex64::one();
    let pf = p as f64;
    for step in 1..=BRANCH_STEPS {
        let zs = z * (step as f64 / BRANCH_STEPS as f64);
        let mut converged = false;
        for _ in 0..60 {
            let qp1 = q.powu(p as u32 - 1);
            let f = q - 1.0 - zs * qp1 * q;
            let df = 1.0 - zs * pf * qp1;
            if df.norm() < 1e-10 {
                return Err(Error::BranchPoint(format!("z = {zs} on the path from 0 to {z}")));
            }
            let dq = f / df;
            q -= dq;
            if !q.re.is_finite() || !q.im.is_finite() {
                return Err(Error::NewtonDivergence(format!("q = 1 + z q^{p} at z = {zs}")));
            }
            if dq.norm() <= NEWTON_TOL * q.norm().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NewtonDivergence(format!("q = 1 + z q^{p} at z = {zs}")));
        }
        // a double root of q − 1 − z q^p: the continuation would not be unique
        if (1.0 - zs * pf * q.powu(p as u32 - 1)).norm() < 1e-6 {
            return Err(Error::BranchPoint(format!("z = {zs} on the path from 0 to {z}")));
        }
    }
    Ok(q)
}

/// Upper and lower parameters and the prefactor of the n-th term of P_p.
#[derive(Clone, Debug, Serialize)]
pub struct FCTerm {
    pub n: usize,
    pub lambda: f64,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// P_p ∋ Λ x^{exponent} F(…; z_c x)
    pub exponent: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FCDensity {
    pub params: FCParams,
    pub terms: Vec<FCTerm>,
}

/// Above this fraction of x_max the series is replaced by the branch form.
pub const EDGE_FRACTION: f64 = 1.0 - 1e-4;

impl FCDensity {
    pub fn new(p: usize) -> Result<Self> {
        let params = FCParams::new(p)?;
        let pf = p as f64;
        let zc = params.z_c();
        let terms = (1..p)
            .map(|n| {
                let nf = n as f64;
                let num: f64 = (1..p).filter(|&m| m != n).map(|m| gamma((m as f64 - nf) / pf)).product();
                let den: f64 = (1..p).map(|m| gamma((m as f64 + 1.0) / (pf - 1.0) - nf / pf)).product();
                let lambda = (pf - 1.0).powf(-1.5) * (pf / (2.0 * PI)).sqrt() * zc.powf(nf / pf) * num / den;
                FCTerm {
                    n,
                    lambda,
                    upper: (1..p).map(|m| 1.0 - (1.0 + m as f64) / (pf - 1.0) + nf / pf).collect(),
                    lower: (1..p).filter(|&m| m != n).map(|m| 1.0 + (nf - m as f64) / pf).collect(),
                    exponent: (nf - pf) / pf,
                }
            })
            .collect();
        Ok(FCDensity { params, terms })
    }

    pub fn p(&self) -> usize {
        self.params.p
    }

    fn check_support(&self, x: f64) -> Result<()> {
        if x > 0.0 && x < self.params.x_max() {
            Ok(())
        } else {
            Err(Error::OutsideSupport { x, lo: 0.0, hi: self.params.x_max() })
        }
    }

    /// P_p(x) from the hypergeometric sum, with the summed tail bound.
    pub fn eval_series(&self, x: f64) -> Result<(f64, f64)> {
        self.check_support(x)?;
        let y = self.params.z_c() * x;
        let mut value = 0.0;
        let mut bound = 0.0;
        for t in &self.terms {
            let s = hypergeometric_series(&t.upper, &t.lower, y)?;
            let w = t.lambda * x.powf(t.exponent);
            value += w * s.value;
            bound += (w * s.error_bound).abs();
        }
        Ok((value, bound))
    }

    /// P_p(x) = |Im q(1/x + i0)|/(π x) from the continued branch of the
    /// Fuss–Catalan equation.
    pub fn eval_branch(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        let q = edge_branch(self.p(), x)?;
        Ok(q.im.abs() / (PI * x))
    }

    /// P_p(x): the series in the bulk, the branch form near x_max.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        if x > EDGE_FRACTION * self.params.x_max() {
            self.eval_branch(x)
        } else {
            Ok(self.eval_series(x)?.0.max(0.0))
        }
    }

    /// ∫_0^x P_p.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x >= self.params.x_max() {
            return Ok(1.0);
        }
        Ok(self.mass_between(0.0, x)?.clamp(0.0, 1.0))
    }

    /// ∫_a^b P_p for 0 ≤ a ≤ b ≤ x_max, in the variable t = x^{1/p} that
    /// removes the x^{(1−p)/p} singularity at the origin.
    pub fn mass_between(&self, a: f64, b: f64) -> Result<f64> {
        self.moment_between(0, a, b, 1e-13, 1e-11)
    }

    fn moment_between(&self, k: i32, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
        let xm = self.params.x_max();
        let b = b.min(xm);
        if b <= a {
            return Ok(0.0);
        }
        let pf = self.p() as f64;
        let f = |t: f64| -> Result<f64> {
            let x = t.powf(pf);
            if x <= 0.0 || x >= xm {
                return Ok(if x <= 0.0 { self.origin_limit() * pf } else { 0.0 });
            }
            Ok(pf * t.powf(pf - 1.0) * x.powi(k) * self.eval(x)?)
        };
        Ok(integrate(f, a.powf(1.0 / pf), b.powf(1.0 / pf), abs_tol, rel_tol)?.value)
    }

    /// lim_{x→0} x^{(p−1)/p} P_p(x) = Λ_{1,p}.
    pub fn origin_limit(&self) -> f64 {
        self.terms[0].lambda
    }

    /// ∫ x^k P_p(x) dx using the series only: the bulk by quadrature up to a
    /// cutoff below x_max, the rest from a fit √(x_max − x)(a + b(x_max − x))
    /// to series values at the cutoff.
    pub fn series_moment(&self, k: i32) -> Result<f64> {
        let xm = self.params.x_max();
        let pf = self.p() as f64;
        let delta = (1.0 - EDGE_FRACTION) * xm;
        let cut = xm - delta;
        let f = |t: f64| -> Result<f64> {
            let x = t.powf(pf);
            if x <= 0.0 {
                return Ok(if k == 0 { self.origin_limit() * pf } else { 0.0 });
            }
            Ok(pf * t.powf(pf - 1.0) * x.powi(k) * self.eval_series(x)?.0)
        };
        let bulk = integrate(f, 0.0, cut.powf(1.0 / pf), 1e-14, 1e-12)?.value;
        // P ≈ √u (a + b u), u = x_max − x, matched at u = δ and u = 2δ
        let p1 = self.eval_series(xm - delta)?.0 / delta.sqrt();
        let p2 = self.eval_series(xm - 2.0 * delta)?.0 / (2.0 * delta).sqrt();
        let b = (p2 - p1) / delta;
        let a = p1 - b * delta;
        // x = x_max − v², dx = 2v dv
        let g = |v: f64| -> Result<f64> {
            let u = v * v;
            Ok((xm - u).powi(k) * v * (a + b * u) * 2.0 * v)
        };
        let tail = integrate(g, 0.0, delta.sqrt(), 1e-18, 1e-13)?.value;
        Ok(bulk + tail)
    }
}

/// The non-real root of q^p − x q + x = 0 with the largest real part, which
/// is q(1/x ± i0) on the cut z ∈ (z_c, ∞).
fn edge_branch(p: usize, x: f64) -> Result<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(p, p);
    for i in 1..p {
        m[(i, i - 1)] = Complex64::one();
    }
    // monic q^p + c_1 q + c_0 with c_1 = −x, c_0 = x
    m[(0, p - 1)] = Complex64::new(-x, 0.0);
    m[(1, p - 1)] = Complex64::new(x, 0.0);
    let eig = m
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::NewtonDivergence("companion eigenvalues".into()))?;
    let polish = |mut q: Complex64| {
        for _ in 0..8 {
            let qp1 = q.powu(p as u32 - 1);
            let f = qp1 * q - x * q + x;
            let df = p as f64 * qp1 - x;
            if df.norm() == 0.0 {
                break;
            }
            q -= f / df;
        }
        q
    };
    eig.iter()
        .map(|&q| polish(q))
        .filter(|q| q.im.abs() > 1e-12 * q.norm())
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::BranchPoint(format!("no complex branch at x = {x}")))
}

/// max relative error of ∫ x^k P_p against F_p(k) for k = 0..=kmax.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub p: usize,
    pub rows: Vec<MomentRow>,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub quadrature: f64,
    pub exact: f64,
    pub rel_error: f64,
}

pub fn moments_check(p: usize, kmax: usize) -> Result<MomentReport> {
    let d = FCDensity::new(p)?;
    let mut rows = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let q = d.series_moment(k as i32)?;
        let exact = fc_number(p, k).to_f64().unwrap_or(f64::NAN);
        rows.push(MomentRow { k, quadrature: q, exact, rel_error: ((q - exact) / exact).abs() });
    }
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(MomentReport { p, rows, max_rel_error })
}

/// |y| P_p(y²), the generalized semicircle on (−w_c, w_c).
pub fn rho_gurau(p: usize, y: f64) -> Result<f64> {
    let d = FCDensity::new(p)?;
    rho_gurau_with(&d, y)
}

pub fn rho_gurau_with(d: &FCDensity, y: f64) -> Result<f64> {
    let wc = d.params.w_c();
    if y.abs() >= wc {
        return Err(Error::OutsideSupport { x: y, lo: -wc, hi: wc });
    }
    if y == 0.0 {
        // |y| · Λ_1 |y|^{2(1−p)/p}: finite only for p = 2
        return Ok(if d.p() == 2 { d.origin_limit() } else { f64::INFINITY });
    }
    Ok(y.abs() * d.eval(y * y)?)
}

/// Radial density of the roots of the averaged characteristic polynomial
/// with coupling μ̃ = μ N^{p−1}.
#[derive(Clone, Debug, Serialize)]
pub struct RadialDensity {
    pub p: usize,
    pub mu_tilde: f64,
    density: FCDensity,
}

impl RadialDensity {
    pub fn new(p: usize, mu_tilde: f64) -> Result<Self> {
        if !(mu_tilde > 0.0 && mu_tilde.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu_tilde must be positive, got {mu_tilde}")));
        }
        Ok(RadialDensity { p, mu_tilde, density: FCDensity::new(p)? })
    }

    pub fn fc(&self) -> &FCDensity {
        &self.density
    }

    /// (p μ̃ w_c²)^{1/p}.
    pub fn r_max(&self) -> f64 {
        (self.p as f64 * self.mu_tilde * self.density.params.x_max()).powf(1.0 / self.p as f64)
    }

    /// x = r^p/(p μ̃), the Fuss–Catalan variable of radius r.
    pub fn x_of_r(&self, r: f64) -> f64 {
        r.powi(self.p as i32) / (self.p as f64 * self.mu_tilde)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let rm = self.r_max();
        if !(r > 0.0 && r < rm) {
            return Err(Error::OutsideSupport { x: r, lo: 0.0, hi: rm });
        }
        let pf = self.p as f64;
        let y = r.powf(pf / 2.0) / (pf * self.mu_tilde).sqrt();
        Ok((pf / self.mu_tilde).sqrt() * r.powf(pf / 2.0 - 1.0) * rho_gurau_with(&self.density, y)?)
    }

    /// ∫_0^r ρ = ∫_0^{x(r)} P_p.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        self.density.cdf(self.x_of_r(r.max(0.0)))
    }

    /// CDF at each of the ascending radii, integrating interval by interval.
    pub fn cdf_sorted(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let xm = self.density.params.x_max();
        let mut out = Vec::with_capacity(radii.len());
        let mut acc = 0.0;
        let mut last = 0.0;
        for &r in radii {
            let x = self.x_of_r(r.max(0.0)).min(xm);
            if x < last {
                return Err(Error::InvalidArgument("radii must be ascending".into()));
            }
            acc += self.density.mass_between(last, x)?;
            last = x;
            out.push(acc.clamp(0.0, 1.0));
        }
        Ok(out)
    }
}

pub fn rho_radial(p: usize, mu_tilde: f64, r: f64) -> Result<f64> {
    RadialDensity::new(p, mu_tilde)?.eval(r)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `radii` and ρ.
pub fn ks_distance(density: &RadialDensity, radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf = density.cdf_sorted(&sorted)?;
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, f) in cdf.iter().enumerate() {
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Σ_{k<terms} F_p(k) z^k with the geometric tail bound for |z| < z_c.
pub fn fc_series(p: usize, z: Complex64, terms: usize) -> (Complex64, f64) {
    let mut sum = Complex64::zero();
    let mut zk = Complex64::one();
    for k in 0..terms {
        sum += zk * fc_number(p, k).to_f64().unwrap_or(f64::NAN);
        zk *= z;
    }
    let zc = FCParams { p }.z_c();
    let ratio = z.norm() / zc;
    // F_p(k) z_c^k is decreasing, so the tail is below F_p(K)|z|^K/(1 − |z|/z_c)
    let next = fc_number(p, terms).to_f64().unwrap_or(f64::INFINITY) * z.norm().powi(terms as i32);
    (sum, next / (1.0 - ratio))
}
