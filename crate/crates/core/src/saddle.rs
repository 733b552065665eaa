//! Saddles of the large-N action, Picard–Lefschetz flows, and the zero
//! radii predicted by the phase condition cos(N Im S) = 0.
//!
//! In the rescaled variable q = λQ, z = pμ̃/λ^p the action is
//! S[q] = q − z q^p/p − log(q/z^{1/p}), whose saddles solve q = 1 + z q^p.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuss_catalan::{fc_branch_solve, FCParams};
use crate::rootfinder::{find_roots_with, RootOptions, ScaledPoly};

/// Small phase given to real z when classifying thimbles.
pub const THETA0: f64 = 0.02;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ActionQ {
    pub p: usize,
    pub z: Complex64,
}

impl ActionQ {
    pub fn new(p: usize, z: Complex64) -> Result<Self> {
        FCParams::new(p)?;
        if z.norm() == 0.0 {
            return Err(Error::InvalidArgument("z = 0 has a degenerate saddle count".into()));
        }
        Ok(ActionQ { p, z })
    }

    /// z = pμ̃/λ^p.
    pub fn from_lambda(p: usize, mu_tilde: f64, lambda: Complex64) -> Result<Self> {
        Self::new(p, p as f64 * mu_tilde / lambda.powu(p as u32))
    }

    /// λ = (pμ̃/z)^{1/p} on the principal branch.
    pub fn lambda(&self, mu_tilde: f64) -> Complex64 {
        (self.p as f64 * mu_tilde / self.z).powf(1.0 / self.p as f64)
    }

    fn z_root(&self) -> Complex64 {
        self.z.powf(1.0 / self.p as f64)
    }

    /// S[q] with the principal logarithm.
    pub fn s(&self, q: Complex64) -> Complex64 {
        q - self.z * q.powu(self.p as u32) / self.p as f64 - (q / self.z_root()).ln()
    }

    /// S[q] with log q taken on the sheet whose argument is nearest `arg_hint`.
    fn s_continued(&self, q: Complex64, arg_hint: f64) -> (Complex64, f64) {
        let mut arg = q.arg();
        while arg - arg_hint > PI {
            arg -= 2.0 * PI;
        }
        while arg_hint - arg > PI {
            arg += 2.0 * PI;
        }
        let log_q = Complex64::new(q.norm().ln(), arg);
        let value = q - self.z * q.powu(self.p as u32) / self.p as f64 - log_q + self.z_root().ln();
        (value, arg)
    }

    pub fn ds(&self, q: Complex64) -> Complex64 {
        Complex64::one() - self.z * q.powu(self.p as u32 - 1) - q.inv()
    }

    pub fn d2s(&self, q: Complex64) -> Complex64 {
        -(self.p as f64 - 1.0) * self.z * q.powu(self.p as u32 - 2) + (q * q).inv()
    }

    /// z q^p − q + 1.
    pub fn saddle_residual(&self, q: Complex64) -> Complex64 {
        self.z * q.powu(self.p as u32) - q + 1.0
    }
}

/// S[Q] = λQ − μ̃Q^p − log Q, the action before rescaling.
pub fn action_lambda(p: usize, mu_tilde: f64, lambda: Complex64, big_q: Complex64) -> Complex64 {
    lambda * big_q - mu_tilde * big_q.powu(p as u32) - big_q.ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct SaddlePoint {
    pub q: Complex64,
    pub s_value: Complex64,
    pub contributing: bool,
    pub dominant: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SaddleSet {
    pub p: usize,
    pub z: Complex64,
    pub contour_radius: f64,
    pub saddles: Vec<SaddlePoint>,
}

fn refine(action: &ActionQ, mut q: Complex64) -> Complex64 {
    let p = action.p as u32;
    for _ in 0..50 {
        let f = action.saddle_residual(q);
        let df = action.z * (action.p as f64) * q.powu(p - 1) - 1.0;
        if df.norm() == 0.0 {
            break;
        }
        let dq = f / df;
        q -= dq;
        if dq.norm() <= 1e-16 * q.norm() {
            break;
        }
    }
    q
}

/// All p roots of z q^p − q + 1, Newton-refined.
pub fn find_saddles(p: usize, z: Complex64) -> Result<SaddleSet> {
    let action = ActionQ::new(p, z)?;
    let mut coeffs = vec![Complex64::zero(); p + 1];
    coeffs[0] = Complex64::one();
    coeffs[1] = -Complex64::one();
    coeffs[p] = z;
    let poly = ScaledPoly::from_c64(&coeffs);
    let roots = find_roots_with(&poly, &RootOptions { tol: 1e-10, ..RootOptions::default() })?;
    let mut saddles: Vec<SaddlePoint> = roots
        .roots
        .into_iter()
        .map(|q| {
            let q = refine(&action, q);
            SaddlePoint { q, s_value: action.s(q), contributing: false, dominant: false }
        })
        .collect();
    saddles.sort_by(|a, b| a.q.re.total_cmp(&b.q.re).then(a.q.im.total_cmp(&b.q.im)));
    let radius = saddles.iter().map(|s| s.q.norm()).fold(f64::INFINITY, f64::min) * 1e-2;
    Ok(SaddleSet { p, z, contour_radius: radius, saddles })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowDirection {
    Ascent,
    Descent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Entered |q| < contour radius.
    Contour,
    /// |q| exceeded the outer radius.
    Escaped,
    /// |Re S| exceeded the configured bound.
    ReSBound,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub contour_radius: f64,
    pub outer_radius: f64,
    pub re_s_bound: f64,
    pub max_steps: usize,
    /// Distance of the starting point from the saddle.
    pub start_offset: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { contour_radius: 1e-2, outer_radius: 1e3, re_s_bound: 1e4, max_steps: 100_000, start_offset: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Thimble {
    pub saddle: usize,
    pub direction: FlowDirection,
    /// ±1: which of the two branches leaving the saddle.
    pub branch: i8,
    pub points: Vec<Complex64>,
    pub termination: Termination,
    pub arc_length: f64,
    /// max |Im S − Im S(saddle)| along the path.
    pub im_s_drift: f64,
}

/// Gradient flow of Re S from the saddle `q0`, Im S held fixed by
/// projection after every RK4 step in arc length.
pub fn flow(action: &ActionQ, saddle: usize, q0: Complex64, direction: FlowDirection, branch: i8, opts: &FlowOptions) -> Result<Thimble> {
    let residual = action.saddle_residual(q0).norm();
    if residual > 1e-10 * (1.0 + q0.norm().powi(action.p as i32)) {
        return Err(Error::Flow(format!("q = {q0} is not a saddle (residual {residual:e})")));
    }
    let sign = match direction {
        FlowDirection::Ascent => 1.0,
        FlowDirection::Descent => -1.0,
    };
    // S'' d² is real positive along the ascent axis, negative along descent
    let d = Complex64::from_polar(1.0, -action.d2s(q0).arg() / 2.0);
    let axis = if direction == FlowDirection::Ascent { d } else { d * Complex64::i() };
    let mut q = q0 + axis * (opts.start_offset * branch as f64);
    let (s0, mut arg) = action.s_continued(q0, q0.arg());
    let target = s0.im;
    let field = |q: Complex64| {
        let v = action.ds(q).conj();
        v / v.norm() * sign
    };
    let mut points = vec![q0, q];
    let mut arc = opts.start_offset;
    let mut drift = 0.0f64;
    let mut termination = Termination::StepLimit;
    for _ in 0..opts.max_steps {
        let h = (1e-2 * q.norm().max(1e-3)).min(0.05 * q.norm()).max(1e-12);
        let k1 = field(q);
        let k2 = field(q + k1 * (h / 2.0));
        let k3 = field(q + k2 * (h / 2.0));
        let k4 = field(q + k3 * h);
        let mut next = q + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !next.re.is_finite() || !next.im.is_finite() {
            return Err(Error::Flow(format!("non-finite step from q = {q}")));
        }
        // project back onto the level set Im S = Im S(saddle)
        let (s_next, _) = action.s_continued(next, arg);
        let grad = action.ds(next);
        if grad.norm() > 0.0 {
            next -= Complex64::i() * grad.conj() * ((s_next.im - target) / grad.norm_sqr());
        }
        let (s_now, a) = action.s_continued(next, arg);
        arg = a;
        drift = drift.max((s_now.im - target).abs());
        arc += (next - q).norm();
        q = next;
        points.push(q);
        if q.norm() < opts.contour_radius {
            termination = Termination::Contour;
            break;
        }
        if q.norm() > opts.outer_radius {
            termination = Termination::Escaped;
            break;
        }
        if s_now.re.abs() > opts.re_s_bound {
            termination = Termination::ReSBound;
            break;
        }
    }
    Ok(Thimble { saddle, direction, branch, points, termination, arc_length: arc, im_s_drift: drift })
}

/// Whether any segment of the polyline meets the circle |q| = radius.
pub fn crosses_circle(points: &[Complex64], radius: f64) -> bool {
    points.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let inside_a = a.norm() < radius;
        let inside_b = b.norm() < radius;
        if inside_a != inside_b {
            return true;
        }
        if inside_a {
            return false;
        }
        // both outside: the closest point of the segment to the origin
        let d = b - a;
        let t = if d.norm_sqr() == 0.0 { 0.0 } else { (-(a.conj() * d).re / d.norm_sqr()).clamp(0.0, 1.0) };
        (a + d * t).norm() < radius
    })
}

/// Flags saddles whose ascent thimbles reach the small contour around q = 0,
/// and among those the ones with the largest Re S.
pub fn contributing_saddles(p: usize, z: Complex64, contour_radius: Option<f64>) -> Result<(SaddleSet, Vec<Thimble>)> {
    let mut set = find_saddles(p, z)?;
    if let Some(r) = contour_radius {
        set.contour_radius = r;
    }
    let action = ActionQ::new(p, z)?;
    let opts = FlowOptions { contour_radius: set.contour_radius, ..FlowOptions::default() };
    let jobs: Vec<(usize, i8)> = (0..set.saddles.len()).flat_map(|i| [(i, 1i8), (i, -1i8)]).collect();
    let thimbles: Vec<Thimble> = jobs
        .par_iter()
        .map(|&(i, b)| flow(&action, i, set.saddles[i].q, FlowDirection::Ascent, b, &opts))
        .collect::<Result<_>>()?;
    for t in &thimbles {
        if crosses_circle(&t.points, set.contour_radius) {
            set.saddles[t.saddle].contributing = true;
        }
    }
    mark_dominant(&mut set.saddles, |s| s.s_value.re);
    Ok((set, thimbles))
}

const TIE_TOL: f64 = 1e-6;

fn mark_dominant(saddles: &mut [SaddlePoint], re_s: impl Fn(&SaddlePoint) -> f64) {
    let best = saddles.iter().filter(|s| s.contributing).map(&re_s).fold(f64::NEG_INFINITY, f64::max);
    for s in saddles.iter_mut() {
        s.dominant = s.contributing && re_s(s) >= best - TIE_TOL * (1.0 + best.abs());
    }
}

/// Thimble classification at real z0 tilted by e^{iθ0}.
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub p: usize,
    pub z0: f64,
    pub theta0: f64,
    /// Saddles at z0 e^{iθ0}; `dominant` marks the leading-order ones.
    pub tilted: SaddleSet,
    /// The same saddles continued back to the real z0.
    pub real: Vec<SaddlePoint>,
    pub thimbles: Vec<Thimble>,
}

impl Classification {
    pub fn leading(&self) -> Vec<usize> {
        (0..self.real.len()).filter(|&i| self.tilted.saddles[i].dominant).collect()
    }

    pub fn leading_count(&self) -> usize {
        self.leading().len()
    }

    /// (max |ΔRe S|, max |Im S_i + Im S_j|) over leading pairs at real z0.
    pub fn pair_agreement(&self) -> (f64, f64) {
        let lead = self.leading();
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        for (a, &i) in lead.iter().enumerate() {
            for &j in &lead[a + 1..] {
                let (si, sj) = (self.real[i].s_value, self.real[j].s_value);
                re = re.max((si.re - sj.re).abs());
                im = im.max((si.im + sj.im).abs());
            }
        }
        (re, im)
    }
}

/// Saddles and contributions at z0 e^{iθ0}; leading order is decided by
/// Re S of the saddles continued back to the real axis, where complex
/// pairs are exact conjugates.
pub fn classify(p: usize, z0: f64, theta0: f64) -> Result<Classification> {
    let z = Complex64::from_polar(z0, theta0);
    let (mut tilted, thimbles) = contributing_saddles(p, z, None)?;
    let real_action = ActionQ::new(p, Complex64::new(z0, 0.0))?;
    let steps = 16;
    let real: Vec<SaddlePoint> = tilted
        .saddles
        .iter()
        .map(|s| {
            let mut q = s.q;
            for k in (0..steps).rev() {
                let a = ActionQ { p, z: Complex64::from_polar(z0, theta0 * k as f64 / steps as f64) };
                q = refine(&a, q);
            }
            SaddlePoint { q, s_value: real_action.s(q), contributing: s.contributing, dominant: false }
        })
        .collect();
    let re: Vec<f64> = real.iter().map(|s| s.s_value.re).collect();
    let best = tilted
        .saddles
        .iter()
        .zip(&re)
        .filter(|(s, _)| s.contributing)
        .map(|(_, r)| *r)
        .fold(f64::NEG_INFINITY, f64::max);
    for (s, r) in tilted.saddles.iter_mut().zip(&re) {
        s.dominant = s.contributing && *r >= best - TIE_TOL * (1.0 + best.abs());
    }
    Ok(Classification { p, z0, theta0, tilted, real, thimbles })
}

/// q*(z) on the branch continued from q(0) = 1, z = pμ̃/λ^p.
pub fn omega_saddle(p: usize, mu_tilde: f64, lambda: Complex64) -> Result<Complex64> {
    let action = ActionQ::from_lambda(p, mu_tilde, lambda)?;
    fc_branch_solve(p, action.z)
}

/// On the ray λ = r inside the support, the complex saddle with the largest
/// Re q and Im q > 0.
fn ray_saddle(p: usize, mu_tilde: f64, r: f64) -> Result<Complex64> {
    let z = Complex64::new(p as f64 * mu_tilde / r.powi(p as i32), 0.0);
    let set = find_saddles(p, z)?;
    set.saddles
        .iter()
        .map(|s| s.q)
        .filter(|q| q.im > 1e-12 * q.norm())
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::OutsideSupport { x: r, lo: 0.0, hi: (p as f64 * mu_tilde / FCParams { p }.z_c()).powf(1.0 / p as f64) })
}

fn r_edge(p: usize, mu_tilde: f64) -> f64 {
    (p as f64 * mu_tilde / FCParams { p }.z_c()).powf(1.0 / p as f64)
}

/// |Im S[Q*]| on the ray: Im q (1 − 1/p) − arg q at the saddle.
pub fn im_action_on_ray(p: usize, mu_tilde: f64, r: f64) -> Result<f64> {
    let q = ray_saddle(p, mu_tilde, r)?;
    Ok((q.im * (1.0 - 1.0 / p as f64) - q.arg()).abs())
}

/// (p/π)|Im Q*| with Q* = q*/r; zero at and beyond the support edge.
pub fn rho_from_saddle(p: usize, mu_tilde: f64, r: f64) -> Result<f64> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::OutsideSupport { x: r, lo: 0.0, hi: r_edge(p, mu_tilde) });
    }
    if r >= r_edge(p, mu_tilde) {
        return Ok(0.0);
    }
    let q = ray_saddle(p, mu_tilde, r)?;
    Ok(p as f64 / PI * (q.im / r).abs())
}

/// Radii on the positive real ray where |Im S[Q*(r)]| = (k + 1/2)π/N.
pub fn predict_zero_radii(p: usize, mu_tilde: f64, n: usize) -> Result<Vec<f64>> {
    FCParams::new(p)?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let edge = r_edge(p, mu_tilde);
    let lo = edge * 1e-9;
    let hi = edge * (1.0 - 1e-12);
    let g = |r: f64| im_action_on_ray(p, mu_tilde, r);
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    let mut radii = Vec::new();
    for k in 0.. {
        let target = (k as f64 + 0.5) * PI / n as f64;
        if target >= g_lo {
            break;
        }
        if target <= g_hi {
            continue;
        }
        // |Im S| decreases from π/p at r → 0 to 0 at the edge
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m)? > target {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * b {
                break;
            }
        }
        radii.push(0.5 * (a + b));
    }
    if radii.is_empty() {
        return Err(Error::NoBracket(format!("no quantized radius for p={p}, N={n}")));
    }
    radii.sort_by(f64::total_cmp);
    Ok(radii)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuss_catalan::rho_radial;

    #[test]
    fn quadratic_saddles() {
        let set = find_saddles(2, Complex64::new(0.03, 0.0)).unwrap();
        let mut qs: Vec<f64> = set.saddles.iter().map(|s| s.q.re).collect();
        qs.sort_by(f64::total_cmp);
        let d = (1.0f64 - 0.12).sqrt();
        assert!((qs[0] - (1.0 - d) / 0.06).abs() < 1e-12);
        assert!((qs[1] - (1.0 + d) / 0.06).abs() < 1e-10);
    }

    #[test]
    fn saddle_residuals() {
        for p in 2..=6 {
            for z in [Complex64::new(0.01, 0.002), Complex64::new(0.3, -0.1), Complex64::new(-2.0, 0.5)] {
                let set = find_saddles(p, z).unwrap();
                assert_eq!(set.saddles.len(), p);
                let a = ActionQ::new(p, z).unwrap();
                for s in &set.saddles {
                    assert!(a.saddle_residual(s.q).norm() < 1e-12, "p={p} z={z} q={}", s.q);
                }
            }
        }
        assert!(find_saddles(3, Complex64::zero()).is_err());
    }

    #[test]
    fn double_root_at_critical_z() {
        let zc = FCParams { p: 3 }.z_c();
        let set = find_saddles(3, Complex64::new(zc, 0.0)).unwrap();
        let near: Vec<_> = set.saddles.iter().filter(|s| (s.q - 1.5).norm() < 1e-5).collect();
        assert_eq!(near.len(), 2);
        let half = find_saddles(3, Complex64::new(zc / 2.0, 0.0)).unwrap();
        assert!(half.saddles.iter().any(|s| (s.q - 1.0).norm() < 0.3 && s.q.im.abs() < 1e-12));
    }

    #[test]
    fn flows_conserve_im_s() {
        let z = Complex64::from_polar(0.23, THETA0);
        let (set, thimbles) = contributing_saddles(3, z, None).unwrap();
        assert_eq!(thimbles.len(), 2 * set.saddles.len());
        for t in &thimbles {
            assert!(t.im_s_drift < 1e-8 * (1.0 + t.arc_length), "{} {}", t.im_s_drift, t.arc_length);
        }
        let a = ActionQ::new(3, z).unwrap();
        for dir in [FlowDirection::Ascent, FlowDirection::Descent] {
            let t = flow(&a, 0, set.saddles[0].q, dir, 1, &FlowOptions::default()).unwrap();
            assert!(t.im_s_drift < 1e-8 * (1.0 + t.arc_length));
        }
    }

    #[test]
    fn descent_from_near_one_saddle() {
        let z = Complex64::from_polar(0.03, THETA0);
        let set = find_saddles(3, z).unwrap();
        let a = ActionQ::new(3, z).unwrap();
        let (i, s) = set.saddles.iter().enumerate().min_by(|x, y| (x.1.q - 1.0).norm().total_cmp(&(y.1.q - 1.0).norm())).unwrap();
        for b in [1, -1] {
            let t = flow(&a, i, s.q, FlowDirection::Descent, b, &FlowOptions::default()).unwrap();
            let end = *t.points.last().unwrap();
            assert!(a.s(end).re < 0.0);
        }
    }

    #[test]
    fn figure_counts() {
        for (p, z0, want) in [(3, 0.03, 1), (3, 0.23, 2), (4, 0.01, 1), (4, 0.06, 1), (4, 0.16, 2)] {
            let c = classify(p, z0, THETA0).unwrap();
            assert_eq!(c.leading_count(), want, "p={p} z0={z0}");
            if want == 2 {
                let (re, im) = c.pair_agreement();
                assert!(re < 1e-6 && im < 1e-6, "{re} {im}");
            }
        }
    }

    #[test]
    fn circle_crossing() {
        let pts = [Complex64::new(-1.0, 0.05), Complex64::new(1.0, 0.05)];
        assert!(crosses_circle(&pts, 0.1));
        assert!(!crosses_circle(&pts, 0.01));
        assert!(crosses_circle(&[Complex64::new(1.0, 0.0), Complex64::new(0.001, 0.0)], 0.01));
    }

    #[test]
    fn omega_values() {
        assert!((omega_saddle(3, 0.3, Complex64::new(1e6, 0.0)).unwrap() - 1.0).norm() < 1e-12);
        // p = 2, μ̃ = 1/2, λ = 3: z = 1/9, q = (1 − √(1 − 4z))/(2z)
        let z = 1.0 / 9.0;
        let want = (1.0 - (1.0f64 - 4.0 * z).sqrt()) / (2.0 * z);
        assert!((omega_saddle(2, 0.5, Complex64::new(3.0, 0.0)).unwrap().re - want).abs() < 1e-13);
    }

    #[test]
    fn density_from_saddle() {
        for r in [0.1f64, 1.0, 1.9] {
            let want = (4.0 - r * r).sqrt() / PI;
            assert!((rho_from_saddle(2, 0.5, r).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(rho_from_saddle(3, 1.0 / 3.0, 5.0).unwrap(), 0.0);
        for (p, mt) in [(3, 1.0 / 3.0), (4, 0.25)] {
            let edge = r_edge(p, mt);
            for j in 1..20 {
                let r = edge * j as f64 / 20.0;
                let a = rho_from_saddle(p, mt, r).unwrap();
                let b = rho_radial(p, mt, r).unwrap();
                assert!((a - b).abs() < 1e-9, "p={p} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn predicted_radii() {
        let n = 200;
        let radii = predict_zero_radii(3, 1.0 / 3.0, n).unwrap();
        assert!((radii.len() as i64 - (n / 3) as i64).abs() <= 1, "{}", radii.len());
        let edge = r_edge(3, 1.0 / 3.0);
        assert!(im_action_on_ray(3, 1.0 / 3.0, edge * (1.0 - 1e-8)).unwrap() < 1e-3);
    }
}
