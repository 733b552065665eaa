//! Gaussian-averaged characteristic polynomial and its effective coupling.
//!
//! After averaging over the tensor, every preset collapses to
//! Z(λ) = ∫ exp(λ ψ̄·ψ − μ (ψ̄·ψ)^p), whose coefficient of λ^{N−pk} is
//! (−μ)^k N!/(k!(N−pk)!).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{
    increasing_tuples, paired_char_poly, Gen, GrassmannPoly, LambdaPoly, ScalarKind, Species,
    TupleCurrents,
};
use crate::scalar::{exact_real, exact_to_c64, ln_abs_bigint, rat, rational_to_f64, Coeff, Exact};

/// Z(λ) = Σ_k (−μ)^k N!/(k!(N−pk)!) λ^{N−pk}.
#[derive(Clone, Debug, PartialEq)]
pub struct AvgCharPoly {
    n: usize,
    p: usize,
    mu: Exact,
}

pub fn avg_coeffs(n: usize, p: usize, mu: Exact) -> Result<AvgCharPoly> {
    if n == 0 || p < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 1 and p >= 2, got n={n}, p={p}")));
    }
    Ok(AvgCharPoly { n, p, mu })
}

impl AvgCharPoly {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mu(&self) -> &Exact {
        &self.mu
    }

    pub fn mu_tilde(&self) -> MuTilde {
        MuTilde::from_mu(&self.mu, self.n, self.p)
    }

    /// Number of interaction terms, ⌊N/p⌋.
    pub fn terms(&self) -> usize {
        self.n / self.p
    }

    /// N!/(k!(N−pk)!) as an exact integer.
    pub fn combinatorial(&self, k: usize) -> BigInt {
        let mut num = BigInt::one();
        for j in (self.n - self.p * k + 1)..=self.n {
            num *= j;
        }
        let mut den = BigInt::one();
        for j in 2..=k {
            den *= j;
        }
        num / den
    }

    /// Coefficient of λ^{N−pk}, for 0 ≤ k ≤ ⌊N/p⌋.
    pub fn term(&self, k: usize) -> Exact {
        let mut c = exact_real(BigRational::from_integer(self.combinatorial(k)));
        let neg_mu = -self.mu.clone();
        for _ in 0..k {
            c = c * neg_mu.clone();
        }
        c
    }

    /// All terms (−μ)^k N!/(k!(N−pk)!) for k = 0..=⌊N/p⌋, built incrementally.
    pub fn terms_exact(&self) -> Vec<Exact> {
        let mut out = Vec::with_capacity(self.terms() + 1);
        let mut c = Exact::one();
        out.push(c.clone());
        for k in 0..self.terms() {
            let mut ratio = BigInt::one();
            for j in 0..self.p {
                ratio *= self.n - self.p * k - j;
            }
            let scale = exact_real(BigRational::new(ratio, BigInt::from(k + 1)));
            c = c * scale * (-self.mu.clone());
            out.push(c.clone());
        }
        out
    }

    /// Coefficient of λ^m.
    pub fn coeff(&self, m: usize) -> Exact {
        if m > self.n || (self.n - m) % self.p != 0 {
            return Exact::zero();
        }
        self.term((self.n - m) / self.p)
    }

    pub fn to_lambda_poly(&self) -> LambdaPoly<Exact> {
        let mut coeffs = vec![Exact::zero(); self.n + 1];
        for (k, c) in self.terms_exact().into_iter().enumerate() {
            coeffs[self.n - self.p * k] = c;
        }
        LambdaPoly::new(coeffs)
    }

    /// (phase, ln|c|) of each term, indexed by k; ln|c| = −∞ for zero terms.
    pub fn log_terms(&self) -> Vec<(Complex64, f64)> {
        let mu = exact_to_c64(&self.mu);
        let ln_mu = if self.mu.is_zero() { f64::NEG_INFINITY } else { ln_abs_exact(&self.mu) };
        let phase_mu = if self.mu.is_zero() { Complex64::new(0.0, 0.0) } else { -mu / mu.norm() };
        let mut ln_comb = 0.0;
        let mut phase = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.terms() + 1);
        out.push((phase, 0.0));
        for k in 0..self.terms() {
            for j in 0..self.p {
                ln_comb += ((self.n - self.p * k - j) as f64).ln();
            }
            ln_comb -= ((k + 1) as f64).ln();
            phase *= phase_mu;
            let ln = if self.mu.is_zero() { f64::NEG_INFINITY } else { ln_comb + (k + 1) as f64 * ln_mu };
            out.push((phase, ln));
        }
        out
    }

    /// Z(λ) and Z'(λ) in double precision by the three-term recurrence
    /// Z_{n+1} = λ Z_n − pμ n!/(n−p+1)! Z_{n−p+1}, Z'_N = N Z_{N−1}.
    /// Suitable for moderate N and |λ| away from the root cloud; values are
    /// returned scaled by 2^{-shift} to avoid overflow, as (Z, Z', shift).
    pub fn eval_recurrence(&self, lambda: Complex64) -> (Complex64, Complex64, i64) {
        let mu = exact_to_c64(&self.mu);
        let p = self.p;
        // z[j] holds Z_j for the last p values
        let mut hist: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); p];
        hist[0] = Complex64::new(1.0, 0.0);
        let mut shift = 0i64;
        let mut prev = Complex64::new(1.0, 0.0);
        for n in 0..self.n {
            let cur = hist[n % p];
            let back = if n + 1 >= p {
                // n!/(n−p+1)! = n (n−1) … (n−p+2)
                let mut f = 1.0;
                for j in 0..p - 1 {
                    f *= (n - j) as f64;
                }
                p as f64 * mu * f * hist[(n + 1 - p) % p]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let next = lambda * cur - back;
            prev = cur;
            hist[(n + 1) % p] = next;
            let mag = next.norm();
            if mag > 1e150 || (mag < 1e-150 && mag > 0.0) {
                let e = mag.log2().round() as i32;
                let s = 2f64.powi(-e);
                for h in hist.iter_mut() {
                    *h *= s;
                }
                prev *= s;
                shift += e as i64;
            }
        }
        let z = hist[self.n % p];
        (z, self.n as f64 * prev, shift)
    }
}

fn ln_abs_exact(z: &Exact) -> f64 {
    let re = rational_to_f64(&z.re);
    let im = rational_to_f64(&z.im);
    let h = re.hypot(im);
    if h.is_finite() && h > 0.0 && h > 1e-300 {
        return h.ln();
    }
    // fall back to the larger component's log magnitude
    let part = if z.re.abs() >= z.im.abs() { &z.re } else { &z.im };
    ln_abs_bigint(part.numer()) - ln_abs_bigint(part.denom())
}

/// μ̃ = μ N^{p−1}.
#[derive(Clone, Debug, PartialEq)]
pub struct MuTilde {
    pub value: Exact,
}

impl MuTilde {
    pub fn new(value: Exact) -> Self {
        MuTilde { value }
    }

    pub fn from_mu(mu: &Exact, n: usize, p: usize) -> Self {
        MuTilde { value: mu.clone() * exact_real(n_power(n, p - 1)) }
    }

    pub fn to_mu(&self, n: usize, p: usize) -> Exact {
        let np = n_power(n, p - 1);
        Exact::new(self.value.re.clone() / np.clone(), self.value.im.clone() / np)
    }
}

fn n_power(n: usize, e: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n).pow(e as u32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetKind {
    /// J = ψ_{a_1}…ψ_{a_p}, J̄ = ψ̄_{a_1}…ψ̄_{a_p}.
    PsiPPsiBarP,
    /// J = ψ_{a_1}…ψ_{a_k} ψ̄_{a_{k+1}}…ψ̄_{a_p}, J̄ the species swap.
    MixedK(usize),
    /// J sums the p words with a single ψ̄; J̄ the words with a single ψ.
    SingleBarSum,
}

impl PresetKind {
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase().replace(['_', '-'], "");
        match lower.as_str() {
            "psippsibarp" | "psip" => Ok(PresetKind::PsiPPsiBarP),
            "singlebarsum" | "singlebar" => Ok(PresetKind::SingleBarSum),
            _ => {
                if let Some(k) = lower.strip_prefix("mixedk").or_else(|| lower.strip_prefix("mixed")) {
                    let k = k.trim_matches(|c| c == '(' || c == ')' || c == '=' || c == 'k');
                    let k: usize = k.parse().map_err(|_| Error::InvalidPreset(name.to_string()))?;
                    return Ok(PresetKind::MixedK(k));
                }
                Err(Error::InvalidPreset(name.to_string()))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            PresetKind::PsiPPsiBarP => "PsiP_PsiBarP".to_string(),
            PresetKind::MixedK(k) => format!("MixedK{k}"),
            PresetKind::SingleBarSum => "SingleBarSum".to_string(),
        }
    }
}

/// Interaction family with its coupling α and two-point normalization β.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionPreset {
    pub kind: PresetKind,
    pub alpha: BigRational,
    pub beta: BigRational,
}

impl InteractionPreset {
    /// α = 1 and β = 1/2 for real even-p tensors, β = 1 otherwise.
    pub fn new(kind: PresetKind, p: usize, scalar: ScalarKind) -> Self {
        InteractionPreset { kind, alpha: BigRational::one(), beta: default_beta(p, scalar) }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if let PresetKind::MixedK(k) = self.kind {
            if k == 0 || k >= p {
                return Err(Error::InvalidPreset(format!("MixedK needs 1 <= k < p, got k={k}, p={p}")));
            }
        }
        if self.beta.is_negative() {
            return Err(Error::InvalidPreset("beta must be nonnegative".into()));
        }
        Ok(())
    }

    /// How the tensor is realized for this p and scalar kind.
    pub fn species(p: usize, scalar: ScalarKind) -> Species {
        match (p % 2, scalar) {
            (1, _) => Species::OddGrassmann,
            (_, ScalarKind::Real) => Species::Real,
            (_, ScalarKind::Complex) => Species::Complex,
        }
    }

    /// (J_A, J̄_A) for every increasing tuple A.
    pub fn sources<C: Coeff>(&self, n: usize, p: usize) -> Result<(Vec<Vec<usize>>, Vec<GrassmannPoly<C>>, Vec<GrassmannPoly<C>>)> {
        self.validate(p)?;
        if p > n {
            return Err(Error::InvalidOrder { p, n, reason: "need p <= n" });
        }
        let tuples: Vec<Vec<usize>> = increasing_tuples(n, p).collect();
        let mut js = Vec::with_capacity(tuples.len());
        let mut jbars = Vec::with_capacity(tuples.len());
        for t in &tuples {
            let word = |bars: &dyn Fn(usize) -> bool| -> Vec<Gen> {
                t.iter().enumerate().map(|(i, &a)| Gen { index: a, bar: bars(i) }).collect()
            };
            let mut j = GrassmannPoly::zero(n);
            let mut jbar = GrassmannPoly::zero(n);
            match self.kind {
                PresetKind::PsiPPsiBarP => {
                    j.add_word(C::one(), &word(&|_| false));
                    jbar.add_word(C::one(), &word(&|_| true));
                }
                PresetKind::MixedK(k) => {
                    j.add_word(C::one(), &word(&|i| i >= k));
                    jbar.add_word(C::one(), &word(&|i| i < k));
                }
                PresetKind::SingleBarSum => {
                    for pos in 0..p {
                        j.add_word(C::one(), &word(&|i| i == pos));
                        jbar.add_word(C::one(), &word(&|i| i != pos));
                    }
                }
            }
            js.push(j);
            jbars.push(jbar);
        }
        Ok((tuples, js, jbars))
    }

    /// Currents X_A, Y_A with S_int = Σ_A T_A X_A + T̄_A Y_A.
    ///
    /// Real T: X = α(J + J̄). Complex T: X = αJ̄, Y = αJ. For odd p the
    /// tensor is anticommuting and J̄_A T_A = −T_A J̄_A, so X = −αJ̄.
    pub fn currents<C: Coeff>(&self, n: usize, p: usize, scalar: ScalarKind, alpha: &C) -> Result<(TupleCurrents<C>, Species)> {
        let species = Self::species(p, scalar);
        let (tuples, js, jbars) = self.sources::<C>(n, p)?;
        let (x, y) = match species {
            Species::Real => {
                let x = js.iter().zip(&jbars).map(|(j, jb)| j.add(jb).map(|s| s.scale(alpha))).collect::<Result<Vec<_>>>()?;
                let y = vec![GrassmannPoly::zero(n); x.len()];
                (x, y)
            }
            Species::Complex => (
                jbars.iter().map(|jb| jb.scale(alpha)).collect(),
                js.iter().map(|j| j.scale(alpha)).collect(),
            ),
            Species::OddGrassmann => (
                jbars.iter().map(|jb| jb.scale(&-alpha.clone())).collect(),
                js.iter().map(|j| j.scale(alpha)).collect(),
            ),
        };
        Ok((TupleCurrents { n, p, tuples, x, y }, species))
    }
}

pub fn default_beta(p: usize, scalar: ScalarKind) -> BigRational {
    if p % 2 == 0 && scalar == ScalarKind::Real {
        rat(1, 2)
    } else {
        rat(1, 1)
    }
}

fn factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, j| acc * j)
}

fn sign_pow(e: i64) -> BigRational {
    if e.rem_euclid(2) == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// Effective coupling μ for a preset, using each family's sign exponent as
/// written: ζ = (−1)^{p(p−1)/2 − 1} for PsiP_PsiBarP,
/// (−1)^{p(p−1)/2 + (p−k) − 1} for MixedK(k) and (−1)^{p(p−1)/2} (times p)
/// for SingleBarSum.
pub fn mu_from_preset(preset: &InteractionPreset, p: usize, n: usize) -> Result<Exact> {
    preset.validate(p)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let tri = (p * (p - 1) / 2) as i64;
    let (sign, mult) = match preset.kind {
        PresetKind::PsiPPsiBarP => (sign_pow(tri - 1), 1),
        PresetKind::MixedK(k) => (sign_pow(tri + (p - k) as i64 - 1), 1),
        PresetKind::SingleBarSum => (sign_pow(tri), p),
    };
    let denom = BigRational::from_integer(factorial(p)) * n_power(n, p - 1);
    let value = sign * preset.alpha.clone() * preset.alpha.clone() * preset.beta.clone()
        * BigRational::from_integer(BigInt::from(mult))
        / denom;
    Ok(exact_real(value))
}

/// σ^n He_n(λ/σ) from h_{k+1} = λ h_k − kσ² h_{k−1}.
pub fn hermite_reference(n: usize, sigma: &BigRational) -> LambdaPoly<Exact> {
    let s2 = exact_real(sigma.clone() * sigma.clone());
    let lambda = LambdaPoly::monomial(1);
    let mut prev = LambdaPoly::<Exact>::zero();
    let mut cur = LambdaPoly::one();
    for k in 0..n {
        let kk = exact_real(BigRational::from_integer(BigInt::from(k)));
        let next = lambda.clone() * cur.clone() - prev.scale(&(kk * s2.clone()));
        prev = cur;
        cur = next;
    }
    cur
}

/// avg_coeffs(n, 2, σ²/2) == σ^n He_n(λ/σ), coefficient by coefficient.
pub fn hermite_consistency(n: usize, sigma: &BigRational) -> Result<bool> {
    if n == 0 {
        return Ok(hermite_reference(0, sigma) == LambdaPoly::one());
    }
    let mu = exact_real(sigma.clone() * sigma.clone() / BigRational::from_integer(BigInt::from(2)));
    Ok(avg_coeffs(n, 2, mu)?.to_lambda_poly() == hermite_reference(n, sigma))
}

/// Exact Gaussian average of the characteristic polynomial for the given
/// currents, with ⟨T_A T_A⟩ = c (real) or ⟨T_A T̄_A⟩ = c (complex and odd).
///
/// Real: ⟨exp(T X)⟩ = exp(c X²/2). Complex: ⟨exp(T X + T̄ Y)⟩ = exp(c X Y).
/// Odd: the θ pair has already been integrated, leaving 1 − c X Y.
pub fn wick_average(currents: &TupleCurrents<Exact>, species: Species, c: &BigRational) -> Result<LambdaPoly<Exact>> {
    let n = currents.n;
    let c = exact_real(c.clone());
    match species {
        Species::Real | Species::Complex => {
            let mut exponent = GrassmannPoly::zero(n);
            for (x, y) in currents.x.iter().zip(&currents.y) {
                let term = if species == Species::Real {
                    // a real tensor couples to X and Y alike
                    let s = x.add(y)?;
                    s.mul(&s)?.scale(&(c.clone() * Exact::from_ratio(1, 2)))
                } else {
                    x.mul(y)?.scale(&c)
                };
                exponent = exponent.add(&term)?;
            }
            Ok(paired_char_poly(&exponent.exp_nilpotent()?))
        }
        Species::OddGrassmann => {
            // |t_A|² = c for every tuple reproduces the Gaussian average exactly
            // because each factor is linear in |t_A|².
            let weights = vec![c; currents.tuples.len()];
            char_poly_from_currents_weighted(currents, &weights)
        }
    }
}

/// Odd-species product ∏_A (1 − w_A X_A Y_A) with explicit weights.
fn char_poly_from_currents_weighted(currents: &TupleCurrents<Exact>, w: &[Exact]) -> Result<LambdaPoly<Exact>> {
    let mut acc = GrassmannPoly::one(currents.n);
    for ((x, y), wa) in currents.x.iter().zip(&currents.y).zip(w) {
        let f = GrassmannPoly::one(currents.n).add(&x.mul(y)?.scale(&-wa.clone()))?;
        acc = acc.mul(&f)?;
    }
    Ok(paired_char_poly(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::exact_int;

    fn mu_of(kind: PresetKind, p: usize, scalar: ScalarKind, n: usize) -> Exact {
        mu_from_preset(&InteractionPreset::new(kind, p, scalar), p, n).unwrap()
    }

    #[test]
    fn small_closed_forms() {
        let mu = exact_real(rat(2, 7));
        let z = avg_coeffs(3, 3, mu.clone()).unwrap().to_lambda_poly();
        assert_eq!(z, LambdaPoly::new(vec![mu.clone() * exact_int(-6), exact_int(0), exact_int(0), exact_int(1)]));
        let z = avg_coeffs(2, 2, mu.clone()).unwrap().to_lambda_poly();
        assert_eq!(z.coeffs(), &[mu.clone() * exact_int(-2), exact_int(0), exact_int(1)]);
        let z = avg_coeffs(5, 3, mu.clone()).unwrap();
        assert_eq!(z.coeff(2), mu.clone() * exact_int(-60));
        assert_eq!(z.coeff(5), exact_int(1));
        assert_eq!(z.coeff(4), exact_int(0));
    }

    #[test]
    fn terms_match_direct_formula() {
        let z = avg_coeffs(17, 3, Exact::new(rat(1, 5), rat(-2, 3))).unwrap();
        let inc = z.terms_exact();
        for (k, c) in inc.iter().enumerate() {
            assert_eq!(c, &z.term(k));
        }
    }

    #[test]
    fn log_terms_match_exact() {
        let z = avg_coeffs(40, 4, exact_real(rat(-1, 4 * 40 * 40 * 40))).unwrap();
        for ((phase, ln), c) in z.log_terms().iter().zip(z.terms_exact()) {
            let v = exact_to_c64(&c);
            let w = phase * ln.exp();
            assert!((v - w).norm() <= 1e-12 * v.norm(), "{v} vs {w}");
        }
    }

    #[test]
    fn recurrence_matches_coefficients() {
        let mu = exact_real(rat(1, 3 * 12 * 12));
        let z = avg_coeffs(12, 3, mu).unwrap();
        let poly = z.to_lambda_poly().to_c64();
        let lambda = Complex64::new(0.7, 0.4);
        let (v, dv, shift) = z.eval_recurrence(lambda);
        let scale = 2f64.powi(shift as i32);
        let direct = poly.eval(&lambda);
        let deriv: Complex64 = poly.coeffs().iter().enumerate().skip(1).map(|(k, c)| c * k as f64 * lambda.powu(k as u32 - 1)).sum();
        assert!((v * scale - direct).norm() < 1e-12 * direct.norm().max(1.0));
        assert!((dv * scale - deriv).norm() < 1e-12 * deriv.norm().max(1.0));
    }

    #[test]
    fn mu_examples() {
        let n = 7;
        let nn = |e: u32| BigRational::from_integer(BigInt::from(n).pow(e));
        assert_eq!(
            mu_of(PresetKind::PsiPPsiBarP, 4, ScalarKind::Real, n),
            exact_real(-rat(1, 48) / nn(3))
        );
        assert_eq!(
            mu_of(PresetKind::SingleBarSum, 3, ScalarKind::Complex, n),
            exact_real(-rat(1, 2) / nn(2))
        );
        // exponent 1 + 1 − 1 = 1, so the sign is negative
        assert_eq!(
            mu_of(PresetKind::MixedK(1), 2, ScalarKind::Real, n),
            exact_real(-rat(1, 4) / nn(1))
        );
    }

    #[test]
    fn mu_tilde_is_n_independent() {
        let preset = InteractionPreset::new(PresetKind::SingleBarSum, 4, ScalarKind::Real);
        let a = MuTilde::from_mu(&mu_from_preset(&preset, 4, 5).unwrap(), 5, 4);
        let b = MuTilde::from_mu(&mu_from_preset(&preset, 4, 11).unwrap(), 11, 4);
        assert_eq!(a, b);
        assert_eq!(a.to_mu(5, 4), mu_from_preset(&preset, 4, 5).unwrap());
    }

    #[test]
    fn invalid_mixed_k() {
        let preset = InteractionPreset::new(PresetKind::MixedK(3), 3, ScalarKind::Complex);
        assert!(mu_from_preset(&preset, 3, 4).is_err());
        let preset = InteractionPreset::new(PresetKind::MixedK(0), 3, ScalarKind::Complex);
        assert!(mu_from_preset(&preset, 3, 4).is_err());
    }

    #[test]
    fn hermite_examples() {
        let one = rat(1, 1);
        assert_eq!(hermite_reference(2, &one).coeffs(), &[exact_int(-1), exact_int(0), exact_int(1)]);
        assert_eq!(hermite_reference(3, &one).coeffs(), &[exact_int(0), exact_int(-3), exact_int(0), exact_int(1)]);
        assert_eq!(hermite_reference(0, &one), LambdaPoly::one());
        for n in 0..8 {
            assert!(hermite_consistency(n, &one).unwrap());
            assert!(hermite_consistency(n, &rat(2, 1)).unwrap());
            assert!(hermite_consistency(n, &rat(3, 7)).unwrap());
        }
    }

    #[test]
    fn preset_names_roundtrip() {
        for kind in [PresetKind::PsiPPsiBarP, PresetKind::MixedK(2), PresetKind::SingleBarSum] {
            assert_eq!(PresetKind::parse(&kind.name()).unwrap(), kind);
        }
        assert!(PresetKind::parse("nonsense").is_err());
    }

    fn wick_for(kind: PresetKind, n: usize, p: usize, scalar: ScalarKind) -> (LambdaPoly<Exact>, Exact) {
        let preset = InteractionPreset::new(kind, p, scalar);
        let (currents, species) = preset.currents::<Exact>(n, p, scalar, &Exact::one()).unwrap();
        let c = preset.beta.clone() / n_power(n, p - 1);
        (wick_average(&currents, species, &c).unwrap(), mu_from_preset(&preset, p, n).unwrap())
    }

    fn wick_vs_closed(kind: PresetKind, n: usize, p: usize, scalar: ScalarKind) {
        if kind == PresetKind::SingleBarSum && p == 2 && scalar == ScalarKind::Real {
            return;
        }
        let (avg, mu) = wick_for(kind, n, p, scalar);
        assert_eq!(avg, avg_coeffs(n, p, mu).unwrap().to_lambda_poly(), "{kind:?} n={n} p={p} {scalar:?}");
    }

    #[test]
    fn single_bar_sum_doubles_for_real_matrices() {
        // At p = 2 the words of J and J̄ coincide, so J² survives the real
        // average and doubles the coupling.
        for n in [2, 3, 4, 5] {
            let (avg, mu) = wick_for(PresetKind::SingleBarSum, n, 2, ScalarKind::Real);
            assert_eq!(avg, avg_coeffs(n, 2, mu * exact_int(2)).unwrap().to_lambda_poly());
        }
    }

    #[test]
    fn wick_average_reproduces_effective_couplings() {
        for scalar in [ScalarKind::Real, ScalarKind::Complex] {
            for (n, p) in [(2, 2), (4, 2), (5, 2), (4, 4), (6, 2)] {
                wick_vs_closed(PresetKind::PsiPPsiBarP, n, p, scalar);
                wick_vs_closed(PresetKind::SingleBarSum, n, p, scalar);
                for k in 1..p {
                    wick_vs_closed(PresetKind::MixedK(k), n, p, scalar);
                }
            }
        }
        for (n, p) in [(3, 3), (4, 3), (6, 3), (5, 5)] {
            wick_vs_closed(PresetKind::PsiPPsiBarP, n, p, ScalarKind::Complex);
            wick_vs_closed(PresetKind::SingleBarSum, n, p, ScalarKind::Complex);
            for k in 1..p {
                wick_vs_closed(PresetKind::MixedK(k), n, p, ScalarKind::Complex);
            }
        }
    }
}
