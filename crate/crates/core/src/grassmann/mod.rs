//! Finite Grassmann algebra on the 2N generators ψ_a, ψ̄_a.
//!
//! Generators are kept in the interleaved order ψ_1, ψ̄_1, ψ_2, ψ̄_2, …,
//! ψ_N, ψ̄_N. A monomial is stored as the bitmask of its generators in that
//! order (bit 2a for ψ_{a+1}, bit 2a+1 for ψ̄_{a+1}) and always represents the
//! product written in ascending bit order. The Berezin measure extracts the
//! coefficient of ∏_a ψ̄_a ψ_a, which equals (−1)^N times the all-ones mask.

mod charpoly;
mod lambda;
mod tensor;

pub use charpoly::{
    all_g_unit_vanishes, char_poly_exact, char_poly_from_currents, char_poly_matrix, hyperpfaffian, interaction,
    paired_char_poly, pfaffian, Species, DEFAULT_SIZE_LIMIT,
};
pub use lambda::LambdaPoly;
pub use tensor::{
    increasing_tuples, sort_with_sign, AntisymTensor, CouplingSet, DenseTensor, IndexSum, ScalarKind, TensorEntries,
    TupleCurrents,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Coeff;

/// Largest dimension the algebra can address (2N bits in a `u32`).
pub const MAX_DIM: usize = 16;

/// Use a dense coefficient table for exponentials up to this dimension.
const DENSE_DIM: usize = 7;

/// A generator: ψ_a (`bar = false`) or ψ̄_a (`bar = true`), `a` zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen {
    pub index: usize,
    pub bar: bool,
}

impl Gen {
    pub fn psi(index: usize) -> Self {
        Gen { index, bar: false }
    }
    pub fn psibar(index: usize) -> Self {
        Gen { index, bar: true }
    }
    fn bit(self) -> u32 {
        1 << (2 * self.index + usize::from(self.bar))
    }
}

/// Occupancy of a monomial, split by species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonomialKey {
    pub psi_mask: u16,
    pub psibar_mask: u16,
}

impl MonomialKey {
    pub fn from_interleaved(mask: u32) -> Self {
        let mut psi = 0u16;
        let mut bar = 0u16;
        for a in 0..16 {
            if mask & (1 << (2 * a)) != 0 {
                psi |= 1 << a;
            }
            if mask & (1 << (2 * a + 1)) != 0 {
                bar |= 1 << a;
            }
        }
        MonomialKey { psi_mask: psi, psibar_mask: bar }
    }

    pub fn interleaved(self) -> u32 {
        let mut mask = 0u32;
        for a in 0..16 {
            if self.psi_mask & (1 << a) != 0 {
                mask |= 1 << (2 * a);
            }
            if self.psibar_mask & (1 << a) != 0 {
                mask |= 1 << (2 * a + 1);
            }
        }
        mask
    }

    pub fn degree(self) -> u32 {
        self.psi_mask.count_ones() + self.psibar_mask.count_ones()
    }
}

/// Sign of `left · right` relative to the ascending product of `left | right`.
/// Callers must ensure the masks are disjoint.
#[inline]
pub(crate) fn merge_sign(left: u32, right: u32) -> bool {
    // Odd number of (i in left, j in right, i > j) pairs means a minus sign.
    let mut crossings = 0u32;
    let mut r = right;
    while r != 0 {
        let j = r.trailing_zeros();
        crossings += (left >> j >> 1).count_ones();
        r &= r - 1;
    }
    crossings & 1 == 1
}

/// Canonical mask and sign for a product of generators in the given order.
/// Returns `None` when a generator repeats (the product vanishes).
pub fn canonical_word(word: &[Gen]) -> Option<(u32, bool)> {
    let mut mask = 0u32;
    let mut negative = false;
    for g in word {
        let bit = g.bit();
        if mask & bit != 0 {
            return None;
        }
        negative ^= merge_sign(mask, bit);
        mask |= bit;
    }
    Some((mask, negative))
}

/// Mask of the pairs ψ_a ψ̄_a for every `a` set in `subset`.
#[inline]
pub(crate) fn paired_mask(subset: u32) -> u32 {
    let mut mask = 0u32;
    let mut s = subset;
    while s != 0 {
        let a = s.trailing_zeros();
        mask |= 0b11 << (2 * a);
        s &= s - 1;
    }
    mask
}

/// Sparse element of the Grassmann algebra with coefficients in `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannPoly<C> {
    n: usize,
    terms: BTreeMap<u32, C>,
}

impl<C: Coeff> GrassmannPoly<C> {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} above {MAX_DIM}");
        GrassmannPoly { n, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: C) -> Self {
        let mut p = Self::zero(n);
        p.add_term(0, c);
        p
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, C::one())
    }

    /// `c` times the product of `word` in the order given.
    pub fn word(n: usize, c: C, word: &[Gen]) -> Self {
        let mut p = Self::zero(n);
        p.add_word(c, word);
        p
    }

    pub fn generator(n: usize, g: Gen) -> Self {
        Self::word(n, C::one(), &[g])
    }

    /// Σ_a ψ̄_a ψ_a.
    pub fn pair_sum(n: usize) -> Self {
        let mut p = Self::zero(n);
        for a in 0..n {
            p.add_word(C::one(), &[Gen::psibar(a), Gen::psi(a)]);
        }
        p
    }

    /// ∏_a ψ̄_a ψ_a, the top element of the Berezin measure.
    pub fn top(n: usize) -> Self {
        let word: Vec<Gen> = (0..n).flat_map(|a| [Gen::psibar(a), Gen::psi(a)]).collect();
        Self::word(n, C::one(), &word)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (MonomialKey, &C)> {
        self.terms.iter().map(|(&m, c)| (MonomialKey::from_interleaved(m), c))
    }

    pub(crate) fn raw_terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.terms.iter().map(|(&m, c)| (m, c))
    }

    pub fn coeff(&self, key: MonomialKey) -> C {
        self.terms.get(&key.interleaved()).cloned().unwrap_or_else(C::zero)
    }

    pub(crate) fn raw_coeff(&self, mask: u32) -> C {
        self.terms.get(&mask).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_word(&mut self, c: C, word: &[Gen]) {
        if let Some((mask, negative)) = canonical_word(word) {
            self.add_term(mask, if negative { -c } else { c });
        }
    }

    pub(crate) fn add_term(&mut self, mask: u32, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&mask) {
            Some(v) => {
                let sum = v.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&mask);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(mask, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_term(m, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Self::zero(self.n);
        for (&m, c) in &self.terms {
            out.add_term(m, c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.n);
        for (&ma, ca) in &self.terms {
            for (&mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let v = ca.clone() * cb.clone();
                out.add_term(ma | mb, if merge_sign(ma, mb) { -v } else { v });
            }
        }
        Ok(out)
    }

    /// True when every term has even degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 0)
    }

    /// True when every term has odd degree.
    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 1)
    }

    /// Exponential of a Grassmann-even element with zero scalar part.
    ///
    /// Even monomials commute and square to zero, so
    /// exp(Σ c_m m) = ∏_m (1 + c_m m); the product is what gets computed.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        if !self.raw_coeff(0).is_zero() {
            return Err(Error::ScalarPart);
        }
        if !self.is_even() {
            return Err(Error::GrassmannOdd);
        }
        let factors: Vec<(u32, C)> = self.raw_terms().map(|(m, c)| (m, c.clone())).collect();
        if self.n <= DENSE_DIM {
            let mut table = DenseTable::one(self.n);
            for (m, c) in &factors {
                table.mul_one_plus_monomial(*m, c);
            }
            Ok(table.into_poly())
        } else {
            let mut acc = Self::one(self.n);
            for (m, c) in &factors {
                let mut next = acc.clone();
                for (&k, v) in &acc.terms {
                    if k & m != 0 {
                        continue;
                    }
                    let w = v.clone() * c.clone();
                    next.add_term(k | m, if merge_sign(k, *m) { -w } else { w });
                }
                acc = next;
            }
            Ok(acc)
        }
    }

    /// Σ_{k=0}^{n} a^k / k!, the defining series. Slower than
    /// [`exp_nilpotent`](Self::exp_nilpotent); kept as its oracle.
    pub fn exp_series(&self) -> Result<Self> {
        if !self.raw_coeff(0).is_zero() {
            return Err(Error::ScalarPart);
        }
        if !self.is_even() {
            return Err(Error::GrassmannOdd);
        }
        let mut out = Self::one(self.n);
        let mut term = Self::one(self.n);
        for k in 1..=self.n {
            term = term.mul(self)?.scale(&C::from_ratio(1, k as i64));
            if term.is_empty() {
                break;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Berezin integral: coefficient of ∏_{a} ψ̄_a ψ_a.
    pub fn berezin_top(&self) -> C {
        let full = if self.n == 0 { 0 } else { (1u32 << (2 * self.n)) - 1 };
        let c = self.raw_coeff(full);
        if self.n % 2 == 1 {
            -c
        } else {
            c
        }
    }

    /// Integral over the ψ species only, with ∫ dψ_1…dψ_N ψ_N…ψ_1 = 1.
    pub fn berezin_psi(&self) -> C {
        let mask = (0..self.n).fold(0u32, |m, a| m | (1 << (2 * a)));
        let c = self.raw_coeff(mask);
        // ψ_N…ψ_1 is the reversal of the ascending product.
        if (self.n * self.n.saturating_sub(1) / 2) % 2 == 1 {
            -c
        } else {
            c
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }
}

/// Dense coefficient table over all 4^n monomials.
pub(crate) struct DenseTable<C> {
    n: usize,
    values: Vec<C>,
}

impl<C: Coeff> DenseTable<C> {
    pub(crate) fn one(n: usize) -> Self {
        let mut values = vec![C::zero(); 1 << (2 * n)];
        values[0] = C::one();
        DenseTable { n, values }
    }

    /// self ← self · (1 + c·m). Sources (disjoint from m) and targets
    /// (containing m) never overlap, so the update is in place.
    pub(crate) fn mul_one_plus_monomial(&mut self, m: u32, c: &C) {
        let size = self.values.len() as u32;
        for k in 0..size {
            if k & m != 0 || self.values[k as usize].is_zero() {
                continue;
            }
            let w = self.values[k as usize].clone() * c.clone();
            let slot = &mut self.values[(k | m) as usize];
            *slot = if merge_sign(k, m) { slot.clone() - w } else { slot.clone() + w };
        }
    }

    /// self ← self · (1 + x) for an arbitrary even element x.
    pub(crate) fn mul_one_plus(&mut self, x: &[(u32, C)]) {
        let old = self.values.clone();
        for (m, c) in x {
            for (k, v) in old.iter().enumerate() {
                let k = k as u32;
                if k & m != 0 || v.is_zero() {
                    continue;
                }
                let w = v.clone() * c.clone();
                let slot = &mut self.values[(k | m) as usize];
                *slot = if merge_sign(k, *m) { slot.clone() - w } else { slot.clone() + w };
            }
        }
    }

    pub(crate) fn get(&self, mask: u32) -> &C {
        &self.values[mask as usize]
    }

    pub(crate) fn into_poly(self) -> GrassmannPoly<C> {
        let mut p = GrassmannPoly::zero(self.n);
        for (k, v) in self.values.into_iter().enumerate() {
            if !v.is_zero() {
                p.terms.insert(k as u32, v);
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{exact_int, Exact};
    use num_traits::Zero;
    use proptest::prelude::*;

    type G = GrassmannPoly<Exact>;

    fn psi(n: usize, a: usize) -> G {
        G::generator(n, Gen::psi(a))
    }
    fn psibar(n: usize, a: usize) -> G {
        G::generator(n, Gen::psibar(a))
    }

    #[test]
    fn nilpotent_generators() {
        assert!(psi(2, 0).mul(&psi(2, 0)).unwrap().is_empty());
        assert!(psibar(2, 1).mul(&psibar(2, 1)).unwrap().is_empty());
    }

    #[test]
    fn generators_anticommute() {
        let ab = psi(2, 0).mul(&psi(2, 1)).unwrap();
        let ba = psi(2, 1).mul(&psi(2, 0)).unwrap();
        assert!(ab.add(&ba).unwrap().is_empty());
        let mixed = psibar(2, 0).mul(&psi(2, 1)).unwrap();
        let swapped = psi(2, 1).mul(&psibar(2, 0)).unwrap();
        assert!(mixed.add(&swapped).unwrap().is_empty());
    }

    #[test]
    fn square_of_one_plus_pair() {
        let x = G::one(2).add(&psi(2, 0).mul(&psi(2, 1)).unwrap()).unwrap();
        let sq = x.mul(&x).unwrap();
        let expected = G::one(2)
            .add(&psi(2, 0).mul(&psi(2, 1)).unwrap().scale(&exact_int(2)))
            .unwrap();
        assert_eq!(sq, expected);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(psi(2, 0).mul(&psi(3, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn exp_of_zero_is_one() {
        assert_eq!(G::zero(3).exp_nilpotent().unwrap(), G::one(3));
    }

    #[test]
    fn exp_of_single_pair() {
        let c = exact_int(7);
        let a = G::word(1, c.clone(), &[Gen::psi(0), Gen::psibar(0)]);
        let e = a.exp_nilpotent().unwrap();
        assert_eq!(e, G::one(1).add(&a).unwrap());
    }

    #[test]
    fn exp_of_two_pairs() {
        let a = G::pair_sum(2);
        let e = a.exp_nilpotent().unwrap();
        let p1 = G::word(2, exact_int(1), &[Gen::psibar(0), Gen::psi(0)]);
        let p2 = G::word(2, exact_int(1), &[Gen::psibar(1), Gen::psi(1)]);
        let expected = G::one(2)
            .add(&p1)
            .unwrap()
            .add(&p2)
            .unwrap()
            .add(&p1.mul(&p2).unwrap())
            .unwrap();
        assert_eq!(e, expected);
    }

    #[test]
    fn exp_rejects_odd_and_scalar() {
        assert!(matches!(psi(2, 0).exp_nilpotent(), Err(Error::GrassmannOdd)));
        assert!(matches!(G::one(2).exp_nilpotent(), Err(Error::ScalarPart)));
    }

    #[test]
    fn berezin_normalization() {
        for n in 1..5 {
            assert_eq!(G::top(n).berezin_top(), exact_int(1));
            assert!(G::one(n).berezin_top().is_zero());
        }
    }

    #[test]
    fn berezin_of_exp_lambda_pairs() {
        type L = LambdaPoly<Exact>;
        let lam = L::monomial(1);
        let a = GrassmannPoly::<L>::pair_sum(2).scale(&lam);
        let z = a.exp_nilpotent().unwrap().berezin_top();
        assert_eq!(z, L::monomial(2));
    }

    #[test]
    fn berezin_psi_measure_order() {
        // ∫ dψ_1 dψ_2 ψ_2 ψ_1 = 1
        let w = G::word(2, exact_int(1), &[Gen::psi(1), Gen::psi(0)]);
        assert_eq!(w.berezin_psi(), exact_int(1));
    }

    #[test]
    fn monomial_key_roundtrip() {
        let key = MonomialKey { psi_mask: 0b101, psibar_mask: 0b010 };
        assert_eq!(MonomialKey::from_interleaved(key.interleaved()), key);
        assert_eq!(key.degree(), 3);
    }

    fn arb_poly(n: usize) -> impl Strategy<Value = G> {
        let size = 1u32 << (2 * n);
        proptest::collection::vec((0..size, -3i64..4), 0..6).prop_map(move |terms| {
            let mut p = G::zero(n);
            for (m, c) in terms {
                p.add_term(m, exact_int(c));
            }
            p
        })
    }

    fn homogeneous_parts(p: &G) -> Vec<(u32, G)> {
        let mut parts: BTreeMap<u32, G> = BTreeMap::new();
        for (m, c) in p.raw_terms() {
            parts
                .entry(m.count_ones())
                .or_insert_with(|| G::zero(p.dim()))
                .add_term(m, c.clone());
        }
        parts.into_iter().collect()
    }

    proptest! {
        #[test]
        fn associative(a in arb_poly(3), b in arb_poly(3), c in arb_poly(3)) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn graded_commutative(a in arb_poly(3), b in arb_poly(3)) {
            for (da, pa) in homogeneous_parts(&a) {
                for (db, pb) in homogeneous_parts(&b) {
                    let ab = pa.mul(&pb).unwrap();
                    let ba = pb.mul(&pa).unwrap();
                    let expected = if (da * db) % 2 == 1 { ba.scale(&exact_int(-1)) } else { ba };
                    prop_assert_eq!(ab, expected);
                }
            }
        }

        #[test]
        fn product_formula_matches_series(terms in proptest::collection::vec((0u32..256, -3i64..4), 0..6)) {
            let mut a = G::zero(4);
            for (m, c) in terms {
                if m != 0 && m.count_ones() % 2 == 0 {
                    a.add_term(m, exact_int(c));
                }
            }
            prop_assert_eq!(a.exp_nilpotent().unwrap(), a.exp_series().unwrap());
        }
    }

    #[test]
    fn sparse_and_dense_exponentials_agree() {
        // n = 8 takes the sparse path; compare with the series there too.
        let mut a = G::zero(8);
        a.add_term(0b11, exact_int(2));
        a.add_term(0b1100_0000, exact_int(-1));
        a.add_term(0b1010_0000_0000, exact_int(3));
        a.add_term(0b0011_0000_0000_0000_0101, exact_int(5));
        assert_eq!(a.exp_nilpotent().unwrap(), a.exp_series().unwrap());
    }
}
