use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Gen, GrassmannPoly};
use crate::error::{Error, Result};
use crate::scalar::Coeff;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Real,
    Complex,
}

/// Read access to tensor entries at arbitrary (zero-based) index tuples.
pub trait TensorEntries<C> {
    fn dim(&self) -> usize;
    fn order(&self) -> usize;
    fn kind(&self) -> ScalarKind;
    fn entry(&self, idx: &[usize]) -> C;
}

/// Totally antisymmetric tensor stored on strictly increasing index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymTensor<C> {
    n: usize,
    p: usize,
    kind: ScalarKind,
    values: BTreeMap<Vec<usize>, C>,
}

impl<C: Coeff> AntisymTensor<C> {
    pub fn zeros(n: usize, p: usize, kind: ScalarKind) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidOrder { p, n, reason: "need 1 <= p <= n" });
        }
        Ok(AntisymTensor { n, p, kind, values: BTreeMap::new() })
    }

    /// Builds a tensor from a value for each increasing tuple, in
    /// lexicographic order of the tuples.
    pub fn from_fn(n: usize, p: usize, kind: ScalarKind, mut f: impl FnMut(&[usize]) -> C) -> Result<Self> {
        let mut t = Self::zeros(n, p, kind)?;
        for tuple in increasing_tuples(n, p) {
            let v = f(&tuple);
            t.set(&tuple, v)?;
        }
        Ok(t)
    }

    /// Sets the value on a strictly increasing tuple.
    pub fn set(&mut self, idx: &[usize], value: C) -> Result<()> {
        if idx.len() != self.p || idx.iter().any(|&a| a >= self.n) || idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndex(idx.to_vec()));
        }
        if value.is_zero() {
            self.values.remove(idx);
        } else {
            self.values.insert(idx.to_vec(), value);
        }
        Ok(())
    }

    /// Value on a strictly increasing tuple.
    pub fn get_sorted(&self, idx: &[usize]) -> C {
        self.values.get(idx).cloned().unwrap_or_else(C::zero)
    }

    /// Values on all increasing tuples in lexicographic order, zeros included.
    pub fn stored_values(&self) -> Vec<C> {
        increasing_tuples(self.n, self.p).map(|t| self.get_sorted(&t)).collect()
    }

    pub fn stored(&self) -> impl Iterator<Item = (&[usize], &C)> {
        self.values.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> AntisymTensor<D> {
        AntisymTensor {
            n: self.n,
            p: self.p,
            kind: self.kind,
            values: self
                .values
                .iter()
                .filter_map(|(k, v)| {
                    let w = f(v);
                    (!w.is_zero()).then(|| (k.clone(), w))
                })
                .collect(),
        }
    }
}

impl<C: Coeff> TensorEntries<C> for AntisymTensor<C> {
    fn dim(&self) -> usize {
        self.n
    }
    fn order(&self) -> usize {
        self.p
    }
    fn kind(&self) -> ScalarKind {
        self.kind
    }
    /// sign(σ)·value for permutations of an increasing tuple, 0 on repeats.
    fn entry(&self, idx: &[usize]) -> C {
        match sort_with_sign(idx) {
            Some((sorted, negative)) => {
                let v = self.get_sorted(&sorted);
                if negative {
                    -v
                } else {
                    v
                }
            }
            None => C::zero(),
        }
    }
}

/// Tensor with no symmetry, stored densely (row-major over n^p entries).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<C> {
    n: usize,
    p: usize,
    kind: ScalarKind,
    values: Vec<C>,
}

impl<C: Coeff> DenseTensor<C> {
    pub fn from_fn(n: usize, p: usize, kind: ScalarKind, mut f: impl FnMut(&[usize]) -> C) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidOrder { p, n, reason: "need p >= 1" });
        }
        let total = n.pow(p as u32);
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; p];
        for flat in 0..total {
            let mut r = flat;
            for slot in idx.iter_mut().rev() {
                *slot = r % n;
                r /= n;
            }
            values.push(f(&idx));
        }
        Ok(DenseTensor { n, p, kind, values })
    }

    /// Square matrix as an order-2 tensor.
    pub fn matrix(n: usize, kind: ScalarKind, rows: &[Vec<C>]) -> Result<Self> {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { left: n, right: rows.len() });
        }
        Self::from_fn(n, 2, kind, |ix| rows[ix[0]][ix[1]].clone())
    }
}

impl<C: Coeff> TensorEntries<C> for DenseTensor<C> {
    fn dim(&self) -> usize {
        self.n
    }
    fn order(&self) -> usize {
        self.p
    }
    fn kind(&self) -> ScalarKind {
        self.kind
    }
    fn entry(&self, idx: &[usize]) -> C {
        let flat = idx.iter().fold(0usize, |acc, &a| acc * self.n + a);
        self.values[flat].clone()
    }
}

/// Which index tuples the interaction sums over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSum {
    /// All ordered tuples a_1, …, a_p in 1..=N.
    AllOrderings,
    /// Strictly increasing tuples only.
    Increasing,
}

/// Couplings g^{(b_1…b_p)} on T (and g̃ on T̄), keyed by the ordered pattern.
/// Bit 0 selects ψ, bit 1 selects ψ̄. Absent patterns couple with 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSet<C> {
    p: usize,
    g: BTreeMap<Vec<u8>, C>,
    gbar: BTreeMap<Vec<u8>, C>,
    sum: IndexSum,
}

impl<C: Coeff> CouplingSet<C> {
    pub fn new(p: usize, sum: IndexSum) -> Self {
        CouplingSet { p, g: BTreeMap::new(), gbar: BTreeMap::new(), sum }
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn index_sum(&self) -> IndexSum {
        self.sum
    }

    fn check(&self, pattern: &[u8]) -> Result<()> {
        if pattern.len() != self.p || pattern.iter().any(|&b| b > 1) {
            return Err(Error::InvalidPattern(pattern.to_vec()));
        }
        Ok(())
    }

    pub fn with_g(mut self, pattern: &[u8], value: C) -> Result<Self> {
        self.check(pattern)?;
        self.g.insert(pattern.to_vec(), value);
        Ok(self)
    }

    pub fn with_gbar(mut self, pattern: &[u8], value: C) -> Result<Self> {
        self.check(pattern)?;
        self.gbar.insert(pattern.to_vec(), value);
        Ok(self)
    }

    /// g = 1 on every pattern.
    pub fn all_unit(p: usize, sum: IndexSum) -> Self {
        let mut set = Self::new(p, sum);
        for bits in 0..(1u32 << p) {
            let pattern: Vec<u8> = (0..p).map(|i| ((bits >> (p - 1 - i)) & 1) as u8).collect();
            set.g.insert(pattern, C::one());
        }
        set
    }

    /// g = 1 on (0…0) and (1…1) only.
    pub fn pure_species(p: usize, sum: IndexSum) -> Self {
        let mut set = Self::new(p, sum);
        set.g.insert(vec![0; p], C::one());
        set.g.insert(vec![1; p], C::one());
        set
    }

    /// The matrix action ψ̄_a ψ_b − ψ_a ψ̄_b, which keeps only the symmetric part.
    pub fn symmetric_matrix() -> Self {
        let mut set = Self::new(2, IndexSum::AllOrderings);
        set.g.insert(vec![1, 0], C::one());
        set.g.insert(vec![0, 1], -C::one());
        set
    }

    /// The matrix action ψ̄_a ψ_b + ψ_a ψ̄_b, which keeps only the antisymmetric part.
    pub fn antisymmetric_matrix() -> Self {
        let mut set = Self::new(2, IndexSum::AllOrderings);
        set.g.insert(vec![1, 0], C::one());
        set.g.insert(vec![0, 1], C::one());
        set
    }

    pub fn g(&self) -> impl Iterator<Item = (&[u8], &C)> {
        self.g.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn gbar(&self) -> impl Iterator<Item = (&[u8], &C)> {
        self.gbar.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn has_gbar(&self) -> bool {
        !self.gbar.is_empty()
    }
}

/// Grassmann "currents" per increasing tuple A: the interaction is
/// Σ_A (T_A · X_A + T̄_A · Y_A) with T_A written to the left.
#[derive(Clone, Debug)]
pub struct TupleCurrents<C> {
    pub n: usize,
    pub p: usize,
    pub tuples: Vec<Vec<usize>>,
    pub x: Vec<GrassmannPoly<C>>,
    pub y: Vec<GrassmannPoly<C>>,
}

impl<C: Coeff> TupleCurrents<C> {
    /// Currents of a coupling set acting on an antisymmetric tensor. For
    /// `AllOrderings` every permutation σ of A contributes sign(σ)·g.
    pub fn from_couplings(n: usize, set: &CouplingSet<C>) -> Result<Self> {
        let p = set.order();
        if p == 0 || p > n {
            return Err(Error::InvalidOrder { p, n, reason: "need 1 <= p <= n" });
        }
        let perms = match set.index_sum() {
            IndexSum::AllOrderings => signed_permutations(p),
            IndexSum::Increasing => vec![((0..p).collect(), false)],
        };
        let build = |tuple: &[usize], couplings: &BTreeMap<Vec<u8>, C>| {
            let mut out = GrassmannPoly::zero(n);
            for (perm, negative) in &perms {
                for (pattern, g) in couplings {
                    let word: Vec<Gen> = perm
                        .iter()
                        .zip(pattern)
                        .map(|(&i, &b)| Gen { index: tuple[i], bar: b == 1 })
                        .collect();
                    out.add_word(if *negative { -g.clone() } else { g.clone() }, &word);
                }
            }
            out
        };
        let tuples: Vec<Vec<usize>> = increasing_tuples(n, p).collect();
        let x = tuples.iter().map(|t| build(t, &set.g)).collect();
        let y = tuples.iter().map(|t| build(t, &set.gbar)).collect();
        Ok(TupleCurrents { n, p, tuples, x, y })
    }
}

/// Strictly increasing p-tuples of 0..n in lexicographic order.
pub fn increasing_tuples(n: usize, p: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if p <= n { Some((0..p).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = p;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < n - p + i {
                next[i] += 1;
                for j in i + 1..p {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}

/// All permutations of 0..p with their parity (true = odd).
pub fn signed_permutations(p: usize) -> Vec<(Vec<usize>, bool)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, bool)>) {
        let p = used.len();
        if prefix.len() == p {
            let inversions = (0..p)
                .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
                .filter(|&(i, j)| prefix[i] > prefix[j])
                .count();
            out.push((prefix.clone(), inversions % 2 == 1));
            return;
        }
        for v in 0..p {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; p], &mut out);
    out
}

/// Sorts a tuple, returning the parity of the sorting permutation, or
/// `None` if an index repeats.
pub fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut v = idx.to_vec();
    let mut negative = false;
    // insertion sort keeps the swap count
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, negative))
}
