use num_traits::Zero;

use super::tensor::{increasing_tuples, IndexSum};
use super::{paired_mask, CouplingSet, DenseTable, Gen, GrassmannPoly, LambdaPoly, ScalarKind, TensorEntries, TupleCurrents, DENSE_DIM};
use crate::error::{Error, Result};
use crate::scalar::{Coeff, Exact};

/// Largest N accepted by the exact characteristic-polynomial routines
/// unless the caller passes its own limit.
pub const DEFAULT_SIZE_LIMIT: usize = 14;

/// How the tensor enters the interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Species {
    /// Real commuting T; the T̄ currents couple to the same T.
    Real,
    /// Complex commuting T with T̄ its conjugate.
    Complex,
    /// Anticommuting T_A = t_A θ_A with the θ pair integrated out exactly,
    /// which turns exp(T_A X_A + T̄_A Y_A) into 1 − |t_A|² X_A Y_A.
    OddGrassmann,
}

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n > limit.min(super::MAX_DIM) {
        return Err(Error::SizeLimit { n, limit: limit.min(super::MAX_DIM) });
    }
    Ok(())
}

/// Z(λ) = ∫ exp(λ Σ ψ̄_a ψ_a) · e, read off the paired coefficients of e.
///
/// Only the monomials ∏_{a∈B} ψ_a ψ̄_a of e survive; each one pairs with
/// λ^{N−|B|} from the kinetic term and picks up (−1)^{|B|} from reordering
/// ψ_a ψ̄_a into ψ̄_a ψ_a.
pub fn paired_char_poly<C: Coeff>(e: &GrassmannPoly<C>) -> LambdaPoly<C> {
    paired_from(e.dim(), |mask| e.raw_coeff(mask))
}

fn paired_from<C: Coeff>(n: usize, coeff: impl Fn(u32) -> C) -> LambdaPoly<C> {
    let mut out = vec![C::zero(); n + 1];
    for subset in 0u32..(1u32 << n) {
        let c = coeff(paired_mask(subset));
        if c.is_zero() {
            continue;
        }
        let size = subset.count_ones() as usize;
        let slot = &mut out[n - size];
        *slot = if size % 2 == 1 { slot.clone() - c } else { slot.clone() + c };
    }
    LambdaPoly::new(out)
}

/// det(λ1 − M) as the Berezin integral of exp(Σ_ab (λδ_ab − M_ab) ψ̄_a ψ_b).
pub fn char_poly_matrix<C: Coeff>(m: &[Vec<C>]) -> Result<LambdaPoly<C>> {
    let n = m.len();
    if let Some(row) = m.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { left: n, right: row.len() });
    }
    check_size(n, DEFAULT_SIZE_LIMIT)?;
    let mut action = GrassmannPoly::zero(n);
    for (a, row) in m.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            action.add_word(-v.clone(), &[Gen::psibar(a), Gen::psi(b)]);
        }
    }
    Ok(paired_char_poly(&action.exp_nilpotent()?))
}

/// Pfaffian as ∫ dψ_1…dψ_N exp(−½ Σ_ab M_ab ψ_a ψ_b), which is the usual
/// normalization pf([[0, m], [−m, 0]]) = m.
pub fn pfaffian<C: Coeff>(m: &[Vec<C>]) -> Result<C> {
    let n = m.len();
    if let Some(row) = m.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { left: n, right: row.len() });
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    for a in 0..n {
        for b in 0..n {
            if m[a][b].clone() + m[b][a].clone() != C::zero() {
                return Err(Error::NotAntisymmetric);
            }
        }
    }
    check_size(n, DEFAULT_SIZE_LIMIT)?;
    let mut action = GrassmannPoly::zero(n);
    for a in 0..n {
        for b in a + 1..n {
            action.add_word(-m[a][b].clone(), &[Gen::psi(a), Gen::psi(b)]);
        }
    }
    Ok(action.exp_nilpotent()?.berezin_psi())
}

/// ∫ dψ_1…dψ_N exp(Σ_{a_1<…<a_p} T ψ_{a_1}…ψ_{a_p}).
pub fn hyperpfaffian<T: TensorEntries<Exact>>(t: &T) -> Result<Exact> {
    let (n, p) = (t.dim(), t.order());
    if p % 2 == 1 || p == 0 {
        return Err(Error::InvalidOrder { p, n, reason: "hyperpfaffian needs even p" });
    }
    if n % p != 0 {
        return Err(Error::InvalidOrder { p, n, reason: "hyperpfaffian needs p | N" });
    }
    check_size(n, DEFAULT_SIZE_LIMIT)?;
    let mut action = GrassmannPoly::zero(n);
    for tuple in increasing_tuples(n, p) {
        let v = t.entry(&tuple);
        if !v.is_zero() {
            let word: Vec<Gen> = tuple.iter().map(|&a| Gen::psi(a)).collect();
            action.add_word(v, &word);
        }
    }
    Ok(action.exp_nilpotent()?.berezin_psi())
}

/// The interaction Σ g^{(b)} T_{a_1…a_p} ψ^{b_1}_{a_1}…ψ^{b_p}_{a_p} (+ the g̃ terms with T̄).
pub fn interaction<T: TensorEntries<Exact>>(t: &T, g: &CouplingSet<Exact>) -> Result<GrassmannPoly<Exact>> {
    let (n, p) = (t.dim(), t.order());
    if g.order() != p {
        return Err(Error::DimensionMismatch { left: p, right: g.order() });
    }
    let tuples: Vec<Vec<usize>> = match g.index_sum() {
        IndexSum::Increasing => increasing_tuples(n, p).collect(),
        IndexSum::AllOrderings => all_tuples(n, p),
    };
    let mut action = GrassmannPoly::zero(n);
    for tuple in tuples {
        let v = t.entry(&tuple);
        if v.is_zero() {
            continue;
        }
        let vbar = match t.kind() {
            ScalarKind::Real => v.clone(),
            ScalarKind::Complex => v.conj(),
        };
        for (pattern, c) in g.g() {
            action.add_word(v.clone() * c.clone(), &word_of(&tuple, pattern));
        }
        for (pattern, c) in g.gbar() {
            action.add_word(vbar.clone() * c.clone(), &word_of(&tuple, pattern));
        }
    }
    Ok(action)
}

fn word_of(tuple: &[usize], pattern: &[u8]) -> Vec<Gen> {
    tuple.iter().zip(pattern).map(|(&a, &b)| Gen { index: a, bar: b == 1 }).collect()
}

fn all_tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    let total = n.pow(p as u32);
    (0..total)
        .map(|mut flat| {
            let mut idx = vec![0; p];
            for slot in idx.iter_mut().rev() {
                *slot = flat % n;
                flat /= n;
            }
            idx
        })
        .collect()
}

/// Exact characteristic polynomial ∫ exp(λ Σ ψ̄ψ + S_int[T, g]).
///
/// A Grassmann-odd interaction (odd p with commuting T) is rejected; see
/// [`char_poly_from_currents`] with [`Species::OddGrassmann`] for that case.
pub fn char_poly_exact<T: TensorEntries<Exact>>(
    t: &T,
    g: &CouplingSet<Exact>,
    size_limit: usize,
) -> Result<LambdaPoly<Exact>> {
    check_size(t.dim(), size_limit)?;
    let action = interaction(t, g)?;
    if !action.is_even() {
        return Err(Error::GrassmannOdd);
    }
    Ok(paired_char_poly(&action.exp_nilpotent()?))
}

/// Characteristic polynomial for tensor values `t` (one per tuple of
/// `currents`), interaction Σ_A T_A X_A + T̄_A Y_A.
pub fn char_poly_from_currents<C: Coeff>(
    currents: &TupleCurrents<C>,
    t: &[C],
    species: Species,
) -> Result<LambdaPoly<C>> {
    let n = currents.n;
    if t.len() != currents.tuples.len() {
        return Err(Error::DimensionMismatch { left: currents.tuples.len(), right: t.len() });
    }
    check_size(n, DEFAULT_SIZE_LIMIT)?;
    match species {
        Species::Real | Species::Complex => {
            let mut action = GrassmannPoly::zero(n);
            for ((x, y), v) in currents.x.iter().zip(&currents.y).zip(t) {
                let vbar = if species == Species::Real { v.clone() } else { v.conj() };
                for (m, c) in x.raw_terms() {
                    action.add_term(m, v.clone() * c.clone());
                }
                for (m, c) in y.raw_terms() {
                    action.add_term(m, vbar.clone() * c.clone());
                }
            }
            if !action.is_even() {
                return Err(Error::GrassmannOdd);
            }
            Ok(paired_char_poly(&action.exp_nilpotent()?))
        }
        Species::OddGrassmann => {
            let mut factors = Vec::with_capacity(t.len());
            for ((x, y), v) in currents.x.iter().zip(&currents.y).zip(t) {
                let xy = x.mul(y)?;
                if !xy.is_even() {
                    return Err(Error::GrassmannOdd);
                }
                let w = -(v.clone() * v.conj());
                let terms: Vec<(u32, C)> = xy.raw_terms().map(|(m, c)| (m, c.clone() * w.clone())).collect();
                if !terms.is_empty() {
                    factors.push(terms);
                }
            }
            if n <= DENSE_DIM {
                let mut table = DenseTable::one(n);
                for f in &factors {
                    table.mul_one_plus(f);
                }
                Ok(paired_from(n, |mask| table.get(mask).clone()))
            } else {
                let mut acc = GrassmannPoly::one(n);
                for f in &factors {
                    let mut one_plus = GrassmannPoly::one(n);
                    for (m, c) in f {
                        one_plus.add_term(*m, c.clone());
                    }
                    acc = acc.mul(&one_plus)?;
                }
                Ok(paired_char_poly(&acc))
            }
        }
    }
}

/// Checks that all-unit couplings give a vanishing partition function at λ = 0.
pub fn all_g_unit_vanishes<T: TensorEntries<Exact>>(t: &T) -> Result<bool> {
    if t.order() % 2 == 1 {
        return Err(Error::InvalidOrder { p: t.order(), n: t.dim(), reason: "needs even p" });
    }
    let set = CouplingSet::all_unit(t.order(), IndexSum::AllOrderings);
    let z = char_poly_exact(t, &set, DEFAULT_SIZE_LIMIT)?;
    Ok(z.coeff(0).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::tensor::sort_with_sign;
    use crate::grassmann::{AntisymTensor, DenseTensor};
    use crate::scalar::{exact_int, exact_real, rat};
    use num_complex::Complex;
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_rational(rng: &mut ChaCha8Rng) -> Exact {
        exact_real(rat(rng.gen_range(-9..=9), rng.gen_range(1..=4)))
    }

    fn small_complex(rng: &mut ChaCha8Rng) -> Exact {
        Complex::new(rat(rng.gen_range(-5..=5), rng.gen_range(1..=3)), rat(rng.gen_range(-5..=5), rng.gen_range(1..=3)))
    }

    /// Determinant by cofactor expansion along the first row.
    fn cofactor_det(m: &[Vec<Exact>]) -> Exact {
        let n = m.len();
        if n == 0 {
            return Exact::one();
        }
        let mut total = Exact::zero();
        for j in 0..n {
            let minor: Vec<Vec<Exact>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, v)| v.clone()).collect())
                .collect();
            let term = m[0][j].clone() * cofactor_det(&minor);
            total = if j % 2 == 1 { total - term } else { total + term };
        }
        total
    }

    /// det(λ − M) from cofactor determinants at N+1 points, by Lagrange
    /// interpolation in exact arithmetic.
    fn cofactor_char_poly(m: &[Vec<Exact>]) -> LambdaPoly<Exact> {
        let n = m.len();
        let points: Vec<Exact> = (0..=n as i64).map(exact_int).collect();
        let mut out = LambdaPoly::zero();
        for (i, xi) in points.iter().enumerate() {
            let shifted: Vec<Vec<Exact>> = (0..n)
                .map(|a| (0..n).map(|b| if a == b { xi.clone() - m[a][b].clone() } else { -m[a][b].clone() }).collect())
                .collect();
            let yi = cofactor_det(&shifted);
            let mut basis = LambdaPoly::constant(yi);
            for (j, xj) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let denom = xi.clone() - xj.clone();
                let inv = Complex::new(denom.re.recip(), rat(0, 1));
                basis = basis * LambdaPoly::new(vec![-xj.clone() * inv.clone(), inv]);
            }
            out = out + basis;
        }
        out
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Exact>> {
        (0..n).map(|_| (0..n).map(|_| small_complex(rng)).collect()).collect()
    }

    fn random_antisym_matrix(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Exact>> {
        let mut m = vec![vec![Exact::zero(); n]; n];
        for a in 0..n {
            for b in a + 1..n {
                let v = small_rational(rng);
                m[a][b] = v.clone();
                m[b][a] = -v;
            }
        }
        m
    }

    fn random_antisym(n: usize, p: usize, kind: ScalarKind, rng: &mut ChaCha8Rng) -> AntisymTensor<Exact> {
        AntisymTensor::from_fn(n, p, kind, |_| match kind {
            ScalarKind::Real => small_rational(rng),
            ScalarKind::Complex => small_complex(rng),
        })
        .unwrap()
    }

    /// Hyperpfaffian by summing over set partitions of 0..N into p-blocks.
    fn partition_hyperpfaffian(t: &AntisymTensor<Exact>) -> Exact {
        fn rec(t: &AntisymTensor<Exact>, remaining: Vec<usize>, order: &mut Vec<usize>, weight: Exact, acc: &mut Exact) {
            let p = t.order();
            if remaining.is_empty() {
                let (_, negative) = sort_with_sign(order).unwrap();
                *acc = acc.clone() + if negative { -weight } else { weight };
                return;
            }
            let first = remaining[0];
            let rest = &remaining[1..];
            for others in increasing_tuples(rest.len(), p - 1) {
                let block: Vec<usize> = std::iter::once(first).chain(others.iter().map(|&i| rest[i])).collect();
                let left: Vec<usize> = rest.iter().enumerate().filter(|(i, _)| !others.contains(i)).map(|(_, &v)| v).collect();
                let len = order.len();
                order.extend(&block);
                rec(t, left, order, weight.clone() * t.entry(&block), acc);
                order.truncate(len);
            }
        }
        let n = t.dim();
        let mut acc = Exact::zero();
        rec(t, (0..n).collect(), &mut Vec::new(), Exact::one(), &mut acc);
        // ∫ dψ_1…dψ_N ψ_1…ψ_N = (−1)^{N(N−1)/2}
        if (n * (n - 1) / 2) % 2 == 1 {
            -acc
        } else {
            acc
        }
    }

    #[test]
    fn zero_matrix_gives_pure_power() {
        let m = vec![vec![Exact::zero(); 3]; 3];
        assert_eq!(char_poly_matrix(&m).unwrap(), LambdaPoly::monomial(3));
    }

    #[test]
    fn diagonal_matrix() {
        let m = vec![vec![exact_int(1), exact_int(0)], vec![exact_int(0), exact_int(2)]];
        let z = char_poly_matrix(&m).unwrap();
        assert_eq!(z.coeffs(), &[exact_int(2), exact_int(-3), exact_int(1)]);
    }

    #[test]
    fn matrix_char_poly_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            for _ in 0..3 {
                let m = random_matrix(n, &mut rng);
                assert_eq!(char_poly_matrix(&m).unwrap(), cofactor_char_poly(&m));
            }
        }
    }

    #[test]
    fn pfaffian_two_by_two() {
        let m = vec![vec![exact_int(0), exact_int(3)], vec![exact_int(-3), exact_int(0)]];
        assert_eq!(pfaffian(&m).unwrap(), exact_int(3));
        assert_eq!(pfaffian(&vec![vec![Exact::zero(); 4]; 4]).unwrap(), Exact::zero());
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 4, 6] {
            for _ in 0..4 {
                let m = random_antisym_matrix(n, &mut rng);
                let pf = pfaffian(&m).unwrap();
                assert_eq!(pf.clone() * pf, cofactor_det(&m));
            }
        }
    }

    #[test]
    fn pfaffian_rejects_bad_input() {
        let odd = vec![vec![Exact::zero(); 3]; 3];
        assert!(matches!(pfaffian(&odd), Err(Error::OddDimension(3))));
        let sym = vec![vec![exact_int(0), exact_int(1)], vec![exact_int(1), exact_int(0)]];
        assert!(matches!(pfaffian(&sym), Err(Error::NotAntisymmetric)));
    }

    #[test]
    fn hyperpfaffian_single_block() {
        let mut t = AntisymTensor::zeros(4, 4, ScalarKind::Real).unwrap();
        t.set(&[0, 1, 2, 3], exact_int(7)).unwrap();
        // ∫ dψ_1…dψ_4 ψ_1ψ_2ψ_3ψ_4 = (−1)^6 = 1
        assert_eq!(hyperpfaffian(&t).unwrap(), exact_int(7));
        let zero = AntisymTensor::zeros(4, 4, ScalarKind::Real).unwrap();
        assert_eq!(hyperpfaffian(&zero).unwrap(), Exact::zero());
    }

    #[test]
    fn hyperpfaffian_matches_partition_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_antisym(8, 4, ScalarKind::Real, &mut rng);
        assert_eq!(hyperpfaffian(&t).unwrap(), partition_hyperpfaffian(&t));
        let t = random_antisym(6, 2, ScalarKind::Complex, &mut rng);
        assert_eq!(hyperpfaffian(&t).unwrap(), partition_hyperpfaffian(&t));
    }

    #[test]
    fn hyperpfaffian_rejects_bad_orders() {
        let t = AntisymTensor::<Exact>::zeros(6, 3, ScalarKind::Real).unwrap();
        assert!(hyperpfaffian(&t).is_err());
        let t = AntisymTensor::<Exact>::zeros(6, 4, ScalarKind::Real).unwrap();
        assert!(hyperpfaffian(&t).is_err());
    }

    #[test]
    fn zero_tensor_gives_pure_power() {
        for (n, p) in [(4, 2), (5, 3), (6, 4)] {
            let t = AntisymTensor::zeros(n, p, ScalarKind::Complex).unwrap();
            let g = CouplingSet::all_unit(p, IndexSum::AllOrderings);
            assert_eq!(char_poly_exact(&t, &g, DEFAULT_SIZE_LIMIT).unwrap(), LambdaPoly::monomial(n));
        }
    }

    #[test]
    fn pure_species_at_zero_is_signed_pf_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, p) in [(2, 2), (4, 2), (4, 4), (6, 2)] {
            let t = random_antisym(n, p, ScalarKind::Real, &mut rng);
            let g = CouplingSet::pure_species(p, IndexSum::Increasing);
            let z = char_poly_exact(&t, &g, DEFAULT_SIZE_LIMIT).unwrap();
            let pf = hyperpfaffian(&t).unwrap();
            let expected = if (n * (n - 1) / 2) % 2 == 1 { -(pf.clone() * pf) } else { pf.clone() * pf };
            assert_eq!(z.coeff(0), expected, "n={n} p={p}");
            assert_eq!(z.degree(), Some(n));
        }
    }

    #[test]
    fn symmetric_projection_sees_only_symmetric_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 3;
        let m: Vec<Vec<Exact>> = (0..n).map(|_| (0..n).map(|_| small_rational(&mut rng)).collect()).collect();
        let t = DenseTensor::matrix(n, ScalarKind::Real, &m).unwrap();
        let z = char_poly_exact(&t, &CouplingSet::symmetric_matrix(), DEFAULT_SIZE_LIMIT).unwrap();
        // the action equals Σ (M + Mᵀ)_ab ψ̄_a ψ_b
        let projected: Vec<Vec<Exact>> =
            (0..n).map(|a| (0..n).map(|b| -(m[a][b].clone() + m[b][a].clone())).collect()).collect();
        assert_eq!(z, char_poly_matrix(&projected).unwrap());
    }

    #[test]
    fn antisymmetric_projection_ignores_symmetric_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 4;
        let m: Vec<Vec<Exact>> = (0..n).map(|_| (0..n).map(|_| small_rational(&mut rng)).collect()).collect();
        let mut shifted = m.clone();
        for a in 0..n {
            for b in a..n {
                let s = small_rational(&mut rng);
                shifted[a][b] = shifted[a][b].clone() + s.clone();
                if a != b {
                    shifted[b][a] = shifted[b][a].clone() + s;
                }
            }
        }
        let g = CouplingSet::antisymmetric_matrix();
        let z = char_poly_exact(&DenseTensor::matrix(n, ScalarKind::Real, &m).unwrap(), &g, DEFAULT_SIZE_LIMIT).unwrap();
        let z2 =
            char_poly_exact(&DenseTensor::matrix(n, ScalarKind::Real, &shifted).unwrap(), &g, DEFAULT_SIZE_LIMIT).unwrap();
        assert_eq!(z, z2);
        let projected: Vec<Vec<Exact>> =
            (0..n).map(|a| (0..n).map(|b| -(m[a][b].clone() - m[b][a].clone())).collect()).collect();
        assert_eq!(z, char_poly_matrix(&projected).unwrap());
    }

    #[test]
    fn symmetric_tensor_drops_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, p) in [(4usize, 4usize), (5, 4), (4, 3)] {
            let base: Vec<Exact> = (0..n.pow(p as u32)).map(|_| small_rational(&mut rng)).collect();
            // symmetrize: value depends on the sorted tuple only
            let t = DenseTensor::from_fn(n, p, ScalarKind::Complex, |idx| {
                let mut s = idx.to_vec();
                s.sort();
                base[s.iter().fold(0, |acc, &a| acc * n + a)].clone()
            })
            .unwrap();
            let mut g = CouplingSet::new(p, IndexSum::AllOrderings);
            for bits in 0..(1u32 << p) {
                let pattern: Vec<u8> = (0..p).map(|i| ((bits >> i) & 1) as u8).collect();
                g = g.with_g(&pattern, small_complex(&mut rng)).unwrap();
                g = g.with_gbar(&pattern, small_complex(&mut rng)).unwrap();
            }
            assert!(interaction(&t, &g).unwrap().is_empty());
            assert_eq!(char_poly_exact(&t, &g, DEFAULT_SIZE_LIMIT).unwrap(), LambdaPoly::monomial(n));
        }
    }

    #[test]
    fn all_unit_couplings_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (n, p) in [(4, 2), (4, 4), (6, 2)] {
            let t = random_antisym(n, p, ScalarKind::Real, &mut rng);
            assert!(all_g_unit_vanishes(&t).unwrap());
        }
    }

    #[test]
    fn odd_action_and_size_limit_are_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_antisym(4, 3, ScalarKind::Complex, &mut rng);
        let g = CouplingSet::pure_species(3, IndexSum::AllOrderings);
        assert!(matches!(char_poly_exact(&t, &g, DEFAULT_SIZE_LIMIT), Err(Error::GrassmannOdd)));
        let t = random_antisym(6, 2, ScalarKind::Real, &mut rng);
        let g = CouplingSet::pure_species(2, IndexSum::AllOrderings);
        assert!(matches!(char_poly_exact(&t, &g, 5), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn all_orderings_is_p_factorial_times_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, p, fact) in [(5, 2, 2), (5, 4, 24)] {
            let t = random_antisym(n, p, ScalarKind::Real, &mut rng);
            let all = interaction(&t, &CouplingSet::pure_species(p, IndexSum::AllOrderings)).unwrap();
            let inc = interaction(&t, &CouplingSet::pure_species(p, IndexSum::Increasing)).unwrap();
            assert_eq!(all, inc.scale(&exact_int(fact)));
        }
    }

    #[test]
    fn odd_currents_are_rejected_for_commuting_species() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = random_antisym(5, 3, ScalarKind::Complex, &mut rng);
        let g = CouplingSet::new(3, IndexSum::AllOrderings).with_g(&[0, 1, 1], Exact::one()).unwrap();
        let currents = TupleCurrents::from_couplings(5, &g).unwrap();
        let res = char_poly_from_currents(&currents, &t.stored_values(), Species::Complex);
        assert!(matches!(res, Err(Error::GrassmannOdd)));
    }

    #[test]
    fn currents_agree_with_direct_interaction() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = random_antisym(5, 2, ScalarKind::Complex, &mut rng);
        let g = CouplingSet::new(2, IndexSum::AllOrderings)
            .with_g(&[0, 1], small_complex(&mut rng))
            .unwrap()
            .with_g(&[1, 1], small_complex(&mut rng))
            .unwrap()
            .with_gbar(&[1, 0], small_complex(&mut rng))
            .unwrap()
            .with_gbar(&[0, 0], small_complex(&mut rng))
            .unwrap();
        let direct = char_poly_exact(&t, &g, DEFAULT_SIZE_LIMIT).unwrap();
        let currents = TupleCurrents::from_couplings(5, &g).unwrap();
        let values = t.stored_values();
        assert_eq!(char_poly_from_currents(&currents, &values, Species::Complex).unwrap(), direct);
    }

    #[test]
    fn odd_species_single_tuple() {
        // N = p = 1: X = ψ̄, Y = ψ, factor 1 − |t|² ψ̄ψ = 1 + |t|² ψψ̄
        let currents = TupleCurrents {
            n: 1,
            p: 1,
            tuples: vec![vec![0]],
            x: vec![GrassmannPoly::generator(1, Gen::psibar(0))],
            y: vec![GrassmannPoly::generator(1, Gen::psi(0))],
        };
        let t = vec![Complex::new(rat(1, 1), rat(1, 1))];
        let z = char_poly_from_currents(&currents, &t, Species::OddGrassmann).unwrap();
        assert_eq!(z.coeffs(), &[exact_int(-2), exact_int(1)]);
    }
}
