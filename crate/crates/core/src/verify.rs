//! End-to-end numerical checks shared by `tenspec verify` and the
//! acceptance harness. `Size::Full` runs at the published sizes;
//! `Size::Quick` shrinks sample counts and degrees.

use std::f64::consts::PI;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::closed::{avg_coeffs, hermite_consistency, mu_from_preset, AvgCharPoly, InteractionPreset, PresetKind};
use crate::ensemble::{fit_mu, mc_average_charpoly, reference_coeffs, zscore_report, EnsembleSpec};
use crate::error::{Error, Result};
use crate::fuss_catalan::{fc_number, ks_distance, moments_check, rho_radial, RadialDensity};
use crate::grassmann::{
    char_poly_exact, hyperpfaffian, pfaffian, AntisymTensor, CouplingSet, IndexSum, ScalarKind, DEFAULT_SIZE_LIMIT,
};
use crate::rootfinder::{find_roots_with, lift_roots, newton_power_sums, power_sums, reduce_by_symmetry, solve_avg, RootOptions, ScaledPoly};
use crate::saddle::{classify, predict_zero_radii, rho_from_saddle, THETA0};
use crate::scalar::{exact_real, exact_to_c64, rat, Exact};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Size {
    Quick,
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check { name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    rat(rng.gen_range(-9..=9), rng.gen_range(1..=4))
}

/// Determinant by Gaussian elimination over the rationals.
pub fn rational_det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRational::from_integer(BigInt::from(1));
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= p.clone();
        for r in col + 1..n {
            let f = a[r][col].clone() / p.clone();
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c].clone() * f.clone();
                a[r][c] -= v;
            }
        }
    }
    det
}

pub fn pfaffian_identity(size: Size) -> Check {
    timed("pfaffian identity", || {
        let count = if size == Size::Full { 100 } else { 20 };
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for i in 0..count {
            let n = [2, 4, 6][i % 3];
            let mut m = vec![vec![BigRational::zero(); n]; n];
            for a in 0..n {
                for b in a + 1..n {
                    let v = small_rational(&mut rng);
                    m[a][b] = v.clone();
                    m[b][a] = -v;
                }
            }
            let exact: Vec<Vec<Exact>> = m.iter().map(|r| r.iter().map(|v| exact_real(v.clone())).collect()).collect();
            let pf = pfaffian(&exact)?;
            if pf.clone() * pf != exact_real(rational_det(&m)) {
                return Ok((false, format!("mismatch at matrix {i} (N={n})")));
            }
        }
        Ok((true, format!("{count} matrices, N in {{2,4,6}}")))
    })
}

pub fn pf_squared(size: Size) -> Check {
    timed("pf-squared at lambda=0", || {
        let cases: &[(usize, usize)] = if size == Size::Full { &[(4, 20), (8, 5)] } else { &[(4, 5), (8, 1)] };
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let g = CouplingSet::pure_species(4, IndexSum::Increasing);
        for &(n, count) in cases {
            for i in 0..count {
                let t = AntisymTensor::from_fn(n, 4, ScalarKind::Real, |_| exact_real(small_rational(&mut rng)))?;
                let z0 = char_poly_exact(&t, &g, DEFAULT_SIZE_LIMIT)?.coeff(0);
                let pf = hyperpfaffian(&t)?;
                let sq = pf.clone() * pf;
                let expected = if (n * (n - 1) / 2) % 2 == 1 { -sq } else { sq };
                if z0 != expected {
                    return Ok((false, format!("mismatch at N={n}, tensor {i}")));
                }
            }
        }
        Ok((true, format!("cases (N, count) = {cases:?}, p = 4")))
    })
}

pub fn hermite_limit(size: Size) -> Check {
    timed("hermite limit", || {
        let (ns, samples): (&[usize], usize) = if size == Size::Full { (&[2, 3, 4], 100_000) } else { (&[2, 3], 20_000) };
        let sigma = rat(1, 1);
        let mut worst = 0.0f64;
        for &n in ns {
            if !hermite_consistency(n, &sigma)? {
                return Ok((false, format!("closed form differs from sigma^N He_N at N={n}")));
            }
            let spec = EnsembleSpec::symmetric_matrix(n, 1.0, samples, 7 + n as u64);
            let (mean, se) = mc_average_charpoly(&spec)?;
            let table = zscore_report(&mean, &se, &reference_coeffs(&spec)?)?;
            worst = worst.max(table.max_abs_z);
        }
        Ok((worst < 4.0, format!("max |z| = {worst:.3} over N = {ns:?}, {samples} samples; exact identity holds")))
    })
}

pub fn appendix_couplings(size: Size) -> Check {
    timed("preset couplings", || {
        let samples = if size == Size::Full { 10_000 } else { 2_000 };
        let (n, p) = (6, 3);
        let mut parts = Vec::new();
        let mut ok = true;
        for (seed, kind) in [PresetKind::PsiPPsiBarP, PresetKind::SingleBarSum, PresetKind::MixedK(1)].into_iter().enumerate() {
            let preset = InteractionPreset::new(kind, p, ScalarKind::Complex);
            let mu = mu_from_preset(&preset, p, n)?.re.to_f64().unwrap_or(f64::NAN);
            let spec = EnsembleSpec::tensor(n, p, ScalarKind::Complex, preset, samples, 31 + seed as u64);
            let (mean, se) = mc_average_charpoly(&spec)?;
            let (mu_hat, mu_se) = fit_mu(&mean, &se, n, p)?;
            let z = (mu_hat - mu) / mu_se;
            ok &= z.abs() < 3.0;
            parts.push(format!("{}: mu_hat={mu_hat:.5e}±{mu_se:.1e} mu={mu:.5e} z={z:.2}", kind.name()));
        }
        Ok((ok, parts.join("; ")))
    })
}

pub fn fc_moments(_size: Size) -> Check {
    timed("Fuss-Catalan moments", || {
        let mut worst = 0.0f64;
        let mut norm = 0.0f64;
        for p in [2, 3, 4] {
            let r = moments_check(p, 5)?;
            worst = worst.max(r.max_rel_error);
            norm = norm.max((r.rows[0].quadrature - 1.0).abs());
        }
        Ok((worst < 1e-6 && norm < 1e-8, format!("max rel error {worst:.2e}, |mass - 1| = {norm:.2e}")))
    })
}

fn mu_tilde_poly(n: usize, p: usize, mu_tilde: BigRational) -> Result<AvgCharPoly> {
    let mu = mu_tilde / BigRational::from_integer(BigInt::from(n).pow(p as u32 - 1));
    avg_coeffs(n, p, exact_real(mu))
}

pub fn root_density(size: Size) -> Check {
    timed("root density KS", || {
        let cases: &[(usize, usize)] = if size == Size::Full { &[(4, 2000), (3, 999)] } else { &[(4, 400), (3, 300)] };
        let limit = if size == Size::Full { 0.02 } else { 0.05 };
        let mut parts = Vec::new();
        let mut ok = true;
        for &(p, n) in cases {
            let z = mu_tilde_poly(n, p, rat(1, p as i64))?;
            let rs = solve_avg(&z, &RootOptions::default())?;
            let d = ks_distance(&RadialDensity::new(p, 1.0 / p as f64)?, &rs.moduli())?;
            ok &= d < limit;
            parts.push(format!("p={p} N={n}: KS={d:.4} ({} bits)", rs.precision_bits));
        }
        Ok((ok, format!("{} (limit {limit})", parts.join("; "))))
    })
}

/// |Ξ_N(pk)/(N (pμ̃)^k) − F_p(k)| for each N, k = 1..=kmax.
pub fn power_sum_gaps(p: usize, mu_tilde: BigRational, ns: &[usize], kmax: usize) -> Result<Vec<Vec<f64>>> {
    let pm = (BigRational::from_integer(BigInt::from(p)) * mu_tilde.clone()).to_f64().unwrap_or(f64::NAN);
    let mut out = Vec::new();
    for &n in ns {
        let z = mu_tilde_poly(n, p, mu_tilde.clone())?;
        let rs = solve_avg(&z, &RootOptions::default())?;
        let sums = power_sums(&rs, p * kmax);
        let exact = newton_power_sums(&z.to_lambda_poly(), p * kmax)?;
        let mut row = Vec::new();
        for k in 1..=kmax {
            let from_roots = sums.values[p * k];
            let oracle = exact_to_c64(&exact[p * k]);
            if (from_roots - oracle).norm() > 1e-6 * oracle.norm().max(1.0) {
                return Err(Error::InvalidArgument(format!("root power sum {from_roots} disagrees with Newton value {oracle}")));
            }
            let f = fc_number(p, k).to_f64().unwrap_or(f64::NAN);
            row.push((from_roots.re / (n as f64 * pm.powi(k as i32)) - f).abs());
        }
        out.push(row);
    }
    Ok(out)
}

pub fn power_sum_limit(size: Size) -> Check {
    timed("power-sum limit", || {
        let ns: &[usize] = if size == Size::Full { &[100, 200, 400] } else { &[50, 100, 200] };
        let gaps = power_sum_gaps(3, rat(1, 3), ns, 3)?;
        let mut ok = true;
        let mut parts = Vec::new();
        for k in 0..3 {
            let col: Vec<f64> = gaps.iter().map(|r| r[k]).collect();
            let monotone = col.windows(2).all(|w| w[1] < w[0]);
            let last = col[col.len() - 1];
            let small = size == Size::Quick || last < 0.05;
            ok &= monotone && small;
            let f = fc_number(3, k + 1).to_f64().unwrap_or(f64::NAN);
            parts.push(format!(
                "k={}: {} monotone={monotone}{}, relative {:.4}",
                k + 1,
                col.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" > "),
                if small { "" } else { " (above 0.05 at largest N)" },
                last / f
            ));
        }
        Ok((ok, format!("N = {ns:?}; {}", parts.join("; "))))
    })
}

pub fn thimble_counts(_size: Size) -> Check {
    timed("thimble classification", || {
        let cases = [(3, 0.03, 1), (3, 0.23, 2), (4, 0.01, 1), (4, 0.06, 1), (4, 0.16, 2)];
        let mut ok = true;
        let mut parts = Vec::new();
        for (p, z0, expected) in cases {
            let c = classify(p, z0, THETA0)?;
            let count = c.leading_count();
            let mut line = format!("p={p} z0={z0}: {count}");
            ok &= count == expected;
            if expected == 2 {
                let (re, im) = c.pair_agreement();
                ok &= re < 1e-6 && im < 1e-6;
                line.push_str(&format!(" (dRe={re:.1e}, Im sum={im:.1e})"));
            }
            parts.push(line);
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Mean |predicted − computed| over radii paired from the outer edge.
pub fn zero_radius_mad(p: usize, mu_tilde: BigRational, n: usize) -> Result<f64> {
    let mt = mu_tilde.to_f64().unwrap_or(f64::NAN);
    let z = mu_tilde_poly(n, p, mu_tilde)?;
    let (_, w) = reduce_by_symmetry(&z);
    let s = find_roots_with(&w, &RootOptions::default())?;
    let mut computed: Vec<f64> = s.roots.iter().filter(|r| r.norm() > 0.0).map(|r| r.norm().powf(1.0 / p as f64)).collect();
    computed.sort_by(f64::total_cmp);
    let predicted = predict_zero_radii(p, mt, n)?;
    let k = computed.len().min(predicted.len());
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    let gap: f64 = (1..=k).map(|i| (computed[computed.len() - i] - predicted[predicted.len() - i]).abs()).sum();
    Ok(gap / k as f64)
}

pub fn zero_quantization(size: Size) -> Check {
    timed("zero quantization", || {
        let ns: &[usize] = if size == Size::Full { &[100, 200, 400] } else { &[50, 100, 200] };
        let mads: Vec<f64> = ns.iter().map(|&n| zero_radius_mad(3, rat(1, 3), n)).collect::<Result<_>>()?;
        let ratios: Vec<f64> = mads.windows(2).map(|w| w[0] / w[1]).collect();
        let ok = ratios.iter().all(|&r| (2.0 / 1.5..=2.0 * 1.5).contains(&r));
        let fmt = |v: &[f64], e: bool| v.iter().map(|x| if e { format!("{x:.3e}") } else { format!("{x:.3}") }).collect::<Vec<_>>().join(", ");
        Ok((ok, format!("N = {ns:?}: MAD = [{}], ratios = [{}] (band [1.333, 3])", fmt(&mads, true), fmt(&ratios, false))))
    })
}

pub fn density_identity(_size: Size) -> Check {
    timed("saddle density identity", || {
        let mut worst = 0.0f64;
        for p in [2usize, 3, 4] {
            let mt = 1.0 / p as f64;
            let rmax = RadialDensity::new(p, mt)?.r_max();
            for i in 0..200 {
                let r = rmax * (i as f64 + 0.5) / 200.0;
                worst = worst.max((rho_from_saddle(p, mt, r)? - rho_radial(p, mt, r)?).abs());
            }
        }
        Ok((worst < 1e-6, format!("max |gap| = {worst:.2e} over 200 points, p in {{2,3,4}}")))
    })
}

/// Largest distance from a rotated root to the nearest root, relative to
/// the root's modulus.
fn rotation_gap(roots: &[Complex64], p: usize) -> f64 {
    let w = Complex64::from_polar(1.0, 2.0 * PI / p as f64);
    roots
        .iter()
        .map(|r| {
            let rot = r * w;
            roots.iter().map(|s| (s - rot).norm()).fold(f64::INFINITY, f64::min) / r.norm().max(1e-300)
        })
        .fold(0.0, f64::max)
}

pub fn symmetry_sparsity(_size: Size) -> Check {
    timed("p-fold symmetry and sparsity", || {
        let n = 50;
        let mut ok = true;
        let mut worst_rot = 0.0f64;
        let mut worst_full = 0.0f64;
        for p in 2..=7usize {
            let z = mu_tilde_poly(n, p, rat(1, p as i64))?;
            let coeffs = z.to_lambda_poly();
            for m in 0..=n {
                if (n - m) % p != 0 && !coeffs.coeff(m).is_zero() {
                    return Ok((false, format!("nonzero coefficient of lambda^{m} at p={p}")));
                }
            }
            let (m0, w) = reduce_by_symmetry(&z);
            let s = find_roots_with(&w, &RootOptions::default())?;
            let lifted = lift_roots(&s, p, m0);
            let nonzero: Vec<Complex64> = lifted.roots.iter().cloned().filter(|r| r.norm() > 0.0).collect();
            worst_rot = worst_rot.max(rotation_gap(&nonzero, p));
            // independent solve of the full degree-N polynomial
            let full = find_roots_with(&ScaledPoly::from_exact(coeffs.coeffs().to_vec()), &RootOptions::default())?;
            let full_nonzero: Vec<Complex64> = full.roots.iter().cloned().filter(|r| r.norm() > 1e-8).collect();
            worst_full = worst_full.max(rotation_gap(&full_nonzero, p));
            ok &= full_nonzero.len() == nonzero.len();
        }
        ok &= worst_rot < 1e-12 && worst_full < 1e-6;
        Ok((
            ok,
            format!("sparsity exact; rotation gap {worst_rot:.1e} (reduced solve), {worst_full:.1e} (full-degree solve)"),
        ))
    })
}

pub const SUITES: [&str; 6] = ["grassmann", "mc", "density", "roots", "thimble", "all"];

pub fn run_suite(name: &str, size: Size) -> Result<Vec<Check>> {
    let checks: Vec<fn(Size) -> Check> = match name {
        "grassmann" => vec![pfaffian_identity, pf_squared],
        "mc" => vec![hermite_limit, appendix_couplings],
        "density" => vec![fc_moments, density_identity],
        "roots" => vec![root_density, power_sum_limit, symmetry_sparsity],
        "thimble" => vec![thimble_counts, zero_quantization],
        "all" => vec![
            pfaffian_identity,
            pf_squared,
            hermite_limit,
            appendix_couplings,
            fc_moments,
            root_density,
            power_sum_limit,
            thimble_counts,
            zero_quantization,
            density_identity,
            symmetry_sparsity,
        ],
        _ => return Err(Error::InvalidArgument(format!("unknown suite {name}; expected one of {SUITES:?}"))),
    };
    Ok(checks.into_iter().map(|c| c(size)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_oracle() {
        let m = vec![vec![rat(2, 1), rat(1, 1)], vec![rat(3, 1), rat(4, 1)]];
        assert_eq!(rational_det(&m), rat(5, 1));
        let s = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        assert_eq!(rational_det(&s), rat(-1, 1));
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", Size::Quick).is_err());
    }
}
