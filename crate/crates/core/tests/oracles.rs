use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use tenspec::closed::{avg_coeffs, wick_average, InteractionPreset, PresetKind};
use tenspec::ensemble::{mc_average_charpoly, reference_coeffs, zscore_report, EnsembleSpec};
use tenspec::fuss_catalan::{fc_number, FCDensity};
use tenspec::grassmann::ScalarKind;
use tenspec::rootfinder::{expand_roots, find_roots_with, newton_power_sums, power_sums, solve_avg, verify_generating_identity, RootOptions, ScaledPoly};
use tenspec::scalar::{exact_real, exact_to_c64, rat};

fn mu_tilde_poly(n: usize, p: usize, mt: BigRational) -> tenspec::closed::AvgCharPoly {
    let mu = mt / BigRational::from_integer(BigInt::from(n).pow(p as u32 - 1));
    avg_coeffs(n, p, exact_real(mu)).unwrap()
}

#[test]
fn closed_form_matches_exact_gaussian_average() {
    for (n, p, kind) in [(6, 3, PresetKind::PsiPPsiBarP), (4, 4, PresetKind::MixedK(2)), (5, 2, PresetKind::PsiPPsiBarP)] {
        let scalar = if p % 2 == 1 { ScalarKind::Complex } else { ScalarKind::Real };
        let preset = InteractionPreset::new(kind, p, scalar);
        let one = tenspec::scalar::exact_int(1);
        let (currents, species) = preset.currents(n, p, scalar, &one).unwrap();
        let c = preset.beta.clone() / BigRational::from_integer(BigInt::from(n).pow(p as u32 - 1));
        let avg = wick_average(&currents, species, &c).unwrap();
        let spec = EnsembleSpec::tensor(n, p, scalar, preset, 1, 0);
        let reference = reference_coeffs(&spec).unwrap();
        let from_wick: Vec<Complex64> = (0..=n).map(|k| exact_to_c64(&avg.coeff(k))).collect();
        assert_eq!(from_wick, reference, "n={n} p={p} {kind:?}");
    }
}

#[test]
fn single_bar_sum_matrix_reference_follows_sampling() {
    let preset = InteractionPreset::new(PresetKind::SingleBarSum, 2, ScalarKind::Real);
    let spec = EnsembleSpec::tensor(4, 2, ScalarKind::Real, preset, 20_000, 3);
    let (mean, se) = mc_average_charpoly(&spec).unwrap();
    let t = zscore_report(&mean, &se, &reference_coeffs(&spec).unwrap()).unwrap();
    assert!(t.max_abs_z < 4.0, "{t:?}");
}

#[test]
fn root_power_sums_match_newton_identities() {
    let z = mu_tilde_poly(60, 3, rat(1, 3));
    let rs = solve_avg(&z, &RootOptions::default()).unwrap();
    let sums = power_sums(&rs, 12);
    let exact = newton_power_sums(&z.to_lambda_poly(), 12).unwrap();
    for k in 0..=12 {
        let e = exact_to_c64(&exact[k]);
        assert!((sums.values[k] - e).norm() < 1e-9 * e.norm().max(1.0), "k={k}: {} vs {e}", sums.values[k]);
    }
    let check = verify_generating_identity(&z.to_lambda_poly(), &rs, Complex64::new(3.0, 0.5), 80).unwrap();
    assert!(check.gap < check.bound + 1e-10, "{check:?}");
}

#[test]
fn power_sums_approach_fuss_catalan() {
    // Ξ_N(3)/N = (N − 1)(N − 2)/N² at pμ̃ = 1
    for n in [30usize, 90] {
        let z = mu_tilde_poly(n, 3, rat(1, 3));
        let exact = newton_power_sums(&z.to_lambda_poly(), 3).unwrap();
        let nf = n as f64;
        assert!((exact_to_c64(&exact[3]).re / nf - (nf - 1.0) * (nf - 2.0) / (nf * nf)).abs() < 1e-12);
    }
    assert_eq!(fc_number(3, 1), rat(1, 1));
}

#[test]
fn density_moments_are_fuss_catalan() {
    let d = FCDensity::new(3).unwrap();
    for k in 0..4 {
        let m = d.series_moment(k).unwrap();
        let f: f64 = num_traits::ToPrimitive::to_f64(&fc_number(3, k as usize)).unwrap();
        assert!((m - f).abs() < 1e-6 * f, "k={k}: {m} vs {f}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovers_planted_roots(raw in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..12)) {
        let planted: Vec<Complex64> = raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        // keep roots apart so each is well conditioned
        for i in 0..planted.len() {
            for j in 0..i {
                prop_assume!((planted[i] - planted[j]).norm() > 0.2);
            }
        }
        let coeffs = expand_roots(&planted);
        let rs = find_roots_with(&ScaledPoly::from_c64(&coeffs), &RootOptions::default()).unwrap();
        prop_assert_eq!(rs.len(), planted.len());
        for r in &planted {
            let d = rs.roots.iter().map(|s| (s - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-7, "root {} missed by {}", r, d);
        }
    }

    #[test]
    fn averaged_polynomial_is_sparse(n in 2usize..40, p in 2usize..7, num in 1i64..9, den in 1i64..9) {
        prop_assume!(p <= n);
        let z = avg_coeffs(n, p, exact_real(rat(num, den))).unwrap().to_lambda_poly();
        for m in 0..=n {
            if (n - m) % p != 0 {
                prop_assert!(z.coeff(m) == exact_real(rat(0, 1)));
            }
        }
        prop_assert!(z.coeff(n) == exact_real(rat(1, 1)));
    }
}
