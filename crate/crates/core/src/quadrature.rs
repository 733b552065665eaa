//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// ∫_a^b f with |error| ≤ max(abs_tol, rel_tol·|I|) by interval bisection.
pub fn integrate<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad> {
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&f, a, b)?;
    let mut pieces = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quad { value, error, evaluations });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!("no convergence on [{a}, {b}]: error {error:e}")));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid)?;
        let (v2, e2) = gk15(&f, mid, hi)?;
        evaluations += 30;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| Ok(x.powi(5) - 2.0 * x), 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((q.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn sqrt_edge() {
        // ∫_0^1 √(1 − x) = 2/3
        let q = integrate(|x: f64| Ok((1.0 - x).max(0.0).sqrt()), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        let q = integrate(|x: f64| Ok((20.0 * x).sin()), 0.0, std::f64::consts::PI, 1e-13, 1e-13).unwrap();
        assert!(q.value.abs() < 1e-12);
    }

    #[test]
    fn propagates_errors() {
        let r = integrate(|_| Err(Error::EmptyInput), 0.0, 1.0, 1e-8, 1e-8);
        assert!(r.is_err());
    }
}
