//! Gaussian tensor and symmetric-matrix ensembles, sampled per-sample on
//! independent ChaCha streams so results do not depend on scheduling.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed::{avg_coeffs, hermite_reference, mu_from_preset, InteractionPreset, PresetKind};
use crate::error::{Error, Result};
use crate::grassmann::{char_poly_from_currents, char_poly_matrix, AntisymTensor, ScalarKind, Species, TupleCurrents};
use crate::scalar::{exact_to_c64, rational_from_f64, rational_to_f64};

/// Samples per work item; chunk boundaries fix the reduction tree.
const CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    /// Antisymmetric order-p tensor coupled through an interaction preset.
    Tensor(InteractionPreset),
    /// Real symmetric matrix, off-diagonal variance σ², diagonal 2σ².
    SymmetricMatrix { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub p: usize,
    pub scalar_kind: ScalarKind,
    /// Two-point normalization: ⟨T T̄⟩ = β/N^{p−1} per independent entry.
    pub beta: f64,
    pub model: Model,
    pub samples: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Tensor ensemble with the preset's β.
    pub fn tensor(n: usize, p: usize, scalar_kind: ScalarKind, preset: InteractionPreset, samples: usize, seed: u64) -> Self {
        let beta = rational_to_f64(&preset.beta);
        EnsembleSpec { n, p, scalar_kind, beta, model: Model::Tensor(preset), samples, seed }
    }

    pub fn symmetric_matrix(n: usize, sigma: f64, samples: usize, seed: u64) -> Self {
        EnsembleSpec {
            n,
            p: 2,
            scalar_kind: ScalarKind::Real,
            beta: sigma * sigma * n as f64,
            model: Model::SymmetricMatrix { sigma },
            samples,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.p > self.n {
            return Err(Error::InvalidOrder { p: self.p, n: self.n, reason: "need 1 <= p <= n" });
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be finite and nonnegative, got {}", self.beta)));
        }
        match &self.model {
            Model::Tensor(preset) => preset.validate(self.p),
            Model::SymmetricMatrix { sigma } => {
                if self.p != 2 {
                    return Err(Error::InvalidArgument("symmetric matrices need p = 2".into()));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidArgument(format!("sigma must be finite and nonnegative, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    /// Variance of one independent tensor entry.
    pub fn entry_variance(&self) -> f64 {
        self.beta / (self.n as f64).powi(self.p as i32 - 1)
    }
}

/// The generator for one sample: stream `index` of the ChaCha8 keyed by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Independent Gaussian entries on increasing tuples. Complex entries get
/// real and imaginary parts of variance β/(2N^{p−1}) each.
pub fn sample_tensor(spec: &EnsembleSpec, stream: u64) -> Result<AntisymTensor<Complex64>> {
    let mut rng = sample_rng(spec.seed, stream);
    let var = spec.entry_variance();
    let kind = spec.scalar_kind;
    AntisymTensor::from_fn(spec.n, spec.p, kind, |_| match kind {
        ScalarKind::Real => Complex64::new(var.sqrt() * normal(&mut rng), 0.0),
        ScalarKind::Complex => {
            let s = (0.5 * var).sqrt();
            let re = s * normal(&mut rng);
            Complex64::new(re, s * normal(&mut rng))
        }
    })
}

/// Real symmetric matrix with off-diagonal variance σ² and diagonal 2σ².
pub fn sample_symmetric_matrix(n: usize, sigma: f64, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = sample_rng(seed, stream);
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = std::f64::consts::SQRT_2 * sigma * normal(&mut rng);
        for j in i + 1..n {
            let v = sigma * normal(&mut rng);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Streaming mean and variance of complex coefficient vectors, real and
/// imaginary parts tracked separately.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: Vec<Complex64>,
    m2_re: Vec<f64>,
    m2_im: Vec<f64>,
}

impl RunningMoments {
    pub fn new(len: usize) -> Self {
        RunningMoments { count: 0, mean: vec![Complex64::new(0.0, 0.0); len], m2_re: vec![0.0; len], m2_im: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn push(&mut self, x: &[Complex64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch { left: self.len(), right: x.len() });
        }
        self.count += 1;
        let n = self.count as f64;
        for (i, v) in x.iter().enumerate() {
            let d = v - self.mean[i];
            self.mean[i] += d / n;
            let d2 = v - self.mean[i];
            self.m2_re[i] += d.re * d2.re;
            self.m2_im[i] += d.im * d2.im;
        }
        Ok(())
    }

    /// Pairwise combination of two disjoint sample sets.
    pub fn merge(&self, other: &RunningMoments) -> Result<RunningMoments> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch { left: self.len(), right: other.len() });
        }
        if other.count == 0 {
            return Ok(self.clone());
        }
        if self.count == 0 {
            return Ok(other.clone());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let mut out = RunningMoments::new(self.len());
        out.count = self.count + other.count;
        for i in 0..self.len() {
            let d = other.mean[i] - self.mean[i];
            out.mean[i] = self.mean[i] + d * (nb / n);
            out.m2_re[i] = self.m2_re[i] + other.m2_re[i] + d.re * d.re * na * nb / n;
            out.m2_im[i] = self.m2_im[i] + other.m2_im[i] + d.im * d.im * na * nb / n;
        }
        Ok(out)
    }

    /// Standard error of the mean, (re, im) packed into a complex number.
    pub fn stderr(&self) -> Vec<Complex64> {
        if self.count < 2 {
            return vec![Complex64::new(0.0, 0.0); self.len()];
        }
        let n = self.count as f64;
        let f = |m2: f64| (m2.max(0.0) / (n - 1.0) / n).sqrt();
        self.m2_re.iter().zip(&self.m2_im).map(|(&r, &i)| Complex64::new(f(r), f(i))).collect()
    }
}

/// Merges in a balanced tree whose shape depends only on the input length.
fn tree_merge(mut parts: Vec<RunningMoments>, len: usize) -> Result<RunningMoments> {
    if parts.is_empty() {
        return Ok(RunningMoments::new(len));
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        for pair in parts.chunks(2) {
            next.push(match pair {
                [a, b] => a.merge(b)?,
                [a] => a.clone(),
                _ => unreachable!(),
            });
        }
        parts = next;
    }
    Ok(parts.pop().unwrap_or_else(|| RunningMoments::new(len)))
}

/// Worker count from TENSPEC_THREADS, falling back to rayon's default.
pub fn thread_count() -> usize {
    std::env::var("TENSPEC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` on a pool capped at `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

enum Evaluator {
    Tensor { currents: TupleCurrents<Complex64>, species: Species },
    Matrix { sigma: f64 },
}

impl Evaluator {
    fn new(spec: &EnsembleSpec) -> Result<Self> {
        match &spec.model {
            Model::Tensor(preset) => {
                let alpha = Complex64::new(rational_to_f64(&preset.alpha), 0.0);
                let (currents, species) = preset.currents(spec.n, spec.p, spec.scalar_kind, &alpha)?;
                Ok(Evaluator::Tensor { currents, species })
            }
            Model::SymmetricMatrix { sigma } => Ok(Evaluator::Matrix { sigma: *sigma }),
        }
    }

    fn sample(&self, spec: &EnsembleSpec, index: u64) -> Result<Vec<Complex64>> {
        match self {
            Evaluator::Tensor { currents, species } => {
                let t = sample_tensor(spec, index)?;
                let values: Vec<Complex64> = currents.tuples.iter().map(|a| t.get_sorted(a)).collect();
                Ok(char_poly_from_currents(currents, &values, *species)?.into_coeffs())
            }
            Evaluator::Matrix { sigma } => {
                let m = sample_symmetric_matrix(spec.n, *sigma, spec.seed, index);
                let m: Vec<Vec<Complex64>> =
                    m.into_iter().map(|row| row.into_iter().map(|v| Complex64::new(v, 0.0)).collect()).collect();
                Ok(char_poly_matrix(&m)?.into_coeffs())
            }
        }
    }
}

/// Mean coefficients of the sampled characteristic polynomial and their
/// standard errors, index k holding λ^k.
pub fn mc_average_charpoly(spec: &EnsembleSpec) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let m = mc_moments(spec)?;
    let stderr = m.stderr();
    Ok((m.mean, stderr))
}

pub fn mc_moments(spec: &EnsembleSpec) -> Result<RunningMoments> {
    spec.validate()?;
    let eval = Evaluator::new(spec)?;
    let len = spec.n + 1;
    let chunks = spec.samples.div_ceil(CHUNK);
    let run = || -> Result<Vec<RunningMoments>> {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = RunningMoments::new(len);
                let end = ((c + 1) * CHUNK).min(spec.samples);
                for i in c * CHUNK..end {
                    let mut coeffs = eval.sample(spec, i as u64)?;
                    coeffs.resize(len, Complex64::new(0.0, 0.0));
                    acc.push(&coeffs)?;
                }
                Ok(acc)
            })
            .collect()
    };
    let parts = with_threads(thread_count(), run)??;
    tree_merge(parts, len)
}

/// Closed-form average the ensemble should reproduce.
pub fn reference_coeffs(spec: &EnsembleSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let poly = match &spec.model {
        Model::Tensor(preset) => {
            let mut preset = preset.clone();
            preset.beta = rational_from_f64(spec.beta)?;
            let mut mu = mu_from_preset(&preset, spec.p, spec.n)?;
            if preset.kind == PresetKind::SingleBarSum && spec.p == 2 && spec.scalar_kind == ScalarKind::Real {
                // J and J̄ share their words here, so J² survives the average
                mu = mu.clone() + mu;
            }
            avg_coeffs(spec.n, spec.p, mu)?.to_lambda_poly()
        }
        Model::SymmetricMatrix { sigma } => hermite_reference(spec.n, &rational_from_f64(*sigma)?),
    };
    let mut out: Vec<Complex64> = poly.coeffs().iter().map(exact_to_c64).collect();
    out.resize(spec.n + 1, Complex64::new(0.0, 0.0));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ZRow {
    pub power: usize,
    pub mean: Complex64,
    pub stderr: Complex64,
    pub reference: Complex64,
    pub z_re: f64,
    pub z_im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZTable {
    pub rows: Vec<ZRow>,
    pub max_abs_z: f64,
}

fn zscore(gap: f64, se: f64, scale: f64, k: usize) -> Result<f64> {
    if gap.abs() <= 1e-12 * scale.max(1.0) {
        return Ok(0.0);
    }
    if se == 0.0 {
        return Err(Error::ZeroStderr(k));
    }
    Ok(gap / se)
}

/// Per-coefficient (mean − reference)/stderr for real and imaginary parts.
pub fn zscore_report(mean: &[Complex64], stderr: &[Complex64], reference: &[Complex64]) -> Result<ZTable> {
    if mean.len() != reference.len() || stderr.len() != mean.len() {
        return Err(Error::DimensionMismatch { left: mean.len(), right: reference.len().min(stderr.len()) });
    }
    let mut rows = Vec::with_capacity(mean.len());
    let mut max_abs_z = 0.0f64;
    for (k, ((m, s), r)) in mean.iter().zip(stderr).zip(reference).enumerate() {
        let gap = m - r;
        let z_re = zscore(gap.re, s.re, r.norm(), k)?;
        let z_im = zscore(gap.im, s.im, r.norm(), k)?;
        max_abs_z = max_abs_z.max(z_re.abs()).max(z_im.abs());
        rows.push(ZRow { power: k, mean: *m, stderr: *s, reference: *r, z_re, z_im });
    }
    Ok(ZTable { rows, max_abs_z })
}

/// μ̂ and its standard error from the λ^{N−p} coefficient, −μ N!/(N−p)!.
pub fn fit_mu(mean: &[Complex64], stderr: &[Complex64], n: usize, p: usize) -> Result<(f64, f64)> {
    if p > n || mean.len() != n + 1 || stderr.len() != n + 1 {
        return Err(Error::InvalidArgument(format!("need n + 1 = {} coefficients and p <= n", n + 1)));
    }
    let falling: f64 = ((n - p + 1)..=n).map(|j| j as f64).product();
    Ok((-mean[n - p].re / falling, stderr[n - p].re / falling))
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub n: usize,
    pub p: usize,
    pub samples: usize,
    pub seed: u64,
    pub beta: f64,
    pub mu_reference: Option<f64>,
    pub mu_hat: Option<(f64, f64)>,
    pub table: ZTable,
}

pub fn mc_report(spec: &EnsembleSpec) -> Result<McReport> {
    let (mean, stderr) = mc_average_charpoly(spec)?;
    let reference = reference_coeffs(spec)?;
    let table = zscore_report(&mean, &stderr, &reference)?;
    let (mu_reference, mu_hat) = match &spec.model {
        Model::Tensor(preset) => {
            let mut preset = preset.clone();
            preset.beta = rational_from_f64(spec.beta)?;
            let mu = mu_from_preset(&preset, spec.p, spec.n)?;
            (mu.re.to_f64(), Some(fit_mu(&mean, &stderr, spec.n, spec.p)?))
        }
        Model::SymmetricMatrix { .. } => (None, None),
    };
    Ok(McReport { n: spec.n, p: spec.p, samples: spec.samples, seed: spec.seed, beta: spec.beta, mu_reference, mu_hat, table })
}
