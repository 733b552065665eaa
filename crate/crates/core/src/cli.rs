//! Command-line front end. Artifacts go to `--output` (stdout by default);
//! a one-line JSON summary goes to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::closed::{avg_coeffs, InteractionPreset, PresetKind};
use crate::ensemble::{mc_report, thread_count, EnsembleSpec};
use crate::error::{Error, Result};
use crate::fuss_catalan::{ks_distance, moments_check, RadialDensity};
use crate::grassmann::ScalarKind;
use crate::io::{emit_histogram, fmt_f64, histogram_range, json_document, meta, read_column, Csv, FigureKind, FigureSpec, Svg};
use crate::rootfinder::{solve_avg, RootOptions};
use crate::saddle::{classify, predict_zero_radii, rho_from_saddle, ActionQ, FlowDirection, THETA0};
use crate::scalar::{exact_real, format_rational, parse_rational};
use crate::verify::{run_suite, Size};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "tenspec", version, about = "Averaged characteristic polynomials of random antisymmetric tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roots of the averaged characteristic polynomial.
    Roots(RootsArgs),
    /// Radial root density on a grid.
    Density(DensityArgs),
    /// Fuss-Catalan moments by quadrature against the exact numbers.
    Moments(MomentsArgs),
    /// Saddles, thimbles and the leading-order classification.
    Thimble(ThimbleArgs),
    /// Quantized zero radii on the positive ray.
    PredictZeros(PredictArgs),
    /// Monte Carlo average of the characteristic polynomial.
    Mc(McArgs),
    /// Run the numerical check suites.
    Verify(VerifyArgs),
    /// Histogram of a CSV column, optionally against the radial density.
    Hist(HistArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug, Serialize)]
struct Coupling {
    /// μ̃ = μ N^{p−1} as a rational or decimal (default 1/p).
    #[arg(long, conflicts_with = "mu")]
    mu_tilde: Option<String>,
    /// Bare coupling μ.
    #[arg(long)]
    mu: Option<String>,
}

impl Coupling {
    /// (μ, μ̃) for the given N and p.
    fn resolve(&self, n: Option<usize>, p: usize) -> Result<(Option<BigRational>, BigRational)> {
        if p < 2 {
            return Err(Error::InvalidArgument(format!("p must be at least 2, got {p}")));
        }
        let scale = |n: usize| BigRational::from_integer(BigInt::from(n).pow(p as u32 - 1));
        match (&self.mu, &self.mu_tilde) {
            (Some(mu), _) => {
                let n = n.ok_or_else(|| Error::InvalidArgument("--mu needs --n".into()))?;
                let mu = parse_rational(mu)?;
                Ok((Some(mu.clone()), mu * scale(n)))
            }
            (None, t) => {
                let mt = match t {
                    Some(s) => parse_rational(s)?,
                    None => BigRational::new(BigInt::from(1), BigInt::from(p)),
                };
                Ok((n.map(|n| mt.clone() / scale(n)), mt))
            }
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct RootsArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    coupling: Coupling,
    /// Starting working precision in bits.
    #[arg(long, default_value_t = 64)]
    precision_bits: u64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DensityArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    mu_tilde: Option<String>,
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MomentsArgs {
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 5)]
    kmax: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ThimbleArgs {
    #[arg(long)]
    p: usize,
    /// |z| on the real axis before tilting.
    #[arg(long)]
    z_mod: f64,
    /// Tilt angle θ0.
    #[arg(long, default_value_t = THETA0)]
    z_arg: f64,
    #[arg(long, value_enum, default_value = "json")]
    out: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    mu_tilde: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    out: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct McArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    /// PsiP_PsiBarP, MixedK<k>, SingleBarSum or symmetric-matrix.
    #[arg(long, default_value = "PsiP_PsiBarP")]
    preset: String,
    #[arg(long, value_enum, default_value = "complex")]
    scalar: Scalar,
    /// Off-diagonal standard deviation for the symmetric-matrix ensemble.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path (JSON); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Scalar {
    Real,
    Complex,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct HistArgs {
    /// CSV file with a header row, or one number per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "modulus")]
    column: String,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Raw counts instead of a density.
    #[arg(long)]
    counts: bool,
    /// Overlay the radial density for this p (with --mu-tilde).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    mu_tilde: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Echo of the resolved configuration, stored in the JSON meta block.
#[derive(Debug, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_tilde: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_mod: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_arg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

impl RunConfig {
    fn new(subcommand: &str, format: Option<Format>, output: &Option<PathBuf>) -> Self {
        RunConfig {
            subcommand: subcommand.to_string(),
            format: format.map(|f| format!("{f:?}").to_lowercase()),
            output: output.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        }
    }
}

/// What a subcommand produced: the artifact text and a few summary fields.
struct Outcome {
    artifact: String,
    summary: serde_json::Value,
    passed: bool,
}

impl Outcome {
    fn ok(artifact: String, summary: serde_json::Value) -> Self {
        Outcome { artifact, summary, passed: true }
    }
}

fn write_artifact(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn bad_format(cmd: &str, f: Format) -> Error {
    Error::InvalidArgument(format!("{cmd} does not support --format {f:?}").to_lowercase())
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Serialize)]
struct RootRecord {
    re: f64,
    im: f64,
    modulus: f64,
    residual: f64,
}

#[derive(Serialize)]
struct RootsData {
    p: usize,
    n: usize,
    mu_tilde: f64,
    precision_bits_used: u64,
    max_residual: f64,
    multiplicity_at_zero: usize,
    r_max: f64,
    roots: Vec<RootRecord>,
}

fn cmd_roots(a: &RootsArgs) -> Result<Outcome> {
    let (mu, mt) = a.coupling.resolve(Some(a.n), a.p)?;
    let mu = mu.ok_or_else(|| Error::InvalidArgument("missing coupling".into()))?;
    let z = avg_coeffs(a.n, a.p, exact_real(mu.clone()))?;
    let opts = RootOptions { precision_bits: a.precision_bits, tol: a.tol, ..RootOptions::default() };
    let rs = solve_avg(&z, &opts)?;
    let r_max = if mt > BigRational::from_integer(0.into()) { RadialDensity::new(a.p, to_f64(&mt))?.r_max() } else { f64::NAN };
    let records: Vec<RootRecord> = rs
        .roots
        .iter()
        .zip(&rs.residual)
        .map(|(r, &res)| RootRecord { re: r.re, im: r.im, modulus: r.norm(), residual: res })
        .collect();
    let artifact = match a.format {
        Format::Csv => {
            let mut csv = Csv::new(&["re", "im", "modulus", "residual"]);
            for r in &records {
                csv.push_floats(&[r.re, r.im, r.modulus, r.residual]);
            }
            csv.render()?
        }
        Format::Json => {
            let mut cfg = RunConfig::new("roots", Some(a.format), &a.output);
            cfg.p = Some(a.p);
            cfg.n = Some(a.n);
            cfg.mu = Some(format_rational(&mu));
            cfg.mu_tilde = Some(format_rational(&mt));
            cfg.precision_bits = Some(a.precision_bits);
            cfg.tol = Some(a.tol);
            let data = RootsData {
                p: a.p,
                n: a.n,
                mu_tilde: to_f64(&mt),
                precision_bits_used: rs.precision_bits,
                max_residual: rs.max_residual(),
                multiplicity_at_zero: rs.multiplicity_at_zero,
                r_max,
                roots: records,
            };
            json_document(&meta("roots", None, cfg), &data)?
        }
        Format::Svg => {
            let spec = FigureSpec::square(FigureKind::RootScatter, &rs.roots, &format!("roots, p={}, N={}, mu~={}", a.p, a.n, format_rational(&mt)));
            let mut svg = Svg::new(spec);
            if r_max.is_finite() {
                svg.circle(0.0, 0.0, r_max, "#c33");
            }
            let pts: Vec<(f64, f64)> = rs.roots.iter().map(|r| (r.re, r.im)).collect();
            svg.points(&pts, 2.0, "#036");
            svg.finish()
        }
    };
    Ok(Outcome::ok(
        artifact,
        serde_json::json!({"roots": rs.len(), "max_residual": rs.max_residual(), "precision_bits": rs.precision_bits}),
    ))
}

fn parse_mu_tilde(s: &Option<String>, p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("p must be at least 2, got {p}")));
    }
    let v = match s {
        Some(s) => to_f64(&parse_rational(s)?),
        None => 1.0 / p as f64,
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu-tilde must be positive, got {v}")));
    }
    Ok(v)
}

#[derive(Serialize)]
struct DensityRow {
    r: f64,
    rho: f64,
    rho_saddle: f64,
    cdf: f64,
}

fn cmd_density(a: &DensityArgs) -> Result<Outcome> {
    if a.grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let mt = parse_mu_tilde(&a.mu_tilde, a.p)?;
    let d = RadialDensity::new(a.p, mt)?;
    let rmax = d.r_max();
    let radii: Vec<f64> = (0..a.grid).map(|i| rmax * (i as f64 + 0.5) / a.grid as f64).collect();
    let cdf = d.cdf_sorted(&radii)?;
    let rows: Vec<DensityRow> = radii
        .iter()
        .zip(&cdf)
        .map(|(&r, &c)| Ok(DensityRow { r, rho: d.eval(r)?, rho_saddle: rho_from_saddle(a.p, mt, r)?, cdf: c }))
        .collect::<Result<_>>()?;
    let artifact = match a.format {
        Format::Csv => {
            let mut csv = Csv::new(&["r", "rho", "rho_saddle", "cdf"]);
            for r in &rows {
                csv.push_floats(&[r.r, r.rho, r.rho_saddle, r.cdf]);
            }
            csv.render()?
        }
        Format::Json => {
            let mut cfg = RunConfig::new("density", Some(a.format), &a.output);
            cfg.p = Some(a.p);
            cfg.mu_tilde = Some(fmt_f64(mt));
            cfg.grid = Some(a.grid);
            json_document(&meta("density", None, cfg), &serde_json::json!({"r_max": rmax, "rows": rows}))?
        }
        Format::Svg => {
            let top = rows.iter().map(|r| r.rho).fold(0.0, f64::max) * 1.1;
            let spec = FigureSpec::new(FigureKind::DensityOverlay, (0.0, rmax * 1.05), (0.0, top.max(1e-12)), &format!("rho(r), p={}", a.p));
            let mut svg = Svg::new(spec);
            svg.polyline(&rows.iter().map(|r| (r.r, r.rho)).collect::<Vec<_>>(), "#c33", 1.5, false);
            svg.finish()
        }
    };
    Ok(Outcome::ok(artifact, serde_json::json!({"points": rows.len(), "r_max": rmax})))
}

fn cmd_moments(a: &MomentsArgs) -> Result<Outcome> {
    let report = moments_check(a.p, a.kmax)?;
    let artifact = match a.format {
        Format::Csv => {
            let mut csv = Csv::new(&["k", "quadrature", "exact", "rel_error"]);
            for r in &report.rows {
                csv.push(vec![r.k.to_string(), fmt_f64(r.quadrature), fmt_f64(r.exact), fmt_f64(r.rel_error)]);
            }
            csv.render()?
        }
        Format::Json => {
            let mut cfg = RunConfig::new("moments", Some(a.format), &a.output);
            cfg.p = Some(a.p);
            json_document(&meta("moments", None, cfg), &report)?
        }
        Format::Svg => return Err(bad_format("moments", a.format)),
    };
    Ok(Outcome::ok(artifact, serde_json::json!({"max_rel_error": report.max_rel_error})))
}

/// Keeps at most `max` evenly spaced points, always including the last.
fn thin(points: &[Complex64], max: usize) -> Vec<Complex64> {
    if points.len() <= max {
        return points.to_vec();
    }
    let step = points.len().div_ceil(max - 1);
    let mut out: Vec<Complex64> = points.iter().step_by(step).cloned().collect();
    if let Some(last) = points.last() {
        out.push(*last);
    }
    out
}

fn cmd_thimble(a: &ThimbleArgs) -> Result<Outcome> {
    let mut c = classify(a.p, a.z_mod, a.z_arg)?;
    for t in c.thimbles.iter_mut() {
        t.points = thin(&t.points, 400);
    }
    let leading = c.leading();
    let (d_re, im_sum) = c.pair_agreement();
    let artifact = match a.out {
        Format::Json => {
            let mut cfg = RunConfig::new("thimble", Some(a.out), &a.output);
            cfg.p = Some(a.p);
            cfg.z_mod = Some(a.z_mod);
            cfg.z_arg = Some(a.z_arg);
            let data = serde_json::json!({
                "leading": leading,
                "leading_count": leading.len(),
                "pair_re_gap": d_re,
                "pair_im_sum": im_sum,
                "classification": c,
            });
            json_document(&meta("thimble", None, cfg), &data)?
        }
        Format::Svg => thimble_svg(&c)?,
        Format::Csv => return Err(bad_format("thimble", a.out)),
    };
    Ok(Outcome::ok(artifact, serde_json::json!({"leading_count": leading.len()})))
}

/// Saddles, thimbles (solid), dual thimbles (dashed) and the region where
/// Re S lies below its value at the leading saddle.
fn thimble_svg(c: &crate::saddle::Classification) -> Result<String> {
    let qs: Vec<Complex64> = c.tilted.saddles.iter().map(|s| s.q).collect();
    let spec = FigureSpec::square(FigureKind::ThimblePanel, &qs.iter().map(|q| q * 1.6).collect::<Vec<_>>(), &format!("p={}, z0={}, theta0={}", c.p, c.z0, c.theta0));
    let (x0, x1) = spec.x_range;
    let (y0, y1) = spec.y_range;
    let action = ActionQ::new(c.p, c.tilted.z)?;
    let reference = c
        .leading()
        .first()
        .map(|&i| c.tilted.saddles[i].s_value.re)
        .unwrap_or_else(|| qs.iter().map(|&q| action.s(q).re).fold(f64::NEG_INFINITY, f64::max));
    let mut svg = Svg::new(spec);
    let cells = 80;
    let (dx, dy) = ((x1 - x0) / cells as f64, (y1 - y0) / cells as f64);
    for j in 0..cells {
        let y = y0 + j as f64 * dy;
        let mut run: Option<usize> = None;
        for i in 0..=cells {
            let inside = i < cells && {
                let q = Complex64::new(x0 + (i as f64 + 0.5) * dx, y + 0.5 * dy);
                q.norm() > 0.0 && action.s(q).re < reference
            };
            match (inside, run) {
                (true, None) => run = Some(i),
                (false, Some(start)) => {
                    svg.rect(x0 + start as f64 * dx, y, x0 + i as f64 * dx, y + dy, "#9bc", 0.35);
                    run = None;
                }
                _ => {}
            }
        }
    }
    for t in &c.thimbles {
        let pts: Vec<(f64, f64)> = t.points.iter().map(|q| (q.re, q.im)).collect();
        let color = if c.tilted.saddles[t.saddle].dominant { "#c33" } else { "#555" };
        svg.polyline(&pts, color, 1.2, t.direction == FlowDirection::Ascent);
    }
    svg.circle(0.0, 0.0, c.tilted.contour_radius, "#000");
    let pts: Vec<(f64, f64)> = qs.iter().map(|q| (q.re, q.im)).collect();
    svg.points(&pts, 3.5, "#000");
    Ok(svg.finish())
}

fn cmd_predict(a: &PredictArgs) -> Result<Outcome> {
    let mt = parse_mu_tilde(&a.mu_tilde, a.p)?;
    let radii = predict_zero_radii(a.p, mt, a.n)?;
    let artifact = match a.out {
        Format::Csv => {
            let mut csv = Csv::new(&["index", "radius"]);
            for (i, r) in radii.iter().enumerate() {
                csv.push(vec![i.to_string(), fmt_f64(*r)]);
            }
            csv.render()?
        }
        Format::Json => {
            let mut cfg = RunConfig::new("predict-zeros", Some(a.out), &a.output);
            cfg.p = Some(a.p);
            cfg.n = Some(a.n);
            cfg.mu_tilde = Some(fmt_f64(mt));
            json_document(&meta("predict-zeros", None, cfg), &serde_json::json!({"radii": radii}))?
        }
        Format::Svg => return Err(bad_format("predict-zeros", a.out)),
    };
    Ok(Outcome::ok(artifact, serde_json::json!({"radii": radii.len()})))
}

fn cmd_mc(a: &McArgs) -> Result<Outcome> {
    let kind = match a.scalar {
        Scalar::Real => ScalarKind::Real,
        Scalar::Complex => ScalarKind::Complex,
    };
    let lower = a.preset.to_ascii_lowercase().replace(['_', '-'], "");
    let spec = if lower == "symmetricmatrix" {
        if a.p != 2 {
            return Err(Error::InvalidArgument("symmetric-matrix needs --p 2".into()));
        }
        EnsembleSpec::symmetric_matrix(a.n, a.sigma, a.samples, a.seed)
    } else {
        let preset = InteractionPreset::new(PresetKind::parse(&a.preset)?, a.p, kind);
        EnsembleSpec::tensor(a.n, a.p, kind, preset, a.samples, a.seed)
    };
    let report = mc_report(&spec)?;
    let mut cfg = RunConfig::new("mc", Some(Format::Json), &a.out);
    cfg.p = Some(a.p);
    cfg.n = Some(a.n);
    cfg.preset = Some(a.preset.clone());
    cfg.samples = Some(a.samples);
    cfg.seed = Some(a.seed);
    let artifact = json_document(&meta("mc", Some(a.seed), cfg), &report)?;
    Ok(Outcome::ok(artifact, serde_json::json!({"max_abs_z": report.table.max_abs_z, "mu_hat": report.mu_hat})))
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let size = if a.quick { Size::Quick } else { Size::Full };
    let checks = run_suite(&a.suite, size)?;
    let passed = checks.iter().all(|c| c.passed);
    let cfg = RunConfig::new("verify", Some(Format::Json), &a.output);
    let artifact = json_document(&meta("verify", None, cfg), &serde_json::json!({"suite": a.suite, "quick": a.quick, "passed": passed, "checks": checks}))?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    Ok(Outcome { artifact, summary: serde_json::json!({"checks": checks.len(), "failed": failed}), passed })
}

fn cmd_hist(a: &HistArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&a.input)?;
    let values = read_column(&text, Some(&a.column)).or_else(|e| match e {
        Error::Parse(_) => read_column(&text, None),
        e => Err(e),
    })?;
    let normalize = !a.counts;
    let overlay = match a.p {
        Some(p) => Some(RadialDensity::new(p, parse_mu_tilde(&a.mu_tilde, p)?)?),
        None => None,
    };
    let hist = match &overlay {
        Some(d) => {
            let hi = values.iter().cloned().fold(d.r_max(), f64::max);
            histogram_range(&values, a.bins, 0.0, hi, normalize)?
        }
        None => emit_histogram(&values, a.bins, normalize)?,
    };
    let ks = match &overlay {
        Some(d) => Some(ks_distance(d, &values)?),
        None => None,
    };
    let artifact = match a.format {
        Format::Csv => hist.to_csv().render()?,
        Format::Json => {
            let mut cfg = RunConfig::new("hist", Some(a.format), &a.output);
            cfg.p = a.p;
            json_document(&meta("hist", None, cfg), &serde_json::json!({"ks": ks, "histogram": hist}))?
        }
        Format::Svg => {
            let x1 = *hist.edges.last().unwrap_or(&1.0);
            let x0 = hist.edges[0];
            let mut curve = Vec::new();
            if let Some(d) = &overlay {
                let rm = d.r_max();
                for i in 0..400 {
                    let r = rm * (i as f64 + 0.5) / 400.0;
                    curve.push((r, d.eval(r)?));
                }
            }
            let top = hist.heights.iter().cloned().chain(curve.iter().map(|c| c.1)).fold(0.0, f64::max) * 1.1;
            let spec = FigureSpec::new(FigureKind::Histogram, (x0, x1), (0.0, top.max(1e-12)), &format!("histogram of {}", a.column));
            let mut svg = Svg::new(spec);
            for i in 0..hist.bins() {
                svg.rect(hist.edges[i], 0.0, hist.edges[i + 1], hist.heights[i], "#69c", 0.6);
            }
            svg.polyline(&curve, "#c33", 1.5, false);
            svg.finish()
        }
    };
    Ok(Outcome::ok(artifact, serde_json::json!({"values": values.len(), "bins": hist.bins(), "ks": ks})))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

fn dispatch(cmd: &Command) -> (&'static str, Option<&Option<PathBuf>>, Result<Outcome>) {
    match cmd {
        Command::Roots(a) => ("roots", Some(&a.output), cmd_roots(a)),
        Command::Density(a) => ("density", Some(&a.output), cmd_density(a)),
        Command::Moments(a) => ("moments", Some(&a.output), cmd_moments(a)),
        Command::Thimble(a) => ("thimble", Some(&a.output), cmd_thimble(a)),
        Command::PredictZeros(a) => ("predict-zeros", Some(&a.output), cmd_predict(a)),
        Command::Mc(a) => ("mc", Some(&a.out), cmd_mc(a)),
        Command::Verify(a) => ("verify", Some(&a.output), cmd_verify(a)),
        Command::Hist(a) => ("hist", Some(&a.output), cmd_hist(a)),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if std::env::var_os("TENSPEC_THREADS").is_some() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build_global();
    }
    let (name, output, result) = dispatch(&cli.command);
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", serde_json::json!({"command": name, "status": "error", "code": code, "error": e.to_string()}));
            return code;
        }
    };
    let output = output.cloned().flatten();
    if let Err(e) = write_artifact(&output, &outcome.artifact) {
        eprintln!("{}", serde_json::json!({"command": name, "status": "error", "code": EXIT_VALIDATION, "error": e.to_string()}));
        return EXIT_VALIDATION;
    }
    let status = if outcome.passed { "ok" } else { "failed" };
    eprintln!(
        "{}",
        serde_json::json!({
            "command": name,
            "status": status,
            "output": output.map(|p| p.display().to_string()),
            "summary": outcome.summary,
        })
    );
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
