//! Deterministic CSV/JSON/SVG output and histograms.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) everywhere so
//! identical inputs give identical bytes.

use std::fmt::Write as _;
use std::io;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// JSON with fixed-width floats; non-finite values become null.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct Meta<C: Serialize> {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: C,
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, D: Serialize> {
    meta: &'a Meta<C>,
    data: &'a D,
}

pub fn meta<C: Serialize>(command: &str, seed: Option<u64>, config: C) -> Meta<C> {
    Meta { command: command.to_string(), version: env!("CARGO_PKG_VERSION"), seed, config }
}

/// `{"meta": …, "data": …}` followed by a newline.
pub fn json_document<C: Serialize, D: Serialize>(meta: &Meta<C>, data: &D) -> Result<String> {
    let mut s = to_json(&Document { meta, data })?;
    s.push('\n');
    Ok(s)
}

/// A header row and string records.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_number(field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {field}")))
}

/// Reads one numeric column of a CSV by header name, or the first column
/// when `column` is None. A file whose first field is numeric is read as
/// headerless.
pub fn read_column(text: &str, column: Option<&str>) -> Result<Vec<f64>> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).ok_or(Error::EmptyInput)?;
    let has_header = first.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_err());
    let mut reader = csv::ReaderBuilder::new().has_headers(has_header).trim(csv::Trim::All).from_reader(text.as_bytes());
    let idx = match (has_header, column) {
        (true, Some(name)) => {
            let header = reader.headers().map_err(csv_error)?.clone();
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("column {name} not in header {header:?}")))?
        }
        _ => 0,
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let field = record.get(idx).ok_or_else(|| Error::Parse(format!("short record: {record:?}")))?;
        out.push(parse_number(field)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// counts / (total · width) when normalized, raw counts otherwise.
    pub heights: Vec<f64>,
    pub normalized: bool,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn to_csv(&self) -> Csv {
        let mut csv = Csv::new(&["lo", "hi", "count", "height"]);
        for i in 0..self.bins() {
            csv.push(vec![
                fmt_f64(self.edges[i]),
                fmt_f64(self.edges[i + 1]),
                self.counts[i].to_string(),
                fmt_f64(self.heights[i]),
            ]);
        }
        csv
    }
}

/// Histogram over [min, max] of the data; a degenerate range is widened
/// to unit width around the value.
pub fn emit_histogram(values: &[f64], bins: usize, normalize: bool) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    histogram_range(values, bins, lo, hi, normalize)
}

pub fn histogram_range(values: &[f64], bins: usize, lo: f64, hi: f64, normalize: bool) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("bad histogram range [{lo}, {hi}]")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value {v}")));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * width }).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let total = values.len() as f64;
    let heights = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| if normalize { c as f64 / (total * (w[1] - w[0])) } else { c as f64 })
        .collect();
    Ok(Histogram { edges, counts, heights, normalized: normalize })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureKind {
    RootScatter,
    DensityOverlay,
    ThimblePanel,
    Histogram,
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub width: f64,
    pub height: f64,
    pub title: String,
}

impl FigureSpec {
    pub fn new(kind: FigureKind, x_range: (f64, f64), y_range: (f64, f64), title: &str) -> Self {
        FigureSpec { kind, x_range, y_range, width: 480.0, height: 480.0, title: title.to_string() }
    }

    /// Square axes centred on the origin that hold every point with a margin.
    pub fn square(kind: FigureKind, points: &[Complex64], title: &str) -> Self {
        let r = points.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max).max(1e-12) * 1.1;
        Self::new(kind, (-r, r), (-r, r), title)
    }
}

const MARGIN: f64 = 40.0;

/// Hand-written SVG: points, polylines and filled polygons in data
/// coordinates, clipped to the plot area.
pub struct Svg {
    spec: FigureSpec,
    body: String,
}

impl Svg {
    pub fn new(spec: FigureSpec) -> Self {
        Svg { spec, body: String::new() }
    }

    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.spec.x_range;
        MARGIN + (x - a) / (b - a) * self.spec.width
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.spec.y_range;
        MARGIN + (b - y) / (b - a) * self.spec.height
    }

    fn coords(&self, pts: &[(f64, f64)]) -> String {
        let mut s = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.3},{:.3}", self.px(x), self.py(y));
        }
        s
    }

    pub fn points(&mut self, pts: &[(f64, f64)], radius: f64, color: &str) {
        for &(x, y) in pts {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.3}" cy="{:.3}" r="{radius:.2}" fill="{color}"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64, dashed: bool) {
        let pts: Vec<(f64, f64)> = pts.iter().cloned().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        if pts.len() < 2 {
            return;
        }
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width:.2}"{dash}/>"#,
            self.coords(&pts)
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="{opacity:.2}" stroke="none"/>"#,
            self.coords(pts)
        );
    }

    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str, opacity: f64) {
        self.polygon(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)], fill, opacity);
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, color: &str) {
        let pts: Vec<(f64, f64)> = (0..=256)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
                (cx + r * t.cos(), cy + r * t.sin())
            })
            .collect();
        self.polyline(&pts, color, 1.0, true);
    }

    pub fn finish(self) -> String {
        let w = self.spec.width + 2.0 * MARGIN;
        let h = self.spec.height + 2.0 * MARGIN;
        let (x0, x1) = self.spec.x_range;
        let (y0, y1) = self.spec.y_range;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{:.0}" height="{:.0}"/></clipPath>"#,
            self.spec.width, self.spec.height
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.0}" height="{:.0}" fill="none" stroke="black"/>"#,
            self.spec.width, self.spec.height
        );
        if x0 < 0.0 && x1 > 0.0 {
            let px = self.px(0.0);
            let _ = writeln!(s, r##"<line x1="{px:.3}" y1="{MARGIN}" x2="{px:.3}" y2="{:.3}" stroke="#bbb"/>"##, MARGIN + self.spec.height);
        }
        if y0 < 0.0 && y1 > 0.0 {
            let py = self.py(0.0);
            let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{py:.3}" x2="{:.3}" y2="{py:.3}" stroke="#bbb"/>"##, MARGIN + self.spec.width);
        }
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        s.push_str(&self.body);
        s.push_str("</g>\n");
        let label = |v: f64| format!("{v:.3}");
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.0}" font-size="11">{}</text>"#, h - 12.0, label(x0));
        let _ = writeln!(s, r#"<text x="{:.0}" y="{:.0}" font-size="11" text-anchor="end">{}</text>"#, w - MARGIN, h - 12.0, label(x1));
        let _ = writeln!(s, r#"<text x="4" y="{:.0}" font-size="11">{}</text>"#, MARGIN + self.spec.height, label(y0));
        let _ = writeln!(s, r#"<text x="4" y="{:.0}" font-size="11">{}</text>"#, MARGIN + 10.0, label(y1));
        let _ = writeln!(s, r#"<text x="{:.0}" y="24" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(&self.spec.title));
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
