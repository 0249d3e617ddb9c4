//! Deterministic SVG figures of artifact CSVs.

use crate::error::CliError;
use crate::output::read_table;
use guidewave::fit::{fit_exponential, fit_power};
use std::fmt::Write;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axes {
    LogLog,
    SemiLog,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotRequest {
    pub csvs: Vec<PathBuf>,
    pub x: String,
    pub ys: Vec<String>,
    pub axes: Axes,
    /// Fit each series on this window and draw the fitted line.
    pub fit_window: Option<[f64; 2]>,
    /// Slopes drawn as guides through the first point of the first series.
    pub guides: Vec<f64>,
    pub title: String,
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    name: String,
    pts: Vec<(f64, f64)>,
}

struct Frame {
    axes: Axes,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn tx(&self, x: f64) -> f64 {
        let x = if self.axes == Axes::LogLog { x.log10() } else { x };
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }
    fn ty(&self, y: f64) -> f64 {
        H - BOTTOM - (y.log10() - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn load(req: &PlotRequest) -> Result<Vec<Series>, CliError> {
    let mut out = Vec::new();
    for path in &req.csvs {
        let t = read_table(path)?;
        if t.rows.is_empty() {
            return Err(CliError::Csv(format!("{}: no data rows", path.display())));
        }
        let xs = t.column(&req.x)?;
        for y in &req.ys {
            let ys = t.column(y)?;
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .zip(&ys)
                .map(|(&a, &b)| (a, b))
                .filter(|&(a, b)| b > 0.0 && b.is_finite() && a.is_finite() && (req.axes == Axes::SemiLog || a > 0.0))
                .collect();
            if pts.is_empty() {
                return Err(CliError::Csv(format!("{}: column {y:?} has no plottable values", path.display())));
            }
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let name = if req.csvs.len() > 1 { format!("{stem}:{y}") } else { y.clone() };
            out.push(Series { name, pts });
        }
    }
    Ok(out)
}

/// Renders the figure. Identical inputs give identical bytes.
pub fn render(req: &PlotRequest) -> Result<String, CliError> {
    if req.ys.is_empty() {
        return Err(CliError::Config("plot: no y columns requested".into()));
    }
    let series = load(req)?;
    let all = series.iter().flat_map(|s| s.pts.iter());
    let lx = |x: f64| if req.axes == Axes::LogLog { x.log10() } else { x };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(lx(x));
        x1 = x1.max(lx(x));
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let f = Frame { axes: req.axes, x0, x1, y0: y0.floor(), y1: y1.ceil() };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&req.title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, W - LEFT - RIGHT, H - TOP - BOTTOM);
    for d in (f.y0 as i64)..=(f.y1 as i64) {
        let y = f.ty(10f64.powi(d as i32));
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#ddd"/>"##, W - RIGHT);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let xticks: Vec<(f64, String)> = match req.axes {
        Axes::LogLog => ((f.x0.floor() as i64)..=(f.x1.ceil() as i64))
            .filter(|&d| (d as f64) >= f.x0 - 1e-9 && (d as f64) <= f.x1 + 1e-9)
            .map(|d| (10f64.powi(d as i32), format!("1e{d}")))
            .collect(),
        Axes::SemiLog => (0..=4).map(|j| f.x0 + (f.x1 - f.x0) * j as f64 / 4.0).map(|x| (x, format!("{x:.3}"))).collect(),
    };
    for (x, lab) in xticks {
        let px = f.tx(x);
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.1}" stroke="#ddd"/>"##, H - BOTTOM);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.1}" text-anchor="middle">{lab}</text>"#, H - BOTTOM + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0, escape(&req.x));

    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = se.pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.tx(x), f.ty(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let mut label = se.name.clone();
        if let Some([lo, hi]) = req.fit_window {
            let (ts, ys): (Vec<f64>, Vec<f64>) = se.pts.iter().copied().unzip();
            let fit = match req.axes {
                Axes::LogLog => fit_power(&ts, &ys, (lo, hi)),
                Axes::SemiLog => fit_exponential(&ts, &ys, (lo, hi)),
            };
            if let Ok(fit) = fit {
                let model = |t: f64| match req.axes {
                    Axes::LogLog => (fit.intercept + fit.exponent * t.ln()).exp(),
                    Axes::SemiLog => (fit.intercept + fit.exponent * t).exp(),
                };
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 3"/>"#,
                    f.tx(lo),
                    f.ty(model(lo)),
                    f.tx(hi),
                    f.ty(model(hi))
                );
                let _ = write!(label, " (fit {:.3})", fit.exponent);
            }
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#, LEFT + 10.0, TOP + 16.0 + 15.0 * i as f64, escape(&label));
    }
    if let Some(&(xa, ya)) = series.first().and_then(|s| s.pts.first()) {
        let xb = series[0].pts.last().map_or(xa, |p| p.0);
        for (j, &g) in req.guides.iter().enumerate() {
            let yb = match req.axes {
                Axes::LogLog => ya * (xb / xa).powf(g),
                Axes::SemiLog => ya * (g * (xb - xa)).exp(),
            };
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="2 3"/>"##,
                f.tx(xa),
                f.ty(ya),
                f.tx(xb),
                f.ty(yb)
            );
            let _ = writeln!(s, r##"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="#555">guide {g}</text>"##, W - RIGHT - 8.0, TOP + 16.0 + 15.0 * j as f64);
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
