//! Dependency-free figure output: SVG line plots and 16-bit PGM heatmaps.

use std::fmt::Write as _;

use nalgebra::DMatrix;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Symmetric error bars (full length = 2 * yerr).
    pub yerr: Option<Vec<f64>>,
    pub style: SeriesStyle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round tick positions covering `[lo, hi]`, plus the decimals needed to print them.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        let pad = 0.5 * hi.abs().max(1.0) * 1e-3;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let (x0, x1) = padded_range(self.series.iter().flat_map(|s| s.x.iter().copied()));
        let (y0, y1) = padded_range(self.series.iter().flat_map(|s| {
            let err = s.yerr.clone().unwrap_or_else(|| vec![0.0; s.y.len()]);
            s.y.iter()
                .zip(err)
                .flat_map(|(&y, e)| [y - e, y + e])
                .collect::<Vec<_>>()
        }));
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_L + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );

        let (xt, xd) = ticks(x0, x1);
        for t in xt {
            let x = sx(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#,
                MARGIN_T + ph,
                MARGIN_T + ph + 5.0,
                MARGIN_T + ph + 20.0
            );
        }
        let (yt, yd) = ticks(y0, y1);
        for t in yt {
            let y = sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#,
                MARGIN_L - 5.0,
                MARGIN_L - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            MARGIN_T + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .x
                .iter()
                .zip(&series.y)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| (sx(x), sy(y)))
                .collect();
            match series.style {
                SeriesStyle::Line => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        path.join(" ")
                    );
                }
                SeriesStyle::Markers => {
                    if let Some(err) = &series.yerr {
                        for ((&x, &y), &e) in series.x.iter().zip(&series.y).zip(err) {
                            let _ = writeln!(
                                s,
                                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                                sx(x),
                                sy(y - e),
                                sy(y + e)
                            );
                        }
                    }
                    for (x, y) in &pts {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                        );
                    }
                }
            }
            let ly = MARGIN_T + 12.0 + 18.0 * i as f64;
            let lx = WIDTH - MARGIN_R + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{color}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 5.0,
                lx + 18.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Binary 16-bit PGM, linear between the matrix minimum and maximum.
///
/// Image rows follow matrix rows in reverse so the highest frequency sits at
/// the top; image columns follow matrix columns.
pub fn pgm_heatmap(m: &DMatrix<f64>) -> Vec<u8> {
    let (rows, cols) = m.shape();
    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    out.reserve(rows * cols * 2);
    for r in (0..rows).rev() {
        for c in 0..cols {
            let level = if span > 0.0 {
                ((m[(r, c)] - lo) / span * 65535.0).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}
