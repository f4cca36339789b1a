use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{SweepMethod, SweepParam, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "axis,family,method,capacity_bits_s_hz,std_err";

/// Render rows as CSV. Numbers use Rust's shortest round-trip scientific
/// form, so identical inputs give identical bytes.
pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        let family = r.family.map(|f| format!("{f:e}")).unwrap_or_default();
        writeln!(
            out,
            "{:e},{},{},{:e},{:e}",
            r.axis, family, r.method, r.capacity, r.std_err
        )
        .expect("writing to a String");
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    fs::write(path, to_csv(result)).map_err(|e| Error::io(path, e))
}

pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    fs::write(path, to_svg(result)).map_err(|e| Error::io(path, e))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let (a, b, v) = if self.log_x {
            (self.x0.log10(), self.x1.log10(), x.log10())
        } else {
            (self.x0, self.x1, x)
        };
        LEFT + (v - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - y / self.y1 * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Static SVG plot: one polyline per (family, method) curve, Monte Carlo
/// points with ±1.96·SE error bars. Rows without a finite capacity are skipped.
pub fn to_svg(result: &SweepResult) -> String {
    let finite: Vec<_> = result
        .rows
        .iter()
        .filter(|r| r.capacity.is_finite())
        .collect();
    let log_x = result.axis == SweepParam::SrcPower && finite.iter().all(|r| r.axis > 0.0);
    let (mut x0, mut x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r.axis), b.max(r.axis))
        });
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x0 == x1 {
        if log_x {
            (x0, x1) = (x0 / 2.0, x1 * 2.0);
        } else {
            (x0, x1) = (x0 - 1.0, x1 + 1.0);
        }
    }
    let y_max = finite
        .iter()
        .map(|r| {
            r.capacity
                + if r.std_err.is_finite() {
                    1.96 * r.std_err
                } else {
                    0.0
                }
        })
        .fold(0.0f64, f64::max);
    let y1 = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let frame = Frame { x0, x1, y1, log_x };

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(&result.name)
    );

    // axes and ticks
    let (left, right, top, bottom) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        w,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = if log_x {
            10f64.powf(x0.log10() + t * (x1.log10() - x0.log10()))
        } else {
            x0 + t * (x1 - x0)
        };
        let px = frame.px(xv);
        let _ = writeln!(
            w,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick_label(xv)
        );
        let yv = t * y1;
        let py = frame.py(yv);
        let _ = writeln!(
            w,
            r##"<line x1="{}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><line x1="{left}" y1="{py:.2}" x2="{right}" y2="{py:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 18.0,
        escape(result.axis.label())
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">capacity [bits/s/Hz]</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    // curves
    let mut legend = Vec::new();
    let families = result.family_values();
    for (fi, fam) in families.iter().enumerate() {
        let color = PALETTE[fi % PALETTE.len()];
        for method in result.methods() {
            let pts: Vec<_> = result
                .curve(*fam, method)
                .into_iter()
                .filter(|r| r.capacity.is_finite())
                .collect();
            if pts.is_empty() {
                continue;
            }
            let dash = match method {
                SweepMethod::Analytic => "",
                SweepMethod::MonteCarlo => r#" stroke-dasharray="2,3""#,
                SweepMethod::PlcOnlyAnalytic => r#" stroke-dasharray="8,4""#,
            };
            if pts.len() > 1 {
                let coords: Vec<String> = pts
                    .iter()
                    .map(|r| format!("{:.2},{:.2}", frame.px(r.axis), frame.py(r.capacity)))
                    .collect();
                let _ = writeln!(
                    w,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    coords.join(" ")
                );
            }
            for r in &pts {
                let (px, py) = (frame.px(r.axis), frame.py(r.capacity));
                if method == SweepMethod::MonteCarlo && r.std_err.is_finite() && r.std_err > 0.0 {
                    let lo = frame.py((r.capacity - 1.96 * r.std_err).max(0.0));
                    let hi = frame.py(r.capacity + 1.96 * r.std_err);
                    let _ = writeln!(
                        w,
                        r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/>"#
                    );
                }
                if method == SweepMethod::MonteCarlo || pts.len() == 1 {
                    let _ = writeln!(
                        w,
                        r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="none" stroke="{color}"/>"#
                    );
                }
            }
            let label = match (result.family, fam) {
                (Some(p), Some(v)) => format!("{} = {}, {}", p.label(), tick_label(*v), method),
                _ => method.to_string(),
            };
            legend.push((color, dash, label));
        }
    }
    for (i, (color, dash, label)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#,
            x + 25.0,
            x + 30.0,
            y + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
