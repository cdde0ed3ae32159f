//! Bare-bones SVG: histogram bars with a reference curve on top.

use sedh_core::stats::Histogram;
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

pub fn overlay(title: &str, xlabel: &str, hist: &Histogram, density: &[f64], reference: impl Fn(f64) -> f64) -> String {
    let edges = hist.edges();
    let (lo, hi) = (edges[0], *edges.last().unwrap());
    let curve: Vec<(f64, f64)> = (0..=400).map(|k| lo + (hi - lo) * k as f64 / 400.0).map(|x| (x, reference(x))).collect();
    let top = density.iter().chain(curve.iter().map(|(_, y)| y)).fold(0.0f64, |a, &b| a.max(b)).max(1e-300) * 1.05;
    let sx = |x: f64| PAD + (x - lo) / (hi - lo) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / top * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    for (e, d) in edges.windows(2).zip(density) {
        let (x0, x1, y) = (sx(e[0]), sx(e[1]), sy(*d));
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>"##,
            x1 - x0,
            H - PAD - y
        );
    }
    let points: Vec<String> = curve.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##, points.join(" "));
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{0}" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for k in 0..=4 {
        let x = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{x}</text>"#, sx(x), H - PAD + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 10.0);
    let _ = writeln!(s, "</svg>");
    s
}
