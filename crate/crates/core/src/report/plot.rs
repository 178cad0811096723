//! Minimal static SVG line charts drawn from report tables.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with optional log axes. Points that cannot be placed are dropped.
pub fn svg_lines(title: &str, series: &[Series], log_x: bool, log_y: bool) -> Option<String> {
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().map(|&(x, y)| (tx(x), ty(y))).filter(|(x, y)| x.is_finite() && y.is_finite()).collect())
        .collect();
    let all: Vec<(f64, f64)> = mapped.iter().flatten().copied().collect();
    if all.len() < 2 {
        return None;
    }
    let (x0, x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (y0, y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let sx = if x1 > x0 { (W - 2.0 * PAD) / (x1 - x0) } else { 1.0 };
    let sy = if y1 > y0 { (H - 2.0 * PAD) / (y1 - y0) } else { 1.0 };
    let px = |x: f64| PAD + (x - x0) * sx;
    let py = |y: f64| H - PAD - (y - y0) * sy;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let lab = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}">{}</text>"#, H - PAD + 15.0, lab(x0, log_x));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 15.0, lab(x1, log_x));
    let _ = writeln!(s, r#"<text x="5" y="{}">{}</text>"#, H - PAD, lab(y0, log_y));
    let _ = writeln!(s, r#"<text x="5" y="{}">{}</text>"#, PAD, lab(y1, log_y));
    for (i, (pts, ser)) in mapped.iter().zip(series).enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !pts.is_empty() {
            let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, d.join(" "));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD - 150.0,
            PAD + 14.0 * i as f64,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
