//! Minimal SVG rendering: heatmaps and line plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 30.0, 40.0, 60.0); // left, right, top, bottom

/// Perceptually ordered color stops (dark blue to yellow).
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let i = STOPS.iter().position(|s| s.0 >= t).unwrap_or(STOPS.len() - 1).max(1);
    let (a, b) = (STOPS[i - 1], STOPS[i]);
    let f = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|k| (a.1[k] as f64 + f * (b.1[k] as f64 - a.1[k] as f64)).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN.0 + (x - self.x0) / (self.x1 - self.x0) * (W - MARGIN.0 - MARGIN.1)
    }
    fn py(&self, y: f64) -> f64 {
        H - MARGIN.3 - (y - self.y0) / (self.y1 - self.y0) * (H - MARGIN.2 - MARGIN.3)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN.0, W - MARGIN.1, MARGIN.2, H - MARGIN.3);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x0 + f * (self.x1 - self.x0);
            let yv = self.y0 + f * (self.y1 - self.y0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(s, r#"<line x1="{px}" y1="{b}" x2="{px}" y2="{}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, fmt_tick(xv));
            let _ = writeln!(s, r#"<line x1="{}" y1="{py}" x2="{l}" y2="{py}" stroke="black"/>"#, l - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 8.0, py + 4.0, fmt_tick(yv));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 15.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

/// Heatmap of `values[row][col]` with columns along x and rows along y.
pub fn heatmap(title: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>], xlabel: &str, ylabel: &str) -> String {
    let mut s = open(title);
    let f = Frame { x0: xs[0], x1: xs[xs.len() - 1], y0: ys[0], y1: ys[ys.len() - 1] };
    let finite = values.iter().flatten().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell = |v: &[f64], i: usize| {
        let a = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
        let b = if i + 1 == v.len() { v[i] } else { 0.5 * (v[i] + v[i + 1]) };
        (a, b)
    };
    for (r, row) in values.iter().enumerate() {
        let (ya, yb) = cell(ys, r);
        for (c, val) in row.iter().enumerate() {
            let (xa, xb) = cell(xs, c);
            let (px0, px1) = (f.px(xa), f.px(xb));
            let (py0, py1) = (f.py(yb), f.py(ya));
            let _ = writeln!(
                s,
                r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                (px1 - px0).max(0.0) + 0.3,
                (py1 - py0).max(0.0) + 0.3,
                color((val - lo) / span)
            );
        }
    }
    f.axes(&mut s, xlabel, ylabel);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">range [{}, {}]</text>"#, W - MARGIN.1, MARGIN.2 - 6.0, fmt_tick(lo), fmt_tick(hi));
    s.push_str("</svg>\n");
    s
}

/// Line plot of labelled (x, y) series.
pub fn line_plot(title: &str, series: &[(&str, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> String {
    let mut s = open(title);
    let pts = series.iter().flat_map(|(_, p)| p.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let f = Frame { x0, x1, y0: y0 - pad, y1: y1 + pad };
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, (label, p)) in series.iter().enumerate() {
        let col = palette[i % palette.len()];
        let path: Vec<String> = p.iter().filter(|q| q.1.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let ly = MARGIN.2 + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{col}">{}</text>"#, MARGIN.0 + 10.0, escape(label));
    }
    f.axes(&mut s, xlabel, ylabel);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }

    #[test]
    fn documents_are_well_formed() {
        let h = heatmap("a<b", &[0.0, 1.0], &[0.0, 1.0, 2.0], &[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, f64::NAN]], "x", "t");
        assert!(h.starts_with("<?xml") && h.trim_end().ends_with("</svg>"));
        assert_eq!(h.matches("<rect x=").count(), 7);
        assert!(h.contains("a&lt;b"));
        let l = line_plot("E", &[("E_n", vec![(0.0, 0.0), (1.0, 3.1)])], "n", "E");
        assert!(l.contains("<polyline"));
    }
}
