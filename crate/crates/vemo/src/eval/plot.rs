//! Minimal deterministic SVG plotting (lines and bar charts).
//!
//! Hand-rolled on purpose: the plots are diagnostics regenerated from the
//! emitted data tables, and byte-identical output for identical data is part
//! of the reproducibility contract.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One polyline.
pub struct SvgSeries<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn axis_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="20" font-family="monospace" font-size="14" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-family="monospace" font-size="11" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

/// Multi-series line chart. When `log_y` is set, y values must be positive
/// and are drawn on a log10 scale.
pub fn svg_lines(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[SvgSeries],
    log_y: bool,
) -> String {
    let mut s = header(title);
    axes(&mut s, x_label, y_label);

    let transform = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    let (x_lo, x_hi) = axis_bounds(series.iter().flat_map(|t| t.x.iter().copied()));
    let (y_lo, y_hi) = axis_bounds(
        series
            .iter()
            .flat_map(|t| t.y.iter().copied().map(transform)),
    );
    let px = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (transform(y) - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    for (i, t) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (xv, yv) in t.x.iter().zip(t.y) {
            let _ = write!(points, "{:.2},{:.2} ", px(*xv), py(*yv));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            MARGIN + 14.0 * (i + 1) as f64,
            t.label
        );
    }
    // Axis extremes for reference.
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{b}" font-family="monospace" font-size="10">{x_lo:.3}</text><text x="{r}" y="{b}" font-family="monospace" font-size="10" text-anchor="end">{x_hi:.3}</text>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN + 14.0,
        r = WIDTH - MARGIN
    );
    s.push_str("</svg>\n");
    s
}

/// Bar chart of pre-binned counts over `[lo, hi]`.
pub fn svg_histogram(title: &str, x_label: &str, lo: f64, hi: f64, counts: &[u64]) -> String {
    let mut s = header(title);
    axes(&mut s, x_label, "count");
    let max_count = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let n = counts.len() as f64;
    let bar_w = (WIDTH - 2.0 * MARGIN) / n;
    for (i, &c) in counts.iter().enumerate() {
        let h = c as f64 / max_count * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4"/>"##,
            MARGIN + i as f64 * bar_w,
            HEIGHT - MARGIN - h,
            bar_w.max(0.5),
            h
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{b}" font-family="monospace" font-size="10">{lo:.3}</text><text x="{r}" y="{b}" font-family="monospace" font-size="10" text-anchor="end">{hi:.3}</text>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN + 14.0,
        r = WIDTH - MARGIN
    );
    s.push_str("</svg>\n");
    s
}
