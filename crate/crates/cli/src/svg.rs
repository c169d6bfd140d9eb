//! Static 2-D scatter plots of hidden features.

use std::fmt::Write;

use ndarray::ArrayView2;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 32.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

/// Scatter of rows 0 and 1 of a `K × n` feature matrix, colored by label.
/// Returns `None` when there are fewer than two feature rows.
pub fn scatter(features: ArrayView2<'_, f64>, labels: Option<&[usize]>, title: &str) -> Option<String> {
    if features.nrows() < 2 {
        return None;
    }
    let (xs, ys) = (features.row(0), features.row(1));
    let bounds = |v: &ndarray::ArrayView1<'_, f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi - lo) } else { (lo - 0.5, 1.0) }
    };
    let (x0, xr) = bounds(&xs);
    let (y0, yr) = bounds(&ys);
    let span = SIZE - 2.0 * MARGIN;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    )
    .unwrap();
    for i in 0..features.ncols() {
        let cx = MARGIN + (xs[i] - x0) / xr * span;
        let cy = SIZE - MARGIN - (ys[i] - y0) / yr * span;
        let color = PALETTE[labels.map_or(0, |l| l[i]) % PALETTE.len()];
        writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#).unwrap();
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
