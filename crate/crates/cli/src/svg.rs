//! Minimal static SVG plots: line charts and labelled heatmaps.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1b9e77", "#66a61e", "#d95f02", "#e7298a", "#7570b3", "#1f78b4"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = header(W, H);
    let _ = write!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>
<text x="12" y="{}" font-size="11" transform="rotate(-90 12 {})" text-anchor="middle">{}</text>
<text x="{PAD}" y="{}" font-size="9" text-anchor="middle">{}</text>
<text x="{r}" y="{}" font-size="9" text-anchor="middle">{}</text>
<text x="{}" y="{b}" font-size="9" text-anchor="end">{}</text>
<text x="{}" y="{PAD}" font-size="9" text-anchor="end">{}</text>
"#,
        W / 2.0,
        escape(title),
        W / 2.0,
        H - 8.0,
        escape(x_label),
        H / 2.0,
        H / 2.0,
        escape(y_label),
        H - PAD + 12.0,
        fmt_tick(x0),
        H - PAD + 12.0,
        fmt_tick(x1),
        PAD - 4.0,
        fmt_tick(y0),
        PAD - 4.0,
        fmt_tick(y1),
        b = H - PAD,
        r = W - PAD,
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            W - PAD + 4.0,
            PAD + 12.0 * i as f64,
            escape(series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// `values[row][col]`; colour scales linearly between the finite extremes.
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>]) -> String {
    let cell = 36.0;
    let left = 130.0;
    let top = 110.0;
    let width = left + cell * col_labels.len() as f64 + 20.0;
    let height = top + cell * row_labels.len() as f64 + 20.0;
    let (lo, hi) = bounds(values.iter().flatten().copied());
    let mut s = header(width, height);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    for (j, c) in col_labels.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-size="10" transform="rotate(-60 {x} {})">{}</text>"#,
            top - 6.0,
            top - 6.0,
            escape(c)
        );
    }
    for (i, (r, row)) in row_labels.iter().zip(values).enumerate() {
        let y = top + cell * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, left - 6.0, y + cell / 2.0 + 3.0, escape(r));
        for (j, &v) in row.iter().enumerate() {
            let x = left + cell * j as f64;
            let t = if v.is_finite() { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
            let shade = (255.0 * (1.0 - t)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb(255,{shade},{shade})" stroke="white"><title>{}</title></rect>"#,
                fmt_tick(v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="8" text-anchor="middle">{}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 3.0,
                fmt_tick(v)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn header(w: f64, h: f64) -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#) + "\n"
}

fn fmt_tick(v: f64) -> String {
    if !v.is_finite() {
        "n/a".into()
    } else if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
