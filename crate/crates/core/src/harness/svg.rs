use std::fmt::Write;

use super::ScenarioResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"];

/// Line chart of mean NMI against the sweep value, one polyline per method.
pub fn nmi_chart(result: &ScenarioResult, x_label: &str) -> String {
    let series = result.means(|r| r.nmi);
    let xs = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |x: f64| MARGIN + (x - lo) / span * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{tick}</text>"#,
            MARGIN - 6.0,
            py(tick) + 4.0
        );
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{lo}</text>"#, px(lo), HEIGHT - MARGIN + 15.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{hi}</text>"#, px(hi), HEIGHT - MARGIN + 15.0);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(out, r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})">NMI</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);

    for (i, (method, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{method}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * (i as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}
