use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use anomtype::data::{CaseId, Dataset};
use anomtype::taxonomy::AnomalyType;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const CLASS_COLORS: [&str; 8] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];
const TYPE_COLORS: [&str; 6] = ["#d62728", "#ff7f0e", "#9467bd", "#1f77b4", "#2ca02c", "#e377c2"];
const PLAIN: &str = "#7f7f7f";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Scatter plot of two continuous attributes. Cases in `overlay` are drawn
/// as enlarged markers outlined in their type's color; the legend always
/// lists all six types.
pub fn render(
    dataset: &Dataset,
    x: usize,
    y: usize,
    class: Option<usize>,
    overlay: &HashMap<CaseId, AnomalyType>,
) -> String {
    let xs = dataset.continuous(x);
    let ys = dataset.continuous(y);
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| TOP + plot_h - (v - y0) / (y1 - y0) * plot_h;

    let labels: Option<&[String]> = class.map(|c| dataset.categorical(c));
    let palette: BTreeMap<&str, &str> = labels
        .map(|l| {
            let mut distinct: Vec<&str> = l.iter().map(String::as_str).collect();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.into_iter().enumerate().map(|(i, s)| (s, CLASS_COLORS[i % CLASS_COLORS.len()])).collect()
        })
        .unwrap_or_default();
    let fill = |row: usize| labels.map_or(PLAIN, |l| palette[l[row].as_str()]);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (bx, by) = (LEFT, TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<path d="M{bx} {TOP}V{by}H{:.2}" fill="none" stroke="black"/>"#,
        LEFT + plot_w
    );
    let x_name = escape(dataset.schema().name(x));
    let y_name = escape(dataset.schema().name(y));
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_name}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_name}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.3}</text>"#, px(v), by + 16.0);
    }
    for v in [y0, y1] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 6.0, py(v) + 4.0);
    }

    let ids = dataset.case_ids();
    let _ = writeln!(svg, r#"<g class="cases">"#);
    for row in 0..dataset.len() {
        if !overlay.contains_key(&ids[row]) {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(xs[row]), py(ys[row]), fill(row));
        }
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="anomalies">"#);
    for row in 0..dataset.len() {
        if let Some(t) = overlay.get(&ids[row]) {
            let _ = writeln!(
                svg,
                r#"<circle class="anomaly-{}" cx="{:.2}" cy="{:.2}" r="7" fill="{}" stroke="{}" stroke-width="2.5"/>"#,
                t.roman(),
                px(xs[row]),
                py(ys[row]),
                fill(row),
                TYPE_COLORS[t.index()]
            );
        }
    }
    let _ = writeln!(svg, "</g>");

    let lx = WIDTH - RIGHT + 20.0;
    let mut ly = TOP + 6.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for t in AnomalyType::ALL {
        let _ = writeln!(
            svg,
            r#"<g class="legend-type"><circle cx="{lx}" cy="{ly}" r="6" fill="white" stroke="{}" stroke-width="2.5"/><text x="{}" y="{}">{} {}</text></g>"#,
            TYPE_COLORS[t.index()],
            lx + 12.0,
            ly + 4.0,
            t.roman(),
            t.name()
        );
        ly += 18.0;
    }
    ly += 8.0;
    for (label, color) in &palette {
        let _ = writeln!(
            svg,
            r#"<g class="legend-class"><circle cx="{lx}" cy="{ly}" r="3" fill="{color}"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 12.0,
            ly + 4.0,
            escape(label)
        );
        ly += 16.0;
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}
