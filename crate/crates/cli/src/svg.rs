//! Static SVG line charts, one panel per output quantity.

use std::fmt::Write;

use crate::scenario::{Quantity, Scenario};
use crate::sweep::Row;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 44.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Series {
    label: String,
    points: Vec<Option<(f64, f64)>>,
    color: &'static str,
    dashed: bool,
}

/// Tick positions covering `[lo, hi]` at a 1-2-5 spacing.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|k| k * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{x:.1e}")
    } else {
        let s = format!("{x:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn series_for(scenario: &Scenario, rows: &[Row], q: Quantity) -> Vec<Series> {
    let axis2 = scenario.sweep.get(1);
    let groups: Vec<Option<f64>> = match axis2 {
        Some(a) => a.points().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let in_group: Vec<&Row> = rows.iter().filter(|r| r.axis2 == *g).collect();
        let name = match (axis2, g) {
            (Some(a), Some(v)) => format!("{} = {}", a.parameter.name(), label(*v)),
            _ => "forward".to_string(),
        };
        let pick = |f: &dyn Fn(&Row) -> Option<f64>| -> Vec<Option<(f64, f64)>> {
            in_group
                .iter()
                .map(|r| Some((r.axis1?, f(r)?)))
                .map(|p| p.filter(|(x, y)| x.is_finite() && y.is_finite()))
                .collect()
        };
        out.push(Series {
            label: name.clone(),
            points: pick(&|r| r.get(q)),
            color,
            dashed: false,
        });
        if scenario.include_no_forward {
            let nf: Option<fn(&Row) -> Option<f64>> = match q {
                Quantity::Alpha => Some(|r| r.get(Quantity::AlphaNf)),
                Quantity::PriceChange => Some(Row::price_change_nf),
                _ => None,
            };
            if let Some(f) = nf {
                out.push(Series {
                    label: format!("{name}, no forward"),
                    points: pick(&f),
                    color,
                    dashed: true,
                });
            }
        }
    }
    out
}

fn panel(svg: &mut String, ox: f64, oy: f64, title: &str, xlabel: &str, series: &[Series]) {
    let pts = || series.iter().flat_map(|s| s.points.iter().flatten());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{title}</text>"#,
        ox + PANEL_W / 2.0,
        oy + 18.0
    );
    if !x0.is_finite() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">no data</text>"#,
            ox + PANEL_W / 2.0,
            oy + PANEL_H / 2.0
        );
        return;
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 * (1.0 + y0.abs()) {
        let pad = 0.5 * (1.0 + y0.abs()) * 1e-2;
        y0 -= pad;
        y1 += pad;
    } else {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let (l, r) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
    let (t, b) = (oy + MARGIN_T, oy + PANEL_H - MARGIN_B);
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (r - l);
    let sy = |y: f64| b - (y - y0) / (y1 - y0) * (b - t);

    let _ = writeln!(
        svg,
        r##"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        r - l,
        b - t
    );
    for x in ticks(x0, x1) {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.1}" y1="{b:.1}" x2="{px:.1}" y2="{:.1}" stroke="#444"/><text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
            b + 4.0,
            b + 16.0,
            label(x)
        );
    }
    for y in ticks(y0, y1) {
        let py = sy(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{l:.1}" y2="{py:.1}" stroke="#444"/><line x1="{l:.1}" y1="{py:.1}" x2="{r:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            l - 4.0,
            l - 6.0,
            py + 4.0,
            label(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
        (l + r) / 2.0,
        b + 34.0
    );

    for s in series {
        let mut d = String::new();
        let mut pen_down = false;
        for p in &s.points {
            match p {
                Some((x, y)) => {
                    let _ = write!(
                        d,
                        "{}{:.2},{:.2} ",
                        if pen_down { "L" } else { "M" },
                        sx(*x),
                        sy(*y)
                    );
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if d.is_empty() {
            continue;
        }
        let dash = if s.dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            d.trim_end(),
            s.color
        );
    }
    for (i, s) in series.iter().enumerate() {
        let y = t + 12.0 + 14.0 * i as f64;
        let dash = if s.dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="1.6"{dash}/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            l + 8.0,
            l + 28.0,
            s.color,
            l + 32.0,
            y + 3.5,
            s.label
        );
    }
}

/// Renders the sweep; `None` when there is no axis to plot against.
pub fn render(scenario: &Scenario, rows: &[Row]) -> Option<String> {
    let axis1 = scenario.sweep.first()?;
    let n = scenario.outputs.len().max(1);
    let cols = n.min(2);
    let rows_n = n.div_ceil(cols);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * rows_n as f64);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    if !scenario.description.is_empty() {
        let text = scenario
            .description
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(svg, "<title>{text}</title>");
    }
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, q) in scenario.outputs.iter().enumerate() {
        let (ox, oy) = ((i % cols) as f64 * PANEL_W, (i / cols) as f64 * PANEL_H);
        panel(
            &mut svg,
            ox,
            oy,
            q.name(),
            axis1.parameter.name(),
            &series_for(scenario, rows, *q),
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range_at_round_steps() {
        assert_eq!(ticks(-0.9, 0.9), vec![-0.5, 0.0, 0.5]);
        let t = ticks(3.0, 97.0);
        assert_eq!(t.first(), Some(&20.0));
        assert_eq!(t.last(), Some(&80.0));
    }

    #[test]
    fn labels_are_short() {
        assert_eq!(label(0.25), "0.25");
        assert_eq!(label(100.0), "100");
        assert_eq!(label(1e-6), "1.0e-6");
    }
}
