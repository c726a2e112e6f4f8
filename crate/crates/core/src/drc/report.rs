// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use crate::gds::FlatLayout;

use super::ViolationReport;

/// Plain-text table of violations followed by per-rule statistics.
pub fn render_text(report: &ViolationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "DRC against {}: {} polygons, {} checks, {} violation(s)",
        report.pdk,
        report.polygon_count,
        report.total_checks,
        report.violations.len()
    );
    for e in &report.errors {
        let _ = writeln!(out, "error: {e}");
    }
    if !report.violations.is_empty() {
        let rows: Vec<[String; 5]> = report
            .violations
            .iter()
            .map(|v| {
                let l = &v.location;
                [
                    v.rule_id.to_string(),
                    format!("({}, {})-({}, {})", l.min.x, l.min.y, l.max.x, l.max.y),
                    format!("{} {}", v.measured, v.unit),
                    format!("{} {}", v.required, v.unit),
                    v.message.clone(),
                ]
            })
            .collect();
        let head = ["rule", "location (nm)", "measured", "required", "message"];
        let mut w = head.map(str::len);
        for r in &rows {
            for (i, c) in r.iter().enumerate() {
                w[i] = w[i].max(c.len());
            }
        }
        let line = |cells: [&str; 5]| {
            format!("{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  {}", cells[0], cells[1], cells[2], cells[3], cells[4],
                w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3])
        };
        let _ = writeln!(out);
        let _ = writeln!(out, "{}", line(head).trim_end());
        for r in &rows {
            let _ = writeln!(out, "{}", line([&r[0], &r[1], &r[2], &r[3], &r[4]]).trim_end());
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "rule  enabled  checks  violations");
    for s in &report.stats {
        let _ = writeln!(out, "{:<4}  {:<7}  {:>6}  {:>10}", s.rule_id.to_string(), s.enabled, s.checks, s.violations);
    }
    out
}

const PALETTE: [&str; 8] = ["#4c72b0", "#55a868", "#c44e52", "#8172b2", "#ccb974", "#64b5cd", "#8c8c8c", "#dd8452"];

/// SVG overview: every polygon outlined by layer, violation boxes in red.
/// One SVG unit is one micrometre; y is flipped so north is up.
pub fn render_svg(flat: &FlatLayout, report: &ViolationReport) -> String {
    let b = flat.bounds;
    let pad = ((b.width().max(b.height()) as f64) * 0.02).max(1000.0);
    let um = |v: i64| v as f64 / 1000.0;
    let (x0, y0) = (um(b.min.x) - pad / 1000.0, -um(b.max.y) - pad / 1000.0);
    let (w, h) = (um(b.width()) + 2.0 * pad / 1000.0, um(b.height()) + 2.0 * pad / 1000.0);
    let stroke = (w.max(h) / 1000.0).max(0.05);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.3} {y0:.3} {w:.3} {h:.3}" width="1000" height="{:.0}">"#,
        1000.0 * h / w
    );
    let layers = flat.populated_layers();
    for (i, &(layer, dt)) in layers.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<g id="L{layer}_{dt}" fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="{stroke:.3}">"#
        );
        for p in flat.on_layer(layer, dt) {
            let pts: Vec<String> =
                p.polygon.vertices().iter().map(|v| format!("{:.3},{:.3}", um(v.x), -um(v.y))).collect();
            let _ = writeln!(out, r#"<polygon points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r#"<g id="violations" fill="none" stroke="red" stroke-width="{:.3}">"#, stroke * 3.0);
    for v in &report.violations {
        let l = v.location;
        let m = stroke * 5.0;
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"><title>{}: {}</title></rect>"#,
            um(l.min.x) - m,
            -um(l.max.y) - m,
            um(l.width()) + 2.0 * m,
            um(l.height()) + 2.0 * m,
            v.rule_id,
            xml_escape(&v.message)
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
