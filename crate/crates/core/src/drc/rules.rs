// SPDX-License-Identifier: Apache-2.0

use crate::geometry::{
    boundary_distance_sq, intersection_area, interiors_intersect, min_spacing, min_width, shifted_overlap_areas, Point,
    Rect, Spacing,
};
use crate::pdk::{Purpose, RuleId, RuleSpec};

use super::{continuity, Ctx, RuleOutcome, Violation};

pub(crate) fn run_rule(ctx: &Ctx, spec: &RuleSpec) -> Result<RuleOutcome, String> {
    match spec.id {
        RuleId::R1 => Ok(spacing_between(ctx, spec)),
        RuleId::R2 | RuleId::R4 => Ok(width(ctx, spec)),
        RuleId::R3 => Ok(overlap_margin(ctx, spec)),
        RuleId::R5 => Ok(airbridge(ctx, spec)),
        RuleId::R6 => Ok(pads(ctx, spec)),
        RuleId::R7 => edge_clearance(ctx, spec),
        RuleId::R8 => Ok(same_layer_spacing(ctx, spec)),
        RuleId::R9 => Ok(continuity::check(ctx, spec)),
    }
}

pub(crate) fn violation(
    rule: RuleId,
    location: Rect,
    measured: i64,
    required: i64,
    unit: &str,
    mut subjects: Vec<String>,
    message: String,
) -> Violation {
    subjects.sort();
    Violation { rule_id: rule, location, measured, required, unit: unit.into(), subjects, message }
}

/// Region between two shapes: their threshold-expanded bounds intersected.
fn between(a: Rect, b: Rect, t: i64) -> Rect {
    a.expand(t).intersection(&b.expand(t)).unwrap_or_else(|| a.union(&b))
}

fn spacing_pairs(ctx: &Ctx, spec: &RuleSpec, pairs: Vec<(usize, usize)>, out: &mut RuleOutcome, what: &str) {
    let t = spec.single();
    out.pairs += pairs.len() as u64;
    out.checks += pairs.len() as u64;
    for (a, b) in pairs {
        let (pa, pb) = (ctx.poly(a), ctx.poly(b));
        if let Spacing::Distance(d) = min_spacing(&pa.polygon, &pb.polygon) {
            if d > 0 && d < t {
                out.violations.push(violation(
                    spec.id,
                    between(pa.polygon.bbox(), pb.polygon.bbox(), d),
                    d,
                    t,
                    "nm",
                    vec![pa.trace.clone(), pb.trace.clone()],
                    format!("{what} {d} nm < {t} nm"),
                ));
            }
        }
    }
}

fn spacing_between(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    let (pa, pb) = match spec.purposes.as_slice() {
        [a, b, ..] => (*a, *b),
        [a] => (*a, *a),
        [] => return out,
    };
    let pairs = ctx.pairs(pa, pb, spec.single());
    spacing_pairs(ctx, spec, pairs, &mut out, &format!("{pa}-{pb} gap"));
    out
}

fn same_layer_spacing(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    for &p in &spec.purposes {
        let pairs = ctx.pairs(p, p, spec.single());
        spacing_pairs(ctx, spec, pairs, &mut out, &format!("{p} spacing"));
    }
    out
}

fn width(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    let t = spec.single();
    for &p in &spec.purposes {
        for &id in ctx.ids(p) {
            out.checks += 1;
            let fp = ctx.poly(id);
            let w = min_width(&fp.polygon);
            if w < t {
                out.violations.push(violation(
                    spec.id,
                    fp.polygon.bbox(),
                    w,
                    t,
                    "nm",
                    vec![fp.trace.clone()],
                    format!("{p} width {w} nm < {t} nm"),
                ));
            }
        }
    }
    out
}

fn pads(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    let t = spec.single();
    for &p in &spec.purposes {
        for &id in ctx.ids(p) {
            out.checks += 1;
            let fp = ctx.poly(id);
            let bb = fp.polygon.bbox();
            let measured = min_width(&fp.polygon).min(bb.width()).min(bb.height());
            if measured < t {
                out.violations.push(violation(
                    spec.id,
                    bb,
                    measured,
                    t,
                    "nm",
                    vec![fp.trace.clone()],
                    format!("pad {} x {} nm (min width {}) below {t} x {t} nm", bb.width(), bb.height(), measured),
                ));
            }
        }
    }
    out
}

/// Largest relative deviation of the 9 shifted overlaps from the unshifted one.
pub(crate) fn relative_deviation(areas: &[f64; 9]) -> f64 {
    let nominal = areas[4];
    if nominal <= 0.0 {
        return 0.0;
    }
    areas.iter().map(|a| (a - nominal).abs()).fold(0.0, f64::max) / nominal
}

/// Misalignment invariance of the junction overlap.
pub(crate) fn overlap_invariant(areas: &[f64; 9]) -> bool {
    let max = areas.iter().copied().fold(f64::MIN, f64::max);
    let min = areas.iter().copied().fold(f64::MAX, f64::min);
    max - min <= 1e-6 * areas[4]
}

fn overlap_margin(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    let (pb, pt) = match spec.purposes.as_slice() {
        [a, b, ..] => (*a, *b),
        _ => return out,
    };
    let tol = spec.single();
    let pairs = ctx.pairs(pb, pt, 0);
    out.pairs += pairs.len() as u64;
    for (b, t) in pairs {
        let (bottom, top) = (ctx.poly(b), ctx.poly(t));
        if !interiors_intersect(&bottom.polygon, &top.polygon) {
            continue;
        }
        out.checks += 1;
        let areas = shifted_overlap_areas(&bottom.polygon, &top.polygon, tol);
        if !overlap_invariant(&areas) {
            let dev = relative_deviation(&areas);
            let region = bottom.polygon.bbox().intersection(&top.polygon.bbox()).unwrap_or(bottom.polygon.bbox());
            out.violations.push(violation(
                spec.id,
                region,
                (dev * 1e6).round() as i64,
                1,
                "ppm",
                vec![bottom.trace.clone(), top.trace.clone()],
                format!("junction overlap changes by {:.1}% under +/-{tol} nm misalignment", dev * 100.0),
            ));
        }
    }
    out
}

fn airbridge(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    let (ps, pp) = match spec.purposes.as_slice() {
        [a, b, ..] => (*a, *b),
        _ => return out,
    };
    let [lo, hi] = spec.range();
    for &s in ctx.ids(ps) {
        out.checks += 1;
        let span = ctx.poly(s);
        let cands = ctx.query(pp, &span.polygon.bbox());
        out.pairs += cands.len() as u64;
        let touching: Vec<usize> =
            cands.into_iter().filter(|&p| min_spacing(&span.polygon, &ctx.poly(p).polygon).is_connected()).collect();
        if touching.len() != 2 {
            let msg = match touching.len() {
                0 => "floating bridge: span touches no pad".to_string(),
                1 => "dangling bridge: span touches one pad".to_string(),
                n => format!("span touches {n} pads, expected 2"),
            };
            let mut subjects = vec![span.trace.clone()];
            subjects.extend(touching.iter().map(|&p| ctx.poly(p).trace.clone()));
            out.violations.push(violation(spec.id, span.polygon.bbox(), touching.len() as i64, 2, "count", subjects, msg));
            continue;
        }
        let (a, b) = (ctx.poly(touching[0]), ctx.poly(touching[1]));
        let d = min_spacing(&a.polygon, &b.polygon).distance().unwrap_or(0);
        if d < lo || d > hi {
            let required = if d < lo { lo } else { hi };
            out.violations.push(violation(
                spec.id,
                span.polygon.bbox(),
                d,
                required,
                "nm",
                vec![span.trace.clone(), a.trace.clone(), b.trace.clone()],
                format!("bridge span {d} nm outside [{lo}, {hi}] nm"),
            ));
        }
    }
    out
}

fn edge_clearance(ctx: &Ctx, spec: &RuleSpec) -> Result<RuleOutcome, String> {
    let outlines = ctx.ids(Purpose::ChipOutline);
    if outlines.len() != 1 {
        return Err(format!("expected exactly one chip_outline polygon, found {}", outlines.len()));
    }
    let outline = ctx.poly(outlines[0]);
    let t = spec.single();
    let mut out = RuleOutcome::new();
    let mut ids: Vec<usize> = ctx
        .by_purpose
        .iter()
        .filter(|(p, _)| p.is_functional())
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    ids.sort_unstable();
    let obox = outline.polygon.bbox();
    let orect = outline.polygon.as_rect();
    for id in ids {
        out.checks += 1;
        let fp = ctx.poly(id);
        let bb = fp.polygon.bbox();
        let inside = match orect {
            Some(r) => r.contains_rect(&bb),
            None => {
                obox.contains_rect(&bb)
                    && (intersection_area(&fp.polygon, &outline.polygon, Point::default()) - fp.polygon.area()).abs()
                        <= crate::geometry::AREA_EPSILON
            }
        };
        let d = if !inside {
            0
        } else if let Some(r) = orect {
            (bb.min.x - r.min.x).min(bb.min.y - r.min.y).min(r.max.x - bb.max.x).min(r.max.y - bb.max.y)
        } else {
            boundary_distance_sq(&fp.polygon, &outline.polygon).floor_sqrt()
        };
        if d < t {
            let msg = if inside {
                format!("{d} nm from chip edge, {t} nm required")
            } else {
                "geometry crosses or lies outside the chip outline".to_string()
            };
            out.violations.push(violation(spec.id, bb, d, t, "nm", vec![fp.trace.clone()], msg));
        }
    }
    Ok(out)
}
