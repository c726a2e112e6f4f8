// SPDX-License-Identifier: Apache-2.0

//! Known single-rule violations placed into a generated chip, for checking
//! that each DRC rule fires exactly where expected.

use crate::gds::{flatten, Cell, CellRef, Element, Layout};
use crate::geometry::{Point, Rect};
use crate::pdk::{PdkRuleSet, Purpose, RuleId};

use super::ChipError;

/// Text marking the empty test pocket; the pocket side in nm follows a colon.
pub const DEFECT_SITE_LABEL: &str = "DEFECT_SITE";

/// Returns a copy of `layout` with one structure that breaks `rule` and
/// nothing else. Structures go inside the reserved test pocket, except the
/// edge-clearance defect which sits 150 µm from the die edge.
pub fn inject_defect(layout: &Layout, rule: RuleId, pdk: &PdkRuleSet) -> Result<Layout, ChipError> {
    let flat = flatten(layout, &layout.top_cell).map_err(|e| ChipError::Flatten(e.to_string()))?;
    let (c, half) = flat
        .texts
        .iter()
        .find_map(|t| {
            let side: i64 = t.text.strip_prefix(DEFECT_SITE_LABEL)?.strip_prefix(':')?.parse().ok()?;
            Some((t.position, side / 2))
        })
        .ok_or_else(|| ChipError::Missing(format!("{DEFECT_SITE_LABEL} label")))?;
    let layer = |p: Purpose| pdk.layer_of(p).ok_or(ChipError::MissingPurpose(p));
    let at = |x0: i64, y0: i64, x1: i64, y1: i64| Rect::new(c.x + x0, c.y + y0, c.x + x1, c.y + y1);

    let mut shapes: Vec<((u16, u16), Rect)> = Vec::new();
    match rule {
        RuleId::R1 => {
            // conductor 2.5 µm from the pocket wall
            let x0 = -half + 2_500;
            shapes.push((layer(Purpose::CpwConductor)?, at(x0, -10_000, x0 + 20_000, 10_000)));
        }
        RuleId::R2 => shapes.push((layer(Purpose::CpwConductor)?, at(-2_450, -25_000, 2_450, 25_000))),
        RuleId::R3 => {
            // top strip flush with the end of the bottom electrode
            shapes.push((layer(Purpose::JjBottom)?, at(-100, -2_000, 100, 2_000)));
            shapes.push((layer(Purpose::JjTop)?, at(-1_000, 1_800, 1_000, 2_000)));
        }
        RuleId::R4 => shapes.push((layer(Purpose::JjLead)?, at(-40, -5_000, 40, 5_000))),
        RuleId::R5 => {
            let pad = layer(Purpose::AirbridgePad)?;
            shapes.push((pad, at(-72_000, -6_000, -60_000, 6_000)));
            shapes.push((pad, at(60_000, -6_000, 72_000, 6_000)));
            shapes.push((layer(Purpose::AirbridgeSpan)?, at(-66_000, -5_000, 66_000, 5_000)));
        }
        RuleId::R6 => shapes.push((layer(Purpose::AirbridgePad)?, at(-6_000, -4_000, 6_000, 4_000))),
        RuleId::R7 => {
            let outline = flat
                .polygons
                .iter()
                .find(|p| pdk.purpose_of(p.layer, p.datatype) == Some(Purpose::ChipOutline))
                .ok_or_else(|| ChipError::Missing("chip outline".into()))?
                .polygon
                .bbox();
            let x0 = outline.min.x + 150_000;
            let yc = outline.center().y;
            shapes.push((layer(Purpose::Wiring)?, Rect::new(x0, yc - 10_000, x0 + 20_000, yc + 10_000)));
        }
        RuleId::R8 => {
            let w = layer(Purpose::Wiring)?;
            shapes.push((w, at(-10_750, -10_000, -750, 10_000)));
            shapes.push((w, at(750, -10_000, 10_750, 10_000)));
        }
        RuleId::R9 => shapes.push((layer(Purpose::Ground)?, at(-25_000, -25_000, 25_000, 25_000))),
    }

    let name = format!("DEFECT_{rule:?}");
    let mut cell = Cell::new(name.clone());
    for ((l, d), r) in shapes {
        cell.push(Element::rect(l, d, r));
    }
    let mut out = layout.clone();
    if out.cell(&name).is_some() {
        return Err(ChipError::InvalidSpec(format!("{name} is already present")));
    }
    out.add_cell(cell);
    let top = out.top_cell.clone();
    out.cell_mut(&top)
        .ok_or_else(|| ChipError::Missing("top cell".into()))?
        .add_ref(CellRef::at(name, Point::default()));
    Ok(out)
}
