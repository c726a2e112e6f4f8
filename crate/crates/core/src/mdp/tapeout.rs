// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::gds::{flatten, FlatLayout, Layout, RejectReason};
use crate::geometry::{intersection_area, Point, AREA_EPSILON};
use crate::pdk::{PdkRuleSet, Purpose};

pub const TAPEOUT_SCHEMA_VERSION: u32 = 1;
pub const MAX_HIERARCHY_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeoutCheck {
    pub id: String,
    pub name: String,
    pub pass: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeoutReport {
    pub schema_version: u32,
    pub checks: Vec<TapeoutCheck>,
    pub overall: bool,
}

impl TapeoutReport {
    pub fn check(&self, id: &str) -> Option<&TapeoutCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failed(&self) -> Vec<&TapeoutCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{}  {:<4}  {}\n", c.id, if c.pass { "pass" } else { "FAIL" }, c.name));
            for d in &c.details {
                s.push_str(&format!("          {d}\n"));
            }
        }
        s.push_str(&format!("overall: {}\n", if self.overall { "pass" } else { "FAIL" }));
        s
    }
}

fn check(id: &str, name: &str, details: Vec<String>) -> TapeoutCheck {
    TapeoutCheck { id: id.into(), name: name.into(), pass: details.is_empty(), details }
}

/// The seven-check tape-out gate. Flattening happens here so that T2 can
/// report hierarchy problems; geometry checks then use the flat view.
pub fn tapeout_check(layout: &Layout, pdk: &PdkRuleSet) -> TapeoutReport {
    let flat = flatten(layout, &layout.top_cell);
    let mut t2 = Vec::new();
    if let Some(cycle) = layout.find_cycle() {
        t2.push(format!("reference cycle: {}", cycle.join(" -> ")));
    } else if let Some(d) = layout.depth(&layout.top_cell) {
        if d > MAX_HIERARCHY_DEPTH {
            t2.push(format!("hierarchy depth {d} exceeds {MAX_HIERARCHY_DEPTH}"));
        }
    }
    let checks = match &flat {
        Ok(flat) => {
            let mut checks = vec![t1(flat), check("T2", "hierarchy flattening", t2)];
            checks.extend(geometry_checks(layout, flat, pdk));
            checks
        }
        Err(e) => {
            t2.push(format!("flatten failed: {e}"));
            let skipped = || vec!["not evaluated: layout does not flatten".to_string()];
            vec![
                check("T1", "nanometre grid alignment", skipped()),
                check("T2", "hierarchy flattening", t2),
                check("T3", "bounding-box integrity", skipped()),
                check("T4", "no degenerate polygons", skipped()),
                check("T5", "layer whitelist", skipped()),
                check("T6", "no self-intersecting polygons", skipped()),
                t7(layout, pdk),
            ]
        }
    };
    let overall = checks.iter().all(|c| c.pass);
    TapeoutReport { schema_version: TAPEOUT_SCHEMA_VERSION, checks, overall }
}

fn t1(flat: &FlatLayout) -> TapeoutCheck {
    let mut d = Vec::new();
    if flat.snapped_points > 0 {
        d.push(format!("{} vertices were off the 1 nm grid after transformation and had to be snapped", flat.snapped_points));
    }
    check("T1", "nanometre grid alignment", d)
}

fn geometry_checks(layout: &Layout, flat: &FlatLayout, pdk: &PdkRuleSet) -> Vec<TapeoutCheck> {
    // T3
    let mut t3 = Vec::new();
    let outlines: Vec<_> =
        flat.polygons.iter().filter(|p| pdk.purpose_of(p.layer, p.datatype) == Some(Purpose::ChipOutline)).collect();
    if outlines.len() != 1 {
        t3.push(format!("expected one chip_outline polygon, found {}", outlines.len()));
    } else {
        let o = &outlines[0].polygon;
        let ob = o.bbox();
        let rect = o.as_rect().is_some();
        for p in &flat.polygons {
            let functional = pdk.purpose_of(p.layer, p.datatype).map_or(true, |pu| pu.is_functional());
            if !functional {
                continue;
            }
            let b = p.polygon.bbox();
            let inside = ob.contains_rect(&b)
                && (rect || (intersection_area(&p.polygon, o, Point::default()) - p.polygon.area()).abs() <= AREA_EPSILON);
            if !inside {
                t3.push(format!("{} on ({}, {}) extends outside the chip outline", p.trace, p.layer, p.datatype));
            }
        }
    }
    // T4 / T6
    let mut t4 = Vec::new();
    let mut t6 = Vec::new();
    for r in &flat.rejects {
        let msg = format!("{} on ({}, {}): {}", r.trace, r.layer, r.datatype, r.reason);
        if r.reason.is_self_intersection() {
            t6.push(msg);
        } else if matches!(r.reason, RejectReason::Degenerate(_) | RejectReason::InvalidPath(_)) {
            t4.push(msg);
        }
    }
    // T5
    let mut used: BTreeSet<(u16, u16)> = flat.populated_layers().into_iter().collect();
    used.extend(flat.texts.iter().map(|t| (t.layer, t.datatype)));
    let t5 = used
        .into_iter()
        .filter(|&(l, d)| pdk.purpose_of(l, d).is_none())
        .map(|(l, d)| format!("({l}, {d}) is not in the {} layer map", pdk.name))
        .collect();
    vec![
        check("T3", "bounding-box integrity", t3),
        check("T4", "no degenerate polygons", t4),
        check("T5", "layer whitelist", t5),
        check("T6", "no self-intersecting polygons", t6),
        t7(layout, pdk),
    ]
}

fn t7(layout: &Layout, pdk: &PdkRuleSet) -> TapeoutCheck {
    let mut d = Vec::new();
    if layout.db_unit_nm != pdk.units.db_unit_nm {
        d.push(format!("database unit is {} nm, PDK requires {} nm", layout.db_unit_nm, pdk.units.db_unit_nm));
    }
    let uu = layout.user_unit_m();
    if ((uu - pdk.units.user_unit_m) / pdk.units.user_unit_m).abs() > 1e-9 {
        d.push(format!("user unit is {uu:e} m, PDK requires {:e} m", pdk.units.user_unit_m));
    }
    check("T7", "units consistency", d)
}
