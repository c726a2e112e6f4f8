// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use serde::Serialize;

use crate::gds::FlatLayout;
use crate::geometry::{decompose_trapezoids, interiors_intersect, sweep_cut_count, SpatialIndex, Trapezoid};

use super::MdpError;

/// Fractured shapes of one (layer, datatype).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapezoidSet {
    pub layer: u16,
    pub datatype: u16,
    pub trapezoids: Vec<Trapezoid>,
    pub source_polygons: usize,
    /// Shoelace area of the source polygons, nm².
    pub source_area: f64,
    /// Area of the emitted trapezoids, nm².
    pub total_area: f64,
    pub sweep_cuts: usize,
    /// Same-layer polygon pairs with overlapping interiors (exposed twice).
    pub overlapping_pairs: usize,
}

impl TrapezoidSet {
    pub fn file_name(&self) -> String {
        format!("{}_{}.trap", self.layer, self.datatype)
    }
}

pub fn fracture_layer(flat: &FlatLayout, layer: u16, datatype: u16) -> Result<TrapezoidSet, MdpError> {
    let bad: Vec<String> = flat
        .rejects
        .iter()
        .filter(|r| r.layer == layer && r.datatype == datatype)
        .map(|r| format!("{} ({})", r.trace, r.reason))
        .collect();
    if !bad.is_empty() {
        return Err(MdpError::InvalidPolygons { layer, datatype, polygons: bad });
    }
    let polys: Vec<_> = flat.on_layer(layer, datatype).collect();
    if polys.is_empty() {
        return Err(MdpError::EmptyLayer { layer, datatype });
    }
    let mut trapezoids = Vec::new();
    let mut cuts = 0;
    let mut source_area = 0.0;
    for p in &polys {
        trapezoids.extend(decompose_trapezoids(&p.polygon));
        cuts += sweep_cut_count(&p.polygon);
        source_area += p.polygon.area();
    }
    let total_area = trapezoids.iter().map(|t| t.area2() as f64 / 2.0).sum();

    let index = SpatialIndex::new(polys.iter().enumerate().map(|(i, p)| (p.polygon.bbox(), i)));
    let mut overlapping = 0;
    for (i, p) in polys.iter().enumerate() {
        for j in index.query(&p.polygon.bbox()) {
            if j > i && interiors_intersect(&p.polygon, &polys[j].polygon) {
                overlapping += 1;
                log::warn!("double exposure on ({layer}, {datatype}): {} overlaps {}", p.trace, polys[j].trace);
            }
        }
    }
    Ok(TrapezoidSet {
        layer,
        datatype,
        trapezoids,
        source_polygons: polys.len(),
        source_area,
        total_area,
        sweep_cuts: cuts,
        overlapping_pairs: overlapping,
    })
}

pub fn write_trap(set: &TrapezoidSet) -> String {
    let mut s = format!("TRAP v1 layer={} datatype={} dbu=1nm\n", set.layer, set.datatype);
    for t in &set.trapezoids {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            t.y_bottom, t.y_top, t.x_bottom_left, t.x_bottom_right, t.x_top_left, t.x_top_right
        );
    }
    s
}

/// Parses a `.trap` file into (layer, datatype, trapezoids).
pub fn parse_trap(text: &str) -> Result<(u16, u16, Vec<Trapezoid>), MdpError> {
    let bad = |line: usize, msg: &str| MdpError::Trap { line, message: msg.to_string() };
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let mut parts = head.split_whitespace();
    if parts.next() != Some("TRAP") || parts.next() != Some("v1") {
        return Err(bad(1, "expected header 'TRAP v1'"));
    }
    let mut layer = None;
    let mut datatype = None;
    for kv in parts {
        match kv.split_once('=') {
            Some(("layer", v)) => layer = v.parse().ok(),
            Some(("datatype", v)) => datatype = v.parse().ok(),
            Some(("dbu", "1nm")) => {}
            _ => return Err(bad(1, &format!("unexpected header field {kv:?}"))),
        }
    }
    let (layer, datatype) = layer.zip(datatype).ok_or_else(|| bad(1, "header needs layer and datatype"))?;
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<i64> = line
            .split_whitespace()
            .map(|f| f.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(i + 1, "non-integer field"))?;
        let [y_bottom, y_top, x_bottom_left, x_bottom_right, x_top_left, x_top_right] = v[..] else {
            return Err(bad(i + 1, "expected 6 integers"));
        };
        let t = Trapezoid { y_bottom, y_top, x_bottom_left, x_bottom_right, x_top_left, x_top_right };
        if !t.is_valid() {
            return Err(bad(i + 1, "malformed trapezoid"));
        }
        out.push(t);
    }
    Ok((layer, datatype, out))
}
