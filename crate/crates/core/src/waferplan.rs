// SPDX-License-Identifier: Apache-2.0

//! Step-and-repeat tiling of a die over a round wafer.
//!
//! All arithmetic is done in integer nanometres. A grid offset `δ` places
//! cell corners at `δ + k·pitch`; each die sits centred in its cell, so the
//! lane is split evenly on both sides. `δ = 0` is the centred grid.

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gds::{flatten, CellRef, Cell, Element, Layout};
use crate::geometry::{circle, path_to_polygon, EndCap, Point, Polygon, Rect};

pub const WAFER_OUTLINE_LAYER: (u16, u16) = (12, 0);
pub const PCM_LAYER: (u16, u16) = (11, 0);
pub const WAFER_CELL: &str = "WAFER";
pub const OUTLINE_SEGMENTS: usize = 256;
pub const SCAN_STEP_MM: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum WaferError {
    #[error("invalid wafer spec: {0}")]
    Wafer(String),
    #[error("invalid die spec: {0}")]
    Die(String),
    #[error("invalid scribe spec: {0}")]
    Scribe(String),
    #[error("die cell {0:?} not found in layout")]
    MissingDie(String),
    #[error("PCM cell {0:?} not found")]
    MissingPcm(String),
    #[error("die layout: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaferSpec {
    pub diameter_mm: f64,
    pub edge_exclusion_mm: f64,
}

impl Default for WaferSpec {
    fn default() -> Self {
        WaferSpec { diameter_mm: 300.0, edge_exclusion_mm: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieSpec {
    pub width_mm: f64,
    pub height_mm: f64,
    pub outline_cell: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScribeSpec {
    pub lane_width_mm: f64,
    #[serde(default)]
    pub pcm_cells: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub column: i64,
    pub row: i64,
    /// Lower-left corner of the die, nm from the wafer centre.
    pub origin: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaferPlan {
    pub wafer: WaferSpec,
    pub die: DieSpec,
    pub scribe: ScribeSpec,
    pub usable_radius_mm: f64,
    pub pitch_nm: [i64; 2],
    pub grid_offset_nm: [i64; 2],
    pub sites: Vec<Site>,
    pub die_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl WaferPlan {
    pub fn die_size_nm(&self) -> [i64; 2] {
        [mm(self.die.width_mm), mm(self.die.height_mm)]
    }

    pub fn die_rect(&self, s: &Site) -> Rect {
        let [w, h] = self.die_size_nm();
        Rect::new(s.origin.x, s.origin.y, s.origin.x + w, s.origin.y + h)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Scan grid offsets; when false only the centred grid is evaluated.
    pub scan: bool,
    pub step_mm: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions { scan: true, step_mm: SCAN_STEP_MM }
    }
}

pub fn mm(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

/// Integer geometry of one tiling problem.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub radius: i64,
    pub die: [i64; 2],
    pub pitch: [i64; 2],
}

impl Grid {
    pub fn new(wafer: &WaferSpec, die: &DieSpec, scribe: &ScribeSpec) -> Result<Self, WaferError> {
        if !(wafer.diameter_mm > 0.0) {
            return Err(WaferError::Wafer(format!("diameter {} mm must be positive", wafer.diameter_mm)));
        }
        if !(wafer.edge_exclusion_mm > 0.0 && wafer.edge_exclusion_mm < wafer.diameter_mm / 2.0) {
            return Err(WaferError::Wafer(format!(
                "edge exclusion {} mm must lie in (0, {})",
                wafer.edge_exclusion_mm,
                wafer.diameter_mm / 2.0
            )));
        }
        if !(die.width_mm > 0.0 && die.height_mm > 0.0) {
            return Err(WaferError::Die(format!("{} x {} mm must be positive", die.width_mm, die.height_mm)));
        }
        if !(scribe.lane_width_mm >= 0.0) {
            return Err(WaferError::Scribe(format!("lane width {} mm must be non-negative", scribe.lane_width_mm)));
        }
        let lane = mm(scribe.lane_width_mm);
        let d = [mm(die.width_mm), mm(die.height_mm)];
        Ok(Grid {
            radius: mm(wafer.diameter_mm / 2.0 - wafer.edge_exclusion_mm),
            die: d,
            pitch: [d[0] + lane, d[1] + lane],
        })
    }

    fn margin(&self, axis: usize) -> i64 {
        (self.pitch[axis] - self.die[axis]) / 2
    }

    /// Lower die edge of cell `k` on `axis`.
    fn lo(&self, axis: usize, offset: i64, k: i64) -> i64 {
        offset + k * self.pitch[axis] + self.margin(axis)
    }

    /// Accepted sites for one offset, row-major from the bottom.
    pub fn sites(&self, offset: [i64; 2]) -> Vec<Site> {
        let r2 = (self.radius as i128).pow(2);
        let (py, h) = (self.pitch[1], self.die[1]);
        let mut out = Vec::new();
        let j0 = (-self.radius - offset[1]).div_euclid(py) - 1;
        let j1 = (self.radius - offset[1]).div_euclid(py) + 1;
        for j in j0..=j1 {
            let y0 = self.lo(1, offset[1], j);
            let ymax = y0.abs().max((y0 + h).abs()) as i128;
            if ymax * ymax > r2 {
                continue;
            }
            let w = isqrt(r2 - ymax * ymax) as i64;
            // need lo(k) >= -w and lo(k) + width <= w
            let base = offset[0] + self.margin(0);
            let px = self.pitch[0];
            let k0 = ceil_div(-w - base, px);
            let k1 = (w - self.die[0] - base).div_euclid(px);
            for k in k0..=k1 {
                out.push(Site { column: k, row: j, origin: Point::new(base + k * px, y0) });
            }
        }
        out
    }

    pub fn count(&self, offset: [i64; 2]) -> usize {
        self.sites(offset).len()
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

fn isqrt(v: i128) -> i128 {
    if v <= 0 {
        return 0;
    }
    let mut x = (v as f64).sqrt() as i128;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

/// Offsets over one pitch period: multiples of `step` plus zero.
pub fn scan_offsets(pitch: i64, step: i64) -> Vec<i64> {
    (0..).map(|i| i * step).take_while(|&o| o < pitch).collect()
}

fn centredness(o: i64, pitch: i64) -> i64 {
    o.min(pitch - o)
}

pub fn plan_wafer(wafer: &WaferSpec, die: &DieSpec, scribe: &ScribeSpec) -> Result<WaferPlan, WaferError> {
    plan_wafer_with(wafer, die, scribe, PlanOptions::default())
}

pub fn plan_wafer_with(
    wafer: &WaferSpec,
    die: &DieSpec,
    scribe: &ScribeSpec,
    opts: PlanOptions,
) -> Result<WaferPlan, WaferError> {
    let g = Grid::new(wafer, die, scribe)?;
    let best = if opts.scan {
        let step = mm(opts.step_mm).max(1);
        let xs = scan_offsets(g.pitch[0], step);
        let ys = scan_offsets(g.pitch[1], step);
        let cands: Vec<[i64; 2]> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect();
        let scored: Vec<(usize, [i64; 2])> = cands.par_iter().map(|&o| (g.count(o), o)).collect();
        scored
            .into_iter()
            .min_by_key(|&(n, o)| {
                let (cx, cy) = (centredness(o[0], g.pitch[0]), centredness(o[1], g.pitch[1]));
                (std::cmp::Reverse(n), cx * cx + cy * cy, o)
            })
            .map(|(_, o)| o)
            .unwrap_or([0, 0])
    } else {
        [0, 0]
    };
    let mut sites = g.sites(best);
    let (c0, r0) = (
        sites.iter().map(|s| s.column).min().unwrap_or(0),
        sites.iter().map(|s| s.row).min().unwrap_or(0),
    );
    for s in &mut sites {
        s.column -= c0;
        s.row -= r0;
    }
    let mut warnings = Vec::new();
    if sites.is_empty() {
        let w = format!(
            "no {} x {} mm die fits inside the {} mm usable radius",
            die.width_mm,
            die.height_mm,
            wafer.diameter_mm / 2.0 - wafer.edge_exclusion_mm
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(WaferPlan {
        wafer: wafer.clone(),
        die: die.clone(),
        scribe: scribe.clone(),
        usable_radius_mm: g.radius as f64 / 1e6,
        pitch_nm: g.pitch,
        grid_offset_nm: best,
        die_count: sites.len(),
        sites,
        warnings,
    })
}

/// Lowest centred-grid count and highest optimised count over a sweep of
/// edge exclusions.
pub fn count_band(
    diameter_mm: f64,
    exclusions_mm: &[f64],
    die: &DieSpec,
    scribe: &ScribeSpec,
) -> Result<(usize, usize), WaferError> {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for &e in exclusions_mm {
        let w = WaferSpec { diameter_mm, edge_exclusion_mm: e };
        let centred = plan_wafer_with(&w, die, scribe, PlanOptions { scan: false, ..Default::default() })?;
        let best = plan_wafer(&w, die, scribe)?;
        lo = lo.min(centred.die_count);
        hi = hi.max(best.die_count);
    }
    Ok((lo, hi))
}

/// Single-polygon test structures for the scribe lanes.
pub fn standard_pcm_cells() -> Vec<Cell> {
    let (l, d) = PCM_LAYER;
    let p = Point::new;
    let (a, b) = (40_000, 5_000);
    let cross = vec![
        p(-b, -a), p(b, -a), p(b, -b), p(a, -b), p(a, b), p(b, b),
        p(b, a), p(-b, a), p(-b, b), p(-a, b), p(-a, -b), p(-b, -b),
    ];
    // junction test pads on a shared bus
    let mut comb = vec![p(-40_000, -30_000), p(40_000, -30_000)];
    for i in (0..4).rev() {
        let x = -40_000 + i * 22_000;
        if i < 3 {
            comb.extend([p(x + 14_000, -10_000)]);
        }
        comb.extend([p(x + 14_000, 30_000), p(x, 30_000)]);
        if i > 0 {
            comb.push(p(x, -10_000));
        }
    }
    // resistance monitor meander
    let legs: Vec<Point> = (0..6)
        .flat_map(|i| {
            let x = -30_000 + i * 12_000;
            if i % 2 == 0 { [p(x, -28_000), p(x, 28_000)] } else { [p(x, 28_000), p(x, -28_000)] }
        })
        .collect();
    let meander = path_to_polygon(&legs, 4_000, EndCap::Flush).expect("meander is a valid path");
    let mk = |name: &str, pts: Vec<Point>| {
        let mut c = Cell::new(name);
        c.push(Element::boundary(l, d, pts));
        c
    };
    vec![mk("PCM_ALIGN", cross), mk("PCM_JJ_ARRAY", comb), mk("PCM_RES", meander.vertices().to_vec())]
}

/// Wafer layout: die references at every site, PCMs in the interior
/// horizontal lanes, and the wafer outline.
pub fn emit_wafer_layout(plan: &WaferPlan, die_layout: &Layout, pcm_library: &[Cell]) -> Result<Layout, WaferError> {
    let die_cell = &plan.die.outline_cell;
    if die_layout.cell(die_cell).is_none() {
        return Err(WaferError::MissingDie(die_cell.clone()));
    }
    let die_flat = flatten(die_layout, die_cell).map_err(|e| WaferError::Layout(e.to_string()))?;
    let mut pcms = Vec::new();
    for name in &plan.scribe.pcm_cells {
        let cell = die_layout
            .cell(name)
            .or_else(|| pcm_library.iter().find(|c| &c.name == name))
            .ok_or_else(|| WaferError::MissingPcm(name.clone()))?;
        pcms.push(cell.clone());
    }

    let mut out = Layout::new(format!("{}_WAFER", die_layout.library_name));
    out.db_unit_nm = die_layout.db_unit_nm;
    out.db_in_user = die_layout.db_in_user;
    out.cells = die_layout.cells.clone();
    for c in &pcms {
        if out.cell(&c.name).is_none() {
            out.add_cell(c.clone());
        }
    }

    let mut top = Cell::new(WAFER_CELL);
    let scale = die_layout.db_unit_nm as i64;
    let shift = die_flat.bounds.min;
    for s in &plan.sites {
        let o = Point::new(s.origin.x / scale - shift.x / scale, s.origin.y / scale - shift.y / scale);
        top.add_ref(CellRef::at(die_cell.clone(), o));
    }
    if !pcms.is_empty() {
        let [w, h] = plan.die_size_nm();
        let lane = plan.pitch_nm[1] - h;
        let mut k = 0;
        let occupied: std::collections::HashSet<(i64, i64)> = plan.sites.iter().map(|s| (s.column, s.row)).collect();
        for s in &plan.sites {
            if !occupied.contains(&(s.column, s.row + 1)) {
                continue;
            }
            let c = Point::new(s.origin.x + w / 2, s.origin.y + h + lane / 2);
            let name = &pcms[k % pcms.len()].name;
            top.add_ref(CellRef::at(name.clone(), Point::new(c.x / scale, c.y / scale)));
            k += 1;
        }
    }
    let r = mm(plan.wafer.diameter_mm / 2.0) / scale;
    let outline = circle(Point::default(), r, OUTLINE_SEGMENTS);
    top.push(Element::boundary(WAFER_OUTLINE_LAYER.0, WAFER_OUTLINE_LAYER.1, outline.vertices().to_vec()));
    out.top_cell = WAFER_CELL.to_string();
    out.add_cell(top);
    Ok(out)
}

/// Number of PCM instances `emit_wafer_layout` places for this plan.
pub fn pcm_instance_count(plan: &WaferPlan) -> usize {
    if plan.scribe.pcm_cells.is_empty() {
        return 0;
    }
    let occupied: std::collections::HashSet<(i64, i64)> = plan.sites.iter().map(|s| (s.column, s.row)).collect();
    plan.sites.iter().filter(|s| occupied.contains(&(s.column, s.row + 1))).count()
}

/// Wafer map: usable circle, die rectangles and hatched lanes. Units are mm.
pub fn render_svg(plan: &WaferPlan) -> String {
    let r = plan.wafer.diameter_mm / 2.0;
    let m = r * 1.05;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}" width="800" height="800">"#,
        -m,
        -m,
        2.0 * m,
        2.0 * m
    );
    let _ = writeln!(
        s,
        r##"<defs><pattern id="lane" width="1" height="1" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="1" stroke="#999" stroke-width="0.3"/></pattern></defs>"##
    );
    let _ = writeln!(s, r#"<circle cx="0" cy="0" r="{r:.3}" fill="url(#lane)" stroke="black" stroke-width="0.5"/>"#);
    let _ = writeln!(
        s,
        r#"<circle cx="0" cy="0" r="{:.3}" fill="none" stroke="red" stroke-width="0.3" stroke-dasharray="2 2"/>"#,
        plan.usable_radius_mm
    );
    for site in &plan.sites {
        let d = plan.die_rect(site);
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#cfe3f7" stroke="#1f5fa0" stroke-width="0.2"><title>({}, {})</title></rect>"##,
            d.min.x as f64 / 1e6,
            -(d.max.y as f64) / 1e6,
            d.width() as f64 / 1e6,
            d.height() as f64 / 1e6,
            site.column,
            site.row
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}

/// Die polygon for a site, used by containment checks.
pub fn site_polygon(plan: &WaferPlan, s: &Site) -> Polygon {
    Polygon::rect(plan.die_rect(s))
}
