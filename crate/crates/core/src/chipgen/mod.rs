// SPDX-License-Identifier: Apache-2.0

//! Parameterized chip generator: Xmon qubits with junctions, meandered
//! readout resonators, a feedline with launch pads, coupler pockets,
//! airbridges over every long CPW run and a connected ground plane.
//!
//! Each component type is one cell; instances are references. Ground is
//! emitted as disjoint rectangles so the flat view stays valid polygons.

mod defect;
pub mod ground;
mod recipe;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gds::{Cell, CellRef, Element, Layout, Transform};
use crate::geometry::{path_to_polygon, EndCap, PathError, Point, Rect};
use crate::pdk::{Pdk, Purpose};

pub use defect::{inject_defect, DEFECT_SITE_LABEL};
pub use recipe::{
    BridgeParams, ChipRecipe, CouplerParams, CpwParams, FeedlineParams, PlacementParams, ResonatorParams, XmonParams,
};

use recipe::nm;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default generator parameters as shipped in `recipes/default.json`.
pub const DEFAULT_RECIPE_JSON: &str = include_str!("../../../../recipes/default.json");

#[derive(Debug, Error)]
pub enum ChipError {
    #[error("PDK has no layer for purpose {0}")]
    MissingPurpose(Purpose),
    #[error("invalid chip spec: {0}")]
    InvalidSpec(String),
    #[error("die of {have_um:?} um is smaller than the {need_um:?} um the placement needs")]
    DieTooSmall { need_um: [f64; 2], have_um: [f64; 2] },
    #[error("resonator of Q{qubit} needs {length_um:.0} um but its pocket holds {capacity_um:.0} um")]
    ResonatorTooLong { qubit: usize, length_um: f64, capacity_um: f64 },
    #[error("path construction failed: {0}")]
    Path(#[from] PathError),
    #[error("layout has no {0}")]
    Missing(String),
    #[error("layout does not flatten: {0}")]
    Flatten(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Four qubits on the vertices of a diamond, each coupled to its two
    /// neighbours, read out through one U-shaped feedline.
    Diamond,
    /// Rows of qubits under one straight feedline per row.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipSpec {
    pub name: String,
    pub qubits: usize,
    pub topology: Topology,
    /// Die size in µm; derived from the placement when absent.
    pub die_um: Option<[f64; 2]>,
    pub seed: u64,
    pub recipe: ChipRecipe,
}

impl Default for ChipSpec {
    fn default() -> Self {
        ChipSpec {
            name: "QCHIP".into(),
            qubits: 4,
            topology: Topology::Diamond,
            die_um: None,
            seed: 1,
            recipe: ChipRecipe::default(),
        }
    }
}

impl ChipSpec {
    pub fn grid(qubits: usize) -> Self {
        ChipSpec { name: format!("QCHIP_{qubits}Q"), qubits, topology: Topology::Grid, ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self, ChipError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ChipError::InvalidSpec(format!("{} at {}", e.inner(), e.path())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Component counts by kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census(pub BTreeMap<String, usize>);

impl Census {
    fn add(&mut self, kind: &str, n: usize) {
        *self.0.entry(kind.to_string()).or_default() += n;
    }

    pub fn get(&self, kind: &str) -> usize {
        self.0.get(kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorInfo {
    pub qubit: usize,
    pub target_ghz: f64,
    pub length_um: f64,
}

#[derive(Debug, Clone)]
pub struct Chip {
    pub layout: Layout,
    pub census: Census,
    /// Die outline, lower-left corner at the origin.
    pub die: Rect,
    pub ground_region: Rect,
    pub test_site: Rect,
    pub resonators: Vec<ResonatorInfo>,
}

#[derive(Clone, Copy)]
struct Layers {
    ground: (u16, u16),
    cpw: (u16, u16),
    jj_bottom: (u16, u16),
    jj_top: (u16, u16),
    jj_lead: (u16, u16),
    pad: (u16, u16),
    span: (u16, u16),
    outline: (u16, u16),
    text: (u16, u16),
}

impl Layers {
    fn of(pdk: &Pdk) -> Result<Self, ChipError> {
        let get = |p| pdk.rules.layer_of(p).ok_or(ChipError::MissingPurpose(p));
        Ok(Layers {
            ground: get(Purpose::Ground)?,
            cpw: get(Purpose::CpwConductor)?,
            jj_bottom: get(Purpose::JjBottom)?,
            jj_top: get(Purpose::JjTop)?,
            jj_lead: get(Purpose::JjLead)?,
            pad: get(Purpose::AirbridgePad)?,
            span: get(Purpose::AirbridgeSpan)?,
            outline: get(Purpose::ChipOutline)?,
            text: get(Purpose::Text)?,
        })
    }
}

fn rect_el(l: (u16, u16), r: Rect) -> Element {
    Element::rect(l.0, l.1, r)
}

/// Manhattan placement: quarter turns counterclockwise, then translation.
#[derive(Debug, Clone, Copy)]
struct Place {
    at: Point,
    quarter: i32,
}

impl Place {
    fn at(at: Point) -> Self {
        Place { at, quarter: 0 }
    }

    fn point(&self, p: Point) -> Point {
        let q = match self.quarter.rem_euclid(4) {
            0 => p,
            1 => Point::new(-p.y, p.x),
            2 => Point::new(-p.x, -p.y),
            _ => Point::new(p.y, -p.x),
        };
        q + self.at
    }

    fn rect(&self, r: Rect) -> Rect {
        let c = r.corners().map(|c| self.point(c));
        Rect::from_points(c.iter()).expect("four corners")
    }

    fn transform(&self, shift: Point) -> Transform {
        let t = Transform::translate(self.at + shift);
        if self.quarter == 0 {
            t
        } else {
            t.rotated(90.0 * self.quarter as f64)
        }
    }
}

/// Derived dimensions in nm.
struct Dims {
    arm: i64,
    arm_half_w: i64,
    pocket: i64,
    cw: i64,
    /// Half width of a CPW including its gaps.
    cpw_half: i64,
    res_w: i64,
    res_h: i64,
    strip: i64,
    clearance: i64,
    launch_half: i64,
}

impl Dims {
    fn new(r: &ChipRecipe) -> Self {
        let cw = nm(r.cpw.conductor_width_um);
        let m = nm(r.resonator.margin_um);
        Dims {
            arm: nm(r.xmon.arm_length_um),
            arm_half_w: nm(r.xmon.arm_width_um) / 2,
            pocket: nm(r.xmon.arm_length_um + r.xmon.gap_um),
            cw,
            cpw_half: cw / 2 + nm(r.cpw.gap_um),
            res_w: nm(r.resonator.pocket_width_um),
            res_h: 2 * m + cw + (r.resonator.legs.max(1) as i64 - 1) * nm(r.resonator.leg_pitch_um),
            strip: nm(r.feedline.ground_strip_um),
            clearance: nm(r.placement.clearance_um),
            launch_half: nm(r.feedline.launch_pad_um) / 2 + nm(r.feedline.launch_gap_um),
        }
    }
}

struct Builder<'a> {
    spec: &'a ChipSpec,
    r: &'a ChipRecipe,
    ly: Layers,
    d: Dims,
    cells: BTreeMap<String, Cell>,
    refs: Vec<(String, Place)>,
    feedlines: Vec<Vec<Point>>,
    keepouts: Vec<Rect>,
    x_cuts: Vec<i64>,
    y_cuts: Vec<i64>,
    site: Rect,
    census: Census,
    resonators: Vec<ResonatorInfo>,
    eps_eff: f64,
    rng: ChaCha8Rng,
}

/// Builds the chip described by `spec` using the layer numbers of `pdk`.
/// Output is a pure function of the inputs.
pub fn generate_chip(spec: &ChipSpec, pdk: &Pdk) -> Result<Chip, ChipError> {
    if spec.qubits == 0 {
        return Err(ChipError::InvalidSpec("qubit count must be at least 1".into()));
    }
    if spec.topology == Topology::Diamond && spec.qubits != 4 {
        return Err(ChipError::InvalidSpec(format!("diamond topology has 4 qubits, got {}", spec.qubits)));
    }
    if spec.recipe.resonator.legs == 0 || spec.recipe.bridge.pitch_um <= 0.0 {
        return Err(ChipError::InvalidSpec("resonator legs and bridge pitch must be positive".into()));
    }
    let mut b = Builder {
        spec,
        r: &spec.recipe,
        ly: Layers::of(pdk)?,
        d: Dims::new(&spec.recipe),
        cells: BTreeMap::new(),
        refs: Vec::new(),
        feedlines: Vec::new(),
        keepouts: Vec::new(),
        x_cuts: Vec::new(),
        y_cuts: Vec::new(),
        site: Rect::default(),
        census: Census::default(),
        resonators: Vec::new(),
        eps_eff: (pdk.stack.substrate_permittivity + 1.0) / 2.0,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    match spec.topology {
        Topology::Diamond => b.diamond()?,
        Topology::Grid => b.grid()?,
    }
    b.finish()
}

impl Builder<'_> {
    fn diamond(&mut self) -> Result<(), ChipError> {
        let d = nm(self.r.placement.diamond_offset_um);
        let s = nm(self.r.placement.diamond_stub_um);
        let q = [
            (Point::new(-d, 0), 0, s + d),
            (Point::new(0, d), 0, s),
            (Point::new(0, -d), 2, s),
            (Point::new(d, 0), 0, s + d),
        ];
        for (k, &(at, quarter, stub)) in q.iter().enumerate() {
            self.qubit(k, Place { at, quarter }, stub)?;
        }
        for (a, b) in [(0, 1), (1, 3), (3, 2), (2, 0)] {
            let (pa, pb) = (q[a].0, q[b].0);
            self.coupler(Point::new((pa.x + pb.x) / 2, (pa.y + pb.y) / 2));
        }
        let dm = &self.d;
        let yt = d + dm.pocket + s + dm.res_h + dm.strip + dm.cpw_half;
        let xr = d + dm.res_w / 2 + dm.strip + dm.cpw_half;
        let xl = -d - dm.res_w / 2 - dm.clearance - dm.launch_half;
        let lh = dm.launch_half;
        self.feedline(vec![Point::new(xl, yt), Point::new(xr, yt), Point::new(xr, -yt), Point::new(xl, -yt)]);
        self.bridge_run(Point::new(xl + lh, yt), Point::new(xr, yt));
        self.bridge_run(Point::new(xr, yt), Point::new(xr, -yt));
        self.bridge_run(Point::new(xr, -yt), Point::new(xl + lh, -yt));
        self.test_site(Point::new(xl, 0));
        Ok(())
    }

    fn grid(&mut self) -> Result<(), ChipError> {
        let n = self.spec.qubits;
        let cols = (1..=n).find(|c| c * c >= n).unwrap_or(1);
        let rows = n.div_ceil(cols);
        let px = nm(self.r.placement.qubit_pitch_um);
        let dm = &self.d;
        let yf = dm.pocket + dm.res_h + dm.strip + dm.cpw_half;
        let py = yf + dm.cpw_half + dm.clearance + dm.pocket;
        let xl = -dm.res_w / 2 - dm.clearance - dm.launch_half;
        let xr = (cols as i64 - 1) * px - xl;
        let lh = dm.launch_half;
        let cut_above = dm.cpw_half + dm.clearance / 2;
        let pocket = dm.pocket;
        let clearance = dm.clearance;
        for k in 0..n {
            let (row, col) = ((k / cols) as i64, (k % cols) as i64);
            self.qubit(k, Place::at(Point::new(col * px, row * py)), 0)?;
            if col + 1 < cols as i64 && k + 1 < n {
                self.coupler(Point::new(col * px + px / 2, row * py));
            }
        }
        for r in 0..rows as i64 {
            let y = r * py + yf;
            self.feedline(vec![Point::new(xl, y), Point::new(xr, y)]);
            self.bridge_run(Point::new(xl + lh, y), Point::new(xr - lh, y));
        }
        self.x_cuts = (0..=cols as i64).map(|c| c * px - px / 2).collect();
        self.y_cuts = (-1..rows as i64).map(|r| r * py + yf + cut_above).collect();
        let ts = nm(self.r.placement.test_site_um);
        self.test_site(Point::new(0, -pocket - clearance - ts / 2));
        Ok(())
    }

    fn ensure(&mut self, name: &str, build: impl FnOnce(&Self) -> Cell) {
        if !self.cells.contains_key(name) {
            let c = build(self);
            self.cells.insert(name.to_string(), c);
        }
    }

    fn qubit(&mut self, k: usize, place: Place, stub: i64) -> Result<(), ChipError> {
        self.ensure("JJ", Self::jj_cell);
        self.ensure("XMON", Self::xmon_cell);
        let res = self.resonator_cell(k, stub)?;
        self.refs.push(("XMON".into(), place));
        self.refs.push((res, place));
        let d = &self.d;
        let p = d.pocket;
        let mut keep = vec![Rect::new(-p, -p, p, p)];
        if stub > 0 {
            keep.push(Rect::new(-d.cpw_half, p, d.cpw_half, p + stub));
        }
        keep.push(Rect::new(-d.res_w / 2, p + stub, d.res_w / 2, p + stub + d.res_h));
        self.keepouts.extend(keep.iter().map(|r| place.rect(*r)));
        self.bridge_run(place.point(Point::new(0, p)), place.point(Point::new(0, p + stub)));
        self.census.add("xmon", 1);
        self.census.add("readout_resonator", 1);
        Ok(())
    }

    fn xmon_cell(&self) -> Cell {
        let (a, w) = (self.d.arm, self.d.arm_half_w);
        let pts = [
            (-w, -a),
            (w, -a),
            (w, -w),
            (a, -w),
            (a, w),
            (w, w),
            (w, a),
            (-w, a),
            (-w, w),
            (-a, w),
            (-a, -w),
            (-w, -w),
        ];
        let mut c = Cell::new("XMON");
        c.push(Element::boundary(self.ly.cpw.0, self.ly.cpw.1, pts.iter().map(|&(x, y)| Point::new(x, y)).collect()));
        c.add_ref(CellRef::at("JJ", Point::new(0, -a)));
        c
    }

    /// Junction hanging below an arm tip at the origin; the lead runs down
    /// into the pocket wall.
    fn jj_cell(&self) -> Cell {
        const STEM: i64 = 12_000;
        const TOP_HALF: i64 = 1_000;
        let x = &self.r.xmon;
        let (o, m) = (x.jj_overlap_nm, x.jj_margin_nm);
        let top_half = TOP_HALF.max(o / 2 + m);
        let strip_lo = -STEM + m;
        let strip_hi = strip_lo + o;
        let lead_x0 = top_half - 100 - x.jj_lead_width_nm;
        let lead_bottom = -(self.d.pocket - self.d.arm) - 500;
        let mut c = Cell::new("JJ");
        c.push(rect_el(self.ly.jj_bottom, Rect::new(-o / 2, -STEM, o / 2, 500)));
        c.push(rect_el(self.ly.jj_top, Rect::new(-top_half, strip_lo, top_half, strip_hi)));
        c.push(rect_el(self.ly.jj_lead, Rect::new(lead_x0, lead_bottom, lead_x0 + x.jj_lead_width_nm, strip_hi)));
        c
    }

    /// Quarter-wave line from the open end near the Xmon arm, up the stub
    /// and back and forth across the pocket until the target length.
    fn resonator_cell(&mut self, k: usize, stub: i64) -> Result<String, ChipError> {
        let rp = &self.r.resonator;
        let jitter = if rp.jitter_mhz > 0.0 { self.rng.gen_range(-1.0..=1.0) * rp.jitter_mhz / 1e3 } else { 0.0 };
        let f_ghz = rp.base_frequency_ghz + rp.frequency_step_ghz * (k % rp.frequency_cycle.max(1)) as f64 + jitter;
        let target = (SPEED_OF_LIGHT / (4.0 * f_ghz * 1e9 * self.eps_eff.sqrt()) * 1e9).round() as i64;

        let d = &self.d;
        let w = d.cw;
        let m = nm(rp.margin_um);
        let pitch = nm(rp.leg_pitch_um);
        let y0 = d.arm + nm(rp.coupling_gap_um);
        let y_first = d.pocket + stub + m + w / 2;
        let x_right = d.res_w / 2 - m - w / 2;
        let mut pts = vec![Point::new(0, y0)];
        let mut len = 0;
        let mut cur = Point::new(0, y0);
        let mut done = false;
        // (direction, length) moves: up to the first leg, then legs joined by risers
        let mut moves = vec![(Point::new(0, 1), y_first - y0), (Point::new(1, 0), x_right)];
        for leg in 1..rp.legs {
            moves.push((Point::new(0, 1), pitch));
            let dir = if leg % 2 == 1 { -1 } else { 1 };
            moves.push((Point::new(dir, 0), 2 * x_right));
        }
        let mut capacity = 0;
        for &(dir, seg) in &moves {
            capacity += seg;
            if done {
                continue;
            }
            let take = seg.min(target - len);
            if take < seg && take < w {
                done = true;
                continue;
            }
            cur = Point::new(cur.x + dir.x * take, cur.y + dir.y * take);
            pts.push(cur);
            len += take;
            done = len >= target;
        }
        if !done {
            return Err(ChipError::ResonatorTooLong {
                qubit: k,
                length_um: target as f64 / 1e3,
                capacity_um: capacity as f64 / 1e3,
            });
        }
        let poly = path_to_polygon(&pts, w, EndCap::Flush)?;
        let name = format!("RES_Q{k}");
        let mut c = Cell::new(name.clone());
        c.push(Element::boundary(self.ly.cpw.0, self.ly.cpw.1, poly.vertices().to_vec()));
        self.cells.insert(name.clone(), c);
        self.resonators.push(ResonatorInfo { qubit: k, target_ghz: f_ghz, length_um: len as f64 / 1e3 });
        Ok(name)
    }

    fn coupler(&mut self, at: Point) {
        self.ensure("COUPLER", |b| {
            let c = &b.r.coupler;
            let (hl, hw) = (nm(c.bar_length_um) / 2, nm(c.bar_width_um) / 2);
            let mut cell = Cell::new("COUPLER");
            cell.push(rect_el(b.ly.cpw, Rect::new(-hl, -hw, hl, hw)));
            cell
        });
        let h = nm(self.r.coupler.pocket_um) / 2;
        self.keepouts.push(Rect::new(at.x - h, at.y - h, at.x + h, at.y + h));
        self.refs.push(("COUPLER".into(), Place::at(at)));
        self.census.add("coupler", 1);
    }

    /// Feedline through `pts` with a launch pad at both ends.
    fn feedline(&mut self, pts: Vec<Point>) {
        self.ensure("LAUNCH", |b| {
            let h = nm(b.r.feedline.launch_pad_um) / 2;
            let mut c = Cell::new("LAUNCH");
            c.push(rect_el(b.ly.cpw, Rect::new(-h, -h, h, h)));
            c
        });
        let lh = self.d.launch_half;
        for end in [pts[0], pts[pts.len() - 1]] {
            self.refs.push(("LAUNCH".into(), Place::at(end)));
            self.keepouts.push(Rect::new(end.x - lh, end.y - lh, end.x + lh, end.y + lh));
            self.census.add("launch_pad", 1);
        }
        for w in pts.windows(2) {
            let r = Rect::from_points(w.iter()).expect("two points");
            self.keepouts.push(r.expand(self.d.cpw_half));
        }
        self.feedlines.push(pts);
        self.census.add("feedline", 1);
    }

    /// Evenly spaced bridges along the straight CPW run `a`-`b`.
    fn bridge_run(&mut self, a: Point, b: Point) {
        let len = (b.x - a.x).abs() + (b.y - a.y).abs();
        let br = &self.r.bridge;
        if len <= nm(br.min_run_um) {
            return;
        }
        self.ensure("BRIDGE", Self::bridge_cell);
        let n = (len / nm(br.pitch_um)).max(1);
        let dir = Point::new((b.x - a.x).signum(), (b.y - a.y).signum());
        let quarter = if dir.x == 0 { 0 } else { 1 };
        for i in 0..n {
            let t = ((2 * i + 1) * len / (2 * n) + 500) / 1000 * 1000;
            let at = Point::new(a.x + dir.x * t, a.y + dir.y * t);
            self.refs.push(("BRIDGE".into(), Place { at, quarter }));
            self.census.add("airbridge", 1);
        }
    }

    /// Bridge over a vertical CPW: pads either side, span across.
    fn bridge_cell(&self) -> Cell {
        let br = &self.r.bridge;
        let (pad, g, hs) = (nm(br.pad_um), nm(br.pad_gap_um) / 2, nm(br.span_width_um) / 2);
        let mut c = Cell::new("BRIDGE");
        c.push(rect_el(self.ly.pad, Rect::new(-g - pad, -pad / 2, -g, pad / 2)));
        c.push(rect_el(self.ly.pad, Rect::new(g, -pad / 2, g + pad, pad / 2)));
        c.push(rect_el(self.ly.span, Rect::new(-g - pad / 2, -hs, g + pad / 2, hs)));
        c
    }

    fn test_site(&mut self, at: Point) {
        let h = nm(self.r.placement.test_site_um) / 2;
        self.site = Rect::new(at.x - h, at.y - h, at.x + h, at.y + h);
        self.keepouts.push(self.site);
    }

    fn finish(mut self) -> Result<Chip, ChipError> {
        let content = self.keepouts.iter().fold(self.site, |acc, r| acc.union(r));
        let inset = nm(self.r.placement.ground_inset_um);
        let need = content.expand(self.d.clearance + inset);
        let c = need.center();
        let (w, h) = match self.spec.die_um {
            None => {
                let up = |v: i64| (v + 99_999) / 100_000 * 100_000;
                (up(need.width()), up(need.height()))
            }
            Some([w, h]) => {
                let (w, h) = (nm(w), nm(h));
                if w < need.width() || h < need.height() {
                    return Err(ChipError::DieTooSmall {
                        need_um: [need.width() as f64 / 1e3, need.height() as f64 / 1e3],
                        have_um: [w as f64 / 1e3, h as f64 / 1e3],
                    });
                }
                (w, h)
            }
        };
        let die_design = Rect::new(c.x - w / 2, c.y - h / 2, c.x - w / 2 + w, c.y - h / 2 + h);
        let shift = Point::new(-die_design.min.x, -die_design.min.y);
        let die = die_design.translate(shift);
        let ground_region = die.expand(-inset);
        let keep: Vec<Rect> = self.keepouts.iter().map(|r| r.translate(shift)).collect();
        let xc: Vec<i64> = self.x_cuts.iter().map(|x| x + shift.x).collect();
        let yc: Vec<i64> = self.y_cuts.iter().map(|y| y + shift.y).collect();

        let mut gnd = Cell::new("GROUND");
        for r in ground::ground_rects(ground_region, &xc, &yc, &keep) {
            gnd.push(rect_el(self.ly.ground, r));
        }
        self.census.add("ground_plane", 1);
        let mut outline = Cell::new("OUTLINE");
        outline.push(rect_el(self.ly.outline, die));
        self.census.add("chip_outline", 1);

        let mut top = Cell::new(self.spec.name.clone());
        for (i, pts) in self.feedlines.iter().enumerate() {
            let mut pts: Vec<Point> = pts.iter().map(|p| *p + shift).collect();
            // stop at the pad edge so the two shapes abut instead of overlapping
            let pad_h = nm(self.r.feedline.launch_pad_um) / 2;
            let n = pts.len();
            for (end, next) in [(0, 1), (n - 1, n - 2)] {
                let (a, b) = (pts[end], pts[next]);
                pts[end] = a + Point::new((b.x - a.x).signum() * pad_h, (b.y - a.y).signum() * pad_h);
            }
            let poly = path_to_polygon(&pts, self.d.cw, EndCap::Flush)?;
            let mut fc = Cell::new(format!("FEEDLINE_{i}"));
            fc.push(Element::boundary(self.ly.cpw.0, self.ly.cpw.1, poly.vertices().to_vec()));
            top.add_ref(CellRef::at(fc.name.clone(), Point::default()));
            self.cells.insert(fc.name.clone(), fc);
        }
        for (name, place) in &self.refs {
            top.add_ref(CellRef::new(name.clone(), place.transform(shift)));
        }
        top.add_ref(CellRef::at("GROUND", Point::default()));
        top.add_ref(CellRef::at("OUTLINE", Point::default()));
        let site = self.site.translate(shift);
        top.push(Element::text(self.ly.text.0, self.ly.text.1, Point::new(100_000, 100_000), self.spec.name.clone()));
        top.push(Element::text(
            self.ly.text.0,
            self.ly.text.1,
            site.center(),
            format!("{DEFECT_SITE_LABEL}:{}", site.width()),
        ));
        self.cells.insert("GROUND".into(), gnd);
        self.cells.insert("OUTLINE".into(), outline);

        let mut layout = Layout::new(format!("{}_LIB", self.spec.name));
        layout.add_cell(top);
        for (_, c) in self.cells {
            layout.add_cell(c);
        }
        layout.top_cell = self.spec.name.clone();
        Ok(Chip { layout, census: self.census, die, ground_region, test_site: site, resonators: self.resonators })
    }
}
