// SPDX-License-Identifier: Apache-2.0

//! Hierarchy expansion into a flat polygon list in nanometres.
//!
//! Every flattened item carries a trace such as `TOP/XMON#2/e5` or
//! `WAFER/DIE#0@3,4/e17`: the top cell, then one `target#ref_index` segment
//! per reference (with `@col,row` for arrays), then the element index.

use log::warn;

use super::model::{Cell, Element, Layout, Shape, Transform};
use super::GdsError;
use crate::geometry::{path_to_polygon, PathError, Point, Polygon, PolygonError, Rect};

#[derive(Debug, Clone, PartialEq)]
pub struct FlatPolygon {
    pub layer: u16,
    pub datatype: u16,
    pub polygon: Polygon,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatText {
    pub layer: u16,
    pub datatype: u16,
    pub position: Point,
    pub text: String,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    Degenerate(PolygonError),
    SelfIntersecting(PolygonError),
    InvalidPath(PathError),
}

impl RejectReason {
    pub fn is_self_intersection(&self) -> bool {
        matches!(self, RejectReason::SelfIntersecting(_) | RejectReason::InvalidPath(PathError::SelfOverlap { .. }))
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Degenerate(e) | RejectReason::SelfIntersecting(e) => write!(f, "{e}"),
            RejectReason::InvalidPath(e) => write!(f, "{e}"),
        }
    }
}

/// Geometry that could not be turned into a valid polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub layer: u16,
    pub datatype: u16,
    pub points: Vec<Point>,
    pub trace: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatLayout {
    pub top: String,
    pub polygons: Vec<FlatPolygon>,
    pub texts: Vec<FlatText>,
    pub rejects: Vec<Reject>,
    /// Bounds of all valid polygons (empty rect when there are none).
    pub bounds: Rect,
    /// Database unit of the source layout; flat coordinates are always nm.
    pub db_unit_nm: u32,
    /// Vertices moved to the nm grid after a non-Manhattan or fractional transform.
    pub snapped_points: usize,
}

impl FlatLayout {
    /// Sorted distinct (layer, datatype) pairs carrying polygons or rejects.
    pub fn populated_layers(&self) -> Vec<(u16, u16)> {
        let mut v: Vec<(u16, u16)> = self
            .polygons
            .iter()
            .map(|p| (p.layer, p.datatype))
            .chain(self.rejects.iter().map(|r| (r.layer, r.datatype)))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn on_layer(&self, layer: u16, datatype: u16) -> impl Iterator<Item = &FlatPolygon> {
        self.polygons.iter().filter(move |p| p.layer == layer && p.datatype == datatype)
    }

    /// Builds a flat layout directly from polygons (fixtures and tests).
    pub fn from_polygons(polygons: Vec<FlatPolygon>) -> Self {
        let bounds = bounds_of(&polygons);
        FlatLayout { top: String::new(), polygons, db_unit_nm: 1, bounds, ..Default::default() }
    }
}

fn bounds_of(polygons: &[FlatPolygon]) -> Rect {
    polygons.iter().map(|p| p.polygon.bbox()).reduce(|a, b| a.union(&b)).unwrap_or_default()
}

#[derive(Debug, Clone, Copy)]
struct Affine {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    tx: f64,
    ty: f64,
}

fn cos_sin(deg: f64) -> (f64, f64) {
    let q = deg / 90.0;
    if q.fract() == 0.0 {
        match (q as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = deg.to_radians();
        (r.cos(), r.sin())
    }
}

impl Affine {
    fn scale(s: f64) -> Self {
        Affine { a: s, b: 0.0, c: 0.0, d: s, tx: 0.0, ty: 0.0 }
    }

    fn of(t: &Transform, origin: Point) -> Self {
        let (cos, sin) = cos_sin(t.angle_deg);
        let r = if t.reflect { -1.0 } else { 1.0 };
        Affine {
            a: t.mag * cos,
            b: -t.mag * sin * r,
            c: t.mag * sin,
            d: t.mag * cos * r,
            tx: origin.x as f64,
            ty: origin.y as f64,
        }
    }

    /// self ∘ inner
    fn then(&self, inner: &Affine) -> Affine {
        Affine {
            a: self.a * inner.a + self.b * inner.c,
            b: self.a * inner.b + self.b * inner.d,
            c: self.c * inner.a + self.d * inner.c,
            d: self.c * inner.b + self.d * inner.d,
            tx: self.a * inner.tx + self.b * inner.ty + self.tx,
            ty: self.c * inner.tx + self.d * inner.ty + self.ty,
        }
    }

    fn linear_scale(&self) -> f64 {
        (self.a * self.d - self.b * self.c).abs().sqrt()
    }
}

struct Flattener<'a> {
    layout: &'a Layout,
    out: FlatLayout,
}

fn snap(v: f64, snapped: &mut bool) -> i64 {
    let r = v.round();
    if (v - r).abs() > 1e-9 {
        *snapped = true;
    }
    r as i64
}

impl Flattener<'_> {
    fn map_points(&mut self, m: &Affine, pts: &[Point]) -> Vec<Point> {
        pts.iter()
            .map(|p| {
                let (x, y) = (p.x as f64, p.y as f64);
                let mut moved = false;
                let q = Point::new(snap(m.a * x + m.b * y + m.tx, &mut moved), snap(m.c * x + m.d * y + m.ty, &mut moved));
                if moved {
                    self.out.snapped_points += 1;
                }
                q
            })
            .collect()
    }

    fn element(&mut self, e: &Element, m: &Affine, trace: String) {
        let (layer, datatype) = (e.layer, e.datatype);
        match &e.shape {
            Shape::Boundary(pts) => {
                let pts = self.map_points(m, pts);
                match Polygon::new(pts.clone()) {
                    Ok(polygon) => self.out.polygons.push(FlatPolygon { layer, datatype, polygon, trace }),
                    Err(err) => {
                        let reason =
                            if err.is_degenerate() { RejectReason::Degenerate(err) } else { RejectReason::SelfIntersecting(err) };
                        self.out.rejects.push(Reject { layer, datatype, points: pts, trace, reason });
                    }
                }
            }
            Shape::Path { points, width, endcap } => {
                let pts = self.map_points(m, points);
                let w = *width as f64 * m.linear_scale();
                let mut moved = false;
                let w = snap(w, &mut moved);
                if moved {
                    self.out.snapped_points += 1;
                }
                match path_to_polygon(&pts, w, *endcap) {
                    Ok(polygon) => self.out.polygons.push(FlatPolygon { layer, datatype, polygon, trace }),
                    Err(err) => {
                        if let PathError::SelfOverlap { .. } = err {
                            warn!("path {trace} overlaps itself; flagged for review");
                        }
                        let points = match &err {
                            PathError::SelfOverlap { ring, .. } => ring.clone(),
                            _ => pts,
                        };
                        self.out.rejects.push(Reject { layer, datatype, points, trace, reason: RejectReason::InvalidPath(err) });
                    }
                }
            }
            Shape::Text { position, text } => {
                let position = self.map_points(m, std::slice::from_ref(position))[0];
                self.out.texts.push(FlatText { layer, datatype, position, text: text.clone(), trace });
            }
        }
    }

    fn cell(&mut self, cell: &Cell, m: &Affine, trace: &str) {
        for (i, e) in cell.elements.iter().enumerate() {
            self.element(e, m, format!("{trace}/e{i}"));
        }
        for (ri, r) in cell.references.iter().enumerate() {
            let target = self.layout.cell(&r.target).expect("validated reference");
            for (cr, origin) in r.origins() {
                let child = m.then(&Affine::of(&r.transform, origin));
                let seg = match cr {
                    Some((c, row)) => format!("{trace}/{}#{ri}@{c},{row}", r.target),
                    None => format!("{trace}/{}#{ri}", r.target),
                };
                self.cell(target, &child, &seg);
            }
        }
    }
}

/// Flattens `top` into nm-scaled polygons.
pub fn flatten(layout: &Layout, top: &str) -> Result<FlatLayout, GdsError> {
    let root = layout.cell(top).ok_or_else(|| GdsError::UnknownTop(top.to_string()))?;
    for c in &layout.cells {
        for r in &c.references {
            if layout.cell(&r.target).is_none() {
                return Err(GdsError::UndefinedCell { cell: c.name.clone(), target: r.target.clone(), offset: None });
            }
        }
    }
    if let Some(cycle) = layout.find_cycle() {
        return Err(GdsError::Cycle { cycle, offset: None });
    }
    let mut f = Flattener {
        layout,
        out: FlatLayout { top: top.to_string(), db_unit_nm: layout.db_unit_nm, ..Default::default() },
    };
    f.cell(root, &Affine::scale(layout.db_unit_nm as f64), top);
    f.out.bounds = bounds_of(&f.out.polygons);
    Ok(f.out)
}

pub fn flatten_top(layout: &Layout) -> Result<FlatLayout, GdsError> {
    flatten(layout, &layout.top_cell)
}

/// Follows a flat trace back to the element it came from.
pub fn resolve_trace<'a>(layout: &'a Layout, trace: &str) -> Option<&'a Element> {
    let mut parts = trace.split('/');
    let mut cell = layout.cell(parts.next()?)?;
    let mut rest: Vec<&str> = parts.collect();
    let last = rest.pop()?;
    for seg in rest {
        let (name, idx) = seg.split_once('#')?;
        let idx = idx.split('@').next()?.parse::<usize>().ok()?;
        let r = cell.references.get(idx)?;
        if r.target != name {
            return None;
        }
        cell = layout.cell(name)?;
    }
    cell.elements.get(last.strip_prefix('e')?.parse::<usize>().ok()?)
}
