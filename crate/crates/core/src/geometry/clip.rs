// SPDX-License-Identifier: Apache-2.0

//! Overlap area between polygons.
//!
//! Rectilinear inputs are split into rectangles and intersected exactly in
//! integer arithmetic. Other inputs are split into trapezoids with exact
//! cut-line abscissae and each trapezoid pair is clipped as a convex polygon.

use super::point::{Point, Rect};
use super::polygon::Polygon;
use super::trapezoid::{decompose_real, decompose_rects, RealTrapezoid};

/// Overlap below this many nm² counts as touching for non-rectilinear shapes.
pub const AREA_EPSILON: f64 = 1e-3;

fn rect_overlap_area(a: &[Rect], b: &[Rect]) -> i128 {
    let mut total = 0i128;
    for ra in a {
        for rb in b {
            if ra.overlaps_interior(rb) {
                total += ra.intersection(rb).unwrap().area();
            }
        }
    }
    total
}

/// Sutherland-Hodgman clip of a polygon against a convex counterclockwise clipper.
fn clip_convex(subject: &[(f64, f64)], clipper: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut output: Vec<(f64, f64)> = subject.to_vec();
    let m = clipper.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let (a, b) = (clipper[i], clipper[(i + 1) % m]);
        if a == b {
            continue;
        }
        let side = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let input = std::mem::take(&mut output);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    let t = sp / (sp - sc);
                    output.push((prev.0 + t * (cur.0 - prev.0), prev.1 + t * (cur.1 - prev.1)));
                }
                output.push(cur);
            } else if sp >= 0.0 {
                let t = sp / (sp - sc);
                output.push((prev.0 + t * (cur.0 - prev.0), prev.1 + t * (cur.1 - prev.1)));
            }
        }
    }
    output
}

fn ring_area(ring: &[(f64, f64)]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let s: f64 = (0..n)
        .map(|i| {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            p.0 * q.1 - p.1 * q.0
        })
        .sum();
    0.5 * s.abs()
}

fn trap_bounds(t: &RealTrapezoid) -> (f64, f64, f64, f64) {
    (
        t.x_bottom_left.min(t.x_top_left),
        t.y_bottom as f64,
        t.x_bottom_right.max(t.x_top_right),
        t.y_top as f64,
    )
}

fn trapezoid_overlap_area(a: &[RealTrapezoid], b: &[RealTrapezoid]) -> f64 {
    let mut total = 0.0;
    for ta in a {
        let ba = trap_bounds(ta);
        for tb in b {
            let bb = trap_bounds(tb);
            if ba.0 >= bb.2 || bb.0 >= ba.2 || ba.1 >= bb.3 || bb.1 >= ba.3 {
                continue;
            }
            total += ring_area(&clip_convex(&ta.ring(), &tb.ring()));
        }
    }
    total
}

fn shift_real(ts: &mut [RealTrapezoid], v: Point) {
    for t in ts {
        t.y_bottom += v.y;
        t.y_top += v.y;
        t.x_bottom_left += v.x as f64;
        t.x_bottom_right += v.x as f64;
        t.x_top_left += v.x as f64;
        t.x_top_right += v.x as f64;
    }
}

/// Area of `a ∩ (b + shift)` in nm². Exact for rectilinear inputs.
pub fn intersection_area(a: &Polygon, b: &Polygon, shift: Point) -> f64 {
    if !a.bbox().overlaps_interior(&b.bbox().translate(shift)) {
        return 0.0;
    }
    if a.is_rectilinear() && b.is_rectilinear() {
        let ra = decompose_rects(a);
        let rb: Vec<Rect> = decompose_rects(b).iter().map(|r| r.translate(shift)).collect();
        return rect_overlap_area(&ra, &rb) as f64;
    }
    let ta = decompose_real(a);
    let mut tb = decompose_real(b);
    shift_real(&mut tb, shift);
    trapezoid_overlap_area(&ta, &tb)
}

/// Precomputed decomposition for repeated area queries against one polygon.
#[derive(Debug, Clone)]
pub enum Pieces {
    Rects(Vec<Rect>),
    Trapezoids(Vec<RealTrapezoid>),
}

impl Pieces {
    pub fn of(p: &Polygon) -> Self {
        if p.is_rectilinear() {
            Pieces::Rects(decompose_rects(p))
        } else {
            Pieces::Trapezoids(decompose_real(p))
        }
    }

    fn shifted(&self, v: Point) -> Pieces {
        match self {
            Pieces::Rects(r) => Pieces::Rects(r.iter().map(|r| r.translate(v)).collect()),
            Pieces::Trapezoids(t) => {
                let mut t = t.clone();
                shift_real(&mut t, v);
                Pieces::Trapezoids(t)
            }
        }
    }

    fn as_real(&self) -> Vec<RealTrapezoid> {
        match self {
            Pieces::Trapezoids(t) => t.clone(),
            Pieces::Rects(r) => r
                .iter()
                .map(|r| RealTrapezoid {
                    y_bottom: r.min.y,
                    y_top: r.max.y,
                    x_bottom_left: r.min.x as f64,
                    x_bottom_right: r.max.x as f64,
                    x_top_left: r.min.x as f64,
                    x_top_right: r.max.x as f64,
                })
                .collect(),
        }
    }

    /// Overlap area with `other + shift`.
    pub fn overlap_area(&self, other: &Pieces, shift: Point) -> f64 {
        let other = other.shifted(shift);
        match (self, &other) {
            (Pieces::Rects(a), Pieces::Rects(b)) => rect_overlap_area(a, b) as f64,
            _ => trapezoid_overlap_area(&self.as_real(), &other.as_real()),
        }
    }
}

/// Overlap of `a` with `b` shifted over the 3×3 grid {-tol, 0, +tol}².
/// Index 4 is the unshifted overlap.
pub fn shifted_overlap_areas(a: &Polygon, b: &Polygon, tol: i64) -> [f64; 9] {
    let pa = Pieces::of(a);
    let pb = Pieces::of(b);
    let mut out = [0.0; 9];
    for (k, slot) in out.iter_mut().enumerate() {
        let dx = (k % 3) as i64 - 1;
        let dy = (k / 3) as i64 - 1;
        *slot = pa.overlap_area(&pb, Point::new(dx * tol, dy * tol));
    }
    out
}

/// True when the polygon interiors share positive area.
pub fn interiors_intersect(a: &Polygon, b: &Polygon) -> bool {
    if !a.bbox().overlaps_interior(&b.bbox()) {
        return false;
    }
    if a.is_rectilinear() && b.is_rectilinear() {
        return intersection_area(a, b, Point::default()) > 0.0;
    }
    intersection_area(a, b, Point::default()) > AREA_EPSILON
}

/// Overlap between a polygon and a rectangle region.
pub fn rect_intersection_area(p: &Polygon, r: Rect) -> f64 {
    if r.width() == 0 || r.height() == 0 {
        return 0.0;
    }
    intersection_area(p, &Polygon::rect(r), Point::default())
}
