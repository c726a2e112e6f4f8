// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::clip::interiors_intersect;
use super::point::{Point, Rect};
use super::polygon::{segments_intersect, Polygon};

/// Result of a boundary-to-boundary distance query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spacing {
    /// Interiors intersect.
    Overlap,
    /// Floor of the Euclidean boundary distance in nm (0 when touching).
    Distance(i64),
}

impl Spacing {
    pub fn distance(self) -> Option<i64> {
        match self {
            Spacing::Distance(d) => Some(d),
            Spacing::Overlap => None,
        }
    }

    /// Touching or overlapping.
    pub fn is_connected(self) -> bool {
        matches!(self, Spacing::Overlap | Spacing::Distance(0))
    }
}

/// Squared distance as an exact fraction `num / den`.
#[derive(Debug, Clone, Copy)]
pub struct SqDist {
    pub num: i128,
    pub den: i128,
}

impl SqDist {
    pub const ZERO: SqDist = SqDist { num: 0, den: 1 };

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// floor(sqrt(num / den)), exact.
    pub fn floor_sqrt(self) -> i64 {
        let mut d = self.value().sqrt().floor() as i128;
        while d > 0 && d * d * self.den > self.num {
            d -= 1;
        }
        while (d + 1) * (d + 1) * self.den <= self.num {
            d += 1;
        }
        d as i64
    }

    fn min(self, o: SqDist) -> SqDist {
        if o.value() < self.value() {
            o
        } else {
            self
        }
    }
}

/// Squared distance from point p to segment ab.
pub fn point_segment_sq(p: Point, a: Point, b: Point) -> SqDist {
    let ab = b - a;
    let ap = p - a;
    let len2 = ab.norm2();
    if len2 == 0 {
        return SqDist { num: ap.norm2(), den: 1 };
    }
    let t = ap.dot(ab);
    if t <= 0 {
        SqDist { num: ap.norm2(), den: 1 }
    } else if t >= len2 {
        SqDist { num: (p - b).norm2(), den: 1 }
    } else {
        let c = ab.cross(ap);
        SqDist { num: c * c, den: len2 }
    }
}

/// Squared distance between closed segments ab and cd.
pub fn segment_segment_sq(a: Point, b: Point, c: Point, d: Point) -> SqDist {
    if segments_intersect(a, b, c, d) {
        return SqDist::ZERO;
    }
    point_segment_sq(a, c, d)
        .min(point_segment_sq(b, c, d))
        .min(point_segment_sq(c, a, b))
        .min(point_segment_sq(d, a, b))
}

fn rect_gap_sq(a: &Rect, b: &Rect) -> i128 {
    let dx = (b.min.x - a.max.x).max(a.min.x - b.max.x).max(0) as i128;
    let dy = (b.min.y - a.max.y).max(a.min.y - b.max.y).max(0) as i128;
    dx * dx + dy * dy
}

/// Minimum squared boundary distance, ignoring interior overlap.
pub fn boundary_distance_sq(a: &Polygon, b: &Polygon) -> SqDist {
    if let (Some(ra), Some(rb)) = (a.as_rect(), b.as_rect()) {
        if !ra.overlaps_interior(&rb) {
            return SqDist { num: rect_gap_sq(&ra, &rb), den: 1 };
        }
    }
    let mut best: Option<SqDist> = None;
    for (p, q) in a.edges() {
        let ea = Rect::from_points([&p, &q]).unwrap();
        for (r, s) in b.edges() {
            if let Some(cur) = best {
                // Skip edge pairs whose bounding boxes are already farther apart.
                let eb = Rect::from_points([&r, &s]).unwrap();
                if rect_gap_sq(&ea, &eb) as f64 >= cur.value() {
                    continue;
                }
            }
            let d = segment_segment_sq(p, q, r, s);
            best = Some(match best {
                Some(cur) => cur.min(d),
                None => d,
            });
            if d.num == 0 {
                return SqDist::ZERO;
            }
        }
    }
    best.unwrap_or(SqDist::ZERO)
}

/// Euclidean boundary spacing between two polygons, or `Overlap` when their
/// interiors intersect (which includes containment).
pub fn min_spacing(a: &Polygon, b: &Polygon) -> Spacing {
    if interiors_intersect(a, b) {
        return Spacing::Overlap;
    }
    Spacing::Distance(boundary_distance_sq(a, b).floor_sqrt())
}
