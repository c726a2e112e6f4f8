// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::point::Point;
use super::polygon::{Polygon, PolygonError};

/// Default polygonization of full circles.
pub const CIRCLE_SEGMENTS: usize = 16;

/// Path end treatment (GDSII PATHTYPE 0, 1 and 2).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCap {
    #[default]
    Flush,
    Round,
    /// Square end extended by half the width.
    Extend,
}

impl EndCap {
    pub fn from_pathtype(t: i16) -> Option<Self> {
        match t {
            0 => Some(EndCap::Flush),
            1 => Some(EndCap::Round),
            2 => Some(EndCap::Extend),
            _ => None,
        }
    }

    pub fn pathtype(self) -> i16 {
        match self {
            EndCap::Flush => 0,
            EndCap::Round => 1,
            EndCap::Extend => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("path width must be positive, got {0}")]
    NonPositiveWidth(i64),
    #[error("path needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("path segment {0} has zero length")]
    ZeroLengthSegment(usize),
    #[error("path outline is not a simple polygon ({source}); flagged for review")]
    SelfOverlap { ring: Vec<Point>, source: PolygonError },
}

type V = (f64, f64);

fn unit(a: Point, b: Point) -> V {
    let (dx, dy) = ((b.x - a.x) as f64, (b.y - a.y) as f64);
    let l = dx.hypot(dy);
    (dx / l, dy / l)
}

fn at(p: Point, v: V, s: f64) -> V {
    (p.x as f64 + v.0 * s, p.y as f64 + v.1 * s)
}

fn snap(v: V) -> Point {
    Point::new(v.0.round() as i64, v.1.round() as i64)
}

/// Points of the semicircle at `center` turning counterclockwise from direction `from` to `-from`.
fn arc(center: Point, from: V, hw: f64, segments: usize) -> Vec<V> {
    let steps = segments / 2;
    let start = from.1.atan2(from.0);
    (0..=steps)
        .map(|k| {
            let phi = start + std::f64::consts::PI * k as f64 / steps as f64;
            (center.x as f64 + hw * phi.cos(), center.y as f64 + hw * phi.sin())
        })
        .collect()
}

/// Offset points for one side at interior vertex `p`; `side` is +1 (left) or -1.
fn join(p: Point, u0: V, u1: V, hw: f64, side: f64, width: f64) -> Vec<V> {
    let n0 = (-u0.1 * side, u0.0 * side);
    let n1 = (-u1.1 * side, u1.0 * side);
    let cross = u0.0 * u1.1 - u0.1 * u1.0;
    let dot = u0.0 * u1.0 + u0.1 * u1.1;
    if cross.abs() < 1e-12 && dot > 0.0 {
        return vec![at(p, n0, hw)];
    }
    let m = (n0.0 + n1.0, n0.1 + n1.1);
    let ml = m.0.hypot(m.1);
    if ml > 1e-12 {
        let mhat = (m.0 / ml, m.1 / ml);
        let cos_half = mhat.0 * n1.0 + mhat.1 * n1.1;
        let miter = hw / cos_half;
        let inner = cross * side > 0.0;
        if cos_half > 0.0 && (inner || miter <= 2.0 * width) {
            return vec![at(p, mhat, miter)];
        }
    }
    vec![at(p, n0, hw), at(p, n1, hw)]
}

/// Outline of a path of the given width around `centerline`.
///
/// Bends use miter joins; an outer miter reaching farther than twice the width
/// from the centerline vertex is beveled instead. Round caps use half of a
/// `circle_segments`-gon.
pub fn path_to_polygon_with(
    centerline: &[Point],
    width: i64,
    endcap: EndCap,
    circle_segments: usize,
) -> Result<Polygon, PathError> {
    if width <= 0 {
        return Err(PathError::NonPositiveWidth(width));
    }
    if centerline.len() < 2 {
        return Err(PathError::TooFewPoints(centerline.len()));
    }
    if let Some(i) = centerline.windows(2).position(|w| w[0] == w[1]) {
        return Err(PathError::ZeroLengthSegment(i));
    }
    let hw = width as f64 / 2.0;
    let n = centerline.len();
    let dirs: Vec<V> = centerline.windows(2).map(|w| unit(w[0], w[1])).collect();
    let ext = if endcap == EndCap::Extend { hw } else { 0.0 };
    let first = centerline[0];
    let last = centerline[n - 1];
    let (u_first, u_last) = (dirs[0], dirs[n - 2]);
    let start = at(first, u_first, -ext);
    let end = at(last, u_last, ext);
    let left_n = |u: V| (-u.1, u.0);

    let mut left: Vec<V> = vec![(start.0 + left_n(u_first).0 * hw, start.1 + left_n(u_first).1 * hw)];
    let mut right: Vec<V> = vec![(start.0 - left_n(u_first).0 * hw, start.1 - left_n(u_first).1 * hw)];
    for i in 1..n - 1 {
        left.extend(join(centerline[i], dirs[i - 1], dirs[i], hw, 1.0, width as f64));
        right.extend(join(centerline[i], dirs[i - 1], dirs[i], hw, -1.0, width as f64));
    }
    left.push((end.0 + left_n(u_last).0 * hw, end.1 + left_n(u_last).1 * hw));
    right.push((end.0 - left_n(u_last).0 * hw, end.1 - left_n(u_last).1 * hw));

    // Counterclockwise: right side forward, end cap, left side backward, start cap.
    let mut ring: Vec<V> = right.clone();
    let inner = circle_segments / 2 - 1;
    if endcap == EndCap::Round {
        let neg = (-left_n(u_last).0, -left_n(u_last).1);
        ring.extend(arc(last, neg, hw, circle_segments).into_iter().skip(1).take(inner));
    }
    ring.extend(left.iter().rev());
    if endcap == EndCap::Round {
        ring.extend(arc(first, left_n(u_first), hw, circle_segments).into_iter().skip(1).take(inner));
    }
    let pts: Vec<Point> = ring.into_iter().map(snap).collect();
    Polygon::new(pts.clone()).map_err(|source| PathError::SelfOverlap { ring: pts, source })
}

pub fn path_to_polygon(centerline: &[Point], width: i64, endcap: EndCap) -> Result<Polygon, PathError> {
    path_to_polygon_with(centerline, width, endcap, CIRCLE_SEGMENTS)
}

/// Closed polygon approximating a circle.
pub fn circle(center: Point, radius: i64, segments: usize) -> Polygon {
    let pts = (0..segments)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
            snap((center.x as f64 + radius as f64 * phi.cos(), center.y as f64 + radius as f64 * phi.sin()))
        })
        .collect();
    Polygon::new(pts).expect("circle must be a valid polygon")
}
