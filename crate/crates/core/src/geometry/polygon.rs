// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::point::{orientation, Point, Rect};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolygonError {
    #[error("polygon has {0} distinct vertices, at least 3 required")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

impl PolygonError {
    /// Degenerate shapes (as opposed to self-intersecting ones).
    pub fn is_degenerate(&self) -> bool {
        matches!(self, PolygonError::TooFewVertices(_) | PolygonError::ZeroArea)
    }
}

/// Where a point lies relative to a closed polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A validated simple polygon stored as an open counterclockwise ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = PolygonError;
    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// Remove a closing vertex and consecutive duplicates.
pub fn normalize_ring(points: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Twice the signed area of a ring (positive when counterclockwise).
pub fn signed_area2(ring: &[Point]) -> i128 {
    let n = ring.len();
    (0..n).map(|i| ring[i].cross(ring[(i + 1) % n])).sum()
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test, exact in integer arithmetic.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

/// First pair of non-adjacent intersecting edges, or overlapping adjacent ones.
pub fn find_self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len();
    let bbox: Vec<Rect> = (0..n)
        .map(|i| Rect::from_points([&ring[i], &ring[(i + 1) % n]]).unwrap())
        .collect();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            if !bbox[i].intersects(&bbox[j]) {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges share one vertex; they must not fold back onto each other.
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orientation(p, shared, q) == 0 && (p - shared).dot(q - shared) > 0 {
                    return Some((i, j));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

impl Polygon {
    /// Validate and normalize a ring (closing vertex optional, any orientation).
    pub fn new(points: Vec<Point>) -> Result<Self, PolygonError> {
        let mut ring = normalize_ring(&points);
        if ring.len() < 3 {
            return Err(PolygonError::TooFewVertices(ring.len()));
        }
        let a2 = signed_area2(&ring);
        let collinear = ring.iter().all(|&p| orientation(ring[0], ring[1], p) == 0);
        if collinear {
            return Err(PolygonError::ZeroArea);
        }
        if let Some((i, j)) = find_self_intersection(&ring) {
            return Err(PolygonError::SelfIntersecting(i, j));
        }
        if a2 == 0 {
            return Err(PolygonError::ZeroArea);
        }
        if a2 < 0 {
            ring.reverse();
        }
        Ok(Self { vertices: ring })
    }

    pub fn rect(r: Rect) -> Self {
        Polygon::new(r.corners().to_vec()).expect("rectangle must have positive area")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as (start, end) pairs in ring order.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Twice the area; always positive.
    pub fn area2(&self) -> i128 {
        signed_area2(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.area2() as f64 / 2.0
    }

    pub fn bbox(&self) -> Rect {
        Rect::from_points(&self.vertices).unwrap()
    }

    pub fn is_rectilinear(&self) -> bool {
        self.edges().all(|(a, b)| a.x == b.x || a.y == b.y)
    }

    /// Some(rect) when the polygon is exactly an axis-aligned rectangle.
    pub fn as_rect(&self) -> Option<Rect> {
        let bb = self.bbox();
        (self.is_rectilinear() && bb.area() * 2 == self.area2()).then_some(bb)
    }

    pub fn translate(&self, v: Point) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&p| p + v).collect() }
    }

    /// Crossing-number point location with exact boundary detection.
    pub fn locate(&self, p: Point) -> Location {
        let mut inside = false;
        for (a, b) in self.edges() {
            if orientation(a, b, p) == 0 && on_segment(a, b, p) {
                return Location::Boundary;
            }
            if (a.y > p.y) != (b.y > p.y) {
                // x coordinate of the edge at p.y compared without division.
                let lhs = (p.x - a.x) as i128 * (b.y - a.y) as i128;
                let rhs = (b.x - a.x) as i128 * (p.y - a.y) as i128;
                let crosses = if b.y > a.y { lhs < rhs } else { lhs > rhs };
                if crosses {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// Point-in-polygon test for real coordinates (boundary counted as outside).
    pub fn contains_f64(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            let (ax, ay, bx, by) = (a.x as f64, a.y as f64, b.x as f64, b.y as f64);
            if (ay > y) != (by > y) {
                let xi = ax + (y - ay) * (bx - ax) / (by - ay);
                if x < xi {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(i64, i64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let p = Polygon::new(pts(&[(0, 0), (0, 10), (10, 10), (10, 0), (0, 0)])).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.area2(), 200);
        assert_eq!(p.as_rect(), Some(Rect::new(0, 0, 10, 10)));
    }

    #[test]
    fn bow_tie_is_rejected() {
        let err = Polygon::new(pts(&[(0, 0), (10, 10), (10, 0), (0, 10)])).unwrap_err();
        assert!(matches!(err, PolygonError::SelfIntersecting(..)));
        assert!(!err.is_degenerate());
    }

    #[test]
    fn degenerate_rings() {
        assert_eq!(Polygon::new(pts(&[(0, 0), (5, 5), (0, 0)])), Err(PolygonError::TooFewVertices(2)));
        assert_eq!(Polygon::new(pts(&[(0, 0), (5, 5), (10, 10)])), Err(PolygonError::ZeroArea));
    }

    #[test]
    fn spike_is_self_intersecting() {
        let r = Polygon::new(pts(&[(0, 0), (10, 0), (10, 10), (10, 20), (10, 5), (0, 10)]));
        assert!(r.is_err());
    }

    #[test]
    fn locate_points() {
        let p = Polygon::rect(Rect::new(0, 0, 10, 10));
        assert_eq!(p.locate(Point::new(5, 5)), Location::Inside);
        assert_eq!(p.locate(Point::new(10, 5)), Location::Boundary);
        assert_eq!(p.locate(Point::new(0, 0)), Location::Boundary);
        assert_eq!(p.locate(Point::new(11, 5)), Location::Outside);
        let l = Polygon::new(pts(&[(0, 0), (20, 0), (20, 10), (10, 10), (10, 20), (0, 20)])).unwrap();
        assert_eq!(l.locate(Point::new(15, 15)), Location::Outside);
        assert_eq!(l.locate(Point::new(5, 15)), Location::Inside);
    }
}
