// SPDX-License-Identifier: Apache-2.0

use super::distance::{point_segment_sq, segment_segment_sq, SqDist};
use super::point::Point;
use super::polygon::Polygon;

fn projection_overlap(a: Point, b: Point, c: Point, d: Point) -> bool {
    let dir = b - a;
    let len2 = dir.norm2();
    let tc = (c - a).dot(dir);
    let td = (d - a).dot(dir);
    len2.min(tc.max(td)) > 0i128.max(tc.min(td))
}

fn keep(best: &mut Option<SqDist>, d: SqDist) {
    if best.map_or(true, |b| d.value() < b.value()) {
        *best = Some(d);
    }
}

/// Minimum interior width over facing edge pairs.
///
/// Two non-adjacent edges face each other when their inward normals point
/// against each other, each lies on the inner side of the other, and their
/// projections overlap with positive length. For rectilinear polygons this is
/// the true minimal interior width. Polygons with no facing pair (triangles)
/// fall back to the smallest vertex-to-opposite-edge altitude.
pub fn min_width(p: &Polygon) -> i64 {
    let v = p.vertices();
    let n = v.len();
    let edge = |i: usize| (v[i], v[(i + 1) % n]);
    let mut best: Option<SqDist> = None;
    for i in 0..n {
        let (a, b) = edge(i);
        let d1 = b - a;
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = edge(j);
            let d2 = d - c;
            if d1.dot(d2) >= 0 {
                continue;
            }
            let s_c = d1.cross(c - a);
            let s_d = d1.cross(d - a);
            let s_a = d2.cross(a - c);
            let s_b = d2.cross(b - c);
            if s_c < 0 || s_d < 0 || s_a < 0 || s_b < 0 || (s_c == 0 && s_d == 0) {
                continue;
            }
            if !projection_overlap(a, b, c, d) || !projection_overlap(c, d, a, b) {
                continue;
            }
            if d1.cross(d2) == 0 {
                keep(&mut best, SqDist { num: s_c * s_c, den: d1.norm2() });
            } else {
                keep(&mut best, segment_segment_sq(a, b, c, d));
            }
        }
    }
    if best.is_none() {
        for (k, &pt) in v.iter().enumerate() {
            for i in 0..n {
                if i == k || (i + 1) % n == k {
                    continue;
                }
                let (a, b) = edge(i);
                let dir = b - a;
                let t = (pt - a).dot(dir);
                if dir.cross(pt - a) > 0 && t > 0 && t < dir.norm2() {
                    keep(&mut best, point_segment_sq(pt, a, b));
                }
            }
        }
    }
    match best {
        Some(d) => d.floor_sqrt(),
        None => {
            let bb = p.bbox();
            bb.width().min(bb.height())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn poly(v: &[(i64, i64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn rectangles() {
        assert_eq!(min_width(&Polygon::rect(Rect::new(0, 0, 5000, 100_000))), 5000);
        assert_eq!(min_width(&Polygon::rect(Rect::new(0, 0, 10_000, 10_000))), 10_000);
    }

    #[test]
    fn l_shape_takes_narrow_arm() {
        // Vertical arm 3 µm wide, horizontal arm 4 µm tall.
        let l = poly(&[(0, 0), (20_000, 0), (20_000, 4000), (3000, 4000), (3000, 20_000), (0, 20_000)]);
        assert_eq!(min_width(&l), 3000);
    }

    #[test]
    fn u_slot_is_not_a_width() {
        // Arms 10 wide separated by a 2-wide exterior slot.
        let u = poly(&[(0, 0), (22, 0), (22, 30), (12, 30), (12, 10), (10, 10), (10, 30), (0, 30)]);
        assert_eq!(min_width(&u), 10);
    }

    #[test]
    fn triangle_uses_altitude() {
        let t = poly(&[(0, 0), (100, 0), (0, 100)]);
        assert_eq!(min_width(&t), 70);
    }

    #[test]
    fn octagon_uses_antiparallel_pairs() {
        let o = poly(&[(30, 0), (70, 0), (100, 30), (100, 70), (70, 100), (30, 100), (0, 70), (0, 30)]);
        // Diagonal facets are 140/sqrt(2) apart.
        assert_eq!(min_width(&o), 98);
    }
}
