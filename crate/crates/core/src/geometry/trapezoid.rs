// SPDX-License-Identifier: Apache-2.0

//! Horizontal-sweep trapezoid decomposition.
//!
//! The polygon is cut at every distinct vertex y. Inside each slab the
//! crossing edges are sorted by x and paired left/right; consecutive slab
//! pieces bounded by the same pair of polygon edges are merged back into a
//! single trapezoid. Cut-line x values are rational; the integer output
//! rounds them to the nearest grid point, the real-valued output keeps them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::point::{Point, Rect};
use super::polygon::Polygon;

/// Trapezoid with horizontal top and bottom edges, integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Trapezoid {
    pub y_bottom: i64,
    pub y_top: i64,
    pub x_bottom_left: i64,
    pub x_bottom_right: i64,
    pub x_top_left: i64,
    pub x_top_right: i64,
}

impl Trapezoid {
    pub fn from_rect(r: Rect) -> Self {
        Self {
            y_bottom: r.min.y,
            y_top: r.max.y,
            x_bottom_left: r.min.x,
            x_bottom_right: r.max.x,
            x_top_left: r.min.x,
            x_top_right: r.max.x,
        }
    }

    /// Twice the area, exact.
    pub fn area2(&self) -> i128 {
        let widths = (self.x_bottom_right - self.x_bottom_left) + (self.x_top_right - self.x_top_left);
        widths as i128 * (self.y_top - self.y_bottom) as i128
    }

    pub fn is_valid(&self) -> bool {
        self.y_top > self.y_bottom
            && self.x_bottom_left <= self.x_bottom_right
            && self.x_top_left <= self.x_top_right
            && self.area2() > 0
    }

    pub fn is_rectangle(&self) -> bool {
        self.x_bottom_left == self.x_top_left && self.x_bottom_right == self.x_top_right
    }

    pub fn bbox(&self) -> Rect {
        Rect::new(
            self.x_bottom_left.min(self.x_top_left),
            self.y_bottom,
            self.x_bottom_right.max(self.x_top_right),
            self.y_top,
        )
    }

    pub fn translate(&self, v: Point) -> Trapezoid {
        Trapezoid {
            y_bottom: self.y_bottom + v.y,
            y_top: self.y_top + v.y,
            x_bottom_left: self.x_bottom_left + v.x,
            x_bottom_right: self.x_bottom_right + v.x,
            x_top_left: self.x_top_left + v.x,
            x_top_right: self.x_top_right + v.x,
        }
    }

    fn bounds_at(&self, y: f64) -> (f64, f64) {
        let t = (y - self.y_bottom as f64) / (self.y_top - self.y_bottom) as f64;
        let l = self.x_bottom_left as f64 + t * (self.x_top_left - self.x_bottom_left) as f64;
        let r = self.x_bottom_right as f64 + t * (self.x_top_right - self.x_bottom_right) as f64;
        (l, r)
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, x: f64, y: f64) -> bool {
        if y <= self.y_bottom as f64 || y >= self.y_top as f64 {
            return false;
        }
        let (l, r) = self.bounds_at(y);
        x > l && x < r
    }

    /// Closed membership with a small tolerance.
    pub fn contains_closed(&self, x: f64, y: f64, eps: f64) -> bool {
        if y < self.y_bottom as f64 - eps || y > self.y_top as f64 + eps {
            return false;
        }
        let (l, r) = self.bounds_at(y.clamp(self.y_bottom as f64, self.y_top as f64));
        x >= l - eps && x <= r + eps
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_bottom_left, self.y_bottom),
            Point::new(self.x_bottom_right, self.y_bottom),
            Point::new(self.x_top_right, self.y_top),
            Point::new(self.x_top_left, self.y_top),
        ]
    }
}

/// Trapezoid with exact (real) cut-line abscissae.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTrapezoid {
    pub y_bottom: i64,
    pub y_top: i64,
    pub x_bottom_left: f64,
    pub x_bottom_right: f64,
    pub x_top_left: f64,
    pub x_top_right: f64,
}

impl RealTrapezoid {
    pub fn area(&self) -> f64 {
        0.5 * ((self.x_bottom_right - self.x_bottom_left) + (self.x_top_right - self.x_top_left))
            * (self.y_top - self.y_bottom) as f64
    }

    /// Counterclockwise vertex list (may contain a repeated vertex for triangles).
    pub fn ring(&self) -> [(f64, f64); 4] {
        let (yb, yt) = (self.y_bottom as f64, self.y_top as f64);
        [
            (self.x_bottom_left, yb),
            (self.x_bottom_right, yb),
            (self.x_top_right, yt),
            (self.x_top_left, yt),
        ]
    }
}

/// Rational abscissa of an edge at height y: numerator / denominator with den > 0.
fn x_at(a: Point, b: Point, y: i64) -> (i128, i128) {
    let dy = (b.y - a.y) as i128;
    let num = a.x as i128 * dy + (y - a.y) as i128 * (b.x - a.x) as i128;
    if dy < 0 {
        (-num, -dy)
    } else {
        (num, dy)
    }
}

fn round_rational(num: i128, den: i128) -> i64 {
    (2 * num + den).div_euclid(2 * den) as i64
}

struct Piece {
    y_bottom: i64,
    y_top: i64,
    left: usize,
    right: usize,
}

fn sweep(poly: &Polygon) -> Vec<Piece> {
    let v = poly.vertices();
    let n = v.len();
    let mut ys: Vec<i64> = v.iter().map(|p| p.y).collect();
    ys.sort_unstable();
    ys.dedup();

    // Non-horizontal edges sorted by lower y for an incremental active set.
    let mut edges: Vec<usize> = (0..n).filter(|&i| v[i].y != v[(i + 1) % n].y).collect();
    edges.sort_by_key(|&i| v[i].y.min(v[(i + 1) % n].y));
    let lo = |i: usize| v[i].y.min(v[(i + 1) % n].y);
    let hi = |i: usize| v[i].y.max(v[(i + 1) % n].y);

    let mut pieces: Vec<Piece> = Vec::new();
    let mut open: HashMap<(usize, usize), usize> = HashMap::new();
    let mut active: Vec<usize> = Vec::new();
    let mut next_edge = 0;
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        active.retain(|&e| hi(e) > y0);
        while next_edge < edges.len() && lo(edges[next_edge]) <= y0 {
            if hi(edges[next_edge]) > y0 {
                active.push(edges[next_edge]);
            }
            next_edge += 1;
        }
        let mut keyed: Vec<(f64, usize)> = active
            .iter()
            .map(|&e| {
                let (a, b) = (v[e], v[(e + 1) % n]);
                let (n0, d0) = x_at(a, b, y0);
                let (n1, d1) = x_at(a, b, y1);
                (n0 as f64 / d0 as f64 + n1 as f64 / d1 as f64, e)
            })
            .collect();
        keyed.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let mut next_open = HashMap::new();
        for pair in keyed.chunks_exact(2) {
            let key = (pair[0].1, pair[1].1);
            match open.get(&key) {
                Some(&idx) if pieces[idx].y_top == y0 => {
                    pieces[idx].y_top = y1;
                    next_open.insert(key, idx);
                }
                _ => {
                    pieces.push(Piece { y_bottom: y0, y_top: y1, left: key.0, right: key.1 });
                    next_open.insert(key, pieces.len() - 1);
                }
            }
        }
        open = next_open;
    }
    pieces
}

/// Number of interior sweep cut lines (distinct vertex y values minus the two extremes).
pub fn sweep_cut_count(poly: &Polygon) -> usize {
    let mut ys: Vec<i64> = poly.vertices().iter().map(|p| p.y).collect();
    ys.sort_unstable();
    ys.dedup();
    ys.len().saturating_sub(2)
}

/// Decompose into grid-snapped trapezoids. Zero-area slivers produced by
/// rounding are dropped.
pub fn decompose_trapezoids(poly: &Polygon) -> Vec<Trapezoid> {
    let v = poly.vertices();
    let n = v.len();
    let edge = |e: usize| (v[e], v[(e + 1) % n]);
    sweep(poly)
        .into_iter()
        .map(|p| {
            let (la, lb) = edge(p.left);
            let (ra, rb) = edge(p.right);
            let r = |(num, den): (i128, i128)| round_rational(num, den);
            Trapezoid {
                y_bottom: p.y_bottom,
                y_top: p.y_top,
                x_bottom_left: r(x_at(la, lb, p.y_bottom)),
                x_bottom_right: r(x_at(ra, rb, p.y_bottom)),
                x_top_left: r(x_at(la, lb, p.y_top)),
                x_top_right: r(x_at(ra, rb, p.y_top)),
            }
        })
        .filter(|t| t.is_valid())
        .collect()
}

/// Decompose without snapping cut-line abscissae.
pub fn decompose_real(poly: &Polygon) -> Vec<RealTrapezoid> {
    let v = poly.vertices();
    let n = v.len();
    let edge = |e: usize| (v[e], v[(e + 1) % n]);
    sweep(poly)
        .into_iter()
        .map(|p| {
            let (la, lb) = edge(p.left);
            let (ra, rb) = edge(p.right);
            let f = |(num, den): (i128, i128)| num as f64 / den as f64;
            RealTrapezoid {
                y_bottom: p.y_bottom,
                y_top: p.y_top,
                x_bottom_left: f(x_at(la, lb, p.y_bottom)),
                x_bottom_right: f(x_at(ra, rb, p.y_bottom)),
                x_top_left: f(x_at(la, lb, p.y_top)),
                x_top_right: f(x_at(ra, rb, p.y_top)),
            }
        })
        .collect()
}

/// Rectangle decomposition of a rectilinear polygon (each trapezoid has vertical sides).
pub fn decompose_rects(poly: &Polygon) -> Vec<Rect> {
    debug_assert!(poly.is_rectilinear());
    decompose_trapezoids(poly)
        .into_iter()
        .map(|t| Rect::new(t.x_bottom_left, t.y_bottom, t.x_bottom_right, t.y_top))
        .collect()
}
