// SPDX-License-Identifier: Apache-2.0

//! Random fixture builders shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qflow_core::gds::{FlatLayout, FlatPolygon};
use qflow_core::geometry::{Point, Polygon, Rect};
use qflow_core::pdk::{Pdk, Purpose};

/// Random simple rectilinear polygon with at most `max_vertices` vertices,
/// coordinates on a 1 nm grid.
pub fn random_rectilinear(rng: &mut ChaCha8Rng, max_vertices: usize) -> Polygon {
    random_rectilinear_on(rng, max_vertices, 1, 2_000)
}

/// A run of columns whose vertical extents overlap their neighbours. Either
/// a histogram on a common base or a free band with independent floor and
/// ceiling. Coordinates are multiples of `unit`; column widths and heights
/// are below `step` units.
pub fn random_rectilinear_on(rng: &mut ChaCha8Rng, max_vertices: usize, unit: i64, step: i64) -> Polygon {
    loop {
        let histogram = rng.gen_bool(0.5);
        let cols = if histogram { rng.gen_range(1..=(max_vertices - 2) / 2) } else { rng.gen_range(1..=max_vertices / 4) };
        let mut xs = vec![rng.gen_range(-2 * step..2 * step)];
        for _ in 0..cols {
            let last = *xs.last().unwrap();
            xs.push(last + rng.gen_range(1..step));
        }
        let mut spans: Vec<(i64, i64)> = Vec::new();
        for _ in 0..cols {
            let span = if histogram {
                (0, rng.gen_range(1..step * 3 / 2))
            } else if let Some(&(plo, phi)) = spans.last() {
                let lo = rng.gen_range(plo - step / 2..phi);
                let hi = rng.gen_range(lo.max(plo) + 1..=phi + step / 2);
                (lo, hi)
            } else {
                let lo = rng.gen_range(-step..step);
                (lo, lo + rng.gen_range(1..step * 3 / 2))
            };
            spans.push(span);
        }
        let mut ring = Vec::new();
        for (c, &(_, hi)) in spans.iter().enumerate() {
            ring.push(Point::new(xs[c] * unit, hi * unit));
            ring.push(Point::new(xs[c + 1] * unit, hi * unit));
        }
        for (c, &(lo, _)) in spans.iter().enumerate().rev() {
            ring.push(Point::new(xs[c + 1] * unit, lo * unit));
            ring.push(Point::new(xs[c] * unit, lo * unit));
        }
        drop_collinear(&mut ring);
        if ring.len() <= max_vertices {
            if let Ok(p) = Polygon::new(ring) {
                return p;
            }
        }
    }
}

fn drop_collinear(ring: &mut Vec<Point>) {
    let mut changed = true;
    while changed && ring.len() > 4 {
        changed = false;
        let n = ring.len();
        for i in 0..n {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            if a == b || (a.x == b.x && b.x == c.x) || (a.y == b.y && b.y == c.y) {
                ring.remove(i);
                changed = true;
                break;
            }
        }
    }
}

/// Small flat layout on the qeda layers: a 1 mm outline plus up to
/// `max_polygons - 1` rectangles and L-shapes packed densely enough that
/// most rules see both passing and failing pairs.
pub fn random_fixture(rng: &mut ChaCha8Rng, pdk: &Pdk, max_polygons: usize) -> FlatLayout {
    let purposes = [
        Purpose::Ground,
        Purpose::CpwConductor,
        Purpose::Wiring,
        Purpose::JjBottom,
        Purpose::JjTop,
        Purpose::JjLead,
        Purpose::AirbridgePad,
        Purpose::AirbridgeSpan,
    ];
    let side = 1_000_000;
    let layer = |p: Purpose| pdk.rules.layer_of(p).expect("qeda maps every purpose");
    let (l, d) = layer(Purpose::ChipOutline);
    let mut polys = vec![FlatPolygon {
        layer: l,
        datatype: d,
        polygon: Polygon::rect(Rect::new(0, 0, side, side)),
        trace: "outline".into(),
    }];
    for i in 0..rng.gen_range(1..max_polygons) {
        let p = purposes[rng.gen_range(0..purposes.len())];
        let (l, d) = layer(p);
        let scale = if matches!(p, Purpose::JjBottom | Purpose::JjTop | Purpose::JjLead) { 400 } else { 40_000 };
        let x = rng.gen_range(150_000..side - 250_000);
        let y = rng.gen_range(150_000..side - 250_000);
        let (w, h) = (rng.gen_range(scale / 20..scale), rng.gen_range(scale / 20..scale));
        let polygon = if rng.gen_bool(0.3) {
            let (cw, ch) = (w / 2 + 1, h / 2 + 1);
            Polygon::new(vec![
                Point::new(x, y),
                Point::new(x + w, y),
                Point::new(x + w, y + ch),
                Point::new(x + cw, y + ch),
                Point::new(x + cw, y + h),
                Point::new(x, y + h),
            ])
            .expect("L-shape is simple")
        } else {
            Polygon::rect(Rect::new(x, y, x + w, y + h))
        };
        polys.push(FlatPolygon { layer: l, datatype: d, polygon, trace: format!("p{i}") });
    }
    FlatLayout::from_polygons(polys)
}
