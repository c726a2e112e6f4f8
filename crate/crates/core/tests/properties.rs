// SPDX-License-Identifier: Apache-2.0

//! Property tests for the module invariants. Structured inputs are drawn
//! from a proptest-chosen seed so failures replay from the seed alone.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qflow_core::chipgen::{generate_chip, ChipSpec};
use qflow_core::drc::{run_drc_with, CandidateSource, DrcOptions};
use qflow_core::gds::{flatten, parse_gds, write_gds, ArraySpec, Cell, CellRef, Element, FlatLayout, FlatPolygon, Layout, Transform};
use qflow_core::geometry::{
    decompose_trapezoids, min_spacing, min_width, sweep_cut_count, EndCap, Point, Polygon, Rect, SpatialIndex,
};
use qflow_core::mdp::{fracture_layer, trapezoid_checksum};
use qflow_core::pdk::{builtin, AlignmentSpec, Lithography, Pdk, Purpose, RuleId, Threshold};
use qflow_core::process::{jj_chain, jj_misalignment_sensitivity, registration_budget, JJParams};
use qflow_core::waferplan::{plan_wafer, plan_wafer_with, DieSpec, PlanOptions, ScribeSpec, WaferSpec};

fn qeda() -> Pdk {
    builtin("qeda").unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ANGLES: [f64; 4] = [0.0, 90.0, 180.0, 270.0];

fn random_transform(r: &mut ChaCha8Rng, spread: i64) -> Transform {
    Transform {
        origin: Point::new(r.gen_range(-spread..spread), r.gen_range(-spread..spread)),
        reflect: r.gen_bool(0.5),
        angle_deg: ANGLES[r.gen_range(0..4)],
        mag: 1.0,
    }
}

/// Acyclic library: cell i may only reference cells with a larger index.
fn random_layout(seed: u64) -> Layout {
    let mut r = rng(seed);
    let n = r.gen_range(1..5);
    let mut layout = Layout::new(format!("LIB{}", r.gen_range(0..100)));
    for i in 0..n {
        let mut c = Cell::new(format!("C{i}"));
        for _ in 0..r.gen_range(0..6) {
            let (l, d) = (r.gen_range(0..64), r.gen_range(0..4));
            match r.gen_range(0..4) {
                0 => {
                    let p = common::random_rectilinear(&mut r, 12);
                    c.push(Element::boundary(l, d, p.vertices().to_vec()));
                }
                1 => {
                    let x = r.gen_range(-5_000..5_000);
                    let y = r.gen_range(-5_000..5_000);
                    c.push(Element::rect(l, d, Rect::new(x, y, x + r.gen_range(1..3_000), y + r.gen_range(1..3_000))));
                }
                2 => {
                    let a = Point::new(r.gen_range(-5_000..5_000), r.gen_range(-5_000..5_000));
                    let b = Point::new(a.x + r.gen_range(100..3_000), a.y);
                    let cpt = Point::new(b.x, b.y + r.gen_range(100..3_000));
                    let cap = [EndCap::Flush, EndCap::Round, EndCap::Extend][r.gen_range(0..3)];
                    c.push(Element::path(l, d, vec![a, b, cpt], 2 * r.gen_range(1..20), cap));
                }
                _ => {
                    let len = r.gen_range(1..12);
                    let text: String = (0..len).map(|_| r.gen_range(b'A'..=b'Z') as char).collect();
                    c.push(Element::text(l, d, Point::new(r.gen_range(-9_000..9_000), 0), text));
                }
            }
        }
        for _ in 0..r.gen_range(0..3) {
            if i + 1 < n {
                let target = format!("C{}", r.gen_range(i + 1..n));
                let t = random_transform(&mut r, 20_000);
                if r.gen_bool(0.3) {
                    let spec = ArraySpec {
                        columns: r.gen_range(1..4),
                        rows: r.gen_range(1..4),
                        col_step: Point::new(r.gen_range(1..10_000), 0),
                        row_step: Point::new(0, r.gen_range(1..10_000)),
                    };
                    c.add_ref(CellRef::array(target, t, spec));
                } else {
                    c.add_ref(CellRef::new(target, t));
                }
            }
        }
        layout.add_cell(c);
    }
    // GDS has no top-cell record, so keep C0 as the only root
    for i in 1..n {
        let name = format!("C{i}");
        if !layout.cells.iter().any(|c| c.references.iter().any(|r| r.target == name)) {
            let j = r.gen_range(0..i);
            let t = random_transform(&mut r, 20_000);
            layout.cells[j].add_ref(CellRef::new(name, t));
        }
    }
    layout.top_cell = "C0".into();
    layout
}

/// Vertex multiset and layer of every flat polygon, order-free.
fn shape_set(f: &FlatLayout) -> Vec<(u16, u16, Vec<(i64, i64)>)> {
    let mut v: Vec<_> = f
        .polygons
        .iter()
        .map(|p| {
            let mut pts: Vec<(i64, i64)> = p.polygon.vertices().iter().map(|q| (q.x, q.y)).collect();
            pts.sort_unstable();
            (p.layer, p.datatype, pts)
        })
        .collect();
    v.sort();
    v
}

fn apply(t: &Transform, p: Point) -> Point {
    let (x, y) = (p.x, if t.reflect { -p.y } else { p.y });
    let (x, y) = match t.angle_deg as i64 {
        0 => (x, y),
        90 => (-y, x),
        180 => (-x, -y),
        _ => (y, -x),
    };
    Point::new(x + t.origin.x, y + t.origin.y)
}

/// Transform equal to applying `inner` and then `outer` (Manhattan, unit magnification).
fn compose(outer: &Transform, inner: &Transform) -> Transform {
    let turn = if outer.reflect { -inner.angle_deg } else { inner.angle_deg };
    Transform {
        origin: apply(outer, inner.origin),
        reflect: outer.reflect != inner.reflect,
        angle_deg: (outer.angle_deg + turn).rem_euclid(360.0),
        mag: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gds_round_trip(seed in any::<u64>()) {
        let l = random_layout(seed);
        let bytes = write_gds(&l).unwrap();
        let back = parse_gds(&bytes).unwrap();
        prop_assert!(back.structurally_equal(&l));
        prop_assert_eq!(write_gds(&back).unwrap(), bytes);
    }

    #[test]
    fn flatten_count_is_sum_over_instances(seed in any::<u64>()) {
        let l = random_layout(seed);
        let f = flatten(&l, &l.top_cell).unwrap();
        // instances of each cell reachable from the top, counting arrays
        fn instances(l: &Layout, cell: &str, k: usize, acc: &mut BTreeMap<String, usize>) {
            *acc.entry(cell.to_string()).or_default() += k;
            for r in &l.cell(cell).unwrap().references {
                instances(l, &r.target, k * r.instance_count(), acc);
            }
        }
        let mut acc = BTreeMap::new();
        instances(&l, &l.top_cell, 1, &mut acc);
        let expected: usize = acc
            .iter()
            .map(|(c, k)| k * l.cell(c).unwrap().elements.iter().filter(|e| !e.is_text()).count())
            .sum();
        prop_assert_eq!(f.polygons.len() + f.rejects.len(), expected);
    }

    #[test]
    fn flatten_conserves_area_for_disjoint_instances(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut leaf = Cell::new("LEAF");
        let mut leaf_area: BTreeMap<(u16, u16), i128> = BTreeMap::new();
        for i in 0..r.gen_range(1..5) {
            let p = common::random_rectilinear(&mut r, 12).translate(Point::new(i * 20_000, 0));
            let key = (r.gen_range(1..3), 0);
            *leaf_area.entry(key).or_default() += p.area2();
            leaf.push(Element::boundary(key.0, key.1, p.vertices().to_vec()));
        }
        // instances on a lattice wide enough that none overlap
        let mut top = Cell::new("TOP");
        let k = r.gen_range(1..6);
        for i in 0..k {
            let mut t = random_transform(&mut r, 1);
            t.origin = Point::new(i as i64 * 1_000_000, r.gen_range(-3..3) * 1_000_000);
            top.add_ref(CellRef::new("LEAF", t));
        }
        let mut l = Layout::new("A");
        l.add_cell(top);
        l.add_cell(leaf);
        l.top_cell = "TOP".into();
        let f = flatten(&l, "TOP").unwrap();
        let mut flat_area: BTreeMap<(u16, u16), i128> = BTreeMap::new();
        for p in &f.polygons {
            *flat_area.entry((p.layer, p.datatype)).or_default() += p.polygon.area2();
        }
        let want: BTreeMap<_, _> = leaf_area.into_iter().map(|(key, a)| (key, a * k as i128)).collect();
        prop_assert_eq!(flat_area, want);
    }

    #[test]
    fn nested_transforms_compose(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut c = Cell::new("C");
        for _ in 0..3 {
            let p = common::random_rectilinear(&mut r, 10);
            c.push(Element::boundary(1, 0, p.vertices().to_vec()));
        }
        let (t1, t2) = (random_transform(&mut r, 50_000), random_transform(&mut r, 50_000));
        let mut nested = Layout::new("N");
        let mut a = Cell::new("A");
        a.add_ref(CellRef::new("B", t1));
        let mut b = Cell::new("B");
        b.add_ref(CellRef::new("C", t2));
        nested.add_cell(a);
        nested.add_cell(b);
        nested.add_cell(c.clone());
        nested.top_cell = "A".into();
        let mut direct = Layout::new("D");
        let mut a = Cell::new("A");
        a.add_ref(CellRef::new("C", compose(&t1, &t2)));
        direct.add_cell(a);
        direct.add_cell(c.clone());
        direct.top_cell = "A".into();
        let (fa, fb) = (flatten(&nested, "A").unwrap(), flatten(&direct, "A").unwrap());
        prop_assert_eq!(shape_set(&fa), shape_set(&fb));
        // and both equal mapping the points by hand
        let by_hand: Vec<_> = {
            let mut v: Vec<_> = c
                .elements
                .iter()
                .map(|e| {
                    let mut pts: Vec<(i64, i64)> =
                        e.points().iter().map(|&p| apply(&t1, apply(&t2, p))).map(|q| (q.x, q.y)).collect();
                    pts.sort_unstable();
                    (1u16, 0u16, pts)
                })
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(shape_set(&fa), by_hand);
    }

    #[test]
    fn spacing_is_symmetric_and_translation_invariant(seed in any::<u64>(), dx in -1_000_000i64..1_000_000, dy in -1_000_000i64..1_000_000) {
        let mut r = rng(seed);
        let a = common::random_rectilinear(&mut r, 16);
        let b = common::random_rectilinear(&mut r, 16).translate(Point::new(r.gen_range(-6_000..6_000), r.gen_range(-6_000..6_000)));
        prop_assert_eq!(min_spacing(&a, &b), min_spacing(&b, &a));
        let v = Point::new(dx, dy);
        prop_assert_eq!(min_spacing(&a, &b), min_spacing(&a.translate(v), &b.translate(v)));
    }

    #[test]
    fn min_width_matches_raster_erosion(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cell = 10;
        let p = common::random_rectilinear_on(&mut r, 20, cell, 12);
        let got = min_width(&p);
        let k = raster_width(&p, cell);
        prop_assert!((got - k * cell).abs() <= cell, "min_width {} vs raster {} cells", got, k);
    }

    #[test]
    fn trapezoids_conserve_area_and_are_disjoint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = common::random_rectilinear(&mut r, 24);
        let traps = decompose_trapezoids(&p);
        let sum: i128 = traps.iter().map(|t| t.area2()).sum();
        prop_assert!((sum - p.area2()).abs() <= 2 * sweep_cut_count(&p) as i128);
        // analytic check: overlapping y-bands must not overlap in x at mid-band
        for (i, a) in traps.iter().enumerate() {
            for b in &traps[i + 1..] {
                let (lo, hi) = (a.y_bottom.max(b.y_bottom), a.y_top.min(b.y_top));
                if lo < hi {
                    let y = (lo + hi) as f64 / 2.0;
                    let span = |t: &qflow_core::geometry::Trapezoid| {
                        let f = (y - t.y_bottom as f64) / (t.y_top - t.y_bottom) as f64;
                        let l = t.x_bottom_left as f64 + f * (t.x_top_left - t.x_bottom_left) as f64;
                        let rr = t.x_bottom_right as f64 + f * (t.x_top_right - t.x_bottom_right) as f64;
                        (l, rr)
                    };
                    let ((al, ar), (bl, br)) = (span(a), span(b));
                    prop_assert!(ar <= bl + 1e-9 || br <= al + 1e-9, "{:?} overlaps {:?}", a, b);
                }
            }
        }
    }

    #[test]
    fn rtree_matches_linear_scan(seed in any::<u64>(), fanout in 2usize..16) {
        let mut r = rng(seed);
        let rects: Vec<Rect> = (0..r.gen_range(0..300))
            .map(|_| {
                let x = r.gen_range(-100_000..100_000);
                let y = r.gen_range(-100_000..100_000);
                Rect::new(x, y, x + r.gen_range(0..20_000), y + r.gen_range(0..20_000))
            })
            .collect();
        let idx = SpatialIndex::with_fanout(rects.iter().copied().enumerate().map(|(i, b)| (b, i)), fanout);
        for _ in 0..20 {
            let x = r.gen_range(-120_000..120_000);
            let y = r.gen_range(-120_000..120_000);
            let q = Rect::new(x, y, x + r.gen_range(0..60_000), y + r.gen_range(0..60_000));
            let mut got = idx.query(&q);
            got.sort_unstable();
            let want: Vec<usize> = (0..rects.len()).filter(|&i| rects[i].intersects(&q)).collect();
            prop_assert_eq!(got, want);
        }
    }
}

/// Raster erosion: the largest k such that every cell of the polygon lies
/// in some k-by-k block of cells entirely inside it.
fn raster_width(p: &Polygon, cell: i64) -> i64 {
    let b = p.bbox();
    let (w, h) = (((b.max.x - b.min.x) / cell) as usize, ((b.max.y - b.min.y) / cell) as usize);
    let inside: Vec<Vec<bool>> = (0..h)
        .map(|j| {
            (0..w)
                .map(|i| {
                    let x = (b.min.x + i as i64 * cell) as f64 + cell as f64 / 2.0;
                    let y = (b.min.y + j as i64 * cell) as f64 + cell as f64 / 2.0;
                    p.contains_f64(x, y)
                })
                .collect()
        })
        .collect();
    let fits = |k: usize| -> bool {
        let mut covered = vec![vec![false; w]; h];
        for j in 0..=h.saturating_sub(k) {
            for i in 0..=w.saturating_sub(k) {
                if j + k <= h && i + k <= w && (j..j + k).all(|y| (i..i + k).all(|x| inside[y][x])) {
                    for row in covered.iter_mut().skip(j).take(k) {
                        for c in row.iter_mut().skip(i).take(k) {
                            *c = true;
                        }
                    }
                }
            }
        }
        (0..h).all(|j| (0..w).all(|i| !inside[j][i] || covered[j][i]))
    };
    let mut k = 1;
    while fits(k + 1) {
        k += 1;
    }
    k as i64
}

fn relaxed(pdk: &Pdk, id: RuleId, step: i64) -> Pdk {
    let mut out = pdk.clone();
    let spec = out.rules.rules.iter_mut().find(|r| r.id == id).unwrap();
    spec.threshold_nm = match (id, spec.threshold_nm) {
        (RuleId::R9, Threshold::Single(v)) => Threshold::Single(v + step),
        (_, Threshold::Single(v)) => Threshold::Single((v - step).max(1)),
        (_, Threshold::Range([lo, hi])) => Threshold::Range([(lo - step).max(1), hi + step]),
    };
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn drc_report_is_independent_of_workers(seed in any::<u64>()) {
        let pdk = qeda();
        let f = common::random_fixture(&mut rng(seed), &pdk, 50);
        let one = run_drc_with(&f, &pdk.rules, DrcOptions { threads: Some(1), ..Default::default() });
        let four = run_drc_with(&f, &pdk.rules, DrcOptions { threads: Some(4), ..Default::default() });
        prop_assert_eq!(one.to_json(), four.to_json());
    }

    #[test]
    fn relaxing_a_threshold_never_adds_violations(seed in any::<u64>(), frac in 1i64..60) {
        let pdk = qeda();
        let f = common::random_fixture(&mut rng(seed), &pdk, 50);
        let base = run_drc_with(&f, &pdk.rules, DrcOptions::default());
        for id in RuleId::ALL {
            let t = pdk.rules.rule(id).unwrap().single();
            let looser = relaxed(&pdk, id, t * frac / 100 + 1);
            let rep = run_drc_with(&f, &looser.rules, DrcOptions::default());
            prop_assert!(rep.count(id) <= base.count(id), "{:?}: {} > {}", id, rep.count(id), base.count(id));
        }
    }

    #[test]
    fn index_and_all_pairs_agree_rule_by_rule(seed in any::<u64>()) {
        let pdk = qeda();
        let f = common::random_fixture(&mut rng(seed), &pdk, 50);
        let a = run_drc_with(&f, &pdk.rules, DrcOptions { candidates: CandidateSource::Index, threads: None });
        let b = run_drc_with(&f, &pdk.rules, DrcOptions { candidates: CandidateSource::AllPairs, threads: None });
        prop_assert_eq!(a.violations, b.violations);
        prop_assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn jj_frequency_scales_with_root_area(a in 1e-4f64..10.0, k in 1e-3f64..1e3, jc in 0.01f64..5.0, ec in 10.0f64..2_000.0) {
        let p = JJParams::new(jc, ec);
        let (f1, fk) = (jj_chain(a, &p).f01_ghz, jj_chain(k * a, &p).f01_ghz);
        prop_assert!(((fk - k.sqrt() * f1) / fk).abs() <= 1e-12);
    }

    #[test]
    fn registration_budget_is_linear(o in -10_000i64..10_000, d in -10_000i64..10_000, sigma in proptest::option::of(1i64..2_000), ebeam in any::<bool>()) {
        let spec = AlignmentSpec {
            layer_pair: (Purpose::Ground, Purpose::Wiring),
            lithography: if ebeam { Lithography::Ebeam } else { Lithography::Optical },
            sigma_align_nm: sigma,
            extra: Default::default(),
        };
        prop_assert_eq!(registration_budget(o + d, &spec).o_min_nm, registration_budget(o, &spec).o_min_nm + d);
    }

    #[test]
    fn sensitivity_zero_iff_overlap_rule_passes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pdk = qeda();
        let bottom = Rect::new(0, 0, r.gen_range(50..600), r.gen_range(500..4_000));
        let x0 = r.gen_range(-300..bottom.max.x - 1);
        let y0 = r.gen_range(-300..bottom.max.y - 1);
        let top = Rect::new(x0, y0, r.gen_range(x0.max(0) + 1..bottom.max.x + 300), r.gen_range(y0.max(0) + 1..bottom.max.y + 300));
        let (pb, pt) = (Polygon::rect(bottom), Polygon::rect(top));
        let tol = pdk.rules.rule(RuleId::R3).unwrap().single();
        let s = jj_misalignment_sensitivity(&pb, &pt, tol).unwrap();
        let layer = |p| pdk.rules.layer_of(p).unwrap();
        let fp = |p: Purpose, polygon: Polygon| FlatPolygon { layer: layer(p).0, datatype: layer(p).1, polygon, trace: format!("{p}") };
        let f = FlatLayout::from_polygons(vec![fp(Purpose::JjBottom, pb), fp(Purpose::JjTop, pt)]);
        let rep = run_drc_with(&f, &pdk.rules, DrcOptions::default());
        prop_assert_eq!(s.max_relative_deviation == 0.0, rep.count(RuleId::R3) == 0, "bottom {:?} top {:?}", bottom, top);
    }
}

fn wafer_case(r: &mut ChaCha8Rng) -> (WaferSpec, DieSpec, ScribeSpec) {
    let diameter = [100.0, 150.0, 200.0, 300.0][r.gen_range(0..4)];
    let w = WaferSpec { diameter_mm: diameter, edge_exclusion_mm: r.gen_range(1..=20) as f64 / 2.0 };
    let d = DieSpec { width_mm: r.gen_range(20..=300) as f64 / 10.0, height_mm: r.gen_range(20..=300) as f64 / 10.0, outline_cell: "D".into() };
    let s = ScribeSpec { lane_width_mm: r.gen_range(0..=10) as f64 / 20.0, pcm_cells: vec![] };
    (w, d, s)
}

/// Integer corner test over every lattice cell, for one grid offset in nm.
fn brute_count(w: &WaferSpec, d: &DieSpec, s: &ScribeSpec, off: [i64; 2]) -> usize {
    let nm = |v: f64| (v * 1e6).round() as i64;
    let r = nm(w.diameter_mm / 2.0 - w.edge_exclusion_mm) as i128;
    let (dw, dh, lane) = (nm(d.width_mm), nm(d.height_mm), nm(s.lane_width_mm));
    let (px, py) = (dw + lane, dh + lane);
    let reach = (r as i64) / px.min(py) + 2;
    let mut n = 0;
    for j in -reach..=reach {
        for k in -reach..=reach {
            let x0 = off[0] + k * px + lane / 2;
            let y0 = off[1] + j * py + lane / 2;
            let ok = [(x0, y0), (x0 + dw, y0), (x0, y0 + dh), (x0 + dw, y0 + dh)]
                .iter()
                .all(|&(x, y)| (x as i128).pow(2) + (y as i128).pow(2) <= r * r);
            n += ok as usize;
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn wafer_plan_matches_offset_scan(seed in any::<u64>()) {
        let (w, d, s) = wafer_case(&mut rng(seed));
        let plan = plan_wafer(&w, &d, &s).unwrap();
        let step = 500_000;
        let mut best = 0;
        let mut ox = 0;
        while ox < plan.pitch_nm[0] {
            let mut oy = 0;
            while oy < plan.pitch_nm[1] {
                best = best.max(brute_count(&w, &d, &s, [ox, oy]));
                oy += step;
            }
            ox += step;
        }
        prop_assert_eq!(plan.die_count, best);
        let r = (plan.usable_radius_mm * 1e6).round() as i128;
        for site in &plan.sites {
            for c in plan.die_rect(site).corners() {
                prop_assert!((c.x as i128).pow(2) + (c.y as i128).pow(2) <= r * r);
            }
        }
    }

    #[test]
    fn less_exclusion_or_narrower_lanes_never_lose_dies(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (w, d, s) = wafer_case(&mut r);
        let centred = PlanOptions { scan: false, ..Default::default() };
        let base = plan_wafer(&w, &d, &s).unwrap().die_count;
        let base_c = plan_wafer_with(&w, &d, &s, centred).unwrap().die_count;
        let w2 = WaferSpec { edge_exclusion_mm: w.edge_exclusion_mm * r.gen_range(0.1..1.0), ..w.clone() };
        prop_assert!(plan_wafer(&w2, &d, &s).unwrap().die_count >= base);
        prop_assert!(plan_wafer_with(&w2, &d, &s, centred).unwrap().die_count >= base_c);
        let s2 = ScribeSpec { lane_width_mm: s.lane_width_mm * r.gen_range(0.0..1.0), ..s.clone() };
        prop_assert!(plan_wafer_with(&w, &d, &s2, centred).unwrap().die_count >= base_c);
        prop_assert!(plan_wafer(&w, &d, &s2).unwrap().die_count >= base);
    }

    #[test]
    fn centred_grid_of_square_dies_has_quarter_turn_symmetry(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (w, mut d, s) = wafer_case(&mut r);
        d.height_mm = d.width_mm;
        let plan = plan_wafer_with(&w, &d, &s, PlanOptions { scan: false, ..Default::default() }).unwrap();
        let rects: BTreeSet<(i64, i64, i64, i64)> =
            plan.sites.iter().map(|st| plan.die_rect(st)).map(|b| (b.min.x, b.min.y, b.max.x, b.max.y)).collect();
        let turned: BTreeSet<(i64, i64, i64, i64)> = rects.iter().map(|&(x0, y0, x1, y1)| (-y1, x0, -y0, x1)).collect();
        prop_assert_eq!(rects, turned);
    }

    #[test]
    fn checksum_ignores_order_and_sees_every_coordinate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = common::random_rectilinear(&mut r, 24);
        let mut traps = decompose_trapezoids(&p);
        let sum = trapezoid_checksum(&traps);
        let mut shuffled = traps.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.gen_range(0..=i));
        }
        prop_assert_eq!(&trapezoid_checksum(&shuffled), &sum);
        let i = r.gen_range(0..traps.len());
        match r.gen_range(0..6) {
            0 => traps[i].y_bottom -= 1,
            1 => traps[i].y_top += 1,
            2 => traps[i].x_bottom_left -= 1,
            3 => traps[i].x_bottom_right += 1,
            4 => traps[i].x_top_left -= 1,
            _ => traps[i].x_top_right += 1,
        }
        prop_assert_ne!(trapezoid_checksum(&traps), sum);
    }

    #[test]
    fn layer_fracture_conserves_area(seed in any::<u64>()) {
        let mut r = rng(seed);
        let polys: Vec<FlatPolygon> = (0..r.gen_range(1..20))
            .map(|i| FlatPolygon {
                layer: 1,
                datatype: 0,
                polygon: common::random_rectilinear(&mut r, 24).translate(Point::new(i * 50_000, 0)),
                trace: format!("p{i}"),
            })
            .collect();
        let cuts: i128 = polys.iter().map(|p| sweep_cut_count(&p.polygon) as i128).sum();
        let area: i128 = polys.iter().map(|p| p.polygon.area2()).sum();
        let set = fracture_layer(&FlatLayout::from_polygons(polys), 1, 0).unwrap();
        let sum: i128 = set.trapezoids.iter().map(|t| t.area2()).sum();
        prop_assert!((sum - area).abs() <= 2 * cuts);
    }

    #[test]
    fn chip_generation_is_a_pure_function(seed in any::<u64>(), n in 1usize..6) {
        let pdk = qeda();
        let spec = ChipSpec { seed, ..ChipSpec::grid(n) };
        let a = write_gds(&generate_chip(&spec, &pdk).unwrap().layout).unwrap();
        let b = write_gds(&generate_chip(&spec, &pdk).unwrap().layout).unwrap();
        prop_assert_eq!(a, b);
    }
}


