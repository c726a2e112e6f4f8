// SPDX-License-Identifier: Apache-2.0

//! Ground-plane continuity: islands and unbridged slots.

use std::collections::BTreeMap;

use crate::geometry::{min_spacing, rect_intersection_area, Rect};
use crate::pdk::{Purpose, RuleSpec};

use super::rules::violation;
use super::{Ctx, RuleOutcome};

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub(crate) fn check(ctx: &Ctx, spec: &RuleSpec) -> RuleOutcome {
    let mut out = RuleOutcome::new();
    islands(ctx, spec, &mut out);
    slots(ctx, spec, &mut out);
    out
}

/// Connected components of the ground layer, largest first (ties by lowest id).
pub(crate) fn ground_components(ctx: &Ctx) -> (Vec<Vec<usize>>, u64) {
    let ids = ctx.ids(Purpose::Ground);
    let local: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut dsu = Dsu::new(ids.len());
    let pairs = ctx.pairs(Purpose::Ground, Purpose::Ground, 0);
    let examined = pairs.len() as u64;
    for (a, b) in pairs {
        if min_spacing(&ctx.poly(a).polygon, &ctx.poly(b).polygon).is_connected() {
            dsu.union(local[&a], local[&b]);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        groups.entry(dsu.find(i)).or_default().push(id);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    (comps, examined)
}

fn islands(ctx: &Ctx, spec: &RuleSpec, out: &mut RuleOutcome) {
    let (comps, examined) = ground_components(ctx);
    out.pairs += examined;
    out.checks += comps.len() as u64;
    for comp in comps.iter().skip(1) {
        let bbox = comp.iter().map(|&id| ctx.bbox(id)).reduce(|a, b| a.union(&b)).expect("non-empty component");
        let traces = comp.iter().map(|&id| ctx.poly(id).trace.clone()).collect();
        out.violations.push(violation(
            spec.id,
            bbox,
            0,
            1,
            "count",
            traces,
            format!("ground island of {} polygon(s) not connected to the main ground plane", comp.len()),
        ));
    }
}

type Intervals = Vec<(i64, i64)>;

fn merge(mut v: Intervals) -> Intervals {
    v.sort_unstable();
    let mut out: Intervals = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// `a \ b` for merged, sorted interval lists.
fn subtract(a: &Intervals, b: &Intervals) -> Intervals {
    let mut out = Vec::new();
    for &(lo, hi) in a {
        let mut cur = lo;
        for &(blo, bhi) in b {
            if bhi <= cur || blo >= hi {
                continue;
            }
            if blo > cur {
                out.push((cur, blo));
            }
            cur = cur.max(bhi);
            if cur >= hi {
                break;
            }
        }
        if cur < hi {
            out.push((cur, hi));
        }
    }
    out
}

/// Boundary runs of the ground union on one axis.
/// `low` faces towards increasing coordinate with material below it,
/// `high` faces towards decreasing coordinate with material above it.
struct Runs {
    low: BTreeMap<i64, Intervals>,
    high: BTreeMap<i64, Intervals>,
}

fn boundary_runs(ctx: &Ctx, horizontal: bool) -> Runs {
    // Per coordinate: edges with material on the high side, and on the low side.
    let mut above: BTreeMap<i64, Intervals> = BTreeMap::new();
    let mut below: BTreeMap<i64, Intervals> = BTreeMap::new();
    for &id in ctx.ids(Purpose::Ground) {
        for (a, b) in ctx.poly(id).polygon.edges() {
            let (c, s0, s1, forward) = if horizontal {
                if a.y != b.y || a.x == b.x {
                    continue;
                }
                (a.y, a.x, b.x, b.x > a.x)
            } else {
                if a.x != b.x || a.y == b.y {
                    continue;
                }
                // CCW: moving +y keeps material on the -x side.
                (a.x, a.y, b.y, b.y < a.y)
            };
            let iv = (s0.min(s1), s0.max(s1));
            if forward {
                above.entry(c).or_default().push(iv);
            } else {
                below.entry(c).or_default().push(iv);
            }
        }
    }
    let coords: std::collections::BTreeSet<i64> = above.keys().chain(below.keys()).copied().collect();
    let mut runs = Runs { low: BTreeMap::new(), high: BTreeMap::new() };
    for c in coords {
        let a = merge(above.get(&c).cloned().unwrap_or_default());
        let b = merge(below.get(&c).cloned().unwrap_or_default());
        let high = subtract(&a, &b);
        let low = subtract(&b, &a);
        if !high.is_empty() {
            runs.high.insert(c, high);
        }
        if !low.is_empty() {
            runs.low.insert(c, low);
        }
    }
    runs
}

fn slots(ctx: &Ctx, spec: &RuleSpec, out: &mut RuleOutcome) {
    let t = spec.single();
    let Some(max_w) = spec.slot_max_nm else { return };
    let span_purpose = spec.purposes.iter().copied().find(|&p| p != Purpose::Ground);
    for horizontal in [true, false] {
        let runs = boundary_runs(ctx, horizontal);
        for (&c1, lows) in &runs.low {
            for (&c2, highs) in runs.high.range(c1 + 1..=c1 + max_w) {
                for &(l0, l1) in lows {
                    for &(h0, h1) in highs {
                        let (s0, s1) = (l0.max(h0), l1.min(h1));
                        if s1 - s0 <= t {
                            continue;
                        }
                        let region = if horizontal {
                            Rect::new(s0, c1, s1, c2)
                        } else {
                            Rect::new(c1, s0, c2, s1)
                        };
                        let ground = ctx.query(Purpose::Ground, &region);
                        if ground.iter().any(|&g| rect_intersection_area(&ctx.poly(g).polygon, region) > 0.0) {
                            continue;
                        }
                        out.checks += 1;
                        let bridged = span_purpose.is_some_and(|sp| {
                            ctx.query(sp, &region).iter().any(|&s| rect_intersection_area(&ctx.poly(s).polygon, region) > 0.0)
                        });
                        if bridged {
                            continue;
                        }
                        let len = s1 - s0;
                        let subjects = ground
                            .iter()
                            .filter(|&&g| ctx.bbox(g).intersects(&region))
                            .map(|&g| ctx.poly(g).trace.clone())
                            .collect();
                        out.violations.push(violation(
                            spec.id,
                            region,
                            len,
                            t,
                            "nm",
                            subjects,
                            format!("ground slot {len} nm long and {} nm wide has no airbridge", c2 - c1),
                        ));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_subtraction() {
        let a = merge(vec![(0, 10), (5, 20), (30, 40)]);
        assert_eq!(a, vec![(0, 20), (30, 40)]);
        let b = merge(vec![(3, 6), (15, 35)]);
        assert_eq!(subtract(&a, &b), vec![(0, 3), (6, 15), (35, 40)]);
        assert_eq!(subtract(&b, &a), vec![(20, 30)]);
    }
}
