// SPDX-License-Identifier: Apache-2.0

//! Ground plane as disjoint rectangles: each block minus the keepouts.

use crate::geometry::Rect;

/// `block` minus the union of `keepouts`, as horizontal bands whose
/// identical x-intervals are merged across consecutive bands.
pub fn subtract_rects(block: Rect, keepouts: &[Rect]) -> Vec<Rect> {
    let clipped: Vec<Rect> = keepouts
        .iter()
        .filter_map(|k| k.intersection(&block))
        .filter(|k| k.width() > 0 && k.height() > 0)
        .collect();
    let mut ys: Vec<i64> = vec![block.min.y, block.max.y];
    for k in &clipped {
        ys.push(k.min.y);
        ys.push(k.max.y);
    }
    ys.sort_unstable();
    ys.dedup();

    let mut out = Vec::new();
    // open rectangles: (x0, x1, y_start)
    let mut open: Vec<(i64, i64, i64)> = Vec::new();
    for w in ys.windows(2) {
        let (ya, yb) = (w[0], w[1]);
        let mut blocked: Vec<(i64, i64)> = clipped
            .iter()
            .filter(|k| k.min.y < yb && k.max.y > ya)
            .map(|k| (k.min.x, k.max.x))
            .collect();
        blocked.sort_unstable();
        let mut free = Vec::new();
        let mut cur = block.min.x;
        for (x0, x1) in blocked {
            if x0 > cur {
                free.push((cur, x0));
            }
            cur = cur.max(x1);
        }
        if cur < block.max.x {
            free.push((cur, block.max.x));
        }
        let mut next = Vec::new();
        for &(x0, x1, y0) in &open {
            if !free.contains(&(x0, x1)) {
                out.push(Rect::new(x0, y0, x1, ya));
            }
        }
        for (x0, x1) in free {
            let y0 = open.iter().find(|o| o.0 == x0 && o.1 == x1).map_or(ya, |o| o.2);
            next.push((x0, x1, y0));
        }
        open = next;
    }
    let top = block.max.y;
    out.extend(open.into_iter().map(|(x0, x1, y0)| Rect::new(x0, y0, x1, top)));
    out.sort_by_key(|r| (r.min.y, r.min.x));
    out
}

/// Ground over `region` split at the given cut lines, minus keepouts.
pub fn ground_rects(region: Rect, x_cuts: &[i64], y_cuts: &[i64], keepouts: &[Rect]) -> Vec<Rect> {
    let edges = |lo: i64, hi: i64, cuts: &[i64]| {
        let mut v: Vec<i64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
        v.push(lo);
        v.push(hi);
        v.sort_unstable();
        v.dedup();
        v
    };
    let xs = edges(region.min.x, region.max.x, x_cuts);
    let ys = edges(region.min.y, region.max.y, y_cuts);
    let mut out = Vec::new();
    for wy in ys.windows(2) {
        for wx in xs.windows(2) {
            let block = Rect::new(wx[0], wy[0], wx[1], wy[1]);
            let local: Vec<Rect> = keepouts.iter().copied().filter(|k| k.overlaps_interior(&block)).collect();
            out.extend(subtract_rects(block, &local));
        }
    }
    out
}
