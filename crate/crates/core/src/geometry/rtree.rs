// SPDX-License-Identifier: Apache-2.0

//! Static R-tree bulk-loaded with Sort-Tile-Recursive packing.

use std::ops::Range;

use super::point::Rect;

pub const DEFAULT_FANOUT: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    bbox: Rect,
    children: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    /// Leaf entries in packed order: (bbox, caller id).
    items: Vec<(Rect, usize)>,
    /// levels[0] groups items; levels[k] groups levels[k-1]. Last level is the root.
    levels: Vec<Vec<Node>>,
    fanout: usize,
}

fn bbox_of<'a>(rects: impl Iterator<Item = &'a Rect>) -> Rect {
    rects.copied().reduce(|a, b| a.union(&b)).expect("non-empty node")
}

/// Orders `entries` into STR tiles and returns the group ranges.
fn str_pack<T>(entries: &mut [T], fanout: usize, key: impl Fn(&T) -> Rect) -> Vec<Range<usize>> {
    let n = entries.len();
    if n == 0 {
        return Vec::new();
    }
    let groups = n.div_ceil(fanout);
    let slices = (groups as f64).sqrt().ceil() as usize;
    let slice_len = slices * fanout;
    entries.sort_by_key(|e| {
        let c = key(e).center();
        (c.x, c.y)
    });
    for chunk in entries.chunks_mut(slice_len) {
        chunk.sort_by_key(|e| {
            let c = key(e).center();
            (c.y, c.x)
        });
    }
    let mut out = Vec::with_capacity(groups);
    let mut start = 0;
    while start < n {
        let slice_end = (start / slice_len + 1) * slice_len;
        let end = (start + fanout).min(slice_end).min(n);
        out.push(start..end);
        start = end;
    }
    out
}

impl SpatialIndex {
    pub fn new(entries: impl IntoIterator<Item = (Rect, usize)>) -> Self {
        Self::with_fanout(entries, DEFAULT_FANOUT)
    }

    pub fn with_fanout(entries: impl IntoIterator<Item = (Rect, usize)>, fanout: usize) -> Self {
        let fanout = fanout.max(2);
        let mut items: Vec<(Rect, usize)> = entries.into_iter().collect();
        let mut levels = Vec::new();
        let ranges = str_pack(&mut items, fanout, |e| e.0);
        let mut level: Vec<Node> = ranges
            .into_iter()
            .map(|r| Node { bbox: bbox_of(items[r.clone()].iter().map(|e| &e.0)), children: r })
            .collect();
        while level.len() > 1 {
            // Reorder this level before building its parents; children ranges stay valid.
            let ranges = str_pack(&mut level, fanout, |n| n.bbox);
            let parents: Vec<Node> = ranges
                .into_iter()
                .map(|r| Node { bbox: bbox_of(level[r.clone()].iter().map(|n| &n.bbox)), children: r })
                .collect();
            levels.push(level);
            level = parents;
        }
        if !level.is_empty() {
            levels.push(level);
        }
        SpatialIndex { items, levels, fanout }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Ids whose boxes intersect `q` (closed), ascending.
    pub fn query(&self, q: &Rect) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(q, |id| out.push(id));
        out.sort_unstable();
        out
    }

    /// Calls `f` for every id whose box intersects `q`, in tree order.
    pub fn visit(&self, q: &Rect, mut f: impl FnMut(usize)) {
        let Some(root) = self.levels.last() else { return };
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let top = self.levels.len() - 1;
        for (i, n) in root.iter().enumerate() {
            if n.bbox.intersects(q) {
                stack.push((top, i));
            }
        }
        while let Some((lvl, idx)) = stack.pop() {
            let node = &self.levels[lvl][idx];
            if lvl == 0 {
                for (r, id) in &self.items[node.children.clone()] {
                    if r.intersects(q) {
                        f(*id);
                    }
                }
            } else {
                for c in node.children.clone() {
                    if self.levels[lvl - 1][c].bbox.intersects(q) {
                        stack.push((lvl - 1, c));
                    }
                }
            }
        }
    }
}
