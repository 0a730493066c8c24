//! Static R-tree bulk-loaded with Sort-Tile-Recursive packing. Time is not a
//! tree axis: every node also carries the envelope of its entries' intervals,
//! which prunes subtrees during queries.

use serde::{Deserialize, Serialize};

use crate::geo::{BoundingBox, TimeInterval};

pub const LEAF_CAPACITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: u64,
    pub bbox: BoundingBox,
    pub time: TimeInterval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    bbox: BoundingBox,
    time: TimeInterval,
    /// Child range in the level below (entries for level 0).
    start: usize,
    end: usize,
}

/// Immutable spatiotemporal index over [`IndexEntry`] values.
#[derive(Debug, Clone, Default)]
pub struct SpatioTemporalIndex {
    /// Entries in leaf order.
    entries: Vec<IndexEntry>,
    /// `levels[0]` are leaves; the last level holds the single root.
    levels: Vec<Vec<Node>>,
}

fn center(b: &BoundingBox) -> (f64, f64) {
    b.center()
}

/// STR ordering of `items`: sort by center x, cut into ⌈√(n/16)⌉ vertical
/// slices, sort each slice by center y. `key` gives (bbox, tiebreak).
fn str_order<T, F>(items: &mut [T], key: F)
where
    F: Fn(&T) -> (BoundingBox, u64),
{
    let n = items.len();
    if n == 0 {
        return;
    }
    let leaves = n.div_ceil(LEAF_CAPACITY);
    let slices = (leaves as f64).sqrt().ceil() as usize;
    let slice_len = leaves.div_ceil(slices.max(1)) * LEAF_CAPACITY;
    let key = &key;
    let by = |axis: usize| {
        move |a: &T, b: &T| {
            let (ba, ia) = key(a);
            let (bb, ib) = key(b);
            let (ca, cb) = (center(&ba), center(&bb));
            let (va, vb) = if axis == 0 { (ca.0, cb.0) } else { (ca.1, cb.1) };
            va.total_cmp(&vb).then(ia.cmp(&ib))
        }
    };
    items.sort_by(by(0));
    for slice in items.chunks_mut(slice_len) {
        slice.sort_by(by(1));
    }
}

fn pack<T, F>(items: &[T], bounds: F) -> Vec<Node>
where
    F: Fn(&T) -> (BoundingBox, TimeInterval),
{
    let mut nodes = Vec::with_capacity(items.len().div_ceil(LEAF_CAPACITY));
    for (k, group) in items.chunks(LEAF_CAPACITY).enumerate() {
        let mut bbox = BoundingBox::EMPTY;
        let mut time = TimeInterval::EMPTY;
        for it in group {
            let (b, t) = bounds(it);
            bbox = bbox.envelope(&b);
            time = time.envelope(&t);
        }
        let start = k * LEAF_CAPACITY;
        nodes.push(Node { bbox, time, start, end: start + group.len() });
    }
    nodes
}

impl SpatioTemporalIndex {
    /// STR bulk load. Deterministic for a fixed input; ties break by id.
    pub fn build(entries: impl IntoIterator<Item = IndexEntry>) -> Self {
        let mut entries: Vec<IndexEntry> = entries.into_iter().collect();
        if entries.is_empty() {
            return Self::default();
        }
        str_order(&mut entries, |e| (e.bbox, e.id));
        let mut levels = vec![pack(&entries, |e| (e.bbox, e.time))];
        while levels.last().expect("non-empty").len() > 1 {
            let below = levels.last_mut().expect("non-empty");
            // node position breaks ties among identical envelopes
            let mut tagged: Vec<(usize, Node)> = below.drain(..).enumerate().collect();
            str_order(&mut tagged, |(i, n)| (n.bbox, *i as u64));
            *below = tagged.into_iter().map(|(_, n)| n).collect();
            let next = pack(below, |n| (n.bbox, n.time));
            levels.push(next);
        }
        Self { entries, levels }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Envelope of every entry; `EMPTY` for an empty index.
    pub fn bounds(&self) -> (BoundingBox, TimeInterval) {
        match self.levels.last().and_then(|l| l.first()) {
            Some(root) => (root.bbox, root.time),
            None => (BoundingBox::EMPTY, TimeInterval::EMPTY),
        }
    }

    /// Entries whose box and interval both intersect the query (closed-open),
    /// in leaf order.
    pub fn query_entries(&self, bbox: &BoundingBox, time: &TimeInterval) -> Vec<&IndexEntry> {
        let mut out = Vec::new();
        if self.levels.is_empty() || bbox.is_empty() || time.is_empty() {
            return out;
        }
        let top = self.levels.len() - 1;
        let mut stack: Vec<(usize, usize)> = (0..self.levels[top].len()).map(|i| (top, i)).collect();
        while let Some((level, i)) = stack.pop() {
            let node = &self.levels[level][i];
            if !node.bbox.intersects(bbox) || !node.time.intersects(time) {
                continue;
            }
            if level == 0 {
                out.extend(
                    self.entries[node.start..node.end]
                        .iter()
                        .filter(|e| e.bbox.intersects(bbox) && e.time.intersects(time)),
                );
            } else {
                stack.extend((node.start..node.end).rev().map(|c| (level - 1, c)));
            }
        }
        out
    }

    /// Ids of matching entries in ascending order.
    pub fn query(&self, bbox: &BoundingBox, time: &TimeInterval) -> Vec<u64> {
        let mut ids: Vec<u64> = self.query_entries(bbox, time).into_iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids
    }
}

pub fn build_index(entries: impl IntoIterator<Item = IndexEntry>) -> SpatioTemporalIndex {
    SpatioTemporalIndex::build(entries)
}
