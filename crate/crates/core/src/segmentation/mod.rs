//! Super-pixel segmentations and the region adjacency graph.

mod fh;
mod graph;
mod slic;

pub use fh::graph_segment;
pub use graph::{Edge, SegmentGraph, SegmentInfo};
pub use slic::slic;

use std::collections::HashMap;
use std::path::Path;

use crate::error::{GalError, Result};
use crate::raster::{write_raster, Raster};

#[derive(Clone, Debug, PartialEq)]
pub enum SegmentationMethod {
    Slic { k: usize, compactness: f64 },
    Graph { scale: f64, min_size: usize },
    Intersection,
    Manual,
}

/// Per-pixel segment ids. Ids are contiguous, numbered in raster-scan order
/// of each segment's first pixel, and every segment is 4-connected.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    n_segments: usize,
    method: SegmentationMethod,
}

impl Segmentation {
    /// Canonicalize arbitrary labels: every 4-connected run of equal raw
    /// labels becomes its own segment.
    pub fn from_raw_labels(
        width: usize,
        height: usize,
        raw: &[u32],
        method: SegmentationMethod,
    ) -> Result<Segmentation> {
        if raw.len() != width * height || raw.is_empty() {
            return Err(GalError::Dimension(format!(
                "label array of {} for {width}x{height}",
                raw.len()
            )));
        }
        let (labels, n_segments) = connected_components(width, height, |a, b| raw[a] == raw[b]);
        Ok(Segmentation {
            width,
            height,
            labels,
            n_segments,
            method,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, pixel: usize) -> usize {
        self.labels[pixel] as usize
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn method(&self) -> &SegmentationMethod {
        &self.method
    }

    /// Pixel lists per segment, in ascending pixel order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_segments];
        for (p, l) in self.labels.iter().enumerate() {
            out[*l as usize].push(p);
        }
        out
    }

    /// Check ids are contiguous and segments 4-connected.
    pub fn check_invariants(&self) -> Result<()> {
        let (relabeled, n) = connected_components(self.width, self.height, |a, b| {
            self.labels[a] == self.labels[b]
        });
        if n != self.n_segments || relabeled != self.labels {
            return Err(GalError::Internal(
                "segmentation ids are not canonical connected components".into(),
            ));
        }
        Ok(())
    }

    /// Canonical form up to id permutation (ids are already canonical).
    pub fn same_partition(&self, other: &Segmentation) -> bool {
        self.width == other.width && self.height == other.height && self.labels == other.labels
    }

    /// Debug export as a P5 id map (ids modulo 256).
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let data = self
            .labels
            .iter()
            .map(|l| (l % 256) as f64 / 255.0)
            .collect();
        write_raster(&Raster::new(self.width, self.height, 1, data)?, path)
    }
}

/// Label 4-connected components of pixels linked by `same`, numbering in
/// raster-scan order of first pixel.
pub(crate) fn connected_components(
    width: usize,
    height: usize,
    same: impl Fn(usize, usize) -> bool,
) -> (Vec<u32>, usize) {
    let n = width * height;
    let mut labels = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != u32::MAX {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if labels[q] == u32::MAX && same(p, q) {
                    labels[q] = next;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        next += 1;
    }
    (labels, next as usize)
}

/// Repeatedly merge 4-connected components selected by `is_small` (called
/// with the component's root id and current size) into the adjacent component whose mean
/// color is closest. Takes canonical component labels, returns canonical labels.
pub(crate) fn merge_regions_by_color(
    img: &Raster,
    labels: &[u32],
    n: usize,
    is_small: impl Fn(usize, usize) -> bool,
) -> (Vec<u32>, usize) {
    use std::cmp::Reverse;
    use std::collections::{BTreeSet, BinaryHeap};

    let (w, h) = (img.width(), img.height());
    let mut size = vec![0usize; n];
    let mut sum = vec![[0.0f64; 3]; n];
    for (p, l) in labels.iter().enumerate() {
        let l = *l as usize;
        size[l] += 1;
        let c = img.rgb_at(p);
        for k in 0..3 {
            sum[l][k] += c[k];
        }
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let a = labels[p] as usize;
            let mut link = |q: usize| {
                let b = labels[q] as usize;
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            };
            if x + 1 < w {
                link(p + 1);
            }
            if y + 1 < h {
                link(p + w);
            }
        }
    }

    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((size[i], i))).collect();
    while let Some(Reverse((s, r))) = heap.pop() {
        if parent[r] != r || size[r] != s || !is_small(r, s) {
            continue;
        }
        let mean = |c: usize| {
            let k = size[c] as f64;
            [sum[c][0] / k, sum[c][1] / k, sum[c][2] / k]
        };
        let m = mean(r);
        let neighbors: BTreeSet<usize> = adj[r]
            .iter()
            .map(|nb| find(&mut parent, *nb))
            .filter(|nb| *nb != r)
            .collect();
        let mut best: Option<(f64, usize)> = None;
        for &nb in &neighbors {
            let mn = mean(nb);
            let d: f64 = (0..3).map(|k| (m[k] - mn[k]).powi(2)).sum();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, nb));
            }
        }
        let Some((_, target)) = best else { continue };
        parent[r] = target;
        size[target] += size[r];
        for k in 0..3 {
            sum[target][k] += sum[r][k];
        }
        let moved = std::mem::take(&mut adj[r]);
        adj[target].extend(neighbors.into_iter().filter(|nb| *nb != target));
        adj[target].extend(moved);
        heap.push(Reverse((size[target], target)));
    }
    let merged: Vec<u32> = labels
        .iter()
        .map(|l| find(&mut parent, *l as usize) as u32)
        .collect();
    connected_components(w, h, |a, b| merged[a] == merged[b])
}

/// Split into fine units: pixels share a unit iff they share an id in every
/// input and are 4-connected through such pixels.
pub fn intersect_segmentations(list: &[&Segmentation]) -> Result<Segmentation> {
    let first = list
        .first()
        .ok_or_else(|| GalError::Parameter("intersection needs at least one input".into()))?;
    let (w, h) = (first.width, first.height);
    if let Some(bad) = list.iter().find(|s| s.width != w || s.height != h) {
        return Err(GalError::Dimension(format!(
            "cannot intersect {w}x{h} with {}x{}",
            bad.width, bad.height
        )));
    }
    let (labels, n_segments) =
        connected_components(w, h, |a, b| list.iter().all(|s| s.labels[a] == s.labels[b]));
    Ok(Segmentation {
        width: w,
        height: h,
        labels,
        n_segments,
        method: SegmentationMethod::Intersection,
    })
}

/// Map every fine unit to the segment of `coarse` containing it.
pub fn parent_map(fine: &Segmentation, coarse: &Segmentation) -> Result<Vec<usize>> {
    if fine.width != coarse.width || fine.height != coarse.height {
        return Err(GalError::Dimension(
            "parent map over different sizes".into(),
        ));
    }
    let mut parent = vec![usize::MAX; fine.n_segments];
    for (p, l) in fine.labels.iter().enumerate() {
        let c = coarse.labels[p] as usize;
        let slot = &mut parent[*l as usize];
        if *slot == usize::MAX {
            *slot = c;
        } else if *slot != c {
            return Err(GalError::Internal(
                "fine unit straddles two coarse segments".into(),
            ));
        }
    }
    Ok(parent)
}

/// Count segments per label value; handy for tests and diagnostics.
pub fn segment_areas(seg: &Segmentation) -> HashMap<usize, usize> {
    let mut m = HashMap::new();
    for l in &seg.labels {
        *m.entry(*l as usize).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn manual(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> Segmentation {
        let raw: Vec<u32> = (0..w * h).map(|p| f(p % w, p / w)).collect();
        Segmentation::from_raw_labels(w, h, &raw, SegmentationMethod::Manual).unwrap()
    }

    fn random_seg(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Segmentation {
        let k = rng.random_range(1..6u32);
        let raw: Vec<u32> = (0..w * h).map(|_| rng.random_range(0..k)).collect();
        // blocky so that segments are not all singletons
        let bs = rng.random_range(1..4usize);
        let blocky: Vec<u32> = (0..w * h)
            .map(|p| raw[((p / w) / bs * bs) * w + (p % w) / bs * bs])
            .collect();
        Segmentation::from_raw_labels(w, h, &blocky, SegmentationMethod::Manual).unwrap()
    }

    #[test]
    fn raw_labels_split_disconnected_parts() {
        // same raw id on two sides of a separating column
        let s = manual(5, 2, |x, _| if x == 2 { 1 } else { 0 });
        assert_eq!(s.n_segments(), 3);
        s.check_invariants().unwrap();
    }

    #[test]
    fn identical_inputs_intersect_to_themselves() {
        let s = manual(6, 6, |x, y| ((x / 2) + 3 * (y / 3)) as u32);
        let i = intersect_segmentations(&[&s, &s]).unwrap();
        assert!(i.same_partition(&s));
    }

    #[test]
    fn grid_product_gives_quadrants() {
        let a = manual(4, 4, |_, y| (y / 2) as u32);
        let b = manual(4, 4, |x, _| (x / 2) as u32);
        let i = intersect_segmentations(&[&a, &b]).unwrap();
        assert_eq!(i.n_segments(), 4);
        i.check_invariants().unwrap();
    }

    #[test]
    fn intersection_dimension_mismatch() {
        let a = manual(4, 4, |_, _| 0);
        let b = manual(4, 3, |_, _| 0);
        assert!(matches!(
            intersect_segmentations(&[&a, &b]),
            Err(GalError::Dimension(_))
        ));
    }

    #[test]
    fn intersection_refines_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_seg(&mut rng, 12, 9);
            let b = random_seg(&mut rng, 12, 9);
            let c = random_seg(&mut rng, 12, 9);
            let ab = intersect_segmentations(&[&a, &b]).unwrap();
            assert!(ab.n_segments() >= a.n_segments().max(b.n_segments()));
            ab.check_invariants().unwrap();
            // associativity and idempotence
            let left = intersect_segmentations(&[&ab, &c]).unwrap();
            let bc = intersect_segmentations(&[&b, &c]).unwrap();
            let right = intersect_segmentations(&[&a, &bc]).unwrap();
            assert!(left.same_partition(&right));
            let again = intersect_segmentations(&[&left, &left]).unwrap();
            assert!(again.same_partition(&left));
            // every fine unit has one parent
            parent_map(&left, &a).unwrap();
        }
    }
}

/// Region adjacency graph with shared-boundary pixel pairs.
pub fn build_graph(seg: &Segmentation) -> SegmentGraph {
    SegmentGraph::build(seg)
}
