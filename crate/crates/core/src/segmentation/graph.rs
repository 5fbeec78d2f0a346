use std::collections::BTreeMap;

use super::Segmentation;

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentInfo {
    /// Member pixel indices in ascending order.
    pub pixels: Vec<usize>,
    pub centroid: (f64, f64),
    /// Inclusive bounding box `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
}

impl SegmentInfo {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Adjacency between segments `a < b`, with every 4-adjacent pixel pair
/// `(pixel in a, pixel in b)` along their shared boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub boundary: Vec<(usize, usize)>,
}

/// Region adjacency graph over a segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentGraph {
    pub width: usize,
    pub height: usize,
    pub segmentation: Segmentation,
    pub segments: Vec<SegmentInfo>,
    /// Sorted by `(a, b)`.
    pub edges: Vec<Edge>,
}

impl SegmentGraph {
    pub fn build(seg: &Segmentation) -> SegmentGraph {
        let (w, h) = (seg.width(), seg.height());
        let members = seg.members();
        let segments = members
            .into_iter()
            .map(|pixels| {
                let mut sx = 0.0;
                let mut sy = 0.0;
                let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
                for &p in &pixels {
                    let (x, y) = (p % w, p / w);
                    sx += x as f64;
                    sy += y as f64;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
                let n = pixels.len() as f64;
                SegmentInfo {
                    pixels,
                    centroid: (sx / n, sy / n),
                    bbox: (x0, y0, x1, y1),
                }
            })
            .collect();

        let mut map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let lp = seg.label(p);
                let mut link = |q: usize| {
                    let lq = seg.label(q);
                    if lp != lq {
                        let entry = if lp < lq {
                            map.entry((lp, lq)).or_default()
                        } else {
                            map.entry((lq, lp)).or_default()
                        };
                        entry.push(if lp < lq { (p, q) } else { (q, p) });
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
        let edges = map
            .into_iter()
            .map(|((a, b), boundary)| Edge { a, b, boundary })
            .collect();
        SegmentGraph {
            width: w,
            height: h,
            segmentation: seg.clone(),
            segments,
            edges,
        }
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    #[inline]
    pub fn segment_of(&self, pixel: usize) -> usize {
        self.segmentation.label(pixel)
    }

    /// Neighbor lists derived from the edge set.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.segments.len()];
        for e in &self.edges {
            out[e.a].push(e.b);
            out[e.b].push(e.a);
        }
        out
    }

    pub fn areas(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.area()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::SegmentationMethod;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn manual(w: usize, h: usize, raw: &[u32]) -> Segmentation {
        Segmentation::from_raw_labels(w, h, raw, SegmentationMethod::Manual).unwrap()
    }

    #[test]
    fn smallest_case() {
        let g = SegmentGraph::build(&manual(2, 1, &[0, 1]));
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].boundary, vec![(0, 1)]);
    }

    #[test]
    fn quadrants_have_no_diagonal_edges() {
        let raw: Vec<u32> = (0..16)
            .map(|p| ((p % 4) / 2 + 2 * ((p / 4) / 2)) as u32)
            .collect();
        let g = SegmentGraph::build(&manual(4, 4, &raw));
        let pairs: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(g.segments[0].centroid, (0.5, 0.5));
        assert_eq!(g.segments[3].bbox, (2, 2, 3, 3));
    }

    #[test]
    fn matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let (w, h) = (32, 32);
            let k = rng.random_range(2..9u32);
            let raw: Vec<u32> = (0..w * h)
                .map(|p| {
                    let (x, y) = (p % w, p / w);
                    ((x / 5 + y / 7) as u32 + rng.random_range(0..2)) % k
                })
                .collect();
            let seg = manual(w, h, &raw);
            let g = SegmentGraph::build(&seg);
            // oracle: direct scan of all 4-adjacent pairs
            let mut expected_pairs = 0;
            let mut expected_edges = BTreeSet::new();
            for y in 0..h {
                for x in 0..w {
                    let p = y * w + x;
                    for q in [(x + 1 < w).then(|| p + 1), (y + 1 < h).then(|| p + w)]
                        .into_iter()
                        .flatten()
                    {
                        let (a, b) = (seg.label(p), seg.label(q));
                        if a != b {
                            expected_pairs += 1;
                            expected_edges.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
            let total: usize = g.edges.iter().map(|e| e.boundary.len()).sum();
            assert_eq!(total, expected_pairs);
            let got: BTreeSet<(usize, usize)> = g.edges.iter().map(|e| (e.a, e.b)).collect();
            assert_eq!(got, expected_edges);
            assert_eq!(got.len(), g.edges.len());
            for e in &g.edges {
                assert!(e.a < e.b);
                assert!(!e.boundary.is_empty());
                for &(p, q) in &e.boundary {
                    assert_eq!(seg.label(p), e.a);
                    assert_eq!(seg.label(q), e.b);
                }
            }
        }
    }
}
