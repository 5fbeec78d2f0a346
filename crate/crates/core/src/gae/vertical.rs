//! Vertical-line percentage per unit and the resulting class prior.

use crate::class::{ClassDistribution, GeometricClass, NUM_CLASSES};
use crate::lineworks::LineSegment;
use crate::segmentation::SegmentGraph;

/// `b` score of every unit: total length of near-vertical segments whose
/// midpoint falls in the unit dilated by `dilation` px, over the square root
/// of the dilated area, capped at 1.
pub fn vertical_line_scores(
    graph: &SegmentGraph,
    segments: &[LineSegment],
    tolerance: f64,
    dilation: usize,
) -> Vec<f64> {
    let (w, h) = (graph.width, graph.height);
    let r = dilation as isize;
    let n = graph.segments.len();
    let mut total = vec![0.0; n];
    let mut seen = Vec::new();
    for s in segments.iter().filter(|s| s.is_vertical(tolerance)) {
        let (mx, my) = s.midpoint();
        let (cx, cy) = (mx.round() as isize, my.round() as isize);
        if cx < 0 || cy < 0 || cx >= w as isize || cy >= h as isize {
            continue;
        }
        seen.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 && x < w as isize && y < h as isize {
                    seen.push(graph.segment_of(y as usize * w + x as usize));
                }
            }
        }
        seen.sort_unstable();
        seen.dedup();
        for &u in &seen {
            total[u] += s.length();
        }
    }
    graph
        .segments
        .iter()
        .zip(&total)
        .map(|(seg, &t)| {
            if t == 0.0 {
                return 0.0;
            }
            (t / (dilated_area(seg, w, h, dilation) as f64).sqrt()).min(1.0)
        })
        .collect()
}

fn dilated_area(seg: &crate::segmentation::SegmentInfo, w: usize, h: usize, r: usize) -> usize {
    let (x0, y0, x1, y1) = seg.bbox;
    let bx0 = x0.saturating_sub(r);
    let by0 = y0.saturating_sub(r);
    let bx1 = (x1 + r).min(w - 1);
    let by1 = (y1 + r).min(h - 1);
    let (bw, bh) = (bx1 - bx0 + 1, by1 - by0 + 1);
    let mut grid = vec![false; bw * bh];
    for &p in &seg.pixels {
        grid[(p / w - by0) * bw + (p % w - bx0)] = true;
    }
    let mut rows = vec![false; bw * bh];
    for y in 0..bh {
        for x in 0..bw {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(bw - 1);
            rows[y * bw + x] = (lo..=hi).any(|xx| grid[y * bw + xx]);
        }
    }
    let mut count = 0;
    for y in 0..bh {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(bh - 1);
        for x in 0..bw {
            if (lo..=hi).any(|yy| rows[yy * bw + x]) {
                count += 1;
            }
        }
    }
    count
}

/// `b/3` on each planar class and `(1-b)/4` on the other four.
pub fn vertical_distribution(b: f64) -> ClassDistribution {
    let b = b.clamp(0.0, 1.0);
    let mut p = [0.0; NUM_CLASSES];
    for c in GeometricClass::ALL {
        p[c.index()] = if c.is_planar() {
            b / 3.0
        } else {
            (1.0 - b) / 4.0
        };
    }
    ClassDistribution::from_probs(p).expect("vertical prior is a distribution")
}
