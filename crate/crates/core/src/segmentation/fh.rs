//! Felzenszwalb-Huttenlocher graph-based segmentation.

use super::{connected_components, merge_regions_by_color, Segmentation, SegmentationMethod};
use crate::error::{GalError, Result};
use crate::imageops::{gaussian_blur, Plane};
use crate::raster::Raster;

const PRESMOOTH_SIGMA: f64 = 0.8;

struct Forest {
    parent: Vec<usize>,
    size: Vec<usize>,
    internal: Vec<f64>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Forest {
            parent: (0..n).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn join(&mut self, a: usize, b: usize, weight: f64) {
        let (big, small) = if self.size[a] >= self.size[b] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.internal[big] = weight.max(self.internal[big]).max(self.internal[small]);
    }
}

/// Segment with the FH criterion on 8-connected color-difference edges
/// (0-255 scale) after a Gaussian presmooth, then merge components smaller
/// than `min_size`.
pub fn graph_segment(img: &Raster, scale_k: f64, min_size: usize) -> Result<Segmentation> {
    if !(scale_k > 0.0) {
        return Err(GalError::Parameter("graph scale must be > 0".into()));
    }
    if min_size == 0 {
        return Err(GalError::Parameter("min_size must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let planes: Vec<Plane> = (0..img.channels())
        .map(|c| {
            let data = (0..n)
                .map(|p| img.data()[p * img.channels() + c] * 255.0)
                .collect();
            gaussian_blur(&Plane::new(w, h, data), PRESMOOTH_SIGMA)
        })
        .collect();
    let diff = |a: usize, b: usize| -> f64 {
        planes
            .iter()
            .map(|pl| (pl.data[a] - pl.data[b]).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(4 * n);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                edges.push((diff(p, p + 1), p, p + 1));
            }
            if y + 1 < h {
                edges.push((diff(p, p + w), p, p + w));
            }
            if x + 1 < w && y + 1 < h {
                edges.push((diff(p, p + w + 1), p, p + w + 1));
            }
            if x > 0 && y + 1 < h {
                edges.push((diff(p, p + w - 1), p, p + w - 1));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut forest = Forest::new(n);
    for &(wt, a, b) in &edges {
        let (ra, rb) = (forest.find(a), forest.find(b));
        if ra == rb {
            continue;
        }
        let ta = forest.internal[ra] + scale_k / forest.size[ra] as f64;
        let tb = forest.internal[rb] + scale_k / forest.size[rb] as f64;
        if wt <= ta.min(tb) {
            forest.join(ra, rb, wt);
        }
    }
    for &(wt, a, b) in &edges {
        let (ra, rb) = (forest.find(a), forest.find(b));
        if ra != rb && (forest.size[ra] < min_size || forest.size[rb] < min_size) {
            forest.join(ra, rb, wt);
        }
    }

    // FH components may be connected only diagonally; split into 4-connected
    // pieces and fold undersized pieces into their closest-colored neighbor.
    let roots: Vec<usize> = (0..n).map(|p| forest.find(p)).collect();
    let (comp, n_comp) = connected_components(w, h, |a, b| roots[a] == roots[b]);
    let (labels, n_segments) =
        merge_regions_by_color(img, &comp, n_comp, |_, size| size < min_size.min(n));

    Ok(Segmentation {
        width: w,
        height: h,
        labels,
        n_segments,
        method: SegmentationMethod::Graph {
            scale: scale_k,
            min_size,
        },
    })
}
