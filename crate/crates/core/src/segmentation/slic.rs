use super::{connected_components, merge_regions_by_color, Segmentation, SegmentationMethod};
use crate::error::{GalError, Result};
use crate::raster::Raster;

const ITERATIONS: usize = 10;

#[derive(Clone, Copy, Debug)]
struct Center {
    x: f64,
    y: f64,
    color: [f64; 3],
}

/// SLIC super-pixels on RGB (0-255 scale). The distance between a pixel and
/// a center is `color distance + (compactness / grid step) * spatial distance`.
pub fn slic(img: &Raster, k: usize, compactness: f64) -> Result<Segmentation> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    if img.channels() != 3 {
        return Err(GalError::Parameter("slic needs a 3-channel image".into()));
    }
    if k == 0 || k > n {
        return Err(GalError::Parameter(format!(
            "slic target count {k} must be in 1..={n}"
        )));
    }
    if !(compactness > 0.0) {
        return Err(GalError::Parameter("slic compactness must be > 0".into()));
    }

    let color = |p: usize| {
        let c = img.rgb_at(p);
        [c[0] * 255.0, c[1] * 255.0, c[2] * 255.0]
    };
    let grad = |x: usize, y: usize| -> f64 {
        let xa = x.saturating_sub(1);
        let xb = (x + 1).min(w - 1);
        let ya = y.saturating_sub(1);
        let yb = (y + 1).min(h - 1);
        let d = |a: usize, b: usize| -> f64 {
            let (ca, cb) = (color(a), color(b));
            (0..3).map(|i| (ca[i] - cb[i]).powi(2)).sum()
        };
        d(y * w + xa, y * w + xb) + d(ya * w + x, yb * w + x)
    };

    let step = (n as f64 / k as f64).sqrt();
    let nx = ((w as f64 / step).round() as usize).clamp(1, w);
    let ny = ((h as f64 / step).round() as usize).clamp(1, h);
    let sx = w as f64 / nx as f64;
    let sy = h as f64 / ny as f64;
    let s = sx.max(sy);

    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (((i as f64 + 0.5) * sx) as usize).min(w - 1);
            let cy = (((j as f64 + 0.5) * sy) as usize).min(h - 1);
            // move to the lowest-gradient position in the 3x3 neighborhood
            let (mut bx, mut by, mut bg) = (cx, cy, grad(cx, cy));
            for yy in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for xx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let g = grad(xx, yy);
                    if g < bg {
                        (bx, by, bg) = (xx, yy, g);
                    }
                }
            }
            centers.push(Center {
                x: bx as f64,
                y: by as f64,
                color: color(by * w + bx),
            });
        }
    }

    let spatial_weight = compactness / s;
    let radius = s.ceil() as isize;
    let mut assignment = vec![usize::MAX; n];
    let mut best = vec![f64::INFINITY; n];
    for _ in 0..ITERATIONS {
        best.fill(f64::INFINITY);
        assignment.fill(usize::MAX);
        for (ci, c) in centers.iter().enumerate() {
            let x0 = (c.x.round() as isize - radius).max(0) as usize;
            let x1 = ((c.x.round() as isize + radius) as usize).min(w - 1);
            let y0 = (c.y.round() as isize - radius).max(0) as usize;
            let y1 = ((c.y.round() as isize + radius) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let pc = color(p);
                    let dc = (0..3)
                        .map(|i| (pc[i] - c.color[i]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let ds = ((x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2)).sqrt();
                    let d = dc + spatial_weight * ds;
                    if d < best[p] {
                        best[p] = d;
                        assignment[p] = ci;
                    }
                }
            }
        }
        // stragglers outside every window go to the spatially nearest center
        for p in 0..n {
            if assignment[p] == usize::MAX {
                let (x, y) = ((p % w) as f64, (p / w) as f64);
                assignment[p] = centers
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i, (c.x - x).powi(2) + (c.y - y).powi(2)))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
                    .0;
            }
        }
        let mut acc = vec![(0.0f64, 0.0f64, [0.0f64; 3], 0usize); centers.len()];
        for p in 0..n {
            let a = &mut acc[assignment[p]];
            a.0 += (p % w) as f64;
            a.1 += (p / w) as f64;
            let pc = color(p);
            for i in 0..3 {
                a.2[i] += pc[i];
            }
            a.3 += 1;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a.3 > 0 {
                let m = a.3 as f64;
                c.x = a.0 / m;
                c.y = a.1 / m;
                c.color = [a.2[0] / m, a.2[1] / m, a.2[2] / m];
            }
        }
    }

    // connectivity: keep each cluster's largest piece, merge orphans
    let raw: Vec<u32> = assignment.iter().map(|a| *a as u32).collect();
    let (comp, n_comp) = connected_components(w, h, |a, b| raw[a] == raw[b]);
    let mut comp_size = vec![0usize; n_comp];
    let mut comp_cluster = vec![0usize; n_comp];
    for p in 0..n {
        comp_size[comp[p] as usize] += 1;
        comp_cluster[comp[p] as usize] = assignment[p];
    }
    let mut largest = vec![usize::MAX; centers.len()];
    for c in 0..n_comp {
        let cl = comp_cluster[c];
        if largest[cl] == usize::MAX || comp_size[c] > comp_size[largest[cl]] {
            largest[cl] = c;
        }
    }
    let orphan: Vec<bool> = (0..n_comp).map(|c| largest[comp_cluster[c]] != c).collect();
    let (labels, n_segments) = merge_regions_by_color(img, &comp, n_comp, |root, _| orphan[root]);

    Ok(Segmentation {
        width: w,
        height: h,
        labels,
        n_segments,
        method: SegmentationMethod::Slic { k, compactness },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb_image(w: usize, h: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Raster {
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                data.extend_from_slice(&f(x, y));
            }
        }
        Raster::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn uniform_image_degenerates_to_grid() {
        let img = rgb_image(64, 64, |_, _| [0.5, 0.5, 0.5]);
        let seg = slic(&img, 16, 10.0).unwrap();
        assert_eq!(seg.n_segments(), 16);
        seg.check_invariants().unwrap();
        for members in seg.members() {
            let a = members.len() as f64;
            assert!((a - 256.0).abs() <= 0.3 * 256.0, "cell area {a}");
        }
    }

    #[test]
    fn two_tone_boundary_is_respected() {
        let (w, h) = (40, 20);
        let img = rgb_image(w, h, |x, _| {
            if x < 17 {
                [0.1, 0.2, 0.7]
            } else {
                [0.8, 0.7, 0.2]
            }
        });
        let seg = slic(&img, 2, 10.0).unwrap();
        assert_eq!(seg.n_segments(), 2);
        // brute-force check: every pixel more than 1 px from the tone boundary
        // shares the label of its side's reference pixel
        let left = seg.label(0);
        let right = seg.label(w - 1);
        assert_ne!(left, right);
        for y in 0..h {
            for x in 0..w {
                let l = seg.label(y * w + x);
                if x + 1 < 17 {
                    assert_eq!(l, left, "pixel ({x},{y})");
                } else if x > 17 {
                    assert_eq!(l, right, "pixel ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn count_stays_near_target() {
        let img = rgb_image(90, 60, |x, y| {
            let v = ((x * 7 + y * 13) % 17) as f64 / 17.0;
            [v, 1.0 - v, 0.5]
        });
        for k in [10, 40, 150] {
            let seg = slic(&img, k, 10.0).unwrap();
            seg.check_invariants().unwrap();
            let n = seg.n_segments() as f64;
            assert!(n >= 0.5 * k as f64 && n <= 1.5 * k as f64, "k={k} n={n}");
        }
    }

    #[test]
    fn parameter_errors() {
        let img = rgb_image(4, 4, |_, _| [0.0; 3]);
        assert!(matches!(slic(&img, 0, 10.0), Err(GalError::Parameter(_))));
        assert!(matches!(slic(&img, 17, 10.0), Err(GalError::Parameter(_))));
        assert!(matches!(slic(&img, 4, 0.0), Err(GalError::Parameter(_))));
        assert!(matches!(
            slic(&img.to_gray(), 4, 1.0),
            Err(GalError::Parameter(_))
        ));
    }
}
