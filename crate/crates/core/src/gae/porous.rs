//! Contour randomness: orientation entropy of interior edge pixels.

use crate::class::{ClassDistribution, GeometricClass, NUM_CLASSES};
use crate::imageops::{gaussian_blur, orientation_bin, orientation_deg, sobel, Plane};

/// Gradient orientation bins of a grayscale image, computed on the same
/// smoothing scale as the edge map.
pub fn orientation_bins(gray: &Plane, sigma: f64) -> Vec<u8> {
    let (gx, gy) = sobel(&gaussian_blur(gray, sigma));
    gx.data
        .iter()
        .zip(&gy.data)
        .map(|(&dx, &dy)| orientation_bin(orientation_deg(dx, dy)) as u8)
        .collect()
}

/// Normalized (base-8) entropy of the orientation histogram over pixels of
/// `region` that are at least `band + 1` px from its boundary and have edge
/// probability above `threshold`. `None` without such pixels.
pub fn contour_randomness(
    region: &[usize],
    width: usize,
    height: usize,
    edge: &Plane,
    bins: &[u8],
    threshold: f64,
    band: usize,
) -> Option<f64> {
    let mut member = vec![false; width * height];
    for &p in region {
        member[p] = true;
    }
    let b = band as isize;
    let interior = |p: usize| -> bool {
        let (x, y) = ((p % width) as isize, (p / width) as isize);
        for dy in -b..=b {
            for dx in -b..=b {
                let (xx, yy) = (x + dx, y + dy);
                if xx < 0 || yy < 0 || xx >= width as isize || yy >= height as isize {
                    return false;
                }
                if !member[yy as usize * width + xx as usize] {
                    return false;
                }
            }
        }
        true
    };
    let mut hist = [0usize; 8];
    for &p in region {
        if edge.data[p] > threshold && interior(p) {
            hist[bins[p] as usize] += 1;
        }
    }
    let n: usize = hist.iter().sum();
    if n == 0 {
        return None;
    }
    let h: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n as f64;
            q * (1.0 / q).log(8.0)
        })
        .sum();
    Some(h.clamp(0.0, 1.0))
}

/// `mass·r` on porous, `mass·(1−r)` on solid, the remainder spread evenly.
pub fn porous_distribution(r: f64, mass: f64) -> ClassDistribution {
    let mut p = [(1.0 - mass) / NUM_CLASSES as f64; NUM_CLASSES];
    p[GeometricClass::Porous.index()] += mass * r;
    p[GeometricClass::Solid.index()] += mass * (1.0 - r);
    ClassDistribution::normalize(p).expect("porous prior is a distribution")
}
