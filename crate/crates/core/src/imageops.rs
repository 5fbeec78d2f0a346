//! Small planar image operations shared by the evidence extractors.
//!
//! Planes are row-major `Vec<f64>` of `width * height` values. Border pixels
//! are handled by clamping coordinates to the image.

/// Row-major scalar plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane size mismatch");
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Plane::new(width, height, vec![0.0; width * height])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Luma plane of a raster.
    pub fn gray_of(r: &crate::raster::Raster) -> Plane {
        Plane::new(r.width(), r.height(), r.gray_plane())
    }

    /// Single-channel raster with values clamped into `[0, 1]`.
    pub fn to_raster(&self) -> crate::raster::Raster {
        crate::raster::Raster::from_clamped(self.width, self.height, 1, self.data.clone())
            .expect("plane dimensions are consistent")
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= s;
    }
    k
}

fn convolve_separable(p: &Plane, kernel: &[f64]) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (p.width, p.height);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * p.clamped(x as isize + k as isize - r, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    let tmp = Plane::new(w, h, tmp);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * tmp.clamped(x as isize, y as isize + k as isize - r);
            }
            out[y * w + x] = acc;
        }
    }
    Plane::new(w, h, out)
}

pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return p.clone();
    }
    convolve_separable(p, &gaussian_kernel(sigma))
}

/// Mean over a `(2r+1)` square window.
pub fn box_filter(p: &Plane, radius: usize) -> Plane {
    let n = 2 * radius + 1;
    convolve_separable(p, &vec![1.0 / n as f64; n])
}

/// Sobel derivatives scaled to intensity units per pixel.
pub fn sobel(p: &Plane) -> (Plane, Plane) {
    let (w, h) = (p.width, p.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let v = |dx: isize, dy: isize| p.clamped(x + dx, y + dy);
            let dx = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
            let dy = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
            let i = y as usize * w + x as usize;
            gx[i] = dx / 8.0;
            gy[i] = dy / 8.0;
        }
    }
    (Plane::new(w, h, gx), Plane::new(w, h, gy))
}

pub fn magnitude(gx: &Plane, gy: &Plane) -> Plane {
    let data = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    Plane::new(gx.width, gx.height, data)
}

/// Gradient orientation folded into `[0, 180)` degrees.
#[inline]
pub fn orientation_deg(gx: f64, gy: f64) -> f64 {
    let a = gy.atan2(gx).to_degrees();
    let a = a.rem_euclid(180.0);
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

/// 8-bin orientation index with bins centered on multiples of 22.5 degrees.
#[inline]
pub fn orientation_bin(deg: f64) -> usize {
    (((deg + 11.25) / 22.5).floor() as usize) % 8
}

/// Grayscale dilation (running max) over a square window.
pub fn dilate_max(p: &Plane, radius: usize) -> Plane {
    if radius == 0 {
        return p.clone();
    }
    let (w, h) = (p.width, p.height);
    let r = radius as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut m = f64::MIN;
            for dx in -r..=r {
                let xx = x as isize + dx;
                if xx >= 0 && xx < w as isize {
                    m = m.max(p.data[y * w + xx as usize]);
                }
            }
            tmp[y * w + x] = m;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut m = f64::MIN;
            for dy in -r..=r {
                let yy = y as isize + dy;
                if yy >= 0 && yy < h as isize {
                    m = m.max(tmp[yy as usize * w + x]);
                }
            }
            out[y * w + x] = m;
        }
    }
    Plane::new(w, h, out)
}

/// Linear-interpolated percentile (`q` in `[0, 1]`) of the given values.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    Some(v[lo] * (1.0 - t) + v[hi] * t)
}

/// Divide by the 99th percentile of the positive responses (never below
/// `floor`) and clamp into `[0, 1]`.
pub fn normalize_by_percentile(p: &Plane, floor: f64) -> Plane {
    let positive: Vec<f64> = p.data.iter().copied().filter(|v| *v > 0.0).collect();
    let Some(p99) = percentile(&positive, 0.99) else {
        return Plane::zeros(p.width, p.height);
    };
    let scale = p99.max(floor);
    let data = p.data.iter().map(|v| (v / scale).clamp(0.0, 1.0)).collect();
    Plane::new(p.width, p.height, data)
}

/// Bresenham rasterization of a segment, calling `f` on every in-bounds pixel.
pub fn for_each_line_pixel(
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    width: usize,
    height: usize,
    mut f: impl FnMut(usize, usize),
) {
    let (mut x0, mut y0) = (x1.round() as i64, y1.round() as i64);
    let (xe, ye) = (x2.round() as i64, y2.round() as i64);
    let dx = (xe - x0).abs();
    let dy = -(ye - y0).abs();
    let sx = if x0 < xe { 1 } else { -1 };
    let sy = if y0 < ye { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 && (x0 as usize) < width && (y0 as usize) < height {
            f(x0 as usize, y0 as usize);
        }
        if x0 == xe && y0 == ye {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_preserves_constants() {
        let p = Plane::new(5, 4, vec![0.3; 20]);
        let b = gaussian_blur(&p, 1.5);
        assert!(b.data.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn sobel_of_ramp_is_unit_slope() {
        let data = (0..25).map(|i| (i % 5) as f64 * 0.1).collect();
        let (gx, gy) = sobel(&Plane::new(5, 5, data));
        assert!((gx.at(2, 2) - 0.1).abs() < 1e-12);
        assert!(gy.at(2, 2).abs() < 1e-12);
    }

    #[test]
    fn orientation_bins_are_centered() {
        assert_eq!(orientation_bin(0.0), 0);
        assert_eq!(orientation_bin(179.0), 0);
        assert_eq!(orientation_bin(10.0), 0);
        assert_eq!(orientation_bin(90.0), 4);
        assert_eq!(orientation_bin(45.0), 2);
        assert_eq!(orientation_deg(0.0, 1.0), 90.0);
        assert_eq!(orientation_deg(-1.0, 0.0), 0.0);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 0.5), Some(2.0));
        assert_eq!(percentile(&[], 0.5), None);
        assert!((percentile(&[0.0, 10.0], 0.99).unwrap() - 9.9).abs() < 1e-12);
    }

    #[test]
    fn bresenham_hits_endpoints() {
        let mut px = Vec::new();
        for_each_line_pixel(0.0, 0.0, 4.0, 2.0, 10, 10, |x, y| px.push((x, y)));
        assert_eq!(px.first(), Some(&(0, 0)));
        assert_eq!(px.last(), Some(&(4, 2)));
        assert_eq!(px.len(), 5);
    }

    #[test]
    fn dilation_spreads_peaks() {
        let mut p = Plane::zeros(5, 5);
        p.data[12] = 1.0;
        let d = dilate_max(&p, 1);
        assert_eq!(d.data.iter().filter(|v| **v == 1.0).count(), 9);
    }
}
