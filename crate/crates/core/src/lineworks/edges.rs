use crate::imageops::{box_filter, gaussian_blur, normalize_by_percentile, sobel, Plane};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeParams {
    pub sigma: f64,
    pub norm_floor: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams {
            sigma: 1.0,
            norm_floor: 0.1,
        }
    }
}

/// Keep pixels that are a local maximum across the gradient direction.
/// Plateaus of two equal pixels keep only the one on the negative side.
fn non_max_suppression(mag: &Plane, gx: &Plane, gy: &Plane) -> Plane {
    let (w, h) = (mag.width, mag.height);
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let m = mag.data[p];
            if m <= 0.0 {
                continue;
            }
            let deg = gy.data[p].atan2(gx.data[p]).to_degrees().rem_euclid(180.0);
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&deg) {
                (1, 0)
            } else if deg < 67.5 {
                (1, 1)
            } else if deg < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let behind = mag.clamped(xi - dx, yi - dy);
            let ahead = mag.clamped(xi + dx, yi + dy);
            let keep = m >= ahead && (m > behind || in_border(xi - dx, yi - dy, w, h));
            if keep {
                out.data[p] = m;
            }
        }
    }
    out
}

#[inline]
fn in_border(x: isize, y: isize, w: usize, h: usize) -> bool {
    x < 0 || y < 0 || x >= w as isize || y >= h as isize
}

/// Edge probability: smoothed gradient magnitude thinned by non-maximum
/// suppression and normalized into `[0, 1]`.
pub fn edge_probability(gray: &Plane, params: &EdgeParams) -> Plane {
    let smooth = gaussian_blur(gray, params.sigma);
    let (gx, gy) = sobel(&smooth);
    let mag = crate::imageops::magnitude(&gx, &gy);
    let thin = non_max_suppression(&mag, &gx, &gy);
    normalize_by_percentile(&thin, params.norm_floor)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefocusParams {
    pub sigma0: f64,
    pub edge_threshold: f64,
    pub max_blur: f64,
    pub box_size: usize,
    pub norm_floor: f64,
}

impl Default for DefocusParams {
    fn default() -> Self {
        DefocusParams {
            sigma0: 1.0,
            edge_threshold: 0.3,
            max_blur: 5.0,
            box_size: 9,
            norm_floor: 0.25,
        }
    }
}

const RATIO_EPS: f64 = 1e-6;

/// Dense blur estimate: gradient-ratio blur at edge pixels, spread to every
/// pixel from its nearest edge pixel and box-smoothed. `None` without edges.
pub fn blur_map(gray: &Plane, edges: &Plane, params: &DefocusParams) -> Option<Plane> {
    let (w, h) = (gray.width, gray.height);
    let (gx, gy) = sobel(gray);
    let reblurred = gaussian_blur(gray, params.sigma0);
    let (rx, ry) = sobel(&reblurred);
    let mut value = vec![f64::NAN; w * h];
    let mut queue = std::collections::VecDeque::new();
    for p in 0..w * h {
        if edges.data[p] > params.edge_threshold {
            let g = gx.data[p].hypot(gy.data[p]);
            let gr = rx.data[p].hypot(ry.data[p]);
            // a ratio below one only occurs at junctions, not along blurred edges
            if gr <= 0.0 || g < gr {
                continue;
            }
            let r = g / gr;
            let sigma = params.sigma0 / (r * r - 1.0).max(RATIO_EPS).sqrt();
            value[p] = sigma.clamp(0.0, params.max_blur);
            queue.push_back(p);
        }
    }
    if queue.is_empty() {
        return None;
    }
    // breadth-first nearest-edge assignment, 8-connected
    while let Some(p) = queue.pop_front() {
        let (px, py) = ((p % w) as isize, (p / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (qx, qy) = (px + dx, py + dy);
                if in_border(qx, qy, w, h) {
                    continue;
                }
                let q = qy as usize * w + qx as usize;
                if value[q].is_nan() {
                    value[q] = value[p];
                    queue.push_back(q);
                }
            }
        }
    }
    Some(box_filter(&Plane::new(w, h, value), params.box_size / 2))
}

/// Defocus edge map: normalized gradient magnitude of the dense blur map.
pub fn defocus_map(gray: &Plane, edges: &Plane, params: &DefocusParams) -> Plane {
    match blur_map(gray, edges, params) {
        None => Plane::zeros(gray.width, gray.height),
        Some(b) => {
            let (gx, gy) = sobel(&b);
            normalize_by_percentile(&crate::imageops::magnitude(&gx, &gy), params.norm_floor)
        }
    }
}
