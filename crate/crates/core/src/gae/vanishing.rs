//! RANSAC vanishing points from line segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::class::GeometricClass;
use crate::lineworks::LineSegment;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    pub inlier_degrees: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 500,
            inlier_degrees: 2.0,
            min_inliers: 5,
            seed: 7,
        }
    }
}

/// Homogeneous vanishing point `(x, y, w)`; `w == 0` is a direction.
#[derive(Clone, Debug, PartialEq)]
pub struct VanishingPoint {
    pub point: [f64; 3],
    pub inliers: Vec<usize>,
}

impl VanishingPoint {
    /// Finite image coordinates, if the point is not at infinity.
    pub fn finite(&self, limit: f64) -> Option<(f64, f64)> {
        let [x, y, w] = self.point;
        if w.abs() < 1e-12 {
            return None;
        }
        let (px, py) = (x / w, y / w);
        (px.is_finite() && py.is_finite() && px.abs() <= limit && py.abs() <= limit)
            .then_some((px, py))
    }
}

fn homogeneous_line(s: &LineSegment) -> [f64; 3] {
    let a = [s.x1, s.y1, 1.0];
    let b = [s.x2, s.y2, 1.0];
    cross(&a, &b)
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Angle in degrees between the segment and the ray from its midpoint to
/// the vanishing point, folded into `[0, 90]`.
pub fn angular_residual(s: &LineSegment, vp: &[f64; 3]) -> f64 {
    let (mx, my) = s.midpoint();
    let dx = vp[0] - mx * vp[2];
    let dy = vp[1] - my * vp[2];
    let (sx, sy) = (s.x2 - s.x1, s.y2 - s.y1);
    let n = dx.hypot(dy) * sx.hypot(sy);
    if n == 0.0 {
        return 0.0;
    }
    let c = ((dx * sx + dy * sy) / n).abs().min(1.0);
    c.acos().to_degrees()
}

fn inliers_of(segments: &[LineSegment], ids: &[usize], vp: &[f64; 3], tol: f64) -> Vec<usize> {
    ids.iter()
        .copied()
        .filter(|&i| angular_residual(&segments[i], vp) < tol)
        .collect()
}

fn score(segments: &[LineSegment], inliers: &[usize]) -> (usize, f64) {
    (
        inliers.len(),
        inliers.iter().map(|&i| segments[i].length()).sum(),
    )
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 > b.1 + 1e-9)
}

/// Dominant vanishing point of the segments listed in `ids`. Pairs are
/// enumerated exhaustively when there are fewer than `iterations` of them.
pub fn ransac_vanishing(
    segments: &[LineSegment],
    ids: &[usize],
    params: &RansacParams,
) -> Option<VanishingPoint> {
    let n = ids.len();
    if n < 2 {
        return None;
    }
    let lines: Vec<[f64; 3]> = ids
        .iter()
        .map(|&i| homogeneous_line(&segments[i]))
        .collect();
    let n_pairs = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if n_pairs <= params.iterations {
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        (0..params.iterations)
            .map(|_| {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            })
            .collect()
    };
    let mut best: Option<(VanishingPoint, (usize, f64))> = None;
    for (a, b) in pairs {
        let v = cross(&lines[a], &lines[b]);
        if v.iter().all(|c| c.abs() < 1e-12) {
            continue;
        }
        let inl = inliers_of(segments, ids, &v, params.inlier_degrees);
        let sc = score(segments, &inl);
        if best.as_ref().is_none_or(|(_, bs)| better(sc, *bs)) {
            best = Some((
                VanishingPoint {
                    point: v,
                    inliers: inl,
                },
                sc,
            ));
        }
    }
    let (mut vp, mut sc) = best?;
    if let Some(refined) = refine(segments, &vp.inliers) {
        let inl = inliers_of(segments, ids, &refined, params.inlier_degrees);
        let rs = score(segments, &inl);
        if !better(sc, rs) {
            vp = VanishingPoint {
                point: refined,
                inliers: inl,
            };
            sc = rs;
        }
    }
    (sc.0 >= params.min_inliers).then_some(vp)
}

/// Least-squares point closest to the inlier lines (smallest eigenvector
/// of the length-weighted scatter of normalized lines).
fn refine(segments: &[LineSegment], inliers: &[usize]) -> Option<[f64; 3]> {
    if inliers.len() < 2 {
        return None;
    }
    let (cx, cy) = inliers.iter().fold((0.0, 0.0), |acc, &i| {
        let (x, y) = segments[i].midpoint();
        (acc.0 + x, acc.1 + y)
    });
    let k = inliers.len() as f64;
    let (cx, cy) = (cx / k, cy / k);
    let scale = inliers
        .iter()
        .map(|&i| segments[i].length())
        .fold(1.0, f64::max);
    let mut m = [[0.0; 3]; 3];
    for &i in inliers {
        let s = &segments[i];
        let a = [(s.x1 - cx) / scale, (s.y1 - cy) / scale, 1.0];
        let b = [(s.x2 - cx) / scale, (s.y2 - cy) / scale, 1.0];
        let mut l = cross(&a, &b);
        let nrm = l[0].hypot(l[1]);
        if nrm == 0.0 {
            continue;
        }
        l = l.map(|v| v / nrm);
        let wgt = s.length();
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += wgt * l[r] * l[c];
            }
        }
    }
    let v = smallest_eigenvector(m)?;
    // undo the normalization: x = scale * x' + cx * w'
    Some([scale * v[0] + cx * v[2], scale * v[1] + cy * v[2], v[2]])
}

/// Cyclic Jacobi on a symmetric 3x3 matrix.
fn smallest_eigenvector(mut a: [[f64; 3]; 3]) -> Option<[f64; 3]> {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..50 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off < 1e-30 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let i = (0..3).min_by(|&x, &y| a[x][x].total_cmp(&a[y][y]))?;
    let e = [v[0][i], v[1][i], v[2][i]];
    e.iter().all(|c| c.is_finite()).then_some(e)
}

/// Facade orientation implied by a vanishing point relative to the region
/// centroid; points at or beyond `infinity` are treated as parallel lines.
pub fn orientation_from_vp(
    vp: &VanishingPoint,
    centroid_x: f64,
    width: usize,
    center_fraction: f64,
    infinity: f64,
) -> GeometricClass {
    let w = width as f64;
    match vp.finite(infinity * w) {
        None => GeometricClass::PlanarCenter,
        Some((x, _)) if (x - centroid_x).abs() < center_fraction * w => {
            GeometricClass::PlanarCenter
        }
        Some((x, _)) if x < centroid_x => GeometricClass::PlanarLeft,
        Some(_) => GeometricClass::PlanarRight,
    }
}
