//! Piecewise trapezoid fit of the vertical region between the sky and
//! ground lines, giving one facade orientation per piece.

use crate::class::GeometricClass;
use crate::gae::boundary::BoundaryPolyline;
use crate::lineworks::LineSegment;
use crate::segmentation::SegmentGraph;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapezoidParams {
    /// Vertical segments at least this fraction of the local region height
    /// split the region.
    pub break_fraction: f64,
    /// Window of the local slope fits, as a fraction of the image width.
    pub window: f64,
    pub slope: f64,
    /// Pieces (and slope runs) narrower than this fraction of the width are
    /// discarded.
    pub min_piece: f64,
    pub vertical_tolerance: f64,
    /// Per-column jumps of the sky line larger than this many pixels split
    /// the region.
    pub jump: f64,
}

impl Default for TrapezoidParams {
    fn default() -> Self {
        TrapezoidParams {
            break_fraction: 0.3,
            window: 0.1,
            slope: 0.05,
            min_piece: 0.05,
            vertical_tolerance: 5.0,
            jump: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfacePiece {
    /// Open column interval `(x0, x1)`.
    pub x0: f64,
    pub x1: f64,
    pub slope: f64,
    /// Slope taken from the ground line (sign flipped) because the sky line
    /// was unusable.
    pub from_ground: bool,
    pub orientation: GeometricClass,
}

impl SurfacePiece {
    pub fn contains_column(&self, x: usize) -> bool {
        let x = x as f64;
        x > self.x0 && x < self.x1
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trapezoids {
    pub pieces: Vec<SurfacePiece>,
    pub breaks: Vec<f64>,
}

/// Inclusive rows of the vertical region in column `x`.
pub fn region_rows(
    sky: &BoundaryPolyline,
    ground: &BoundaryPolyline,
    x: usize,
    height: usize,
) -> Option<(f64, f64)> {
    match (sky.y_at(x), ground.y_at(x)) {
        (None, None) => None,
        (s, g) => {
            let top = s.map_or(0.0, |s| s + 1.0);
            let bottom = g.unwrap_or(height as f64 - 1.0);
            (bottom >= top).then_some((top, bottom))
        }
    }
}

pub fn slope_class(s: f64, threshold: f64) -> GeometricClass {
    if s < -threshold {
        GeometricClass::PlanarLeft
    } else if s > threshold {
        GeometricClass::PlanarRight
    } else {
        GeometricClass::PlanarCenter
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sign(c: GeometricClass) -> i32 {
    match c {
        GeometricClass::PlanarLeft => -1,
        GeometricClass::PlanarRight => 1,
        _ => 0,
    }
}

/// Break positions where the windowed sky slope changes sign, or where the
/// sky line jumps.
fn slope_breaks(sky: &BoundaryPolyline, params: &TrapezoidParams) -> Vec<f64> {
    let w = sky.width();
    let r = ((params.window * w as f64) / 2.0).round().max(1.0) as usize;
    let min_run = (params.min_piece * w as f64).ceil() as usize;
    let mut out = Vec::new();
    for (s, e) in sky.runs() {
        for x in s..e - 1 {
            let (a, b) = (sky.ys[x].unwrap(), sky.ys[x + 1].unwrap());
            if (a - b).abs() > params.jump {
                out.push(x as f64 + 0.5);
            }
        }
        let classes: Vec<i32> = (s..e)
            .map(|x| {
                let lo = x.saturating_sub(r).max(s);
                let hi = (x + r).min(e - 1);
                let pts: Vec<(f64, f64)> =
                    (lo..=hi).map(|c| (c as f64, sky.ys[c].unwrap())).collect();
                least_squares_slope(&pts).map_or(0, |sl| sign(slope_class(sl, params.slope)))
            })
            .collect();
        let mut runs: Vec<(usize, usize, i32)> = Vec::new();
        for (i, &c) in classes.iter().enumerate() {
            match runs.last_mut() {
                Some(last) if last.2 == c => last.1 = i + 1,
                _ => runs.push((i, i + 1, c)),
            }
        }
        let kept: Vec<&(usize, usize, i32)> = runs
            .iter()
            .filter(|r| r.1 - r.0 >= min_run && r.2 != 0)
            .collect();
        for pair in kept.windows(2) {
            if pair[0].2 == -pair[1].2 {
                let end = (s + pair[0].1 - 1) as f64;
                let start = (s + pair[1].0) as f64;
                out.push((end + start) / 2.0);
            }
        }
    }
    out
}

/// Split the vertical region between the lines at long vertical segments
/// and sky-slope changes, and classify each piece by its sky-line slope.
pub fn fit_trapezoids(
    sky: &BoundaryPolyline,
    ground: &BoundaryPolyline,
    segments: &[LineSegment],
    height: usize,
    params: &TrapezoidParams,
) -> Trapezoids {
    let w = sky.width();
    let mut breaks: Vec<f64> = segments
        .iter()
        .filter(|s| s.is_vertical(params.vertical_tolerance))
        .filter_map(|s| {
            let (mx, my) = s.midpoint();
            let col = mx.round();
            if col < 0.0 || col >= w as f64 {
                return None;
            }
            let (top, bottom) = region_rows(sky, ground, col as usize, height)?;
            let local = bottom - top + 1.0;
            (my >= top - 1.0 && my <= bottom + 1.0 && s.length() >= params.break_fraction * local)
                .then_some(mx)
        })
        .collect();
    breaks.extend(slope_breaks(sky, params));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let extent: Vec<bool> = (0..w)
        .map(|x| region_rows(sky, ground, x, height).is_some())
        .collect();
    let mut pieces = Vec::new();
    let mut x = 0;
    while x < w {
        if !extent[x] {
            x += 1;
            continue;
        }
        let s = x;
        while x < w && extent[x] {
            x += 1;
        }
        let (lo, hi) = (s as f64 - 0.5, x as f64 - 0.5);
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        cuts.push(hi);
        for c in cuts.windows(2) {
            if let Some(p) = classify_piece(sky, ground, c[0], c[1], params) {
                pieces.push(p);
            }
        }
    }
    Trapezoids { pieces, breaks }
}

fn classify_piece(
    sky: &BoundaryPolyline,
    ground: &BoundaryPolyline,
    x0: f64,
    x1: f64,
    params: &TrapezoidParams,
) -> Option<SurfacePiece> {
    let w = sky.width();
    if x1 - x0 < params.min_piece * w as f64 {
        return None;
    }
    let cols = (0..w).filter(|&c| (c as f64) > x0 && (c as f64) < x1);
    let pts = |line: &BoundaryPolyline| -> Vec<(f64, f64)> {
        cols.clone()
            .filter_map(|c| line.y_at(c).map(|y| (c as f64, y)))
            .collect()
    };
    let (slope, from_ground) = match least_squares_slope(&pts(sky)) {
        Some(s) => (s, false),
        None => (-least_squares_slope(&pts(ground))?, true),
    };
    Some(SurfacePiece {
        x0,
        x1,
        slope,
        from_ground,
        orientation: slope_class(slope, params.slope),
    })
}

/// Piece index of every pixel inside the vertical region.
pub fn piece_map(
    tr: &Trapezoids,
    sky: &BoundaryPolyline,
    ground: &BoundaryPolyline,
    width: usize,
    height: usize,
) -> Vec<Option<usize>> {
    let mut out = vec![None; width * height];
    for x in 0..width {
        let Some(piece) = tr.pieces.iter().position(|p| p.contains_column(x)) else {
            continue;
        };
        let Some((top, bottom)) = region_rows(sky, ground, x, height) else {
            continue;
        };
        for y in 0..height {
            let yf = y as f64;
            if yf >= top && yf <= bottom {
                out[y * width + x] = Some(piece);
            }
        }
    }
    out
}

/// Piece holding more than half of each unit's pixels.
pub fn unit_pieces(
    graph: &SegmentGraph,
    map: &[Option<usize>],
    n_pieces: usize,
) -> Vec<Option<usize>> {
    graph
        .segments
        .iter()
        .map(|s| {
            let mut counts = vec![0usize; n_pieces];
            for &p in &s.pixels {
                if let Some(k) = map[p] {
                    counts[k] += 1;
                }
            }
            counts.iter().position(|&c| 2 * c > s.pixels.len())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gae::boundary::LineKind;

    fn line(w: usize, f: impl Fn(usize) -> Option<f64>) -> BoundaryPolyline {
        BoundaryPolyline {
            kind: LineKind::Sky,
            ys: (0..w).map(f).collect(),
            confidence: 1.0,
        }
    }

    #[test]
    fn flat_skyline_is_center() {
        let sky = line(200, |x| (40..160).contains(&x).then_some(50.0));
        let ground = BoundaryPolyline::empty(LineKind::Ground, 200);
        let t = fit_trapezoids(&sky, &ground, &[], 150, &TrapezoidParams::default());
        assert_eq!(t.pieces.len(), 1);
        assert_eq!(t.pieces[0].orientation, GeometricClass::PlanarCenter);
    }

    #[test]
    fn corner_building_splits_at_apex() {
        // apex at column 100: rising toward the corner on the left
        let sky = line(200, |x| {
            let x = x as f64;
            Some(if x <= 100.0 {
                80.0 - 0.3 * x
            } else {
                50.0 + 0.3 * (x - 100.0)
            })
        });
        let ground = BoundaryPolyline::empty(LineKind::Ground, 200);
        let t = fit_trapezoids(&sky, &ground, &[], 150, &TrapezoidParams::default());
        let o: Vec<_> = t.pieces.iter().map(|p| p.orientation).collect();
        assert_eq!(
            o,
            vec![GeometricClass::PlanarLeft, GeometricClass::PlanarRight]
        );
        let m = fit_trapezoids(
            &sky.mirrored(),
            &ground,
            &[],
            150,
            &TrapezoidParams::default(),
        );
        let mo: Vec<_> = m
            .pieces
            .iter()
            .rev()
            .map(|p| p.orientation.mirrored())
            .collect();
        assert_eq!(mo, o);
    }

    #[test]
    fn long_vertical_segment_breaks() {
        let sky = line(200, |_| Some(30.0));
        let ground = line(200, |_| Some(130.0));
        let seg = LineSegment::new(90.0, 35.0, 90.0, 125.0);
        let t = fit_trapezoids(&sky, &ground, &[seg], 150, &TrapezoidParams::default());
        assert_eq!(t.pieces.len(), 2);
        assert_eq!(t.breaks, vec![90.0]);
    }

    #[test]
    fn ground_line_substitutes_with_flipped_sign() {
        let sky = BoundaryPolyline::empty(LineKind::Sky, 100);
        let ground = line(100, |x| Some(120.0 - 0.3 * x as f64));
        let t = fit_trapezoids(&sky, &ground, &[], 150, &TrapezoidParams::default());
        assert!(t.pieces[0].from_ground);
        assert_eq!(t.pieces[0].orientation, GeometricClass::PlanarRight);
    }
}
