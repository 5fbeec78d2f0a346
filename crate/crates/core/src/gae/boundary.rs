//! Sky and ground polylines traced from the coarse labeling, and their
//! validation against line, edge and defocus evidence.

use crate::class::CoarseClass;
use crate::imageops::{dilate_max, Plane};
use crate::lineworks::EvidenceMaps;
use crate::segmentation::connected_components;

const SUPPORT: u8 = CoarseClass::Support as u8;
const VERTICAL: u8 = CoarseClass::Vertical as u8;
const SKY: u8 = CoarseClass::Sky as u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineKind {
    Sky,
    Ground,
}

/// Per-column boundary row. `y` is the upper pixel of the transition pair:
/// the last sky row for a sky line, the last vertical row for a ground line.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPolyline {
    pub kind: LineKind,
    pub ys: Vec<Option<f64>>,
    pub confidence: f64,
}

impl BoundaryPolyline {
    pub fn empty(kind: LineKind, width: usize) -> Self {
        BoundaryPolyline {
            kind,
            ys: vec![None; width],
            confidence: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.ys.len()
    }

    pub fn valid_count(&self) -> usize {
        self.ys.iter().filter(|y| y.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.valid_count() == 0
    }

    pub fn y_at(&self, x: usize) -> Option<f64> {
        self.ys.get(x).copied().flatten()
    }

    /// Contiguous runs of valid columns as `[start, end)`.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (x, y) in self.ys.iter().enumerate() {
            match (y, start) {
                (Some(_), None) => start = Some(x),
                (None, Some(s)) => {
                    out.push((s, x));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, self.ys.len()));
        }
        out
    }

    pub fn mirrored(&self) -> BoundaryPolyline {
        let mut ys = self.ys.clone();
        ys.reverse();
        BoundaryPolyline {
            kind: self.kind,
            ys,
            confidence: self.confidence,
        }
    }

    fn drop_short_runs(&mut self, min_run: usize) {
        for (s, e) in self.runs() {
            if e - s < min_run {
                for y in &mut self.ys[s..e] {
                    *y = None;
                }
            }
        }
    }
}

/// Coarse per-pixel classes (support 0, vertical 1, sky 2).
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseMap {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<u8>,
}

impl CoarseMap {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.classes[y * self.width + x]
    }

    pub fn mirrored(&self) -> CoarseMap {
        let (w, h) = (self.width, self.height);
        let classes = (0..w * h)
            .map(|p| self.classes[(p / w) * w + (w - 1 - p % w)])
            .collect();
        CoarseMap {
            width: w,
            height: h,
            classes,
        }
    }
}

/// Members of components of `class` touching the given border row.
fn border_components(map: &CoarseMap, mask: Option<&[bool]>, class: u8, row: usize) -> Vec<bool> {
    let (w, h) = (map.width, map.height);
    let keep = |p: usize| map.classes[p] == class && !mask.is_some_and(|m| m[p]);
    let (comp, n) = connected_components(w, h, |a, b| keep(a) == keep(b));
    let mut touching = vec![false; n];
    for x in 0..w {
        let p = row * w + x;
        if keep(p) {
            touching[comp[p] as usize] = true;
        }
    }
    (0..w * h)
        .map(|p| keep(p) && touching[comp[p] as usize])
        .collect()
}

/// Trace the sky line (lowest transition from top-connected sky into
/// vertical) and the ground line (highest transition from vertical into
/// bottom-connected support). Masked pixels are skipped; columns whose
/// transition spans a masked gap are filled by linear interpolation. Runs
/// shorter than `min_run` columns are dropped.
pub fn trace_boundaries(
    map: &CoarseMap,
    mask: Option<&[bool]>,
    min_run: usize,
) -> (BoundaryPolyline, BoundaryPolyline) {
    let (w, h) = (map.width, map.height);
    let top_sky = border_components(map, mask, SKY, 0);
    let bottom_support = border_components(map, mask, SUPPORT, h - 1);
    let mut sky = BoundaryPolyline::empty(LineKind::Sky, w);
    let mut ground = BoundaryPolyline::empty(LineKind::Ground, w);
    let mut sky_gap = vec![false; w];
    let mut ground_gap = vec![false; w];
    for x in 0..w {
        let rows: Vec<usize> = (0..h)
            .filter(|&y| !mask.is_some_and(|m| m[y * w + x]))
            .collect();
        for pair in rows.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (pa, pb) = (a * w + x, b * w + x);
            if top_sky[pa] && map.classes[pb] == VERTICAL {
                sky.ys[x] = Some(a as f64);
                sky_gap[x] = b != a + 1;
            }
        }
        for pair in rows.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (pa, pb) = (a * w + x, b * w + x);
            if map.classes[pa] == VERTICAL && bottom_support[pb] {
                ground.ys[x] = Some(a as f64);
                ground_gap[x] = b != a + 1;
                break;
            }
        }
    }
    interpolate_gaps(&mut sky, &sky_gap);
    interpolate_gaps(&mut ground, &ground_gap);
    sky.drop_short_runs(min_run);
    ground.drop_short_runs(min_run);
    (sky, ground)
}

fn interpolate_gaps(line: &mut BoundaryPolyline, gap: &[bool]) {
    if !gap.iter().any(|g| *g) {
        return;
    }
    let w = line.ys.len();
    let anchors: Vec<(usize, f64)> = (0..w)
        .filter(|&x| !gap[x])
        .filter_map(|x| line.ys[x].map(|y| (x, y)))
        .collect();
    for x in 0..w {
        if !gap[x] {
            continue;
        }
        let left = anchors.iter().rev().find(|a| a.0 < x);
        let right = anchors.iter().find(|a| a.0 > x);
        line.ys[x] = match (left, right) {
            (Some(l), Some(r)) => {
                let t = (x - l.0) as f64 / (r.0 - l.0) as f64;
                Some(l.1 + t * (r.1 - l.1))
            }
            (Some(a), None) | (None, Some(a)) => Some(a.1),
            (None, None) => None,
        };
    }
}

/// Evidence planes used in line validation, with the line and edge maps
/// dilated to tolerate 1-2 px misregistration.
#[derive(Clone, Debug, PartialEq)]
pub struct LineEvidence {
    pub line: Plane,
    pub edge: Plane,
    pub defocus: Plane,
}

impl LineEvidence {
    pub fn new(ev: &EvidenceMaps, dilation: usize) -> Self {
        LineEvidence {
            line: dilate_max(&ev.line_map, dilation),
            edge: dilate_max(&ev.edge_map, dilation),
            defocus: ev.defocus_edge_map.clone(),
        }
    }

    pub fn mirrored(&self) -> LineEvidence {
        let m = |p: &Plane| {
            let (w, h) = (p.width, p.height);
            Plane::new(
                w,
                h,
                (0..w * h)
                    .map(|i| p.data[(i / w) * w + (w - 1 - i % w)])
                    .collect(),
            )
        };
        LineEvidence {
            line: m(&self.line),
            edge: m(&self.edge),
            defocus: m(&self.defocus),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedLine {
    pub polyline: BoundaryPolyline,
    /// Product of the three evidence values per valid column.
    pub support: Vec<Option<f64>>,
    pub accepted: bool,
}

/// Per-column product of line, edge and defocus evidence; the confidence is
/// its mean over valid columns.
pub fn validate_boundary(
    line: &BoundaryPolyline,
    ev: &LineEvidence,
    min_confidence: f64,
) -> ValidatedLine {
    let h = ev.line.height;
    let support: Vec<Option<f64>> = line
        .ys
        .iter()
        .enumerate()
        .map(|(x, y)| {
            y.map(|y| {
                let r = (y.round() as usize).min(h - 1);
                ev.line.at(x, r) * ev.edge.at(x, r) * ev.defocus.at(x, r)
            })
        })
        .collect();
    let vals: Vec<f64> = support.iter().flatten().copied().collect();
    let confidence = if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let mut polyline = line.clone();
    polyline.confidence = confidence;
    ValidatedLine {
        accepted: !vals.is_empty() && confidence >= min_confidence,
        polyline,
        support,
    }
}

/// Write accepted support values into the boundary-line map on both pixels
/// of every transition pair.
pub fn deposit_line(map: &mut Plane, line: &ValidatedLine) {
    if !line.accepted {
        return;
    }
    let (w, h) = (map.width, map.height);
    for (x, (y, s)) in line.polyline.ys.iter().zip(&line.support).enumerate() {
        if let (Some(y), Some(s)) = (y, s) {
            let r = y.round() as usize;
            for row in [r, r + 1] {
                if row < h {
                    let v = &mut map.data[row * w + x];
                    *v = v.max(*s);
                }
            }
        }
    }
}

/// Connected vertical regions lying above the sky line or below the ground
/// line, with at least `min_area` pixels.
pub fn check_above_below(
    map: &CoarseMap,
    sky: &BoundaryPolyline,
    ground: &BoundaryPolyline,
    min_area: usize,
) -> Vec<Vec<usize>> {
    let (w, h) = (map.width, map.height);
    let candidate: Vec<bool> = (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, (p / w) as f64);
            map.classes[p] == VERTICAL
                && (sky.y_at(x).is_some_and(|s| y < s)
                    || ground.y_at(x).is_some_and(|g| y > g + 1.0))
        })
        .collect();
    let (comp, n) = connected_components(w, h, |a, b| candidate[a] == candidate[b]);
    let mut members = vec![Vec::new(); n];
    for p in 0..w * h {
        if candidate[p] {
            members[comp[p] as usize].push(p);
        }
    }
    members
        .into_iter()
        .filter(|m| !m.is_empty() && m.len() >= min_area)
        .collect()
}
