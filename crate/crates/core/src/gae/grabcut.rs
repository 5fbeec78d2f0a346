//! Grab-cut figure/ground separation inside user-supplied boxes.

use std::path::Path;

use crate::error::{GalError, Result};
use crate::gae::gmm::{from_assignment, kmeans, GmmModel};
use crate::optim::{max_flow, FlowNetwork};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }
}

/// One `x y w h` box per line; blank lines and `#` comments are skipped.
pub fn parse_boxes(text: &str) -> Result<Vec<BoundingBox>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                GalError::Format(format!("boxes line {}: expected four integers", i + 1))
            })?;
        if v.len() != 4 {
            return Err(GalError::Format(format!(
                "boxes line {}: expected four integers",
                i + 1
            )));
        }
        out.push(BoundingBox {
            x: v[0],
            y: v[1],
            w: v[2],
            h: v[3],
        });
    }
    Ok(out)
}

pub fn read_boxes(path: impl AsRef<Path>) -> Result<Vec<BoundingBox>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| GalError::io(path, e))?;
    parse_boxes(&text)
}

pub fn format_boxes(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{} {} {} {}\n", b.x, b.y, b.w, b.h))
        .collect()
}

/// Clip to the image; empty boxes and boxes covering the whole image are
/// rejected.
pub fn clip_box(b: &BoundingBox, width: usize, height: usize) -> Option<BoundingBox> {
    if b.x >= width || b.y >= height {
        return None;
    }
    let c = BoundingBox {
        x: b.x,
        y: b.y,
        w: b.w.min(width - b.x),
        h: b.h.min(height - b.y),
    };
    if c.w == 0 || c.h == 0 || (c.w == width && c.h == height) {
        return None;
    }
    Some(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrabCutParams {
    pub components: usize,
    pub iterations: usize,
    pub frame: usize,
    pub gamma: f64,
}

impl Default for GrabCutParams {
    fn default() -> Self {
        GrabCutParams {
            components: 3,
            iterations: 5,
            frame: 10,
            gamma: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolidMask {
    pub bbox: BoundingBox,
    /// Full-image foreground mask.
    pub mask: Vec<bool>,
    /// Energy after each iteration's cut.
    pub energies: Vec<f64>,
}

impl SolidMask {
    pub fn area(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

const NEIGHBORS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

struct Pairs {
    /// (p, q, weight) over 8-neighbors touching the box.
    list: Vec<(usize, usize, f64)>,
}

fn smoothness(img: &Raster, bbox: &BoundingBox, gamma: f64) -> Pairs {
    let (w, h) = (img.width(), img.height());
    let diff2 = |p: usize, q: usize| -> f64 {
        let (a, b) = (img.rgb_at(p), img.rgb_at(q));
        (0..3).map(|d| (a[d] - b[d]).powi(2)).sum()
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            for (dx, dy) in NEIGHBORS {
                let (xx, yy) = (x as isize + dx, y as isize + dy);
                if xx >= 0 && (xx as usize) < w && (yy as usize) < h {
                    total += diff2(y * w + x, yy as usize * w + xx as usize);
                    count += 1;
                }
            }
        }
    }
    let mean = if count > 0 { total / count as f64 } else { 0.0 };
    let beta = if mean > 0.0 { 1.0 / (2.0 * mean) } else { 0.0 };
    let mut list = Vec::new();
    for y in 0..h {
        for x in 0..w {
            for (dx, dy) in NEIGHBORS {
                let (xx, yy) = (x as isize + dx, y as isize + dy);
                if xx < 0 || xx as usize >= w || yy as usize >= h {
                    continue;
                }
                let (xx, yy) = (xx as usize, yy as usize);
                if !bbox.contains(x, y) && !bbox.contains(xx, yy) {
                    continue;
                }
                let (p, q) = (y * w + x, yy * w + xx);
                let dist = if dx != 0 && dy != 0 {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                };
                list.push((p, q, gamma * (-beta * diff2(p, q)).exp() / dist));
            }
        }
    }
    Pairs { list }
}

/// `-ln` of the best component term.
fn data_cost(model: &GmmModel, x: &[f64; 3]) -> f64 {
    let t = model.component_log_terms(x);
    -t.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn best_component(model: &GmmModel, x: &[f64; 3]) -> usize {
    let t = model.component_log_terms(x);
    (0..t.len()).fold(0, |b, i| if t[i] > t[b] { i } else { b })
}

/// Segment the foreground of one box. Pixels outside the box are fixed
/// background; the background model is seeded from a frame around it.
pub fn grab_cut(img: &Raster, bbox: &BoundingBox, params: &GrabCutParams) -> Result<SolidMask> {
    let (w, h) = (img.width(), img.height());
    let bbox = clip_box(bbox, w, h)
        .ok_or_else(|| GalError::Parameter("box is empty or covers the image".into()))?;
    let fr = params.frame;
    let inside: Vec<usize> = (bbox.y..bbox.y + bbox.h)
        .flat_map(|y| (bbox.x..bbox.x + bbox.w).map(move |x| y * w + x))
        .collect();
    let frame: Vec<usize> = (bbox.y.saturating_sub(fr)..(bbox.y + bbox.h + fr).min(h))
        .flat_map(|y| {
            (bbox.x.saturating_sub(fr)..(bbox.x + bbox.w + fr).min(w)).map(move |x| (x, y))
        })
        .filter(|&(x, y)| !bbox.contains(x, y))
        .map(|(x, y)| y * w + x)
        .collect();
    if frame.is_empty() {
        return Err(GalError::Parameter("box leaves no background frame".into()));
    }
    let pairs = smoothness(img, &bbox, params.gamma);
    let mut node = vec![usize::MAX; w * h];
    for (i, &p) in inside.iter().enumerate() {
        node[p] = i;
    }
    let mut fg = vec![false; w * h];
    for &p in &inside {
        fg[p] = true;
    }
    let k = params.components.max(1);
    let colors = |ps: &[usize]| -> Vec<[f64; 3]> { ps.iter().map(|&p| img.rgb_at(p)).collect() };
    let (mut fg_model, mut bg_model) = {
        let f = colors(&inside);
        let b = colors(&frame);
        let kf = k.min(f.len());
        let kb = k.min(b.len());
        (
            from_assignment(&f, &kmeans(&f, kf, 10), kf),
            from_assignment(&b, &kmeans(&b, kb, 10), kb),
        )
    };
    let mut energies = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        if it > 0 {
            // hard component assignment, then maximum-likelihood refit
            let fg_px: Vec<usize> = inside.iter().copied().filter(|&p| fg[p]).collect();
            let bg_px: Vec<usize> = frame
                .iter()
                .copied()
                .chain(inside.iter().copied().filter(|&p| !fg[p]))
                .collect();
            let refit = |model: &GmmModel, ps: &[usize]| -> GmmModel {
                if ps.is_empty() {
                    return model.clone();
                }
                let c = colors(ps);
                let assign: Vec<usize> = c.iter().map(|x| best_component(model, x)).collect();
                from_assignment(&c, &assign, model.k())
            };
            fg_model = refit(&fg_model, &fg_px);
            bg_model = refit(&bg_model, &bg_px);
        }
        let n = inside.len();
        let (s, t) = (n, n + 1);
        let mut net = FlowNetwork::new(n + 2, s, t)?;
        let mut cost_fg = vec![0.0; n];
        let mut cost_bg = vec![0.0; n];
        for (i, &p) in inside.iter().enumerate() {
            let x = img.rgb_at(p);
            cost_fg[i] = data_cost(&fg_model, &x);
            cost_bg[i] = data_cost(&bg_model, &x);
        }
        for &(p, q, wt) in &pairs.list {
            match (node[p], node[q]) {
                (usize::MAX, j) | (j, usize::MAX) => cost_fg[j] += wt,
                (i, j) => {
                    net.add_arc(i, j, wt)?;
                    net.add_arc(j, i, wt)?;
                }
            }
        }
        for i in 0..n {
            let m = cost_fg[i].min(cost_bg[i]);
            // source side is foreground: cutting s->i pays the background cost
            net.add_arc(s, i, cost_bg[i] - m)?;
            net.add_arc(i, t, cost_fg[i] - m)?;
        }
        let cut = max_flow(&net);
        for (i, &p) in inside.iter().enumerate() {
            fg[p] = cut.source_side[i];
        }
        energies.push(energy(
            img, &fg, &inside, &frame, &pairs, &fg_model, &bg_model,
        ));
    }
    Ok(SolidMask {
        bbox,
        mask: fg,
        energies,
    })
}

fn energy(
    img: &Raster,
    fg: &[bool],
    inside: &[usize],
    frame: &[usize],
    pairs: &Pairs,
    fg_model: &GmmModel,
    bg_model: &GmmModel,
) -> f64 {
    let mut e = 0.0;
    for &p in inside.iter().chain(frame) {
        let x = img.rgb_at(p);
        e += if fg[p] {
            data_cost(fg_model, &x)
        } else {
            data_cost(bg_model, &x)
        };
    }
    for &(p, q, wt) in &pairs.list {
        if fg[p] != fg[q] {
            e += wt;
        }
    }
    e
}
