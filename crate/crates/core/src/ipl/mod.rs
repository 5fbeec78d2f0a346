//! Initial pixel labeling: super-pixel features, per-segmentation 3-class
//! forests, stage-2 fusion on the intersected units and the 7-class
//! initial distribution.

mod features;
mod forest;
mod fusion;

pub use features::{extract_features, FeatureVector, N_FEATURES};
pub use forest::{train_forest, train_forest_weighted, ForestModel, ForestParams, Node, Tree};
pub use fusion::{train_fusion, FusionModel, COARSE_CLASSES, FUSION_INPUTS};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::class::{ClassDistribution, GeometricClass, NUM_CLASSES};
use crate::config::Config;
use crate::error::{GalError, Result};
use crate::raster::{LabelMap, Raster};
use crate::segmentation::{
    build_graph, graph_segment, intersect_segmentations, parent_map, slic, SegmentGraph,
    Segmentation,
};

pub const VERTICAL_CLASSES: usize = 5;

/// Route a 3-class distribution (support, vertical, sky) and a 5-class
/// vertical split into the 7-class initial distribution.
pub fn assemble_initial(
    p3: &[[f64; COARSE_CLASSES]],
    vertical5: &[[f64; VERTICAL_CLASSES]],
) -> Result<Vec<ClassDistribution>> {
    if p3.len() != vertical5.len() {
        return Err(GalError::Length {
            expected: p3.len(),
            found: vertical5.len(),
        });
    }
    p3.iter()
        .zip(vertical5)
        .map(|(c, v)| {
            let sv: f64 = v.iter().sum();
            if (sv - 1.0).abs() > 1e-6 || v.iter().any(|x| *x < 0.0) {
                return Err(GalError::Degenerate(format!("vertical row sums to {sv}")));
            }
            let mut p = [0.0; NUM_CLASSES];
            p[GeometricClass::Support.index()] = c[0];
            p[GeometricClass::Sky.index()] = c[2];
            for k in 0..VERTICAL_CLASSES {
                p[1 + k] = c[1] * v[k];
            }
            ClassDistribution::from_probs(p)
        })
        .collect()
}

/// Parse `id p_left p_center p_right p_porous p_solid` lines; every id in
/// `0..n_units` must appear exactly once.
pub fn parse_vertical_probs(text: &str, n_units: usize) -> Result<Vec<[f64; VERTICAL_CLASSES]>> {
    let mut rows: Vec<Option<[f64; VERTICAL_CLASSES]>> = vec![None; n_units];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 1 + VERTICAL_CLASSES {
            return Err(GalError::Format(format!(
                "line {}: expected 6 fields",
                ln + 1
            )));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| GalError::Format(format!("line {}: bad id", ln + 1)))?;
        if id >= n_units {
            return Err(GalError::Format(format!(
                "line {}: id {id} out of range",
                ln + 1
            )));
        }
        if rows[id].is_some() {
            return Err(GalError::Format(format!(
                "line {}: duplicate id {id}",
                ln + 1
            )));
        }
        let mut r = [0.0; VERTICAL_CLASSES];
        for k in 0..VERTICAL_CLASSES {
            r[k] = fields[1 + k]
                .parse()
                .map_err(|_| GalError::Format(format!("line {}: bad probability", ln + 1)))?;
        }
        let s: f64 = r.iter().sum();
        if r.iter().any(|v| !v.is_finite() || *v < 0.0) || (s - 1.0).abs() > 1e-6 {
            return Err(GalError::Format(format!(
                "line {}: not a distribution",
                ln + 1
            )));
        }
        rows[id] = Some(r);
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| GalError::Format(format!("missing id {i}"))))
        .collect()
}

pub fn format_vertical_probs(rows: &[[f64; VERTICAL_CLASSES]]) -> String {
    let mut s = String::new();
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i} {:.6} {:.6} {:.6} {:.6} {:.6}",
            r[0], r[1], r[2], r[3], r[4]
        );
    }
    s
}

/// The three segmentations and their intersection.
#[derive(Clone, Debug)]
pub struct SegmentationStack {
    pub sources: [Segmentation; 3],
    pub graphs: [SegmentGraph; 3],
    pub fine: SegmentGraph,
    /// For each source, the source segment containing each fine unit.
    pub parents: [Vec<usize>; 3],
}

impl SegmentationStack {
    pub fn compute(img: &Raster, c: &Config) -> Result<SegmentationStack> {
        let k = c.slic_k.min(img.len_pixels());
        let s0 = slic(img, k, c.slic_compactness)?;
        let s1 = graph_segment(img, c.fh_scale, c.fh_min_size)?;
        let s2 = graph_segment(img, c.fh_coarse_scale, c.fh_coarse_min_size)?;
        let fine = intersect_segmentations(&[&s0, &s1, &s2])?;
        let parents = [
            parent_map(&fine, &s0)?,
            parent_map(&fine, &s1)?,
            parent_map(&fine, &s2)?,
        ];
        let graphs = [build_graph(&s0), build_graph(&s1), build_graph(&s2)];
        Ok(SegmentationStack {
            sources: [s0, s1, s2],
            graphs,
            fine: build_graph(&fine),
            parents,
        })
    }
}

/// Per-segment class counts of a ground-truth map.
pub fn class_counts(seg: &Segmentation, truth: &LabelMap) -> Vec<[usize; NUM_CLASSES]> {
    let mut counts = vec![[0usize; NUM_CLASSES]; seg.n_segments()];
    for (p, &code) in truth.codes().iter().enumerate() {
        counts[seg.label(p)][code as usize] += 1;
    }
    counts
}

fn coarse_majority(c: &[usize; NUM_CLASSES]) -> usize {
    let mut coarse = [0usize; 3];
    for (k, n) in c.iter().enumerate() {
        coarse[GeometricClass::ALL[k].coarse().index()] += n;
    }
    argmax_usize(&coarse)
}

fn argmax_usize(v: &[usize]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

/// Everything the later stages need from the initial labeling.
#[derive(Clone, Debug)]
pub struct InitialLabeling {
    pub stack: SegmentationStack,
    /// Stage-1 probabilities per fine unit, three sources concatenated.
    pub stage1: Vec<[f64; FUSION_INPUTS]>,
    pub p3: Vec<[f64; COARSE_CLASSES]>,
    pub vertical5: Vec<[f64; VERTICAL_CLASSES]>,
    pub initial: Vec<ClassDistribution>,
}

impl InitialLabeling {
    pub fn unit_labels(&self) -> Vec<GeometricClass> {
        self.initial.iter().map(|d| d.argmax()).collect()
    }

    pub fn label_map(&self) -> LabelMap {
        units_to_label_map(&self.stack.fine, &self.unit_labels())
    }
}

pub fn units_to_label_map(graph: &SegmentGraph, labels: &[GeometricClass]) -> LabelMap {
    let n = graph.width * graph.height;
    let codes = (0..n).map(|p| labels[graph.segment_of(p)].code()).collect();
    LabelMap::new(graph.width, graph.height, codes).expect("codes are valid")
}

/// Training image with its ground truth.
pub struct TrainingExample<'a> {
    pub image: &'a Raster,
    pub truth: &'a LabelMap,
}

struct Prepared {
    stack: SegmentationStack,
    features: [Vec<Vec<f64>>; 3],
    counts: [Vec<[usize; NUM_CLASSES]>; 3],
    fine_counts: Vec<[usize; NUM_CLASSES]>,
    n_pixels: f64,
}

fn prepare(ex: &TrainingExample, c: &Config) -> Result<Prepared> {
    if ex.image.width() != ex.truth.width() || ex.image.height() != ex.truth.height() {
        return Err(GalError::Dimension("image and truth sizes differ".into()));
    }
    let stack = SegmentationStack::compute(ex.image, c)?;
    let mut features: [Vec<Vec<f64>>; 3] = Default::default();
    let mut counts: [Vec<[usize; NUM_CLASSES]>; 3] = Default::default();
    for s in 0..3 {
        features[s] = extract_features(ex.image, &stack.graphs[s])?
            .into_iter()
            .map(|f| f.0.to_vec())
            .collect();
        counts[s] = class_counts(&stack.sources[s], ex.truth);
    }
    let fine_counts = class_counts(&stack.fine.segmentation, ex.truth);
    Ok(Prepared {
        n_pixels: ex.image.len_pixels() as f64,
        stack,
        features,
        counts,
        fine_counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IplModel {
    /// One 3-class forest per source segmentation (SLIC, fine FH, coarse FH).
    pub forests: Vec<ForestModel>,
    pub fusion: FusionModel,
    /// 5-class vertical split, applied on SLIC segments.
    pub vertical: Option<ForestModel>,
}

impl IplModel {
    pub fn train(examples: &[TrainingExample], c: &Config) -> Result<IplModel> {
        if examples.is_empty() {
            return Err(GalError::Parameter("no training images".into()));
        }
        let prepared: Vec<Prepared> = examples
            .iter()
            .map(|e| prepare(e, c))
            .collect::<Result<_>>()?;
        let forest_params = |s: usize, salt: u64| ForestParams {
            n_trees: c.forest_trees,
            max_depth: c.forest_max_depth,
            min_leaf: c.forest_min_leaf,
            seed: c.seed.wrapping_add(31 * s as u64 + salt),
        };
        let train_sources = |subset: &[&Prepared], salt: u64| -> Result<Vec<ForestModel>> {
            (0..3)
                .map(|s| {
                    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
                    for p in subset {
                        for (f, cnt) in p.features[s].iter().zip(&p.counts[s]) {
                            let area: usize = cnt.iter().sum();
                            x.push(f.clone());
                            y.push(coarse_majority(cnt));
                            w.push(area as f64 / p.n_pixels);
                        }
                    }
                    train_forest_weighted(&x, &y, &w, COARSE_CLASSES, &forest_params(s, salt))
                })
                .collect()
        };

        // stacking: stage-2 inputs come from forests that did not see the image
        let (mut fx, mut fy, mut fw) = (Vec::new(), Vec::new(), Vec::new());
        if prepared.len() >= 2 {
            for fold in 0..2 {
                let train: Vec<&Prepared> = prepared
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % 2 != fold)
                    .map(|(_, p)| p)
                    .collect();
                let held: Vec<&Prepared> = prepared
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % 2 == fold)
                    .map(|(_, p)| p)
                    .collect();
                let forests = train_sources(&train, 1000 + fold as u64)?;
                for p in held {
                    let stage1 = stage1_inputs(&forests, &p.stack, &p.features)?;
                    for (x, cnt) in stage1.into_iter().zip(&p.fine_counts) {
                        let area: usize = cnt.iter().sum();
                        fx.push(x);
                        fy.push(coarse_majority(cnt));
                        fw.push(area as f64 / p.n_pixels);
                    }
                }
            }
        }
        let all: Vec<&Prepared> = prepared.iter().collect();
        let forests = train_sources(&all, 0)?;
        let fusion = if fx.is_empty() {
            FusionModel::identity()
        } else {
            train_fusion(&fx, &fy, &fw, c.fusion_epochs, c.fusion_learning_rate)?
        };

        let (mut vx, mut vy, mut vw) = (Vec::new(), Vec::new(), Vec::new());
        for p in &prepared {
            for (f, cnt) in p.features[0].iter().zip(&p.counts[0]) {
                let vert = &cnt[1..1 + VERTICAL_CLASSES];
                let nv: usize = vert.iter().sum();
                if nv > 0 && coarse_majority(cnt) == 1 {
                    vx.push(f.clone());
                    vy.push(argmax_usize(vert));
                    vw.push(nv as f64 / p.n_pixels);
                }
            }
        }
        let vertical = if vx.is_empty() {
            None
        } else {
            Some(train_forest_weighted(
                &vx,
                &vy,
                &vw,
                VERTICAL_CLASSES,
                &forest_params(3, 7),
            )?)
        };
        debug!(
            "ipl trained on {} images: {} fusion samples, {} vertical samples",
            examples.len(),
            fx.len(),
            vx.len()
        );
        Ok(IplModel {
            forests,
            fusion,
            vertical,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.forests.len() != 3 {
            return Err(GalError::Parameter(
                "model needs three source forests".into(),
            ));
        }
        for f in &self.forests {
            f.validate()?;
            if f.n_classes != COARSE_CLASSES || f.n_features != N_FEATURES {
                return Err(GalError::Parameter("source forest has wrong shape".into()));
            }
        }
        if let Some(v) = &self.vertical {
            v.validate()?;
            if v.n_classes != VERTICAL_CLASSES || v.n_features != N_FEATURES {
                return Err(GalError::Parameter(
                    "vertical forest has wrong shape".into(),
                ));
            }
        }
        self.fusion.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<IplModel> {
        let m: IplModel =
            serde_json::from_str(text).map_err(|e| GalError::Format(format!("model: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| GalError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<IplModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GalError::io(path, e))?;
        IplModel::from_json(&text)
    }

    /// Label an image. `vertical_override` replaces the built-in 5-class
    /// split with externally supplied rows, one per fine unit.
    pub fn label(
        &self,
        img: &Raster,
        c: &Config,
        vertical_override: Option<&[[f64; VERTICAL_CLASSES]]>,
    ) -> Result<InitialLabeling> {
        let stack = SegmentationStack::compute(img, c)?;
        self.label_with_stack(img, stack, vertical_override)
    }

    pub fn label_with_stack(
        &self,
        img: &Raster,
        stack: SegmentationStack,
        vertical_override: Option<&[[f64; VERTICAL_CLASSES]]>,
    ) -> Result<InitialLabeling> {
        let mut features: [Vec<Vec<f64>>; 3] = Default::default();
        for s in 0..3 {
            features[s] = extract_features(img, &stack.graphs[s])?
                .into_iter()
                .map(|f| f.0.to_vec())
                .collect();
        }
        let stage1 = stage1_inputs(&self.forests, &stack, &features)?;
        let p3: Vec<[f64; 3]> = stage1.iter().map(|x| self.fusion.predict(x)).collect();
        let n_units = stack.fine.n_segments();
        let vertical5 = match (vertical_override, &self.vertical) {
            (Some(rows), _) => {
                if rows.len() != n_units {
                    return Err(GalError::Length {
                        expected: n_units,
                        found: rows.len(),
                    });
                }
                rows.to_vec()
            }
            (None, Some(v)) => {
                let per_slic: Vec<[f64; VERTICAL_CLASSES]> = features[0]
                    .iter()
                    .map(|f| v.predict(f).map(|r| r.try_into().expect("five classes")))
                    .collect::<Result<_>>()?;
                stack.parents[0].iter().map(|&s| per_slic[s]).collect()
            }
            (None, None) => {
                return Err(GalError::Config(
                    "no vertical-class probabilities and no built-in vertical model".into(),
                ))
            }
        };
        let initial = assemble_initial(&p3, &vertical5)?;
        Ok(InitialLabeling {
            stack,
            stage1,
            p3,
            vertical5,
            initial,
        })
    }
}

fn stage1_inputs(
    forests: &[ForestModel],
    stack: &SegmentationStack,
    features: &[Vec<Vec<f64>>; 3],
) -> Result<Vec<[f64; FUSION_INPUTS]>> {
    let per_source: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|s| {
            features[s]
                .iter()
                .map(|f| forests[s].predict(f))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..stack.fine.n_segments())
        .map(|u| {
            let mut x = [0.0; FUSION_INPUTS];
            for s in 0..3 {
                let pr = &per_source[s][stack.parents[s][u]];
                x[3 * s..3 * s + 3].copy_from_slice(pr);
            }
            x
        })
        .collect())
}

/// 3-class argmax of a fused row.
pub fn coarse_argmax(p: &[f64; COARSE_CLASSES]) -> usize {
    argmax(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_mass_is_routed() {
        let d = assemble_initial(&[[1.0, 0.0, 0.0]], &[[0.2; 5]]).unwrap();
        assert_eq!(d[0].probs(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn vertical_mass_is_split() {
        let d = assemble_initial(&[[0.0, 1.0, 0.0]], &[[0.2; 5]]).unwrap();
        let p = d[0].probs();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[6], 0.0);
        for v in &p[1..6] {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn vertical_file_round_trip() {
        let rows = vec![[0.1, 0.2, 0.3, 0.2, 0.2], [1.0, 0.0, 0.0, 0.0, 0.0]];
        let parsed = parse_vertical_probs(&format_vertical_probs(&rows), 2).unwrap();
        assert_eq!(parsed, rows);
        assert!(parse_vertical_probs("0 0.5 0.5 0 0 0\n", 2).is_err());
        assert!(parse_vertical_probs("0 0.5 0.5 0 0\n", 1).is_err());
        assert!(parse_vertical_probs("0 0.6 0.5 0 0 0\n", 1).is_err());
        assert!(parse_vertical_probs("0 1 0 0 0 0\n0 1 0 0 0 0\n", 1).is_err());
    }
}
