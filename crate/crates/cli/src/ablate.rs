//! Cumulative attribute ablation over a labeled dataset.

use std::fmt::Write as _;

use gal_core::gae::AttributeSet;
use gal_core::ipl::{IplModel, TrainingExample};
use gal_core::{LabelMap, Result};
use rayon::prelude::*;

use crate::dataset::DatasetItem;
use crate::eval::EvalReport;
use crate::pipeline::Pipeline;

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub step: String,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationTable {
    /// Accuracy of the initial labeling alone, before refinement.
    pub ipl_only: f64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<20} {:>9} {:>9}", "attributes", "accuracy", "gain");
        let _ = writeln!(
            s,
            "{:<20} {:>8.2}% {:>9}",
            "initial labeling",
            100.0 * self.ipl_only,
            ""
        );
        let mut prev: Option<f64> = None;
        for r in &self.rows {
            let a = r.report.overall();
            let gain = prev.map_or(String::new(), |p| format!("{:+.2}%", 100.0 * (a - p)));
            let _ = writeln!(s, "{:<20} {:>8.2}% {:>9}", r.step, 100.0 * a, gain);
            prev = Some(a);
        }
        s
    }
}

/// Number of images used for training when `train_count` is 0.
pub fn default_train_count(n: usize) -> usize {
    (n / 3).max(1)
}

pub fn train_split(n: usize, train_count: usize) -> usize {
    let t = if train_count == 0 {
        default_train_count(n)
    } else {
        train_count
    };
    t.min(n.saturating_sub(1)).max(1)
}

/// Train the initial labeler on the first images, then evaluate the rest at
/// every ablation step.
pub fn ablate(items: &[(&DatasetItem, &LabelMap)], base: &Pipeline) -> Result<AblationTable> {
    let split = train_split(items.len(), base.config.train_count);
    let examples: Vec<TrainingExample> = items[..split]
        .iter()
        .map(|(i, t)| TrainingExample {
            image: &i.image,
            truth: t,
        })
        .collect();
    let model = IplModel::train(&examples, &base.config)?;
    let pipeline = Pipeline::new(base.config.clone(), model, Some(base.params))?;
    let test = &items[split..];
    let steps = AttributeSet::ablation_steps();
    let results: Vec<(LabelMap, Vec<LabelMap>)> = test
        .par_iter()
        .map(|(item, _)| -> Result<(LabelMap, Vec<LabelMap>)> {
            let mut maps = Vec::with_capacity(steps.len());
            let mut initial = None;
            for (_, set) in &steps {
                let out = pipeline.run(&item.image, &item.boxes, None, set)?;
                initial.get_or_insert_with(|| out.initial_map());
                maps.push(out.refinement.label_map);
            }
            Ok((initial.expect("at least one step"), maps))
        })
        .collect::<Result<_>>()?;
    let mut ipl = EvalReport::default();
    let mut rows: Vec<AblationRow> = steps
        .iter()
        .map(|(name, _)| AblationRow {
            step: name.to_string(),
            report: EvalReport::default(),
        })
        .collect();
    for ((item, truth), (init, maps)) in test.iter().zip(&results) {
        ipl.add(&item.stem, init, truth)?;
        for (row, m) in rows.iter_mut().zip(maps) {
            row.report.add(&item.stem, m, truth)?;
        }
    }
    Ok(AblationTable {
        ipl_only: ipl.overall(),
        rows,
    })
}
