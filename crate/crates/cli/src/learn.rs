//! CRF parameter learning over labeled images.

use gal_core::crf::{learn_params, CrfParams, CrfSample};
use gal_core::gae::{AttributeMaps, AttributeSet, BoundingBox};
use gal_core::segmentation::SegmentGraph;
use gal_core::{LabelMap, Raster, Result};
use rayon::prelude::*;

use crate::dataset::DatasetItem;
use crate::pipeline::Pipeline;

#[derive(Clone, Copy)]
pub struct LabeledImage<'a> {
    pub image: &'a Raster,
    pub boxes: &'a [BoundingBox],
    pub truth: &'a LabelMap,
}

/// Extract attribute maps for every image with all attributes enabled and
/// grid-search the CRF parameters on them.
pub fn learn_from_images(images: &[LabeledImage], pipeline: &Pipeline) -> Result<CrfParams> {
    let prepared: Vec<(AttributeMaps, SegmentGraph)> = images
        .par_iter()
        .map(|li| {
            let out = pipeline.run(li.image, li.boxes, None, &AttributeSet::all())?;
            Ok((out.gae.maps, out.initial.stack.fine))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<CrfSample> = prepared
        .iter()
        .zip(images)
        .map(|((maps, graph), li)| CrfSample {
            maps,
            graph,
            truth: li.truth,
        })
        .collect();
    learn_params(
        &samples,
        &pipeline.params,
        pipeline.config.learn_folds,
        pipeline.config.expansion_max_cycles,
    )
}

pub fn learn_from_dataset(
    items: &[(&DatasetItem, &LabelMap)],
    pipeline: &Pipeline,
) -> Result<CrfParams> {
    let images: Vec<LabeledImage> = items
        .iter()
        .map(|(item, truth)| LabeledImage {
            image: &item.image,
            boxes: &item.boxes,
            truth,
        })
        .collect();
    learn_from_images(&images, pipeline)
}
