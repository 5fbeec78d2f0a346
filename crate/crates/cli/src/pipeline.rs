//! Image → initial labeling → global attributes → CRF refinement.

use std::fs;
use std::path::Path;

use gal_core::crf::{refine, CrfParams, Refinement};
use gal_core::gae::{
    extract_attributes, AttributeSet, BoundingBox, GaeInput, GaeOutput, GaeParams,
};
use gal_core::ipl::{
    parse_vertical_probs, InitialLabeling, IplModel, SegmentationStack, TrainingExample,
};
use gal_core::lineworks::EvidenceMaps;
use gal_core::raster::{write_label_map, write_raster};
use gal_core::{Config, GalError, LabelMap, LabelMode, Raster, Result};
use log::info;

use crate::learn::{learn_from_images, LabeledImage};
use crate::overlay::render_overlay;
use crate::synth::{generate_scenes, SceneKind};

/// Seed of the synthetic corpus behind the built-in model.
pub const BUILTIN_SEED: u64 = 0x6A1_5EED;

/// IPL model trained on `builtin_train_count` generated scenes of every kind.
pub fn builtin_model(config: &Config) -> Result<IplModel> {
    let scenes = generate_scenes(
        BUILTIN_SEED,
        config.builtin_train_count.max(1),
        &SceneKind::ALL,
    )?;
    let examples: Vec<TrainingExample> = scenes
        .iter()
        .map(|s| TrainingExample {
            image: &s.image,
            truth: &s.truth,
        })
        .collect();
    info!(
        "training built-in model on {} synthetic scenes",
        examples.len()
    );
    IplModel::train(&examples, config)
}

/// Seed of the synthetic scenes the built-in CRF parameters are learned on.
pub const BUILTIN_LEARN_SEED: u64 = 0x1EA2_5EED;

/// Built-in model plus CRF parameters learned on a second synthetic set of
/// half the training size.
pub fn builtin_pipeline(config: Config) -> Result<Pipeline> {
    let model = builtin_model(&config)?;
    let pipeline = Pipeline::new(config, model, None)?;
    let count = (pipeline.config.builtin_train_count / 2).max(2);
    let scenes = generate_scenes(BUILTIN_LEARN_SEED, count, &SceneKind::ALL)?;
    let images: Vec<LabeledImage> = scenes
        .iter()
        .map(|s| LabeledImage {
            image: &s.image,
            boxes: &s.attributes.boxes,
            truth: &s.truth,
        })
        .collect();
    info!(
        "learning built-in CRF parameters on {} synthetic scenes",
        images.len()
    );
    let params = learn_from_images(&images, &pipeline)?;
    Ok(Pipeline { params, ..pipeline })
}

pub struct Pipeline {
    pub config: Config,
    pub model: IplModel,
    pub params: CrfParams,
    pub gae: GaeParams,
}

pub struct PipelineOutput {
    pub initial: InitialLabeling,
    pub evidence: EvidenceMaps,
    pub gae: GaeOutput,
    pub refinement: Refinement,
}

impl PipelineOutput {
    pub fn label_map(&self) -> &LabelMap {
        &self.refinement.label_map
    }

    pub fn initial_map(&self) -> LabelMap {
        self.initial.label_map()
    }
}

impl Pipeline {
    pub fn new(config: Config, model: IplModel, params: Option<CrfParams>) -> Result<Pipeline> {
        config.validate()?;
        model.validate()?;
        let params = params.unwrap_or_else(|| CrfParams::from_config(&config));
        params.validate()?;
        Ok(Pipeline {
            gae: GaeParams::from_config(&config),
            config,
            model,
            params,
        })
    }

    /// `vertical_probs` is the text of an external 5-class file replacing
    /// the built-in vertical split.
    pub fn run(
        &self,
        image: &Raster,
        boxes: &[BoundingBox],
        vertical_probs: Option<&str>,
        enabled: &AttributeSet,
    ) -> Result<PipelineOutput> {
        let stack = SegmentationStack::compute(image, &self.config)?;
        let vertical = vertical_probs
            .map(|t| parse_vertical_probs(t, stack.fine.n_segments()))
            .transpose()?;
        let initial = self
            .model
            .label_with_stack(image, stack, vertical.as_deref())?;
        let evidence = EvidenceMaps::compute(image, &self.config);
        let gae = extract_attributes(
            &GaeInput {
                image,
                graph: &initial.stack.fine,
                initial: &initial.initial,
                evidence: &evidence,
                boxes,
            },
            &self.gae,
            enabled,
        )?;
        let refinement = refine(
            &gae.maps,
            &initial.stack.fine,
            &self.params,
            self.config.expansion_max_cycles,
        )?;
        Ok(PipelineOutput {
            initial,
            evidence,
            gae,
            refinement,
        })
    }
}

/// `<stem>.pgm`, `<stem>_color.ppm`, `<stem>_overlay.ppm`, `<stem>_gav.txt`
/// and `<stem>_energy.txt` in `dir`.
pub fn write_outputs(dir: &Path, stem: &str, image: &Raster, out: &PipelineOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GalError::io(dir, e))?;
    let labels = out.label_map();
    write_label_map(labels, LabelMode::Codes, dir.join(format!("{stem}.pgm")))?;
    write_label_map(
        labels,
        LabelMode::Colors,
        dir.join(format!("{stem}_color.ppm")),
    )?;
    write_raster(
        &render_overlay(image, labels)?,
        dir.join(format!("{stem}_overlay.ppm")),
    )?;
    let gav = dir.join(format!("{stem}_gav.txt"));
    fs::write(&gav, out.gae.gav.report()).map_err(|e| GalError::io(&gav, e))?;
    let e = &out.refinement.expansion;
    let mut energy = format!(
        "initial {}\nfinal {}\ncycles {}\n",
        e.initial_energy, e.energy, e.cycles
    );
    energy.push_str(&e.trace_text());
    let ep = dir.join(format!("{stem}_energy.txt"));
    fs::write(&ep, energy).map_err(|e| GalError::io(&ep, e))?;
    Ok(())
}
