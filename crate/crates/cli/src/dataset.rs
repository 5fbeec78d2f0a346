//! Dataset directories: `images/` with optional `truth/` and `boxes/`.

use std::fs;
use std::path::{Path, PathBuf};

use gal_core::gae::{read_boxes, BoundingBox};
use gal_core::raster::{read_label_map, read_raster};
use gal_core::{GalError, LabelMap, Raster, Result};

#[derive(Clone, Debug)]
pub struct DatasetItem {
    pub stem: String,
    pub image: Raster,
    pub truth: Option<LabelMap>,
    pub boxes: Vec<BoundingBox>,
}

/// Image paths in `dir/images`, sorted by file name.
pub fn image_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let images = dir.join("images");
    let mut out: Vec<PathBuf> = fs::read_dir(&images)
        .map_err(|e| GalError::io(&images, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ppm" || e == "pgm"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn load_dataset(dir: &Path) -> Result<Vec<DatasetItem>> {
    let mut out = Vec::new();
    for path in image_paths(dir)? {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| GalError::Format(format!("bad file name {}", path.display())))?
            .to_string();
        let image = read_raster(&path)?;
        let tp = dir.join("truth").join(format!("{stem}.pgm"));
        let truth = if tp.exists() {
            Some(read_label_map(&tp)?)
        } else {
            None
        };
        if let Some(t) = &truth {
            if t.width() != image.width() || t.height() != image.height() {
                return Err(GalError::Dimension(format!(
                    "{stem}: truth size differs from the image"
                )));
            }
        }
        let bp = dir.join("boxes").join(format!("{stem}.txt"));
        let boxes = if bp.exists() {
            read_boxes(&bp)?
        } else {
            Vec::new()
        };
        out.push(DatasetItem {
            stem,
            image,
            truth,
            boxes,
        });
    }
    if out.is_empty() {
        return Err(GalError::Format(format!(
            "no images in {}",
            dir.join("images").display()
        )));
    }
    Ok(out)
}

/// Items that have ground truth, as `(item, truth)` pairs.
pub fn with_truth(items: &[DatasetItem]) -> Result<Vec<(&DatasetItem, &LabelMap)>> {
    items
        .iter()
        .map(|i| {
            i.truth
                .as_ref()
                .map(|t| (i, t))
                .ok_or_else(|| GalError::Format(format!("{}: missing ground truth", i.stem)))
        })
        .collect()
}
