//! Half-and-half blend of an image with the class palette.

use gal_core::{GalError, LabelMap, Raster, Result};

pub fn render_overlay(image: &Raster, labels: &LabelMap) -> Result<Raster> {
    let (w, h) = (image.width(), image.height());
    if labels.width() != w || labels.height() != h {
        return Err(GalError::Dimension(format!(
            "image {w}x{h} vs labels {}x{}",
            labels.width(),
            labels.height()
        )));
    }
    let mut data = Vec::with_capacity(w * h * 3);
    for p in 0..w * h {
        let px = image.rgb_at(p);
        let c = labels.class_of(p).color();
        for k in 0..3 {
            data.push(0.5 * px[k] + 0.5 * f64::from(c[k]) / 255.0);
        }
    }
    Raster::new(w, h, 3, data)
}
