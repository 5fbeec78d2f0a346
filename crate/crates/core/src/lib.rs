//! Geometric layout labeling for outdoor scenes.
//!
//! Every pixel of an image is assigned one of seven geometric classes
//! (support, planar left/center/right, porous, solid, sky). Local super-pixel
//! classifiers provide an initial labeling; global scene attributes (sky and
//! ground lines, horizon, planar surfaces, vertical and vanishing lines,
//! solid and porous regions) are then fused with it in a CRF whose energy is
//! minimized by alpha-expansion graph cuts.

pub mod class;
pub mod config;
pub mod crf;
pub mod error;
pub mod gae;
pub mod imageops;
pub mod ipl;
pub mod lineworks;
pub mod optim;
pub mod raster;
pub mod segmentation;

pub use class::{ClassDistribution, CoarseClass, GeometricClass, NUM_CLASSES};
pub use config::Config;
pub use error::{GalError, Result};
pub use raster::{LabelMap, LabelMode, Raster};
