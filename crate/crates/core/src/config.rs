//! Flat `key value` configuration. Every tunable threshold in the pipeline
//! is a key here; unknown keys and unparsable values are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{GalError, Result};

macro_rules! config_struct {
    ($( $(#[$doc:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct Config {
            $( $(#[$doc])* pub $field: $ty, )*
        }

        impl Default for Config {
            fn default() -> Self {
                Config { $( $field: $default, )* }
            }
        }

        impl Config {
            pub const KEYS: &'static [&'static str] = &[$( stringify!($field), )*];

            /// Set one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($field) => {
                        self.$field = value.parse::<$ty>().map_err(|_| {
                            GalError::Config(format!("bad value {value:?} for key {key}"))
                        })?;
                    } )*
                    _ => return Err(GalError::Config(format!("unknown key {key:?}"))),
                }
                Ok(())
            }

            /// Render every key with its current value.
            pub fn dump(&self) -> String {
                let mut out = String::new();
                $( let _ = writeln!(out, "{} {}", stringify!($field), self.$field); )*
                out
            }
        }
    };
}

config_struct! {
    // segmentation
    slic_k: usize = 400,
    slic_compactness: f64 = 10.0,
    slic_iterations: usize = 10,
    fh_sigma: f64 = 0.8,
    fh_scale: f64 = 100.0,
    fh_min_size: usize = 20,
    fh_coarse_scale: f64 = 400.0,
    fh_coarse_min_size: usize = 80,

    // initial labeling
    forest_trees: usize = 30,
    forest_max_depth: usize = 12,
    forest_min_leaf: usize = 2,
    fusion_epochs: usize = 400,
    fusion_learning_rate: f64 = 0.5,
    seed: u64 = 7,

    // line segments and evidence maps
    lsd_angle_tolerance: f64 = 22.5,
    lsd_min_length: f64 = 15.0,
    lsd_min_gradient: f64 = 0.02,
    lsd_min_density: f64 = 0.5,
    edge_sigma: f64 = 1.0,
    edge_norm_floor: f64 = 0.1,
    defocus_sigma0: f64 = 1.0,
    defocus_edge_threshold: f64 = 0.3,
    defocus_max_blur: f64 = 5.0,
    defocus_box: usize = 9,
    defocus_norm_floor: f64 = 0.25,
    line_dilation: usize = 2,

    // sky and ground lines
    boundary_min_run: f64 = 0.05,
    line_confidence_min: f64 = 0.1,
    occluder_min_area: f64 = 0.002,

    // vertical lines / scene mode
    vertical_angle_tolerance: f64 = 5.0,
    building_min_segment: f64 = 0.05,
    building_total_length: f64 = 1.5,
    vertical_dilation: usize = 5,
    vertical_gate: f64 = 0.3,

    // horizon
    horizon_angle_tolerance: f64 = 10.0,
    horizon_bins: usize = 50,
    horizon_prior_mean: f64 = 0.5,
    horizon_prior_sigma: f64 = 0.2,
    horizon_dominance: f64 = 1.5,
    horizon_min_vote: f64 = 0.1,
    gmm_components: usize = 3,
    gmm_iterations: usize = 50,
    gmm_tolerance: f64 = 1e-4,

    // planar surfaces
    trapezoid_break_fraction: f64 = 0.3,
    trapezoid_window: f64 = 0.1,
    trapezoid_slope: f64 = 0.05,
    trapezoid_min_piece: f64 = 0.05,
    trapezoid_jump: f64 = 3.0,

    // vanishing points
    ransac_iterations: usize = 500,
    ransac_inlier_degrees: f64 = 2.0,
    ransac_min_inliers: usize = 5,
    vp_center_fraction: f64 = 0.2,
    vp_infinity_fraction: f64 = 10.0,

    // solid objects
    grabcut_components: usize = 3,
    grabcut_iterations: usize = 5,
    grabcut_frame: usize = 10,
    grabcut_gamma: f64 = 50.0,
    solid_overlap: f64 = 0.5,

    // porous texture
    porous_edge_threshold: f64 = 0.3,
    porous_band: usize = 2,
    porous_mass: f64 = 0.8,

    // energy and inference
    crf_epsilon: f64 = 1e-6,
    crf_cost_cap: f64 = 10.0,
    expansion_max_cycles: usize = 10,
    learn_folds: usize = 5,

    /// Images used for training by `ablate`; 0 means one third of the set.
    train_count: usize = 0,
    /// Size of the synthetic corpus used when no model file is given.
    builtin_train_count: usize = 30,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("non-empty line");
            let value = parts.next().ok_or_else(|| {
                GalError::Config(format!("line {}: key {key} has no value", lineno + 1))
            })?;
            if parts.next().is_some() {
                return Err(GalError::Config(format!(
                    "line {}: expected `key value`",
                    lineno + 1
                )));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GalError::io(path, e))?;
        Config::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(GalError::Config(what.to_string()))
            }
        };
        check(self.slic_k >= 1, "slic_k must be >= 1")?;
        check(self.slic_compactness > 0.0, "slic_compactness must be > 0")?;
        check(
            self.fh_scale > 0.0 && self.fh_coarse_scale > 0.0,
            "fh scales must be > 0",
        )?;
        check(
            self.fh_min_size >= 1 && self.fh_coarse_min_size >= 1,
            "fh min sizes must be >= 1",
        )?;
        check(self.forest_trees >= 1, "forest_trees must be >= 1")?;
        check(self.gmm_components >= 1, "gmm_components must be >= 1")?;
        check(
            self.crf_epsilon > 0.0 && self.crf_epsilon <= 1e-3,
            "crf_epsilon must be in (0, 1e-3]",
        )?;
        check(self.crf_cost_cap >= 1.0, "crf_cost_cap must be >= 1")?;
        check(self.horizon_bins >= 1, "horizon_bins must be >= 1")?;
        check(self.learn_folds >= 2, "learn_folds must be >= 2")?;
        check(
            (0.0..=1.0).contains(&self.porous_mass),
            "porous_mass must be in [0, 1]",
        )?;
        Ok(())
    }
}
