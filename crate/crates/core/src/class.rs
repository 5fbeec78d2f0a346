//! The seven geometric classes and distributions over them.

use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};

pub const NUM_CLASSES: usize = 7;

/// Geometric layout class. The discriminant is the on-disk code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum GeometricClass {
    Support = 0,
    PlanarLeft = 1,
    PlanarCenter = 2,
    PlanarRight = 3,
    Porous = 4,
    Solid = 5,
    Sky = 6,
}

impl GeometricClass {
    pub const ALL: [GeometricClass; NUM_CLASSES] = [
        GeometricClass::Support,
        GeometricClass::PlanarLeft,
        GeometricClass::PlanarCenter,
        GeometricClass::PlanarRight,
        GeometricClass::Porous,
        GeometricClass::Solid,
        GeometricClass::Sky,
    ];

    /// The five classes making up the vertical mega-class, in code order.
    pub const VERTICAL: [GeometricClass; 5] = [
        GeometricClass::PlanarLeft,
        GeometricClass::PlanarCenter,
        GeometricClass::PlanarRight,
        GeometricClass::Porous,
        GeometricClass::Solid,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<GeometricClass> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometricClass::Support => "support",
            GeometricClass::PlanarLeft => "planar-left",
            GeometricClass::PlanarCenter => "planar-center",
            GeometricClass::PlanarRight => "planar-right",
            GeometricClass::Porous => "porous",
            GeometricClass::Solid => "solid",
            GeometricClass::Sky => "sky",
        }
    }

    pub fn from_name(name: &str) -> Option<GeometricClass> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Display color in 8-bit RGB.
    pub fn color(self) -> [u8; 3] {
        match self {
            GeometricClass::Support => [0, 0, 0],
            GeometricClass::PlanarLeft => [255, 0, 255],
            GeometricClass::PlanarCenter => [0, 0, 139],
            GeometricClass::PlanarRight => [255, 0, 0],
            GeometricClass::Porous => [0, 255, 0],
            GeometricClass::Solid => [128, 128, 128],
            GeometricClass::Sky => [135, 206, 235],
        }
    }

    pub fn from_color(rgb: [u8; 3]) -> Option<GeometricClass> {
        Self::ALL.iter().copied().find(|c| c.color() == rgb)
    }

    pub fn is_planar(self) -> bool {
        matches!(
            self,
            GeometricClass::PlanarLeft | GeometricClass::PlanarCenter | GeometricClass::PlanarRight
        )
    }

    pub fn is_vertical(self) -> bool {
        !matches!(self, GeometricClass::Support | GeometricClass::Sky)
    }

    /// Coarse class used by the three-class labeling stage.
    pub fn coarse(self) -> CoarseClass {
        match self {
            GeometricClass::Support => CoarseClass::Support,
            GeometricClass::Sky => CoarseClass::Sky,
            _ => CoarseClass::Vertical,
        }
    }

    /// Horizontal mirror: planar-left and planar-right swap.
    pub fn mirrored(self) -> GeometricClass {
        match self {
            GeometricClass::PlanarLeft => GeometricClass::PlanarRight,
            GeometricClass::PlanarRight => GeometricClass::PlanarLeft,
            other => other,
        }
    }
}

impl std::fmt::Display for GeometricClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Support / vertical / sky.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CoarseClass {
    Support = 0,
    Vertical = 1,
    Sky = 2,
}

impl CoarseClass {
    pub const ALL: [CoarseClass; 3] = [
        CoarseClass::Support,
        CoarseClass::Vertical,
        CoarseClass::Sky,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<CoarseClass> {
        Self::ALL.get(i).copied()
    }
}

/// Probability distribution over the seven classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution([f64; NUM_CLASSES]);

const SUM_TOLERANCE: f64 = 1e-6;

impl ClassDistribution {
    pub fn uniform() -> Self {
        ClassDistribution([1.0 / NUM_CLASSES as f64; NUM_CLASSES])
    }

    pub fn one_hot(class: GeometricClass) -> Self {
        let mut p = [0.0; NUM_CLASSES];
        p[class.index()] = 1.0;
        ClassDistribution(p)
    }

    /// Scale non-negative masses so they sum to one.
    pub fn normalize(raw: [f64; NUM_CLASSES]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GalError::Degenerate(format!(
                "distribution masses must be finite and non-negative: {raw:?}"
            )));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(GalError::Degenerate("all-zero distribution".into()));
        }
        // equal masses map to the exact uniform vector
        if raw.iter().all(|v| *v == raw[0]) {
            return Ok(Self::uniform());
        }
        let mut p = raw;
        for v in p.iter_mut() {
            *v /= total;
        }
        Ok(ClassDistribution(p))
    }

    /// Wrap values already summing to one (within 1e-6).
    pub fn from_probs(p: [f64; NUM_CLASSES]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GalError::Degenerate(format!(
                "invalid probabilities: {p:?}"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(GalError::Degenerate(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ClassDistribution(p))
    }

    pub fn probs(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, class: GeometricClass) -> f64 {
        self.0[class.index()]
    }

    /// Most probable class; ties go to the lowest code.
    pub fn argmax(&self) -> GeometricClass {
        let mut best = 0;
        for i in 1..NUM_CLASSES {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        GeometricClass::ALL[best]
    }

    pub fn is_uniform(&self) -> bool {
        *self == Self::uniform()
    }

    /// Check the simplex invariant.
    pub fn validate(&self) -> Result<()> {
        Self::from_probs(self.0).map(|_| ())
    }
}

impl Default for ClassDistribution {
    fn default() -> Self {
        Self::uniform()
    }
}
