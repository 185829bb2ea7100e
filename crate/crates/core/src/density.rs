//! Test densities: the uniform, normal and monotone corner densities on
//! `[0, 1]`, and densities defined by a cosine coefficient vector.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::series_unchecked;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Largest coefficient index accepted for coefficient-defined densities.
pub const MAX_SERIES_INDEX: usize = 256;

/// Gaussian parameters of the normal corner density (truncated to `[0, 1]`).
pub const NORMAL_MEAN: f64 = 0.5;
pub const NORMAL_SD: f64 = 0.15;
/// Gaussian parameters of the monotone corner density (truncated to `[0, 1]`).
pub const MONOTONE_MEAN: f64 = 2.0;
pub const MONOTONE_SD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Uniform,
    NormalCorner,
    MonotoneCorner,
    CoefficientDefined,
}

/// Named corner densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CornerDensity {
    Uniform,
    Normal,
    Monotone,
}

impl CornerDensity {
    pub const ALL: [CornerDensity; 3] = [Self::Uniform, Self::Normal, Self::Monotone];

    pub fn model(self) -> DensityModel {
        match self {
            Self::Uniform => DensityModel::uniform(),
            Self::Normal => DensityModel::truncated_gaussian(DensityKind::NormalCorner, NORMAL_MEAN, NORMAL_SD),
            Self::Monotone => {
                DensityModel::truncated_gaussian(DensityKind::MonotoneCorner, MONOTONE_MEAN, MONOTONE_SD)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Normal => "normal",
            Self::Monotone => "monotone",
        }
    }
}

impl fmt::Display for CornerDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CornerDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "normal" => Ok(Self::Normal),
            "monotone" => Ok(Self::Monotone),
            other => Err(Error::Config(format!(
                "unknown density '{other}' (expected uniform, normal or monotone)"
            ))),
        }
    }
}

/// Convenience wrapper around [`CornerDensity::from_str`].
pub fn corner_density(name: &str) -> Result<DensityModel> {
    Ok(name.parse::<CornerDensity>()?.model())
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    Gaussian { mean: f64, sd: f64 },
    // `exact`: the series is nonnegative, so no clipping is in effect.
    Series { coeffs: Vec<f64>, exact: bool },
}

/// A probability density with bounded support.
///
/// `pdf` is the unnormalized shape divided by the normalizer `z`, and is
/// zero off the support.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    kind: DensityKind,
    support: (f64, f64),
    shape: Shape,
    z: f64,
}

impl DensityModel {
    pub fn uniform() -> Self {
        Self {
            kind: DensityKind::Uniform,
            support: (0.0, 1.0),
            shape: Shape::Uniform,
            z: 1.0,
        }
    }

    fn truncated_gaussian(kind: DensityKind, mean: f64, sd: f64) -> Self {
        let shape = Shape::Gaussian { mean, sd };
        let z = Quadrature::default()
            .integrate(|x| gaussian(x, mean, sd), 0.0, 1.0)
            .expect("gaussian normalizer on [0, 1] converges");
        Self {
            kind,
            support: (0.0, 1.0),
            shape,
            z,
        }
    }

    /// Density on `[0, 1]` with the given cosine coefficients.
    ///
    /// The coefficients are rescaled so that `coeffs[0] = 1`. Where the
    /// series goes negative it is clipped at zero and renormalized; in
    /// that case the held coefficients no longer reproduce the pdf
    /// exactly (see [`DensityModel::is_exact_series`]).
    pub fn from_coefficients(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Argument("coefficient vector is empty".into()));
        }
        if coeffs.len() > MAX_SERIES_INDEX + 1 {
            return Err(Error::Argument(format!(
                "at most {} coefficients are supported, got {}",
                MAX_SERIES_INDEX + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("coefficients must be finite".into()));
        }
        if coeffs[0] <= 0.0 {
            return Err(Error::Argument(format!(
                "leading coefficient must be positive, got {}",
                coeffs[0]
            )));
        }
        let scaled: Vec<f64> = coeffs.iter().map(|c| c / coeffs[0]).collect();
        let probe = 16 * scaled.len() + 1025;
        let exact = (0..=probe).all(|i| series_unchecked(&scaled, i as f64 / probe as f64) >= 0.0);
        let z = if exact {
            1.0
        } else {
            let clipped = |x: f64| series_unchecked(&scaled, x).max(0.0);
            let q = Quadrature::default().with_min_nodes(8 * scaled.len() + 1);
            let z = q.integrate(clipped, 0.0, 1.0)?;
            if z <= 0.0 {
                return Err(Error::Argument("series has no positive mass on [0, 1]".into()));
            }
            z
        };
        Ok(Self {
            kind: DensityKind::CoefficientDefined,
            support: (0.0, 1.0),
            shape: Shape::Series { coeffs: scaled, exact },
            z,
        })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn normalizer(&self) -> f64 {
        self.z
    }

    /// Held coefficients for coefficient-defined densities.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Series { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }

    /// True for coefficient-defined densities whose series is nonnegative.
    pub fn is_exact_series(&self) -> bool {
        matches!(self.shape, Shape::Series { exact: true, .. })
    }

    /// Breakpoints where the pdf is not smooth, inside the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        let raw = match &self.shape {
            Shape::Uniform => 1.0,
            Shape::Gaussian { mean, sd } => gaussian(x, *mean, *sd),
            Shape::Series { coeffs, exact } => {
                let v = series_unchecked(coeffs, x);
                if *exact {
                    v
                } else {
                    v.max(0.0)
                }
            }
        };
        raw / self.z
    }
}

fn gaussian(x: f64, mean: f64, sd: f64) -> f64 {
    let t = (x - mean) / sd;
    (-0.5 * t * t).exp() / (sd * (2.0 * PI).sqrt())
}
