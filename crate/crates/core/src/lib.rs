//! Density estimation from biased observations.
//!
//! An observation `y` is recorded with relative chance `w(y)`, so the data
//! follow `g(y) = w(y) f(y) / mu(f)` rather than the density `f` of
//! interest. This crate provides
//!
//! * the cosine basis on `[0, 1]`, quadrature, test densities and biasing
//!   functions ([`basis`], [`quadrature`], [`density`], [`bias`]);
//! * the relative coefficient of difficulty and related constants
//!   ([`difficulty`]);
//! * seeded direct and biased samplers ([`sampling`]);
//! * the Cox weighted statistics, the blockwise-shrinkage adaptive series
//!   estimator, a naive baseline and two oracle estimators ([`estimator`]);
//! * a Monte Carlo ISE harness ([`bench`]) and the command-line driver
//!   ([`cli`]).

pub mod basis;
pub mod bench;
pub mod bias;
pub mod cli;
pub mod density;
pub mod difficulty;
pub mod error;
pub mod estimator;
pub mod quadrature;
pub mod sampling;

pub use basis::{evaluate_series, phi, sobolev_seminorm, SobolevSpec};
pub use bias::BiasSpec;
pub use density::{CornerDensity, DensityModel};
pub use error::{Error, Result};
pub use quadrature::Quadrature;
