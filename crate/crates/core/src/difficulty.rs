//! Constants of the biased-sampling problem: `mu(f)`, the relative
//! coefficient of difficulty (RCDB), the sharp constants `I_f1` and
//! `I_fw`, and the equivalent biased sample size.

use std::f64::consts::PI;

use serde::Serialize;

use crate::basis::SobolevSpec;
use crate::bias::BiasSpec;
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DifficultyReport {
    /// `mu(f) = int f w` over the support of `f`.
    pub mu: f64,
    pub rcdb: f64,
    pub i_f1: f64,
    pub i_fw: f64,
    /// `int_0^1 f`.
    pub mass01: f64,
}

fn check_cover(f: &DensityModel, w: &BiasSpec) -> Result<()> {
    let (lo, hi) = f.support();
    let (ulo, uhi) = (lo.max(0.0).min(1.0), hi.min(1.0).max(0.0));
    if !w.covers(lo, hi) || !w.covers(ulo, uhi) {
        let (a, b) = w.interval();
        return Err(Error::Config(format!(
            "biasing function validated on [{a}, {b}] does not cover the density support [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn breaks(f: &DensityModel, w: &BiasSpec) -> Vec<f64> {
    let mut b = f.breakpoints();
    b.extend(w.breakpoints());
    b
}

/// `mu(f) = int f(x) w(x) dx` over the support of `f`.
pub fn mu_true(f: &DensityModel, w: &BiasSpec, quad: &Quadrature) -> Result<f64> {
    check_cover(f, w)?;
    let (lo, hi) = f.support();
    quad.integrate_with_breaks(|x| f.pdf(x) * w.w(x), lo, hi, &breaks(f, w))
}

/// Pieces of the RCDB: (`mu`, `int_0^1 f / w`, `int_0^1 f`).
fn rcdb_parts(f: &DensityModel, w: &BiasSpec, quad: &Quadrature) -> Result<(f64, f64, f64)> {
    let mu = mu_true(f, w, quad)?;
    let (lo, hi) = f.support();
    let (a, b) = (lo.max(0.0), hi.min(1.0));
    if !(a < b) {
        return Err(Error::Config("density support does not intersect [0, 1]".into()));
    }
    let bp = breaks(f, w);
    let inv = quad.integrate_with_breaks(|x| f.pdf(x) / w.w(x), a, b, &bp)?;
    let mass = quad.integrate_with_breaks(|x| f.pdf(x), a, b, &bp)?;
    if mass <= 0.0 {
        return Err(Error::Config("density has no mass on [0, 1]".into()));
    }
    Ok((mu, inv, mass))
}

/// `RCDB = mu(f) * int_0^1 f/w / int_0^1 f`.
pub fn rcdb(f: &DensityModel, w: &BiasSpec, quad: &Quadrature) -> Result<f64> {
    let (mu, inv, mass) = rcdb_parts(f, w, quad)?;
    Ok(mu * inv / mass)
}

/// `d(f, w) = mu(f) * int_0^1 f/w`, the variance scale of the Cox
/// coefficient estimates.
pub fn d_true(f: &DensityModel, w: &BiasSpec, quad: &Quadrature) -> Result<f64> {
    let (mu, inv, _) = rcdb_parts(f, w, quad)?;
    Ok(mu * inv)
}

/// Sharp constant for direct data:
/// `Q^(-1/2m) * pi (m+1)/m * (2m+1)^(-1/2m) / int_0^1 f`.
pub fn i_f1(s: &SobolevSpec, mass01: f64) -> f64 {
    let m = s.m as f64;
    s.q.powf(-1.0 / (2.0 * m)) * PI * (m + 1.0) / m * (2.0 * m + 1.0).powf(-1.0 / (2.0 * m)) / mass01
}

pub fn coefficient_of_difficulty(
    f: &DensityModel,
    w: &BiasSpec,
    s: &SobolevSpec,
    quad: &Quadrature,
) -> Result<DifficultyReport> {
    let (mu, inv, mass01) = rcdb_parts(f, w, quad)?;
    let rcdb = mu * inv / mass01;
    let i_f1 = i_f1(s, mass01);
    Ok(DifficultyReport {
        mu,
        rcdb,
        i_f1,
        i_fw: i_f1 / rcdb,
        mass01,
    })
}

/// `round(n_direct * rcdb)`, halves rounded away from zero.
pub fn equivalent_biased_n(n_direct: usize, rcdb: f64) -> Result<usize> {
    if !(rcdb > 0.0 && rcdb.is_finite()) {
        return Err(Error::Argument(format!("RCDB must be positive, got {rcdb}")));
    }
    Ok(((n_direct as f64 * rcdb).round() as usize).max(1))
}

/// Biasing function `w = a^(-1/2)` that turns an average-risk weight `a`
/// into an equivalent biased-sampling problem.
pub fn biasing_from_average_risk<F>(label: &str, a: F) -> Result<BiasSpec>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let nodes = crate::bias::VALIDATION_NODES;
    for i in 0..nodes {
        let y = i as f64 / (nodes - 1) as f64;
        let v = a(y);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!(
                "average-risk weight must be positive and finite on [0, 1], a({y}) = {v}"
            )));
        }
    }
    BiasSpec::from_fn(format!("1/sqrt({label})"), move |y| 1.0 / a(y).sqrt())
}
