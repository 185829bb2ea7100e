//! Cosine basis on `[0, 1]`: `phi_0 = 1`, `phi_j(x) = sqrt(2) cos(pi j x)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} is outside [0, 1]")))
    }
}

/// Basis element `phi_j(x)`.
pub fn phi(j: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(phi_unchecked(j, x))
}

#[inline]
pub(crate) fn phi_unchecked(j: usize, x: f64) -> f64 {
    if j == 0 {
        1.0
    } else {
        SQRT_2 * (PI * j as f64 * x).cos()
    }
}

/// Write `phi_0(x), ..., phi_{out.len()-1}(x)` into `out` using the
/// Chebyshev recurrence `cos((j+1)t) = 2 cos(t) cos(jt) - cos((j-1)t)`.
pub(crate) fn fill_basis(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    let c = (PI * x).cos();
    let two_c = 2.0 * c;
    let mut prev = 1.0;
    let mut cur = c;
    out[1] = SQRT_2 * cur;
    for slot in out.iter_mut().skip(2) {
        let next = two_c * cur - prev;
        prev = cur;
        cur = next;
        *slot = SQRT_2 * cur;
    }
}

/// `sum_j coeffs[j] phi_j(x)`.
pub fn evaluate_series(coeffs: &[f64], x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(series_unchecked(coeffs, x))
}

pub(crate) fn series_unchecked(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| if *c == 0.0 { 0.0 } else { c * phi_unchecked(j, x) })
        .sum()
}

/// Sobolev seminorm `sum_{j>=1} (pi j)^(2m) coeffs[j]^2`.
pub fn sobolev_seminorm(coeffs: &[f64], m: u32) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| (PI * j as f64).powi(2 * m as i32) * c * c)
        .sum()
}

/// Smoothness class: order `m` and ellipsoid radius `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub m: u32,
    pub q: f64,
}

impl SobolevSpec {
    pub fn new(m: u32, q: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Argument("smoothness m must be >= 1".into()));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Argument(format!("Sobolev radius Q must be positive, got {q}")));
        }
        Ok(Self { m, q })
    }

    /// `Q` set to the seminorm of `f`'s first `terms` cosine coefficients.
    pub fn for_density(f: &DensityModel, m: u32, terms: usize, quad: &Quadrature) -> Result<Self> {
        let coeffs = project_all(f, terms.saturating_sub(1), quad)?;
        Self::new(m, sobolev_seminorm(&coeffs, m))
    }
}

/// Fourier coefficient `theta_j = int_0^1 f(u) phi_j(u) du`.
pub fn project(f: &DensityModel, j: usize, quad: &Quadrature) -> Result<f64> {
    project_fn(|x| f.pdf(x), j, quad)
}

/// Coefficients `theta_0 ..= theta_{j_max}` of `f`.
pub fn project_all(f: &DensityModel, j_max: usize, quad: &Quadrature) -> Result<Vec<f64>> {
    if let Some(c) = f.coefficients() {
        // exact for nonnegative series densities
        if f.is_exact_series() {
            return Ok((0..=j_max).map(|j| c.get(j).copied().unwrap_or(0.0)).collect());
        }
    }
    (0..=j_max).map(|j| project(f, j, quad)).collect()
}

/// Cosine coefficient of an arbitrary function on `[0, 1]`.
pub fn project_fn<F: Fn(f64) -> f64>(g: F, j: usize, quad: &Quadrature) -> Result<f64> {
    // at least 8 nodes per period so the coarse rule cannot alias
    let q = quad.with_min_nodes(8 * j + 1);
    q.integrate(|x| g(x) * phi_unchecked(j, x), 0.0, 1.0)
        .map_err(|e| match e {
            Error::Numeric(msg) => Error::Numeric(format!("projection onto phi_{j}: {msg}")),
            other => other,
        })
}
