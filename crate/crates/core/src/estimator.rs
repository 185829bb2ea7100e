//! Estimators built on the Cox weighted statistics.
//!
//! For observations `Y_1..Y_n` drawn with relative chance `w`:
//!
//! * `mu_hat = n / sum 1/w(Y_l)` (all observations);
//! * `theta_hat_j = mu_hat/n * sum_{Y_l in [0,1]} phi_j(Y_l) / w(Y_l)`;
//! * `d_hat = mu_hat^2/n * sum_{Y_l in [0,1]} 1 / w(Y_l)^2`.
//!
//! [`adaptive_estimate`] applies blockwise shrinkage to `theta_hat` over
//! blocks of size `k^2` with thresholds `1/ln(k+1)`.

use std::io::Write;
use std::ops::Range;

use serde::Serialize;

use crate::basis::{fill_basis, series_unchecked, SobolevSpec};
use crate::bias::BiasSpec;
use crate::density::DensityModel;
use crate::difficulty::d_true;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::sampling::BiasedSample;

fn inside(y: f64) -> bool {
    (0.0..=1.0).contains(&y)
}

/// `n / sum_l 1/w(Y_l)`.
pub fn mu_hat(sample: &BiasedSample) -> f64 {
    let w = sample.bias();
    let s: f64 = sample.values().iter().map(|&y| 1.0 / w.w(y)).sum();
    sample.n() as f64 / s
}

/// Cox weighted empirical CDF at `x`.
///
/// Computed as a ratio of inverse-weight sums accumulated in sample
/// order, so the value at `max(Y)` is exactly 1 and `w = 1` gives the
/// empirical CDF exactly.
pub fn cox_cdf(sample: &BiasedSample, x: f64) -> f64 {
    let w = sample.bias();
    let mut below = 0.0;
    let mut total = 0.0;
    for &y in sample.values() {
        let iw = 1.0 / w.w(y);
        total += iw;
        if y <= x {
            below += iw;
        }
    }
    below / total
}

/// Coefficient estimate `theta_hat_j`.
pub fn fourier_hat(sample: &BiasedSample, j: usize) -> f64 {
    fourier_with_mu(sample, j, mu_hat(sample))
}

/// Coefficient statistic with a supplied `mu` in place of `mu_hat`.
pub fn fourier_with_mu(sample: &BiasedSample, j: usize, mu: f64) -> f64 {
    let w = sample.bias();
    let s: f64 = sample
        .values()
        .iter()
        .filter(|y| inside(**y))
        .map(|&y| crate::basis::phi_unchecked(j, y) / w.w(y))
        .sum();
    mu * s / sample.n() as f64
}

/// Noise scale `d_hat`.
pub fn d_hat(sample: &BiasedSample) -> f64 {
    let w = sample.bias();
    let mu = mu_hat(sample);
    let s: f64 = sample
        .values()
        .iter()
        .filter(|y| inside(**y))
        .map(|&y| w.w(y).powi(-2))
        .sum();
    mu * mu * s / sample.n() as f64
}

/// `mu_hat`, `d_hat` and `theta_hat_0..=theta_hat_{j_max}` in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxStats {
    pub mu_hat: f64,
    pub d_hat: f64,
    pub theta_hat: Vec<f64>,
    pub n: usize,
}

impl CoxStats {
    pub fn compute(sample: &BiasedSample, j_max: usize) -> Self {
        let w = sample.bias();
        let n = sample.n();
        let mut inv_sum = 0.0;
        let mut inv_sq_sum = 0.0;
        let mut acc = vec![0.0; j_max + 1];
        let mut buf = vec![0.0; j_max + 1];
        for &y in sample.values() {
            let iw = 1.0 / w.w(y);
            inv_sum += iw;
            if inside(y) {
                inv_sq_sum += iw * iw;
                fill_basis(y, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += b * iw;
                }
            }
        }
        let mu_hat = n as f64 / inv_sum;
        let scale = mu_hat / n as f64;
        Self {
            mu_hat,
            d_hat: mu_hat * mu_hat * inv_sq_sum / n as f64,
            theta_hat: acc.into_iter().map(|a| a * scale).collect(),
            n,
        }
    }
}

/// Blocks `G_k` of size `k^2` starting at `j = 1`, with thresholds
/// `t_k = 1/ln(k+1)` and `K = max(1, floor(n^(1/9) ln n))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockScheme {
    pub k: usize,
    pub blocks: Vec<Range<usize>>,
    pub thresholds: Vec<f64>,
}

impl BlockScheme {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!(
                "the adaptive estimator needs n >= 2 observations, got {n}"
            )));
        }
        let nf = n as f64;
        let k = ((nf.powf(1.0 / 9.0) * nf.ln()).floor() as usize).max(1);
        Ok(Self::with_blocks(k))
    }

    /// Scheme with exactly `k` blocks.
    pub fn with_blocks(k: usize) -> Self {
        let mut blocks = Vec::with_capacity(k);
        let mut start = 1;
        for b in 1..=k {
            blocks.push(start..start + b * b);
            start += b * b;
        }
        let thresholds = (1..=k).map(|b| 1.0 / ((b + 1) as f64).ln()).collect();
        Self { k, blocks, thresholds }
    }

    /// Largest coefficient index covered, `K(K+1)(2K+1)/6`.
    pub fn j_max(&self) -> usize {
        self.k * (self.k + 1) * (2 * self.k + 1) / 6
    }
}

/// Shrinkage weight of one block: `1 - noise/mean` when
/// `mean > (1 + t) noise`, else 0. `noise` is `d_hat / n`.
pub fn block_weight(block_mean: f64, noise: f64, t: f64) -> f64 {
    if block_mean > (1.0 + t) * noise {
        1.0 - noise / block_mean
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    BlockwiseShrinkage,
    Pseudo,
    LinearOracle,
}

/// Cosine series estimate on `[0, 1]`.
///
/// With the nonnegativity projection on, `eval` returns
/// `max(series, 0) * scale`, where `scale` restores mass `theta_hat_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub estimator: EstimatorKind,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub coeffs: Vec<f64>,
    /// Per-block shrink weights (adaptive) or per-coefficient factors
    /// (oracles).
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonnegative_scale: Option<f64>,
}

impl SeriesEstimate {
    pub fn eval(&self, x: f64) -> f64 {
        let v = series_unchecked(&self.coeffs, x);
        match self.nonnegative_scale {
            Some(s) => v.max(0.0) * s,
            None => v,
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !inside(x) {
            return Err(Error::Domain(format!("x = {x} is outside [0, 1]")));
        }
        Ok(self.eval(x))
    }

    pub fn is_raw_series(&self) -> bool {
        self.nonnegative_scale.is_none()
    }

    /// Two-column CSV `x,f_hat` on `points` equispaced nodes of `[0, 1]`.
    pub fn write_grid_csv<W: Write>(&self, writer: W, points: usize) -> Result<()> {
        write_grid_csv(writer, &unit_grid(points)?, |x| self.eval(x))
    }
}

/// `points` equispaced nodes on `[0, 1]`, endpoints included.
pub fn unit_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Argument("grid needs at least 2 points".into()));
    }
    Ok((0..points)
        .map(|i| if i == points - 1 { 1.0 } else { i as f64 / (points - 1) as f64 })
        .collect())
}

pub(crate) fn write_grid_csv<W: Write, F: Fn(f64) -> f64>(writer: W, grid: &[f64], f: F) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "f_hat"])?;
    for &x in grid {
        wtr.write_record([x.to_string(), f(x).to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AdaptiveOptions {
    /// Clip at zero and rescale to mass `theta_hat_0`.
    pub project_nonnegative: bool,
}

/// Blockwise-shrinkage adaptive estimate with default options.
pub fn adaptive_estimate(sample: &BiasedSample) -> Result<SeriesEstimate> {
    adaptive_estimate_with(sample, AdaptiveOptions::default())
}

pub fn adaptive_estimate_with(sample: &BiasedSample, opts: AdaptiveOptions) -> Result<SeriesEstimate> {
    let scheme = BlockScheme::new(sample.n())?;
    let stats = CoxStats::compute(sample, scheme.j_max());
    Ok(shrink(&stats, &scheme, opts))
}

/// Apply the blockwise shrinkage to precomputed statistics.
pub fn shrink(stats: &CoxStats, scheme: &BlockScheme, opts: AdaptiveOptions) -> SeriesEstimate {
    let noise = stats.d_hat / stats.n as f64;
    let mut coeffs = vec![0.0; scheme.j_max() + 1];
    // theta_hat_0 is kept unshrunk
    coeffs[0] = stats.theta_hat[0];
    let mut weights = Vec::with_capacity(scheme.k);
    for (block, &t) in scheme.blocks.iter().zip(&scheme.thresholds) {
        let theta = &stats.theta_hat[block.clone()];
        let mean = theta.iter().map(|v| v * v).sum::<f64>() / theta.len() as f64;
        let weight = block_weight(mean, noise, t);
        if weight > 0.0 {
            for (c, v) in coeffs[block.clone()].iter_mut().zip(theta) {
                *c = weight * v;
            }
        }
        weights.push(weight);
    }
    let mut est = SeriesEstimate {
        estimator: EstimatorKind::BlockwiseShrinkage,
        n: stats.n,
        k: Some(scheme.k),
        coeffs,
        weights,
        nonnegative_scale: None,
    };
    if opts.project_nonnegative {
        let q = Quadrature::default().with_min_nodes(8 * est.coeffs.len() + 1);
        let positive = q.simpson(|x| series_unchecked(&est.coeffs, x).max(0.0), 0.0, 1.0);
        est.nonnegative_scale = Some(if positive > 0.0 { est.coeffs[0] / positive } else { 1.0 });
    }
    est
}

/// Naive estimate: an adaptive estimate `g_hat` of the density of the
/// observations themselves, reweighted pointwise by `mu_hat / w(x)`.
#[derive(Debug, Clone)]
pub struct NaiveEstimate {
    pub g_hat: SeriesEstimate,
    pub mu_hat: f64,
    bias: BiasSpec,
}

impl NaiveEstimate {
    pub fn new(sample: &BiasedSample, opts: AdaptiveOptions) -> Result<Self> {
        let unit = BiasSpec::constant(1.0)?.on_interval(
            sample.bias().interval().0.min(0.0),
            sample.bias().interval().1.max(1.0),
        )?;
        let g_hat = adaptive_estimate_with(&sample.rebiased(unit)?, opts)?;
        Ok(Self {
            g_hat,
            mu_hat: mu_hat(sample),
            bias: sample.bias().clone(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.g_hat.eval(x) * self.mu_hat / self.bias.w(x)
    }
}

/// Naive estimate evaluated on `grid` (points in `[0, 1]`).
pub fn naive_estimate(sample: &BiasedSample, grid: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = grid.iter().find(|x| !inside(**x)) {
        return Err(Error::Domain(format!("grid point {x} is outside [0, 1]")));
    }
    let est = NaiveEstimate::new(sample, AdaptiveOptions::default())?;
    Ok(grid.iter().map(|&x| est.eval(x)).collect())
}

/// Cutoff `J* = ceil([n/d (2m+1)(m+1) Q / (2m (2 pi)^(2m))]^(1/(2m+1)))`.
pub fn pseudo_cutoff(n: usize, d: f64, s: &SobolevSpec) -> Result<usize> {
    if !(s.q > 0.0) {
        return Err(Error::Argument(format!("Q must be positive, got {}", s.q)));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Argument(format!("d(f, w) must be positive, got {d}")));
    }
    let m = s.m as f64;
    let inner = n as f64 / d * (2.0 * m + 1.0) * (m + 1.0) * s.q
        / (2.0 * m * (2.0 * std::f64::consts::PI).powf(2.0 * m));
    Ok((inner.powf(1.0 / (2.0 * m + 1.0)).ceil() as usize).max(1))
}

/// Linear taper weights `1 - (j/J*)^m` for `j = 0..=J*`.
pub fn pseudo_weights(cutoff: usize, m: u32) -> Vec<f64> {
    (0..=cutoff)
        .map(|j| 1.0 - (j as f64 / cutoff as f64).powi(m as i32))
        .collect()
}

/// Pseudo-estimate that knows `f` (through `d(f, w)`) and `(m, Q)`.
/// Test oracle only.
pub fn pseudo_estimate(
    sample: &BiasedSample,
    f: &DensityModel,
    s: &SobolevSpec,
    quad: &Quadrature,
) -> Result<SeriesEstimate> {
    let d = d_true(f, sample.bias(), quad)?;
    let cutoff = pseudo_cutoff(sample.n(), d, s)?;
    let stats = CoxStats::compute(sample, cutoff);
    let weights = pseudo_weights(cutoff, s.m);
    let coeffs = stats.theta_hat.iter().zip(&weights).map(|(t, w)| t * w).collect();
    Ok(SeriesEstimate {
        estimator: EstimatorKind::Pseudo,
        n: sample.n(),
        k: None,
        coeffs,
        weights,
        nonnegative_scale: None,
    })
}

/// `floor(n^(1/3))` without floating-point rounding surprises.
pub fn integer_cbrt(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r * r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Linear oracle with factors `theta_j^2 / (theta_j^2 + d_hat/n)` for
/// `j = 0..=floor(n^(1/3))`. Test oracle only.
pub fn linear_oracle(sample: &BiasedSample, true_thetas: &[f64]) -> Result<SeriesEstimate> {
    let upper = integer_cbrt(sample.n());
    let stats = CoxStats::compute(sample, upper);
    let noise = stats.d_hat / stats.n as f64;
    let weights: Vec<f64> = (0..=upper)
        .map(|j| {
            let t = true_thetas.get(j).copied().unwrap_or(0.0);
            if t == 0.0 {
                0.0
            } else {
                t * t / (t * t + noise)
            }
        })
        .collect();
    let coeffs = stats.theta_hat.iter().zip(&weights).map(|(t, w)| t * w).collect();
    Ok(SeriesEstimate {
        estimator: EstimatorKind::LinearOracle,
        n: sample.n(),
        k: None,
        coeffs,
        weights,
        nonnegative_scale: None,
    })
}
