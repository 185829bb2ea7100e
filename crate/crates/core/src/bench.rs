//! Monte Carlo ISE harness.
//!
//! [`run_experiment`] compares the adaptive estimate from direct samples of
//! size `n'` with the one from biased samples of size `round(n' * RCDB)`.
//! [`rate_check`] sweeps `n` and reports the MISE together with the
//! sharp-constant normalization `[I_fw n]^(2m/(2m+1)) * MISE`.
//!
//! Replicate `r` of the direct arm uses stream `(base_seed, 2r)` and the
//! biased arm `(base_seed, 2r + 1)`. Replicates run in parallel and are
//! reduced in replicate order, so reports do not depend on scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{project_all, SobolevSpec};
use crate::bias::BiasSpec;
use crate::density::{CornerDensity, DensityModel};
use crate::difficulty::{coefficient_of_difficulty, equivalent_biased_n, rcdb};
use crate::error::{Error, Result};
use crate::estimator::{adaptive_estimate_with, unit_grid, AdaptiveOptions, BlockScheme, SeriesEstimate};
use crate::quadrature::{Quadrature, SimpsonGrid};
use crate::sampling::{BiasedSample, Sampler, SeedSpec};

/// Default Simpson node count for ISE quadrature.
pub const DEFAULT_ISE_NODES: usize = 1025;
/// Smallest subgroup for which an ISE density is estimated.
pub const MIN_SUBGROUP: usize = 5;
/// Evaluation points of each subgroup density.
pub const SUBGROUP_GRID: usize = 101;

/// `int_0^1 (estimate - f)^2` by quadrature.
pub fn ise<F: Fn(f64) -> f64>(estimate: F, f_true: &DensityModel, quad: &Quadrature) -> Result<f64> {
    quad.integrate(
        |x| {
            let d = estimate(x) - f_true.pdf(x);
            d * d
        },
        0.0,
        1.0,
    )
}

/// Cosine coefficients and squared `L2[0,1]` norm of a true density.
#[derive(Debug, Clone)]
pub struct Truth {
    pub thetas: Vec<f64>,
    pub l2: f64,
    grid: SimpsonGrid,
    f_on_grid: Vec<f64>,
}

impl Truth {
    pub fn new(f: &DensityModel, j_max: usize, grid_size: usize, quad: &Quadrature) -> Result<Self> {
        let thetas = project_all(f, j_max, quad)?;
        let l2 = quad.integrate(|x| f.pdf(x).powi(2), 0.0, 1.0)?;
        let grid = SimpsonGrid::new(0.0, 1.0, grid_size)?;
        let f_on_grid = grid.nodes.iter().map(|&x| f.pdf(x)).collect();
        Ok(Self {
            thetas,
            l2,
            grid,
            f_on_grid,
        })
    }

    /// ISE of a series estimate. Raw series use Parseval,
    /// `sum_j (c_j - theta_j)^2 + (||f||^2 - sum_j theta_j^2)`;
    /// projected estimates use the Simpson grid.
    pub fn series_ise(&self, est: &SeriesEstimate) -> Result<f64> {
        if est.is_raw_series() {
            self.parseval_ise(&est.coeffs)
        } else {
            Ok(self.grid_ise(|x| est.eval(x)))
        }
    }

    pub fn parseval_ise(&self, coeffs: &[f64]) -> Result<f64> {
        if coeffs.len() > self.thetas.len() {
            return Err(Error::Argument(format!(
                "estimate has {} coefficients but the truth table holds {}",
                coeffs.len(),
                self.thetas.len()
            )));
        }
        let head: f64 = coeffs
            .iter()
            .zip(&self.thetas)
            .map(|(c, t)| (c - t) * (c - t))
            .sum();
        let captured: f64 = self.thetas[..coeffs.len()].iter().map(|t| t * t).sum();
        Ok(head + (self.l2 - captured).max(0.0))
    }

    pub fn grid_ise<F: Fn(f64) -> f64>(&self, estimate: F) -> f64 {
        let sq: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .zip(&self.f_on_grid)
            .map(|(&x, &f)| {
                let d = estimate(x) - f;
                d * d
            })
            .collect();
        self.grid.sum(&sq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arms {
    DirectOnly,
    BiasedOnly,
    PairedEquivalence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Direct,
    Biased,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Direct => "direct",
            Arm::Biased => "biased",
        }
    }
}

/// How replicate streams are assigned to arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPairing {
    /// Direct arm `(base, 2r)`, biased arm `(base, 2r + 1)`.
    Independent,
    /// Both arms use `(base, r)`.
    Shared,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub density: CornerDensity,
    pub bias: BiasSpec,
    pub n_direct: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Simpson nodes for ISE quadrature of non-series estimates.
    pub grid_size: usize,
    pub arms: Arms,
    /// ISE tail split; `None` uses the pooled mean ISE.
    pub split_at: Option<f64>,
    /// RCDB used for the biased-arm size instead of the computed one.
    pub rcdb_override: Option<f64>,
    pub project_nonnegative: bool,
    pub seed_pairing: SeedPairing,
    #[serde(skip)]
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn paired(density: CornerDensity, bias: BiasSpec, n_direct: usize, replications: usize, base_seed: u64) -> Self {
        Self {
            density,
            bias,
            n_direct,
            replications,
            base_seed,
            grid_size: DEFAULT_ISE_NODES,
            arms: Arms::PairedEquivalence,
            split_at: None,
            rcdb_override: None,
            project_nonnegative: false,
            seed_pairing: SeedPairing::Independent,
            parallel: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.grid_size < 101 || self.grid_size % 2 == 0 {
            return Err(Error::Config(format!(
                "ISE grid size must be odd and >= 101, got {}",
                self.grid_size
            )));
        }
        if self.n_direct < 2 {
            return Err(Error::Config("n_direct must be >= 2".into()));
        }
        if let Some(r) = self.rcdb_override {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("RCDB override must be positive, got {r}")));
            }
        }
        Ok(())
    }

    fn seed(&self, arm: Arm, r: usize) -> SeedSpec {
        let r = r as u64;
        let idx = match (self.seed_pairing, arm) {
            (SeedPairing::Shared, _) => r,
            (SeedPairing::Independent, Arm::Direct) => 2 * r,
            (SeedPairing::Independent, Arm::Biased) => 2 * r + 1,
        };
        SeedSpec::new(self.base_seed, idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IseRecord {
    pub replicate: usize,
    pub arm: Arm,
    pub n: usize,
    pub ise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: Arm,
    pub n: usize,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub count_le_split: usize,
    pub count_gt_split: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IseReport {
    pub config: ExperimentConfig,
    /// RCDB computed from the true density and biasing function.
    pub rcdb_computed: f64,
    /// RCDB that sized the biased arm (override or computed).
    pub rcdb_used: f64,
    pub n_biased: Option<usize>,
    pub split: f64,
    pub summaries: Vec<ArmSummary>,
    pub records: Vec<IseRecord>,
}

impl IseReport {
    pub fn summary(&self, arm: Arm) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm == arm)
    }

    pub fn ises(&self, arm: Arm) -> Vec<f64> {
        self.records.iter().filter(|r| r.arm == arm).map(|r| r.ise).collect()
    }

    /// CSV with header `replicate,arm,n,ise`.
    pub fn write_records_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["replicate", "arm", "n", "ise"])?;
        for r in &self.records {
            wtr.write_record([
                r.replicate.to_string(),
                r.arm.name().to_string(),
                r.n.to_string(),
                r.ise.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn with_context(r: usize, e: Error) -> Error {
    let tag = |m: String| format!("replicate {r}: {m}");
    match e {
        Error::Domain(m) => Error::Domain(tag(m)),
        Error::Argument(m) => Error::Argument(tag(m)),
        Error::Config(m) => Error::Config(tag(m)),
        Error::Validation(m) => Error::Validation(tag(m)),
        Error::Numeric(m) => Error::Numeric(tag(m)),
        Error::Usage(m) => Error::Usage(tag(m)),
        other => other,
    }
}

fn summarize(arm: Arm, n: usize, ises: &[f64], split: f64) -> ArmSummary {
    let count = ises.len();
    let mean = ises.iter().sum::<f64>() / count as f64;
    let sd = if count > 1 {
        (ises.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    let le = ises.iter().filter(|v| **v <= split).count();
    ArmSummary {
        arm,
        n,
        count,
        mean,
        sd,
        count_le_split: le,
        count_gt_split: count - le,
    }
}

struct ArmPlan {
    arm: Arm,
    n: usize,
    sampler: Sampler,
    bias: BiasSpec,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<IseReport> {
    cfg.validate()?;
    let quad = Quadrature::default();
    let f = cfg.density.model();
    let unit = BiasSpec::constant(1.0)?;
    let rcdb_computed = rcdb(&f, &cfg.bias, &quad)?;
    let rcdb_used = cfg.rcdb_override.unwrap_or(rcdb_computed);

    let mut plans = Vec::new();
    let mut n_biased = None;
    if matches!(cfg.arms, Arms::DirectOnly | Arms::PairedEquivalence) {
        plans.push(ArmPlan {
            arm: Arm::Direct,
            n: cfg.n_direct,
            sampler: Sampler::new(&f, &unit)?,
            bias: unit.clone(),
        });
    }
    if matches!(cfg.arms, Arms::BiasedOnly | Arms::PairedEquivalence) {
        let n = if cfg.arms == Arms::PairedEquivalence {
            equivalent_biased_n(cfg.n_direct, rcdb_used)?
        } else {
            cfg.n_direct
        };
        n_biased = Some(n);
        plans.push(ArmPlan {
            arm: Arm::Biased,
            n,
            sampler: Sampler::new(&f, &cfg.bias)?,
            bias: cfg.bias.clone(),
        });
    }

    let j_max = plans
        .iter()
        .map(|p| BlockScheme::new(p.n).map(|s| s.j_max()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let truth = Truth::new(&f, j_max, cfg.grid_size, &quad)?;
    let opts = AdaptiveOptions {
        project_nonnegative: cfg.project_nonnegative,
    };

    let one = |r: usize| -> Result<Vec<IseRecord>> {
        plans
            .iter()
            .map(|p| {
                let mut rng = cfg.seed(p.arm, r).rng();
                let (values, _) = p.sampler.biased(p.n, &mut rng)?;
                let sample = BiasedSample::new(values, p.bias.clone())?;
                let est = adaptive_estimate_with(&sample, opts)?;
                Ok(IseRecord {
                    replicate: r,
                    arm: p.arm,
                    n: p.n,
                    ise: truth.series_ise(&est)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| with_context(r, e))
    };
    let per_rep: Vec<Vec<IseRecord>> = if cfg.parallel {
        (0..cfg.replications).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..cfg.replications).map(one).collect::<Result<_>>()?
    };
    // records grouped by arm, each in replicate order
    let mut records: Vec<IseRecord> = per_rep.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.arm, r.replicate));

    let pooled = records.iter().map(|r| r.ise).sum::<f64>() / records.len() as f64;
    let split = cfg.split_at.unwrap_or(pooled);
    let summaries = plans
        .iter()
        .map(|p| {
            let ises: Vec<f64> = records.iter().filter(|r| r.arm == p.arm).map(|r| r.ise).collect();
            summarize(p.arm, p.n, &ises, split)
        })
        .collect();
    Ok(IseReport {
        config: cfg.clone(),
        rcdb_computed,
        rcdb_used,
        n_biased,
        split,
        summaries,
        records,
    })
}

/// Smoothed density of one ISE subgroup, or the reason it was omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupDensity {
    pub count: usize,
    pub omitted: bool,
    pub lo: f64,
    pub hi: f64,
    /// `(ise, density)` pairs on an equispaced grid over `[lo, hi]`.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmTailSplit {
    pub arm: Arm,
    pub split: f64,
    pub lower_count: usize,
    pub upper_count: usize,
    pub lower: SubgroupDensity,
    pub upper: SubgroupDensity,
}

/// Density of a group of ISE values: rescale to `[0, 1]`, fit the
/// adaptive estimate with `w = 1`, map back.
pub fn subgroup_density(values: &[f64]) -> Result<SubgroupDensity> {
    let count = values.len();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if count < MIN_SUBGROUP || !(hi > lo) {
        return Ok(SubgroupDensity {
            count,
            omitted: true,
            lo: if count == 0 { 0.0 } else { lo },
            hi: if count == 0 { 0.0 } else { hi },
            points: Vec::new(),
        });
    }
    let width = hi - lo;
    let scaled = values.iter().map(|v| ((v - lo) / width).clamp(0.0, 1.0)).collect();
    let est = adaptive_estimate_with(&BiasedSample::new(scaled, BiasSpec::constant(1.0)?)?, AdaptiveOptions::default())?;
    let points = unit_grid(SUBGROUP_GRID)?
        .into_iter()
        .map(|t| (lo + t * width, est.eval(t) / width))
        .collect();
    Ok(SubgroupDensity {
        count,
        omitted: false,
        lo,
        hi,
        points,
    })
}

/// Split each arm's ISEs at `split` (`<=` goes low) and smooth both groups.
pub fn ise_tail_split(report: &IseReport, split: f64) -> Result<Vec<ArmTailSplit>> {
    if report.records.is_empty() {
        return Err(Error::Argument("report has no records".into()));
    }
    report
        .summaries
        .iter()
        .map(|s| {
            let ises = report.ises(s.arm);
            let (low, high): (Vec<f64>, Vec<f64>) = ises.iter().partition(|v| **v <= split);
            Ok(ArmTailSplit {
                arm: s.arm,
                split,
                lower_count: low.len(),
                upper_count: high.len(),
                lower: subgroup_density(&low)?,
                upper: subgroup_density(&high)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub mise: f64,
    pub normalized: f64,
}

/// Monte Carlo MISE of the adaptive estimate for each `n` in `n_list`.
///
/// Replicate `r` at list position `i` uses stream
/// `(base_seed, i * reps + r)`.
pub fn rate_check(
    f: &DensityModel,
    w: &BiasSpec,
    s: &SobolevSpec,
    n_list: &[usize],
    reps: usize,
    base_seed: u64,
) -> Result<Vec<RateRow>> {
    if n_list.is_empty() {
        return Err(Error::Argument("n list is empty".into()));
    }
    if n_list.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Argument("n list must be strictly increasing".into()));
    }
    if n_list[0] < 2 {
        return Err(Error::Argument("every n must be >= 2".into()));
    }
    if reps < 100 {
        return Err(Error::Argument(format!("rate check needs >= 100 replications, got {reps}")));
    }
    let quad = Quadrature::default();
    let report = coefficient_of_difficulty(f, w, s, &quad)?;
    let last = *n_list.last().expect("nonempty");
    let truth = Truth::new(f, BlockScheme::new(last)?.j_max(), DEFAULT_ISE_NODES, &quad)?;
    let sampler = Sampler::new(f, w)?;
    let exponent = 2.0 * s.m as f64 / (2.0 * s.m as f64 + 1.0);

    n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let ises = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let seed = SeedSpec::new(base_seed, (i * reps + r) as u64);
                    let (values, _) = sampler.biased(n, &mut seed.rng())?;
                    let est = adaptive_estimate_with(&BiasedSample::new(values, w.clone())?, AdaptiveOptions::default())?;
                    truth.series_ise(&est).map_err(|e| with_context(r, e))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mise = ises.iter().sum::<f64>() / reps as f64;
            Ok(RateRow {
                n,
                mise,
                normalized: (report.i_fw * n as f64).powf(exponent) * mise,
            })
        })
        .collect()
}

/// CSV with header `n,mise,normalized`.
pub fn write_rate_csv<W: Write>(writer: W, rows: &[RateRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["n", "mise", "normalized"])?;
    for r in rows {
        wtr.write_record([r.n.to_string(), r.mise.to_string(), r.normalized.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::phi_unchecked;

    #[test]
    fn ise_examples() {
        let q = Quadrature::default();
        let f = CornerDensity::Normal.model();
        assert!(ise(|x| f.pdf(x), &f, &q).unwrap() < 1e-20);
        let v = ise(|x| f.pdf(x) + 0.1 * phi_unchecked(1, x), &f, &q).unwrap();
        assert!((v - 0.01).abs() < 1e-10);
        let l2 = q.integrate(|x| f.pdf(x).powi(2), 0.0, 1.0).unwrap();
        let v = ise(|_| 1.0, &f, &q).unwrap();
        assert!((v - (l2 - 1.0)).abs() < 1e-9);
        assert!((v - 0.88).abs() < 0.01, "{v}");
    }

    #[test]
    fn ise_rejects_non_finite_estimates() {
        let q = Quadrature::default();
        let f = CornerDensity::Uniform.model();
        assert!(matches!(ise(|_| f64::NAN, &f, &q), Err(Error::Numeric(_))));
    }

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::paired(
            CornerDensity::Normal,
            BiasSpec::linear(0.1, 0.9).unwrap(),
            25,
            40,
            7,
        );
        cfg.grid_size = 201;
        cfg
    }

    #[test]
    fn serial_and_parallel_reports_match() {
        let mut cfg = small_cfg();
        let a = run_experiment(&cfg).unwrap();
        cfg.parallel = false;
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn summaries_are_consistent() {
        let rep = run_experiment(&small_cfg()).unwrap();
        assert_eq!(rep.n_biased, Some(27));
        for s in &rep.summaries {
            let ises = rep.ises(s.arm);
            assert_eq!(s.count_le_split + s.count_gt_split, 40);
            let mean = ises.iter().sum::<f64>() / ises.len() as f64;
            assert!((mean - s.mean).abs() < 1e-12);
            assert!(ises.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn shared_streams_with_unit_bias_give_identical_arms() {
        let mut cfg = ExperimentConfig::paired(
            CornerDensity::Monotone,
            BiasSpec::constant(1.0).unwrap(),
            30,
            25,
            3,
        );
        cfg.seed_pairing = SeedPairing::Shared;
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.n_biased, Some(30));
        assert_eq!(rep.ises(Arm::Direct), rep.ises(Arm::Biased));
    }

    #[test]
    fn single_arm_configs() {
        let mut cfg = small_cfg();
        cfg.arms = Arms::DirectOnly;
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.summaries.len(), 1);
        assert!(rep.n_biased.is_none());
        cfg.arms = Arms::BiasedOnly;
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.n_biased, Some(25));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_cfg();
        cfg.replications = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small_cfg();
        cfg.grid_size = 100;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small_cfg();
        cfg.rcdb_override = Some(-1.0);
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn tail_split_edges() {
        let rep = run_experiment(&small_cfg()).unwrap();
        let split = ise_tail_split(&rep, -1.0).unwrap();
        for arm in &split {
            assert_eq!(arm.lower_count, 0);
            assert_eq!(arm.upper_count, 40);
            assert!(arm.lower.omitted);
            assert!(!arm.upper.omitted);
        }
        let sd = subgroup_density(&[0.1, 0.2]).unwrap();
        assert!(sd.omitted);
    }

    #[test]
    fn identical_groups_give_identical_densities() {
        let values = [0.05, 0.07, 0.08, 0.1, 0.11, 0.2, 0.3];
        assert_eq!(subgroup_density(&values).unwrap(), subgroup_density(&values).unwrap());
        let d = subgroup_density(&values).unwrap();
        assert_eq!(d.points.len(), SUBGROUP_GRID);
        assert_eq!(d.points[0].0, 0.05);
    }

    #[test]
    fn rate_check_validation() {
        let f = CornerDensity::Uniform.model();
        let w = BiasSpec::constant(1.0).unwrap();
        let s = SobolevSpec::new(1, 1.0).unwrap();
        assert!(rate_check(&f, &w, &s, &[100, 50], 100, 1).is_err());
        assert!(rate_check(&f, &w, &s, &[100, 200], 99, 1).is_err());
        assert!(rate_check(&f, &w, &s, &[], 100, 1).is_err());
    }

    #[test]
    fn records_csv_header() {
        let rep = run_experiment(&small_cfg()).unwrap();
        let mut buf = Vec::new();
        rep.write_records_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replicate,arm,n,ise\n0,direct,25,"));
        assert_eq!(text.lines().count(), 81);
    }
}
