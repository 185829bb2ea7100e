//! Seeded direct and biased sampling.
//!
//! Every random stream in the crate is a ChaCha8 generator
//! ([`rand_chacha::ChaCha8Rng`]). The key is `seed_from_u64(base_seed)`
//! (the seed is expanded with PCG32 as documented by `rand_core`), and the
//! replicate index selects the ChaCha stream via `set_stream`, so
//! `(base_seed, r)` pairs with different `r` never share keystream.
//!
//! Direct draws use inverse-CDF lookup on a tabulated CDF. Biased draws
//! propose from `f` and accept with probability `w(x) / w_max`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::density::DensityModel;
use crate::error::{Error, Result};

/// Nodes of the tabulated CDF and of the envelope search grid.
pub const TABLE_NODES: usize = 4097;
/// Multiplier on the grid supremum of `w`.
pub const ENVELOPE_SAFETY: f64 = 1.0001;
/// Proposal budget after which a low acceptance rate is an error.
pub const PROPOSAL_BUDGET: u64 = 1_000_000;
/// Minimum acceptance rate tolerated once the budget is spent.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub replicate_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, replicate_index: u64) -> Self {
        Self {
            base_seed,
            replicate_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

/// Observations `Y_1..Y_n` drawn with relative chance `w`.
#[derive(Debug, Clone)]
pub struct BiasedSample {
    values: Vec<f64>,
    bias: BiasSpec,
    seed: Option<SeedSpec>,
}

impl BiasedSample {
    /// Wrap observed values. Every value must lie where `w` was validated.
    pub fn new(values: Vec<f64>, bias: BiasSpec) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("sample is empty".into()));
        }
        for &y in &values {
            if !y.is_finite() {
                return Err(Error::Validation(format!("observation {y} is not finite")));
            }
            if !bias.covers(y, y) {
                let (a, b) = bias.interval();
                return Err(Error::Validation(format!(
                    "observation {y} lies outside the interval [{a}, {b}] where w is validated"
                )));
            }
        }
        Ok(Self {
            values,
            bias,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bias(&self) -> &BiasSpec {
        &self.bias
    }

    pub fn seed(&self) -> Option<SeedSpec> {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Same observations under a different biasing function.
    pub fn rebiased(&self, bias: BiasSpec) -> Result<Self> {
        let mut s = Self::new(self.values.clone(), bias)?;
        s.seed = self.seed;
        Ok(s)
    }
}

/// Inverse-CDF lookup table for a density.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn new(f: &DensityModel) -> Result<Self> {
        let (lo, hi) = f.support();
        let h = (hi - lo) / (TABLE_NODES - 1) as f64;
        let xs: Vec<f64> = (0..TABLE_NODES)
            .map(|i| if i == TABLE_NODES - 1 { hi } else { lo + h * i as f64 })
            .collect();
        let mut cdf = Vec::with_capacity(TABLE_NODES);
        cdf.push(0.0);
        let mut acc = 0.0;
        for pair in xs.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            // three-point Simpson cell; nonnegative for f >= 0
            let cell = (b - a) / 6.0 * (f.pdf(a) + 4.0 * f.pdf(0.5 * (a + b)) + f.pdf(b));
            acc += cell.max(0.0);
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Numeric("density has no tabulated mass".into()));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { xs, cdf })
    }

    /// Quantile for `u` in `[0, 1)`, linear within table cells.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|c| *c <= u);
        if k == 0 {
            return self.xs[0];
        }
        if k >= self.cdf.len() {
            return self.xs[self.xs.len() - 1];
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x0
        }
    }
}

/// Acceptance bookkeeping of one biased draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RejectionStats {
    pub proposals: u64,
    pub accepted: u64,
}

/// Precomputed sampler for a fixed `(f, w)`; reusable across replicates.
#[derive(Debug, Clone)]
pub struct Sampler {
    table: InverseCdf,
    bias: BiasSpec,
    w_max: f64,
}

impl Sampler {
    pub fn new(f: &DensityModel, bias: &BiasSpec) -> Result<Self> {
        let (lo, hi) = f.support();
        if !bias.covers(lo, hi) {
            let (a, b) = bias.interval();
            return Err(Error::Config(format!(
                "biasing function validated on [{a}, {b}] does not cover the support [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            table: InverseCdf::new(f)?,
            bias: bias.clone(),
            w_max: bias.grid_sup(lo, hi, TABLE_NODES) * ENVELOPE_SAFETY,
        })
    }

    /// Envelope constant `w_max`.
    pub fn envelope(&self) -> f64 {
        self.w_max
    }

    pub fn direct<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.table.quantile(rng.gen::<f64>())).collect()
    }

    /// Rejection draw of `n` biased observations. A constant `w` accepts
    /// every proposal without consuming acceptance draws, so its output
    /// equals [`Sampler::direct`] on the same stream.
    pub fn biased<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(Vec<f64>, RejectionStats)> {
        let mut out = Vec::with_capacity(n);
        let mut stats = RejectionStats {
            proposals: 0,
            accepted: 0,
        };
        let always = self.bias.is_constant();
        while out.len() < n {
            let x = self.table.quantile(rng.gen::<f64>());
            stats.proposals += 1;
            if always || rng.gen::<f64>() * self.w_max < self.bias.w(x) {
                out.push(x);
                stats.accepted += 1;
            }
            if stats.proposals >= PROPOSAL_BUDGET
                && (stats.accepted as f64) < MIN_ACCEPTANCE * stats.proposals as f64
            {
                return Err(Error::Config(format!(
                    "degenerate bias: acceptance rate {:.2e} after {} proposals",
                    stats.accepted as f64 / stats.proposals as f64,
                    stats.proposals
                )));
            }
        }
        Ok((out, stats))
    }
}

/// `n` i.i.d. draws from `f`.
pub fn sample_direct(f: &DensityModel, n: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Argument("sample size must be >= 1".into()));
    }
    let table = InverseCdf::new(f)?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| table.quantile(rng.gen::<f64>())).collect())
}

/// `n` i.i.d. draws from `g = w f / mu(f)`.
pub fn sample_biased(f: &DensityModel, w: &BiasSpec, n: usize, seed: SeedSpec) -> Result<BiasedSample> {
    sample_biased_with_stats(f, w, n, seed).map(|(s, _)| s)
}

pub fn sample_biased_with_stats(
    f: &DensityModel,
    w: &BiasSpec,
    n: usize,
    seed: SeedSpec,
) -> Result<(BiasedSample, RejectionStats)> {
    if n == 0 {
        return Err(Error::Argument("sample size must be >= 1".into()));
    }
    let sampler = Sampler::new(f, w)?;
    let (values, stats) = sampler.biased(n, &mut seed.rng())?;
    Ok((BiasedSample::new(values, w.clone())?.with_seed(seed), stats))
}

/// Seed provenance written next to a sample CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub base_seed: u64,
    pub replicate_index: u64,
    pub n: usize,
    pub bias: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Single-column CSV with header `y`.
pub fn write_sample_csv<W: Write>(writer: W, values: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["y"])?;
    for v in values {
        wtr.write_record([v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_sample_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 1 || &headers[0] != "y" {
        return Err(Error::Validation(format!(
            "sample CSV must have the single header 'y', found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let y: f64 = rec[0].parse().map_err(|_| {
            Error::Validation(format!("row {} of sample CSV is not a number: '{}'", i + 2, &rec[0]))
        })?;
        values.push(y);
    }
    if values.is_empty() {
        return Err(Error::Validation("sample CSV contains no observations".into()));
    }
    Ok(values)
}
