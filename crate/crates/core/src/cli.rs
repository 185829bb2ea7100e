//! Command-line driver.
//!
//! Exit codes: 0 success, 2 usage, 3 validation/configuration/I/O,
//! 4 numeric. Failures print a single JSON line on stderr:
//! `{"error":"<kind>","code":<n>,"message":"..."}`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::basis::{sobolev_seminorm, project_all, SobolevSpec};
use crate::bench::{ise_tail_split, rate_check, run_experiment, write_rate_csv, Arms, ExperimentConfig, SeedPairing, DEFAULT_ISE_NODES};
use crate::bias::BiasSpec;
use crate::density::CornerDensity;
use crate::difficulty::{coefficient_of_difficulty, equivalent_biased_n, rcdb};
use crate::error::{Error, Result};
use crate::estimator::{adaptive_estimate_with, AdaptiveOptions};
use crate::quadrature::Quadrature;
use crate::sampling::{read_sample_csv, sample_biased, write_sample_csv, BiasedSample, SampleSidecar, SeedSpec};

/// Coefficients used when `Q` is derived from the density.
pub const DEFAULT_Q_TERMS: usize = 256;
const ZERO_Q: f64 = 1e-12;

/// Parse `const:<c>`, `linear:<a>,<b>` (w = a + b y) or `table:<path>`.
pub fn parse_bias(text: &str) -> Result<BiasSpec> {
    let text = text.trim();
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::Usage(format!("bias spec '{text}' must look like const:<c>, linear:<a>,<b> or table:<path>")))?;
    let number = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Usage(format!("'{s}' in bias spec '{text}' is not a number")))
    };
    match kind.trim() {
        "const" => BiasSpec::constant(number(rest)?),
        "linear" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Usage(format!("linear bias needs two numbers, got '{rest}'")));
            }
            BiasSpec::linear(number(parts[0])?, number(parts[1])?)
        }
        "table" => {
            if rest.trim().is_empty() {
                return Err(Error::Usage("table bias needs a file path".into()));
            }
            BiasSpec::from_csv_path(Path::new(rest.trim()))
        }
        other => Err(Error::Usage(format!("unknown bias kind '{other}'"))),
    }
}

#[derive(Debug, Parser)]
#[command(name = "biased-density", version, about = "Density estimation from biased samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficient of difficulty, sharp constants and equivalent sample size.
    Rcdb(RcdbArgs),
    /// Draw a seeded biased sample to CSV (plus a JSON seed sidecar).
    Sample(SampleArgs),
    /// Fit the adaptive estimate to a sample CSV.
    Estimate(EstimateArgs),
    /// Monte Carlo direct-vs-biased ISE experiment.
    Bench(BenchArgs),
    /// MISE sweep over sample sizes with the sharp-constant normalization.
    Rate(RateArgs),
}

#[derive(Debug, Args, Serialize)]
struct ModelArgs {
    /// Underlying density: uniform, normal or monotone.
    #[arg(long, default_value = "normal")]
    density: String,
    /// Biasing function: const:<c>, linear:<a>,<b> or table:<path>.
    #[arg(long, default_value = "const:1", allow_hyphen_values = true)]
    bias: String,
}

#[derive(Debug, Args, Serialize)]
struct RcdbArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// Sobolev smoothness order.
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Sobolev radius Q [default: seminorm of the density's first 256 coefficients].
    #[arg(long)]
    q_value: Option<f64>,
    /// Direct sample size to convert into the equivalent biased size.
    #[arg(long)]
    n_direct: Option<usize>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// Output CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    /// Sample CSV with header `y`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Biasing function [default: read from the sample's sidecar].
    #[arg(long, allow_hyphen_values = true)]
    bias: Option<String>,
    /// Output CSV `x,f_hat`.
    #[arg(long)]
    out: PathBuf,
    /// Coefficient JSON [default: <out> with .json extension].
    #[arg(long)]
    coeffs_out: Option<PathBuf>,
    /// Number of equispaced output points on [0, 1].
    #[arg(long, default_value_t = 401)]
    grid: usize,
    /// Clip negative values and rescale to the estimated mass.
    #[arg(long)]
    project_nonnegative: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ArmsArg {
    Direct,
    Biased,
    Paired,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 25)]
    n_direct: usize,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "paired")]
    arms: ArmsArg,
    /// RCDB used to size the biased arm [default: computed].
    #[arg(long)]
    rcdb: Option<f64>,
    /// ISE split for tail counts [default: pooled mean ISE].
    #[arg(long)]
    split: Option<f64>,
    /// Simpson nodes for ISE quadrature.
    #[arg(long, default_value_t = DEFAULT_ISE_NODES)]
    ise_nodes: usize,
    #[arg(long)]
    project_nonnegative: bool,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Per-replicate CSV [default: <out> with .csv extension].
    #[arg(long)]
    records_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long)]
    q_value: Option<f64>,
    /// Comma-separated increasing sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 800, 3200])]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV `n,mise,normalized`; config goes to <out>.json.
    #[arg(long)]
    out: PathBuf,
}

/// Files are staged in memory and written together; on failure the ones
/// already written are removed.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: String,
}

impl Outputs {
    fn file(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    fn json(&mut self, path: PathBuf, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.file(path, bytes);
        Ok(())
    }

    fn commit(self) -> Result<String> {
        let mut written: Vec<&Path> = Vec::new();
        for (path, bytes) in &self.files {
            if let Err(e) = fs::write(path, bytes) {
                for p in written {
                    let _ = fs::remove_file(p);
                }
                return Err(Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("writing {}: {e}", path.display()),
                )));
            }
            written.push(path);
        }
        Ok(self.stdout)
    }
}

fn sobolev(density: &crate::density::DensityModel, m: u32, q_value: Option<f64>) -> Result<Option<SobolevSpec>> {
    match q_value {
        Some(q) => SobolevSpec::new(m, q).map(Some),
        None => {
            if m < 1 {
                return Err(Error::Usage("--m must be >= 1".into()));
            }
            let coeffs = project_all(density, DEFAULT_Q_TERMS - 1, &Quadrature::default())?;
            let q = sobolev_seminorm(&coeffs, m);
            if q > ZERO_Q {
                SobolevSpec::new(m, q).map(Some)
            } else {
                Ok(None)
            }
        }
    }
}

fn cmd_rcdb(args: RcdbArgs) -> Result<Outputs> {
    let density: CornerDensity = args.model.density.parse()?;
    let f = density.model();
    let w = parse_bias(&args.model.bias)?;
    let quad = Quadrature::default();
    let spec = sobolev(&f, args.m, args.q_value)?;
    let (mu, r, i_f1, i_fw) = match &spec {
        Some(s) => {
            let rep = coefficient_of_difficulty(&f, &w, s, &quad)?;
            (rep.mu, rep.rcdb, Some(rep.i_f1), Some(rep.i_fw))
        }
        None => (crate::difficulty::mu_true(&f, &w, &quad)?, rcdb(&f, &w, &quad)?, None, None),
    };
    let n_biased = args.n_direct.map(|n| equivalent_biased_n(n, r)).transpose()?;
    let mut out = Outputs::default();
    if args.json {
        let v = json!({
            "config": &args,
            "q": spec.map(|s| s.q),
            "mu": mu,
            "rcdb": r,
            "i_f1": i_f1,
            "i_fw": i_fw,
            "n_direct": args.n_direct,
            "n_biased": n_biased,
        });
        out.stdout = format!("{}\n", serde_json::to_string_pretty(&v)?);
    } else {
        let opt = |v: Option<f64>| v.map_or("undefined (Q = 0; pass --q-value)".to_string(), |x| format!("{x:.6}"));
        let mut s = format!(
            "density   {}\nbias      {}\nm         {}\nQ         {}\nmu        {mu:.6}\nrcdb      {r:.6}\ni_f1      {}\ni_fw      {}\n",
            density,
            w,
            args.m,
            spec.map_or("undefined".to_string(), |s| format!("{:.6}", s.q)),
            opt(i_f1),
            opt(i_fw),
        );
        if let (Some(n), Some(nb)) = (args.n_direct, n_biased) {
            s.push_str(&format!("n_direct  {n}\nn_biased  {nb}\n"));
        }
        out.stdout = s;
    }
    Ok(out)
}

fn cmd_sample(args: SampleArgs) -> Result<Outputs> {
    let f: CornerDensity = args.model.density.parse()?;
    let w = parse_bias(&args.model.bias)?;
    let seed = SeedSpec::new(args.seed, args.replicate);
    let sample = sample_biased(&f.model(), &w, args.n, seed)?;
    let mut csv_bytes = Vec::new();
    write_sample_csv(&mut csv_bytes, sample.values())?;
    let sidecar = SampleSidecar {
        base_seed: seed.base_seed,
        replicate_index: seed.replicate_index,
        n: sample.n(),
        bias: w.to_string(),
        config: Some(serde_json::to_value(&args)?),
    };
    let mut out = Outputs::default();
    out.file(args.out.clone(), csv_bytes);
    out.json(args.out.with_extension("json"), &sidecar)?;
    Ok(out)
}

fn cmd_estimate(args: EstimateArgs) -> Result<Outputs> {
    let bias_text = match &args.bias {
        Some(b) => b.clone(),
        None => {
            let side = args.input.with_extension("json");
            let text = fs::read_to_string(&side).map_err(|_| {
                Error::Usage(format!("no --bias given and no sidecar at {}", side.display()))
            })?;
            let sidecar: SampleSidecar = serde_json::from_str(&text)?;
            sidecar.bias
        }
    };
    let w = parse_bias(&bias_text)?;
    let values = read_sample_csv(fs::File::open(&args.input)?)?;
    let sample = BiasedSample::new(values, w)?;
    let est = adaptive_estimate_with(
        &sample,
        AdaptiveOptions {
            project_nonnegative: args.project_nonnegative,
        },
    )?;
    let mut grid_bytes = Vec::new();
    est.write_grid_csv(&mut grid_bytes, args.grid)?;
    let mut coeff_json = serde_json::to_value(&est)?;
    coeff_json["bias"] = json!(bias_text);
    coeff_json["config"] = serde_json::to_value(&args)?;
    let mut out = Outputs::default();
    let coeffs_out = args.coeffs_out.clone().unwrap_or_else(|| args.out.with_extension("json"));
    out.file(args.out.clone(), grid_bytes);
    out.json(coeffs_out, &coeff_json)?;
    Ok(out)
}

fn cmd_bench(args: BenchArgs) -> Result<Outputs> {
    let density: CornerDensity = args.model.density.parse()?;
    let bias = parse_bias(&args.model.bias)?;
    let cfg = ExperimentConfig {
        density,
        bias,
        n_direct: args.n_direct,
        replications: args.replications,
        base_seed: args.seed,
        grid_size: args.ise_nodes,
        arms: match args.arms {
            ArmsArg::Direct => Arms::DirectOnly,
            ArmsArg::Biased => Arms::BiasedOnly,
            ArmsArg::Paired => Arms::PairedEquivalence,
        },
        split_at: args.split,
        rcdb_override: args.rcdb,
        project_nonnegative: args.project_nonnegative,
        seed_pairing: SeedPairing::Independent,
        parallel: true,
    };
    let report = run_experiment(&cfg)?;
    let tails = ise_tail_split(&report, report.split)?;
    let mut records = Vec::new();
    report.write_records_csv(&mut records)?;
    let doc = json!({
        "config": &args,
        "report": &report,
        "tail_split": &tails,
    });
    let mut stdout = format!(
        "rcdb used {:.4} (computed {:.4}); split {:.4}\n",
        report.rcdb_used, report.rcdb_computed, report.split
    );
    for s in &report.summaries {
        stdout.push_str(&format!(
            "{:<7} n={:<5} mean ISE {:.4}  sd {:.4}  <= split {:>5}  > split {:>5}\n",
            s.arm.name(),
            s.n,
            s.mean,
            s.sd,
            s.count_le_split,
            s.count_gt_split
        ));
    }
    let mut out = Outputs {
        stdout,
        ..Default::default()
    };
    let records_out = args.records_out.clone().unwrap_or_else(|| args.out.with_extension("csv"));
    out.json(args.out.clone(), &doc)?;
    out.file(records_out, records);
    Ok(out)
}

fn cmd_rate(args: RateArgs) -> Result<Outputs> {
    let density: CornerDensity = args.model.density.parse()?;
    let f = density.model();
    let w = parse_bias(&args.model.bias)?;
    let spec = sobolev(&f, args.m, args.q_value)?.ok_or_else(|| {
        Error::Config(format!("Q is zero for the {density} density; pass --q-value"))
    })?;
    let rows = rate_check(&f, &w, &spec, &args.n_list, args.replications, args.seed)?;
    let mut bytes = Vec::new();
    write_rate_csv(&mut bytes, &rows)?;
    let mut out = Outputs::default();
    out.file(args.out.clone(), bytes);
    out.json(
        args.out.with_extension("json"),
        &json!({ "config": &args, "q": spec.q, "rows": &rows }),
    )?;
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<String> {
    let outputs = match cli.command {
        Command::Rcdb(a) => cmd_rcdb(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Rate(a) => cmd_rate(a),
    }?;
    outputs.commit()
}

fn error_line(kind: &str, code: u8, message: &str) -> String {
    json!({ "error": kind, "code": code, "message": message }).to_string()
}

/// Run with explicit arguments; returns the exit code, stdout text and
/// the stderr line.
pub fn run_with_args<I, T>(args: I) -> (u8, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (0, e.to_string(), String::new()),
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
                    (2, String::new(), error_line("usage", 2, first))
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(stdout) => (0, stdout, String::new()),
        Err(e) => {
            let code = e.exit_code();
            (code, String::new(), error_line(e.kind(), code, &e.to_string()))
        }
    }
}

pub fn main() -> ExitCode {
    let (code, stdout, stderr) = run_with_args(std::env::args_os());
    print!("{stdout}");
    if !stderr.is_empty() {
        eprintln!("{stderr}");
    }
    ExitCode::from(code)
}
