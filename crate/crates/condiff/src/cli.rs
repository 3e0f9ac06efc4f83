//! Command-line front end. [`run`] parses arguments, dispatches, and returns
//! the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use condiff_core::fvm::assemble_with_values;
use condiff_core::pipeline::{histogram, BinScale, Histogram};
use condiff_core::sparse::estimate_extreme_eigenvalues;
use condiff_core::{
    CovarianceFamily, DatasetConfig, GridSpec, SampleGenerator, ScalarField, SpectrumEstimate,
};

use crate::config::ConfigFile;
use crate::dataset::{generate_dataset, Dataset, GenerateOptions};
use crate::error::Error;
use crate::export::export_sample;
use crate::manifest::{Manifest, SummaryJson, MANIFEST_FILE};
use crate::validate::validate_dataset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_GENERATION: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

pub const DEFAULT_SPECTRUM_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(
    name = "condiff",
    version,
    about = "Generate and inspect high-contrast diffusion datasets"
)]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Suppress summary output.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset directory.
    Generate(GenerateArgs),
    /// Re-verify checksums, contrast bounds and residuals of a dataset.
    Validate(ValidateArgs),
    /// Contrast statistics and histogram of a dataset.
    Stats(StatsArgs),
    /// Extreme eigenvalues and condition number of one problem.
    Spectrum(SpectrumArgs),
    /// Write phi, k and u of one sample as PGM images and CSV.
    ExportField(ExportArgs),
}

/// Dataset parameters, either from a JSON file or inline.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file; a manifest.json is accepted and replayed.
    #[arg(long, value_name = "PATH", conflicts_with_all = [
        "family", "variance", "grid", "train", "test", "contrast_min", "contrast_max",
        "seed", "correlation_length", "solver_tol", "max_attempts",
    ])]
    pub config: Option<PathBuf>,

    /// Covariance family: cubic, exponential (exp) or gaussian (gauss).
    #[arg(long)]
    pub family: Option<CovarianceFamily>,

    /// Field variance; 0.1, 0.4, 1.0 and 2.0 select their contrast class.
    #[arg(long)]
    pub variance: Option<f64>,

    /// Cells per side.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,

    #[arg(long, value_name = "COUNT")]
    pub train: Option<usize>,

    #[arg(long, value_name = "COUNT")]
    pub test: Option<usize>,

    /// Lower contrast bound (inclusive).
    #[arg(long, requires = "contrast_max")]
    pub contrast_min: Option<f64>,

    /// Upper contrast bound (inclusive).
    #[arg(long, requires = "contrast_min")]
    pub contrast_max: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub correlation_length: Option<f64>,

    #[arg(long)]
    pub solver_tol: Option<f64>,

    #[arg(long, value_name = "COUNT")]
    pub max_attempts: Option<u64>,
}

impl ConfigArgs {
    fn has_inline(&self) -> bool {
        self.family.is_some() || self.variance.is_some() || self.grid.is_some()
    }

    pub fn resolve(&self) -> Result<DatasetConfig, Error> {
        let file = match &self.config {
            Some(path) => read_config_or_manifest(path)?,
            None => {
                let missing =
                    |flag: &str| Error::Config(format!("--{flag} is required without --config"));
                let family = self.family.ok_or_else(|| missing("family"))?;
                let variance = self.variance.ok_or_else(|| missing("variance"))?;
                let mut file =
                    ConfigFile::new(family, variance, self.grid.ok_or_else(|| missing("grid"))?);
                file.contrast_min = self.contrast_min;
                file.contrast_max = self.contrast_max;
                file.n_train = self.train.unwrap_or(file.n_train);
                file.n_test = self.test.unwrap_or(file.n_test);
                file.master_seed = self.seed.unwrap_or(file.master_seed);
                file.correlation_length =
                    self.correlation_length.unwrap_or(file.correlation_length);
                file.solver_tol = self.solver_tol.unwrap_or(file.solver_tol);
                file.max_rejection_attempts =
                    self.max_attempts.unwrap_or(file.max_rejection_attempts);
                file
            }
        };
        file.to_config()
    }
}

fn read_config_or_manifest(path: &Path) -> Result<ConfigFile, Error> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let json_err = |source| Error::Json {
        path: path.to_owned(),
        source,
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    if value.get("schema").is_some() {
        value = value
            .get_mut("config")
            .map(serde_json::Value::take)
            .unwrap_or_default();
    }
    serde_json::from_value(value).map_err(json_err)
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,

    /// Output directory (created if missing).
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,

    /// Worker threads; output does not depend on this.
    #[arg(long, env = "CONDIFF_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// Also write a single-precision copy of the arrays.
    #[arg(long)]
    pub f32: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset directory.
    pub dataset: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset directory.
    pub dataset: PathBuf,

    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub bins: u32,

    /// Geometrically spaced bins.
    #[arg(long)]
    pub log_bins: bool,

    /// Write the histogram CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Dataset directory to read the sample from.
    #[arg(conflicts_with = "poisson")]
    pub dataset: Option<PathBuf>,

    /// Sample index (dataset or generated).
    #[arg(long, conflicts_with = "poisson")]
    pub index: Option<u64>,

    /// Use k = 1 on a `--grid` sized mesh.
    #[arg(long)]
    pub poisson: bool,

    #[command(flatten)]
    pub config: ConfigArgs,

    /// Relative accuracy of the eigenvalue estimates.
    #[arg(long, default_value_t = DEFAULT_SPECTRUM_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Dataset directory.
    pub dataset: PathBuf,

    #[arg(long)]
    pub index: u64,

    /// Output directory.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,

    /// Scale the k image by log10 k.
    #[arg(long)]
    pub log_k: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

fn is_usage(e: &Error) -> bool {
    use condiff_core::Error as E;
    matches!(
        e,
        Error::Config(_)
            | Error::Json { .. }
            | Error::Core(E::InvalidConfig(_) | E::InvalidGrid(_) | E::InvalidModel(_))
    ) || matches!(e, Error::Io { .. })
}

fn config_failure(e: Error) -> Failure {
    let code = if is_usage(&e) {
        EXIT_USAGE
    } else {
        EXIT_GENERATION
    };
    Failure::new(code, e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a, &cli, out),
        Command::Validate(a) => validate(a, &cli, out),
        Command::Stats(a) => stats(a, out),
        Command::Spectrum(a) => spectrum(a, out),
        Command::ExportField(a) => export_field(a, &cli, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn generate(args: &GenerateArgs, cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let config = args.config.resolve().map_err(config_failure)?;
    let options = GenerateOptions {
        threads: args.threads.map(|t| t as usize),
        export_f32: args.f32,
    };
    let start = Instant::now();
    let verbose = cli.verbose > 0;
    let progress = |done: usize, total: usize| {
        if verbose {
            eprintln!("{done}/{total} samples");
        }
    };
    let manifest = generate_dataset(&config, &args.out, &options, Some(&progress))
        .map_err(|e| Failure::new(EXIT_GENERATION, e))?;
    if !cli.quiet {
        let s = manifest.stats.all;
        let _ = writeln!(
            out,
            "generated {} samples ({} train, {} test) in {}: mean contrast {:.4e}, wall time {:.2} s",
            manifest.sample_count,
            manifest.split.train.len(),
            manifest.split.test.len(),
            args.out.display(),
            s.mean,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

fn validate(args: &ValidateArgs, cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let report = validate_dataset(&args.dataset)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("corrupt-file: {e}")))?;
    if report.is_ok() {
        if !cli.quiet {
            let _ = writeln!(
                out,
                "ok: {} samples verified (checksums, bounds, contrast, residual); max residual {:.3e}",
                report.samples_checked, report.max_residual
            );
        }
        return Ok(());
    }
    for v in &report.violations {
        let _ = writeln!(out, "{v}");
    }
    Err(Failure::new(
        EXIT_VALIDATION,
        format!(
            "{} violation(s); offending samples: {:?}",
            report.violations.len(),
            report.offending_indices()
        ),
    ))
}

fn summary_row(name: &str, s: &SummaryJson) -> String {
    format!(
        "{name:<6} {:>6} {:>11.3e} {:>11.3e} {:>11.3e}",
        s.count, s.min, s.mean, s.max
    )
}

fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("lower,upper,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        s.push_str(&format!("{:e},{:e},{c}\n", h.edges[i], h.edges[i + 1]));
    }
    s
}

fn stats(args: &StatsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let path = args.dataset.join(MANIFEST_FILE);
    let m = Manifest::read(&path).map_err(|e| Failure::new(EXIT_GENERATION, e))?;
    let c = &m.config;
    let contrasts: Vec<f64> = m.samples.iter().map(|r| r.contrast).collect();
    let _ = writeln!(
        out,
        "dataset {} variance {} grid {} correlation_length {} samples {}",
        c.family, c.variance, c.grid_n, c.correlation_length, m.sample_count
    );
    let _ = writeln!(
        out,
        "{:<6} {:>6} {:>11} {:>11} {:>11}",
        "split", "count", "min", "mean", "max"
    );
    for (name, s) in [
        ("all", &m.stats.all),
        ("train", &m.stats.train),
        ("test", &m.stats.test),
    ] {
        let _ = writeln!(out, "{}", summary_row(name, s));
    }
    let range = match (c.contrast_min, c.contrast_max) {
        (Some(lo), Some(hi)) => {
            let within = contrasts.iter().filter(|&&x| lo <= x && x <= hi).count();
            let _ = writeln!(
                out,
                "bounds {lo} <= c <= {hi}: {within}/{} within",
                contrasts.len()
            );
            Some((lo, hi))
        }
        _ => None,
    };
    let scale = if args.log_bins {
        BinScale::Log
    } else {
        BinScale::Linear
    };
    let h = histogram(&contrasts, args.bins as usize, scale, range)
        .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let csv = histogram_csv(&h);
    match &args.histogram {
        Some(p) => {
            std::fs::write(p, csv).map_err(|e| Failure::new(EXIT_GENERATION, Error::io(p)(e)))?
        }
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    Ok(())
}

fn spectrum(args: &SpectrumArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(Failure::new(EXIT_USAGE, "--tol must lie in (0, 1)"));
    }
    let (label, k, f) = if args.poisson {
        let n = args
            .config
            .grid
            .ok_or_else(|| Failure::new(EXIT_USAGE, "--poisson needs --grid"))?;
        let grid = GridSpec::new(n).map_err(|e| Failure::new(EXIT_USAGE, e))?;
        let one = ScalarField::constant(grid, 1.0).map_err(|e| Failure::new(EXIT_USAGE, e))?;
        (format!("poisson n={n}"), one.clone(), one)
    } else {
        let index = args
            .index
            .ok_or_else(|| Failure::new(EXIT_USAGE, "--index is required (or use --poisson)"))?;
        match &args.dataset {
            Some(dir) => {
                if args.config.config.is_some() || args.config.has_inline() {
                    return Err(Failure::new(
                        EXIT_USAGE,
                        "a dataset cannot be combined with generation flags",
                    ));
                }
                let mut ds = Dataset::open(dir).map_err(|e| Failure::new(EXIT_GENERATION, e))?;
                let t = ds.read_verified(index).map_err(|e| {
                    let code = if matches!(e, Error::IndexOutOfRange { .. }) {
                        EXIT_USAGE
                    } else {
                        EXIT_GENERATION
                    };
                    Failure::new(code, e)
                })?;
                (format!("{} sample {index}", dir.display()), t.k, t.f)
            }
            None => {
                let config = args.config.resolve().map_err(config_failure)?;
                let generator =
                    SampleGenerator::new(config).map_err(|e| config_failure(e.into()))?;
                let s = generator.generate(index).map_err(|source| {
                    Failure::new(EXIT_GENERATION, Error::Sample { index, source })
                })?;
                (
                    format!("generated sample {index}"),
                    s.k.as_field().clone(),
                    s.f,
                )
            }
        }
    };
    let problem = assemble_with_values(&k, &f).map_err(|e| Failure::new(EXIT_GENERATION, e))?;
    let est: SpectrumEstimate = estimate_extreme_eigenvalues(problem.matrix(), args.tol)
        .map_err(|e| Failure::new(EXIT_GENERATION, e))?;
    let _ = writeln!(out, "problem {label}");
    let _ = writeln!(out, "lambda_max {:.6e}", est.lambda_max);
    let _ = writeln!(out, "lambda_min {:.6e}", est.lambda_min);
    let _ = writeln!(out, "kappa {:.6e}", est.kappa);
    Ok(())
}

fn export_field(args: &ExportArgs, cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let mut ds = Dataset::open(&args.dataset).map_err(|e| Failure::new(EXIT_GENERATION, e))?;
    if args.index >= ds.len() {
        return Err(Failure::new(
            EXIT_USAGE,
            Error::IndexOutOfRange {
                index: args.index,
                count: ds.len(),
            },
        ));
    }
    let written = export_sample(&mut ds, args.index, &args.out, args.log_k)
        .map_err(|e| Failure::new(EXIT_GENERATION, e))?;
    if !cli.quiet {
        for w in written {
            let _ = writeln!(
                out,
                "{:<9} min {:e} max {:e} -> {}, {}",
                if w.log_scaled { "log10(k)" } else { w.name },
                w.min,
                w.max,
                w.pgm.display(),
                w.csv.display()
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
