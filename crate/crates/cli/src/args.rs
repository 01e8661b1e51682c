use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shapemix_core::{Shape, SolverConfig};

use crate::error::CliError;
use crate::io::Column;

#[derive(Debug, Parser)]
#[command(name = "shapemix", version, about = "Shape-constrained mixture-proportion estimation")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw synthetic samples from one of the built-in profiles.
    Synth(SynthArgs),
    /// Fit mixture weights to a sample file.
    Fit(FitArgs),
    /// Evaluate the fitted density on an equispaced grid.
    Density(DensityArgs),
    /// Emit a duality-gap certificate for a unit-variance Gaussian fit.
    KwCert(KwCertArgs),
    /// Check the linear-minimization oracle against the vertex catalog.
    BenchOracle(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisFamily {
    Bernstein,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// gauss5, beta_concave, beta_convex_increasing or halfnormal
    #[arg(long)]
    pub profile: String,
    #[arg(long = "n", short = 'n')]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Sample file, or `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    /// Column of comma-separated input, by 0-based index or header name.
    #[arg(long)]
    pub column: Option<String>,
    /// Min-max rescale the samples to [0, 1].
    #[arg(long)]
    pub normalize: bool,
}

impl InputArgs {
    pub fn column(&self) -> Option<Column> {
        self.column.as_deref().map(Column::parse)
    }
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long, value_enum, default_value_t = BasisFamily::Bernstein)]
    pub basis: BasisFamily,
    /// Number of basis elements.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Gaussian kernel standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// File of Gaussian locations, one per line; defaults to M equispaced
    /// points over the sample range.
    #[arg(long)]
    pub atoms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long = "gap-tol")]
    pub gap_tol: Option<f64>,
    #[arg(long = "outer-tol")]
    pub outer_tol: Option<f64>,
    #[arg(long = "max-outer")]
    pub max_outer: Option<usize>,
    #[arg(long = "L0")]
    pub l0: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "gamma-base")]
    pub gamma_base: Option<f64>,
    #[arg(long = "rho-base")]
    pub rho_base: Option<f64>,
    /// Number of initial iterations that take shortened steps.
    #[arg(long = "shorter-steps")]
    pub shorter_steps: Option<usize>,
    #[arg(long = "shorter-step-factor")]
    pub shorter_step_factor: Option<f64>,
    #[arg(long = "subproblem-max-iters")]
    pub subproblem_max_iters: Option<usize>,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            l0: self.l0.unwrap_or(d.l0),
            beta: self.beta.unwrap_or(d.beta),
            gamma_base: self.gamma_base.unwrap_or(d.gamma_base),
            rho_base: self.rho_base.unwrap_or(d.rho_base),
            shorter_step_iters: self.shorter_steps.unwrap_or(d.shorter_step_iters),
            shorter_step_factor: self.shorter_step_factor.unwrap_or(d.shorter_step_factor),
            outer_tol: self.outer_tol.unwrap_or(d.outer_tol),
            gap_tol: self.gap_tol.unwrap_or(d.gap_tol),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            subproblem_max_iters: self.subproblem_max_iters.unwrap_or(d.subproblem_max_iters),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Shape constraint; `unimodal-fixed` takes the 1-based mode index.
    #[arg(long, num_args = 1..=2, default_value = "none")]
    pub constraint: Vec<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Weights file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Convergence trace CSV to write.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// File holding a reference optimum f*; prints the relative error.
    #[arg(long = "reference-f")]
    pub reference_f: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Samples used to place default Gaussian locations.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = shapemix_core::basis::DEFAULT_DENSITY_GRID)]
    pub grid: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KwCertArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Weights on the atom grid; fitted without constraint when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub atoms: Option<PathBuf>,
    /// Grid size when no atom file is given.
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Constraint family, same syntax as `fit --constraint`.
    #[arg(long, num_args = 1..=2)]
    pub family: Vec<String>,
    #[arg(long = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A parsed `--constraint` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintChoice {
    Fixed(Shape),
    /// Unimodal with the mode searched over all positions.
    Unimodal,
}

impl ConstraintChoice {
    pub fn parse(words: &[String]) -> Result<Self, CliError> {
        let name = words.first().map(String::as_str).unwrap_or("none");
        let arg = words.get(1);
        let shape = match name {
            "none" | "simplex" => Shape::Simplex,
            "unimodal" => {
                return match arg {
                    None => Ok(ConstraintChoice::Unimodal),
                    Some(_) => Err(CliError::usage("`unimodal` takes no argument; use `unimodal-fixed K`")),
                }
            }
            "unimodal-fixed" => {
                let k = arg
                    .ok_or_else(|| CliError::usage("`unimodal-fixed` needs a mode index K"))?
                    .parse::<usize>()
                    .map_err(|_| CliError::usage("mode index K must be a positive integer"))?;
                return Ok(ConstraintChoice::Fixed(Shape::UnimodalFixed(k)));
            }
            other => Shape::ALL_FIXED
                .into_iter()
                .find(|s| s.name() == other)
                .ok_or_else(|| CliError::usage(format!("unknown constraint {other:?}")))?,
        };
        if arg.is_some() {
            return Err(CliError::usage(format!("constraint {name:?} takes no argument")));
        }
        Ok(ConstraintChoice::Fixed(shape))
    }
}
