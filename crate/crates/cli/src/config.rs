//! Command-line arguments and their validation.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trajopt_core::fem::points::Family;
use trajopt_core::ipm::IpmConfig;
use trajopt_core::transcription::InitialGuess;

#[derive(Debug, Parser)]
#[command(name = "trajopt", version, about = "Direct transcription of optimal control problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem on one mesh.
    Solve(SolveArgs),
    /// Solve one problem on a sequence of meshes and fit convergence orders.
    Study(StudyArgs),
    /// Tabulate MALM, PM and ALM on the circle or the discretized control problem.
    MalmBench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dcm,
    Qpm,
    Pbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Ee,
    Ie,
    Tz,
    Lg,
    Lgr,
}

impl From<Scheme> for Family {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Ee => Family::EE,
            Scheme::Ie => Family::IE,
            Scheme::Tz => Family::TZ,
            Scheme::Lg => Family::LG,
            Scheme::Lgr => Family::LGR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Reference,
    LinearBoundary,
    Zero,
}

impl From<Init> for InitialGuess {
    fn from(i: Init) -> Self {
        match i {
            Init::Reference => InitialGuess::Reference,
            Init::LinearBoundary => InitialGuess::Linear,
            Init::Zero => InitialGuess::Zero,
        }
    }
}

/// Transcription and solver settings shared by `solve` and `study`.
#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Corpus problem name.
    #[arg(long)]
    pub problem: String,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Collocation scheme (dcm).
    #[arg(long, value_enum, default_value = "lgr")]
    pub scheme: Scheme,
    /// Polynomial degree of the states.
    #[arg(long)]
    pub p: usize,
    /// Gauss-Legendre points per interval (qpm; pbf defaults to 2p).
    #[arg(long)]
    pub q: Option<usize>,
    /// CGL degree of the bound samples per interval (qpm).
    #[arg(long)]
    pub m: Option<usize>,
    /// Penalty weight (qpm, pbf).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Barrier weight (pbf).
    #[arg(long)]
    pub tau: Option<f64>,
    /// KKT tolerance of the solver.
    #[arg(long, default_value_t = IpmConfig::default().tol)]
    pub tol: f64,
    /// Seed for randomized initial perturbations; unused by the deterministic solvers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "linear-boundary")]
    pub init: Init,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Solution samples per interval in solution.csv.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
}

#[derive(Clone, Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of mesh intervals.
    #[arg(long = "N")]
    pub n: usize,
    /// Writes the solver iteration trace to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Mesh sizes, comma separated; at least three.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Solves the mesh levels concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Writes one solver trace per level into this directory.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Instance {
    Circle,
    #[value(name = "ocp_disc")]
    OcpDisc,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub instance: Instance,
    /// Penalty weights of the table rows.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-4, 1e-6, 1e-8, 0.0])]
    pub pval: Vec<f64>,
    /// Circle inconsistencies of the table columns.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-4, 1e-6, 0.0])]
    pub eps: Vec<f64>,
    /// Mesh sizes of the ocp_disc columns.
    #[arg(long = "N", value_delimiter = ',', default_values_t = [50, 250, 500, 1000, 2000])]
    pub n: Vec<usize>,
    /// Gauss-Legendre points per interval of ocp_disc.
    #[arg(long, default_value_t = 3)]
    pub q: usize,
    /// Output CSV file.
    #[arg(long, default_value = "malm_bench.csv")]
    pub out: PathBuf,
}

/// Transcription settings after the method-specific checks.
#[derive(Clone, Debug)]
pub enum Transcription {
    Dcm { family: Family },
    Qpm { q: usize, m: usize, omega: f64 },
    Pbf { q: Option<usize>, omega: f64, tau: f64 },
}

fn require<T>(value: Option<T>, flag: &str, method: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| anyhow::anyhow!("missing --{flag}, required by --method {method}"))
}

impl RunArgs {
    pub fn transcription(&self) -> anyhow::Result<Transcription> {
        if self.p == 0 {
            anyhow::bail!("--p must be positive");
        }
        if !(self.tol > 0.0) {
            anyhow::bail!("--tol must be positive");
        }
        Ok(match self.method {
            Method::Dcm => Transcription::Dcm {
                family: self.scheme.into(),
            },
            Method::Qpm => {
                let q = require(self.q, "q", "qpm")?;
                let m = require(self.m, "m", "qpm")?;
                let omega = require(self.omega, "omega", "qpm")?;
                if q == 0 || m == 0 || !(omega > 0.0) {
                    anyhow::bail!("qpm needs q > 0, m > 0 and omega > 0");
                }
                Transcription::Qpm { q, m, omega }
            }
            Method::Pbf => {
                let omega = require(self.omega, "omega", "pbf")?;
                let tau = require(self.tau, "tau", "pbf")?;
                if !(tau > 0.0 && omega >= tau) {
                    anyhow::bail!("pbf needs omega >= tau > 0");
                }
                Transcription::Pbf { q: self.q, omega, tau }
            }
        })
    }
}
