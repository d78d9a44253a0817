//! `sasaki`: batch runner for the Sasakian geometry checks.
//!
//! Every subcommand writes a JSON report (schema 1) to stdout or `--output`.
//! Exit codes: 0 all checks passed, 1 usage error, 2 a checked invariant
//! failed, 3 a search budget was exhausted.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use report::Status;

#[derive(Parser, Debug)]
#[command(name = "sasaki", version, about = "Numerical checks of Sasakian and sub-Riemannian geometry")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SASAKI_THREADS")]
    threads: Option<usize>,
    /// Seed for every random choice; equal seeds give equal reports.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Report destination (stdout when absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// `csv` is only available for `geodesic`, where it dumps the sampled
    /// path with columns t, x0.., v0.., alpha0, H.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structure identities and the transverse Ricci relation at random points.
    CheckIdentities(IdentityArgs),
    /// Integrate one normal geodesic and report its invariants.
    Geodesic(GeodesicArgs),
    /// Shooting estimate of the Carnot-Caratheodory distance between two points.
    CcDistance(DistanceArgs),
    /// Diameter estimate over random pairs, compared with the Myers-type bound.
    Diameter(DiameterArgs),
    /// Second-variation identities along random geodesics and on minimizers.
    SecondVariation(SecondVariationArgs),
    /// Myers integrand test on minimizing geodesics between random pairs.
    MyersVerify(MyersArgs),
    /// Volume, Ricci and composition checks of a D-homothetic deformation.
    Dhomothety(DhomothetyArgs),
    /// Energy functionals of a basic potential on the Hopf quotient of S^3.
    Functionals(FunctionalArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ModelArg {
    /// s3, s5, s7, heisenberg, or `<key>-dhom:<mu>` for a deformation.
    #[arg(long, default_value = "s3")]
    pub model: String,
}

#[derive(Args, Debug, Serialize)]
pub struct IdentityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Pass threshold for every residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct GeodesicArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    /// Start point as comma-separated ambient coordinates (random when absent).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
    pub from: Option<Coords>,
    /// Initial direction; its horizontal part is normalized (random when absent).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
    pub direction: Option<Coords>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha0: f64,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ShootingArgs {
    #[arg(long, default_value_t = 4.0)]
    pub alpha0_range: f64,
    #[arg(long, default_value_t = 4.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub hit_tol: f64,
    /// Initial directions per round (0 picks a default by dimension).
    #[arg(long, default_value_t = 0)]
    pub directions: usize,
    /// Search Riemannian instead of sub-Riemannian geodesics.
    #[arg(long)]
    pub riemannian: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DistanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
    pub from: Coords,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
    pub to: Coords,
    #[command(flatten)]
    #[serde(flatten)]
    pub shooting: ShootingArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DiameterArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub shooting: ShootingArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SecondVariationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    /// Random unit-speed geodesics for the pointwise identities.
    #[arg(long, default_value_t = 10)]
    pub geodesics: usize,
    #[arg(long, default_value_t = 2.0)]
    pub length: f64,
    /// `alpha0` is drawn uniformly from `[-alpha0_max, alpha0_max]`.
    #[arg(long, default_value_t = 1.0)]
    pub alpha0_max: f64,
    /// Minimizing geodesics (from the distance search) for the sign of `E''`.
    #[arg(long, default_value_t = 2)]
    pub minimizers: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct MyersArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 5)]
    pub pairs: usize,
    /// Lower transverse Ricci bound (sampled from the model when absent).
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct DhomothetyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 10_000)]
    pub mc_samples: usize,
    /// Points for the Ricci and composition checks.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Random pairs for the Riemannian diameter of the deformation (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub diameter_pairs: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FunctionalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArg,
    /// Real spherical harmonic `l,m` on the quotient.
    #[arg(long, allow_hyphen_values = true, default_value = "2,1", conflicts_with = "values")]
    pub harmonic: String,
    /// Largest absolute value of the harmonic potential.
    #[arg(long, default_value_t = 0.02)]
    pub amplitude: f64,
    /// CSV with a `value` column holding the potential at the nlat x nlon
    /// Gauss-Legendre grid nodes, latitude-major from the north pole.
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub nlat: usize,
    #[arg(long, default_value_t = 128)]
    pub nlon: usize,
    #[arg(long, default_value_t = 32)]
    pub lmax: usize,
}

/// Comma-separated coordinates given as a single flag value.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct Coords(pub Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate {t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Coords)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(status) => {
            eprintln!("{}", status.label());
            ExitCode::from(status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(report::error_code(&e))
        }
    }
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::BudgetExhausted => "BUDGET EXHAUSTED",
        }
    }
}
