use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(name = "slh", version, about = "Sturm-Liouville hierarchy workbench")]
pub struct Cli {
    /// Worker threads for internal parallel loops.
    #[arg(long, global = true, env = "SLH_THREADS")]
    pub threads: Option<usize>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    /// Also write a gnuplot script for the CSV written to `--out`.
    #[arg(long, global = true)]
    pub emit_gnuplot: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Latex,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Derive a hierarchy equation from the zero-curvature system.
    Derive(DeriveArgs),
    /// Large-λ expansion coefficients of the Weyl functions.
    Expand(ExpandArgs),
    /// Conservation ladder residuals under the KdV rule.
    Ladder(LadderArgs),
    /// Weyl m-functions by Riccati integration.
    Weyl(WeylArgs),
    /// Rebuild q from the Weyl difference at a real parameter.
    RecoverQ(RecoverArgs),
    /// Time evolution with isospectrality diagnostics.
    Evolve(EvolveArgs),
    /// Finite-gap poles, trace formulas and Weyl functions.
    Algebro(AlgebroArgs),
    /// Scattering coefficients of a decaying pair.
    Scatter(ScatterArgs),
    /// Jost solutions at one k.
    Jost(JostArgs),
    /// Zero-curvature residual of a flow state.
    ZcResidual(ZcArgs),
    /// Residuals of the hierarchy at q = q̃ + λ₀y.
    CheckStationary(StationaryArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Convert a stored object between formats.
    Export(ExportArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct DeriveArgs {
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub k: usize,
    /// `y=<rational>` derives the q-flow, `q=<rational>` the y-flow.
    #[arg(long, default_value = "y=1")]
    pub fix: String,
    /// Integration constants as `j=<rational>`.
    #[arg(long = "constant")]
    pub constants: Vec<String>,
    /// Fail instead of keeping nonlocal relations.
    #[arg(long)]
    pub closed_form: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpandArgs {
    #[arg(long = "N", alias = "n")]
    pub n: usize,
    /// Symbolic table in q (requires `--fix y=1`).
    #[arg(long)]
    pub symbolic: bool,
    #[arg(long)]
    pub fix: Option<String>,
    #[command(flatten)]
    pub pair: PairArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct LadderArgs {
    #[arg(long, default_value_t = 6)]
    pub j_max: usize,
}

/// A pair file and the grid it is sampled on.
#[derive(Args, Debug, Serialize, Default)]
pub struct PairArgs {
    /// Pair JSON file `{q, y, delta, lambda0?}`.
    #[arg(long)]
    pub pair: Option<PathBuf>,
    /// Grid as `a:b:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Periodic grid (endpoint excluded).
    #[arg(long)]
    pub periodic: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct WeylArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Spectral parameters as `re,im`; repeatable.
    #[arg(long = "lambda", required = true, allow_hyphen_values = true)]
    pub lambdas: Vec<String>,
    #[arg(long, default_value_t = 10.0)]
    pub margin: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Real parameter below the spectrum.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift: f64,
    #[arg(long, default_value_t = 10.0)]
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowChoice {
    Kdv,
    Ch,
}

#[derive(Args, Debug, Serialize)]
pub struct EvolveArgs {
    #[arg(long, value_enum)]
    pub flow: FlowChoice,
    /// KdV soliton amplitude parameter κ (ignored when `--pair` is given).
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 1.0)]
    pub omega0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 5)]
    pub snapshots: usize,
    /// Eigenvalues tracked per snapshot.
    #[arg(long, default_value_t = 3)]
    pub eigenvalues: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AlgebroArgs {
    /// Branch points `λ₀,λ₁,…`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub branch: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub poles: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sheets: Vec<i8>,
    /// Constant ℳ₀, or `schrodinger`.
    #[arg(long, default_value = "2")]
    pub m0: String,
    /// Line grid `a:b:n`.
    #[arg(long, default_value = "-10:10:2001", allow_hyphen_values = true)]
    pub grid: String,
    /// Also evaluate the Weyl functions at `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ScatterArgs {
    #[arg(long)]
    pub pair: PathBuf,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub x_max: f64,
    /// k samples as `start:end:count`.
    #[arg(long, default_value = "0.1:5:50")]
    pub k: String,
    #[arg(long, default_value_t = 1e-8)]
    pub drift_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideChoice {
    Plus,
    Minus,
}

#[derive(Args, Debug, Serialize)]
pub struct JostArgs {
    #[arg(long)]
    pub pair: PathBuf,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub x_max: f64,
    /// `re,im` with `im ≥ 0`.
    #[arg(long, allow_hyphen_values = true)]
    pub k: String,
    #[arg(long, value_enum, default_value_t = SideChoice::Plus)]
    pub side: SideChoice,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ZcArgs {
    #[arg(long, value_enum)]
    pub flow: FlowChoice,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 1.0)]
    pub omega0: f64,
    #[arg(long = "lambda", allow_hyphen_values = true)]
    pub lambdas: Vec<String>,
    /// Time offset of the difference stencil.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// `all` or a criterion number.
    #[arg(long, default_value = "all")]
    pub suite: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Diffpoly,
    Expansion,
    Pair,
}

#[derive(Args, Debug, Serialize)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub object: ObjectKind,
    /// JSON input file.
    #[arg(long)]
    pub input: PathBuf,
}
