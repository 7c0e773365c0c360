use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "eqa", version, about = "Equiaffine invariants of level sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pointwise invariant reports (one JSON object per point).
    Invariants(InvariantsArgs),
    /// Run a verification suite and print residuals against tolerances.
    Verify(VerifyArgs),
    /// Point cloud on a level set of a ruled field.
    Sample(SampleArgs),
    /// Integrate the affine normal flow.
    Flow(FlowArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Exactly one of --builtin or --expr.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Builtin field tag (helicoid3, genhel, gn, symdet, graph, paraboloid,
    /// cheng_yau_det, ruled).
    #[arg(long)]
    pub builtin: Option<String>,

    /// Field as an expression; see docs/grammar.ebnf.
    #[arg(long)]
    pub expr: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    #[command(flatten)]
    pub source: Source,

    /// Builtin parameter; repeat for several.
    #[arg(long = "param", requires = "builtin", allow_hyphen_values = true)]
    pub params: Vec<String>,

    /// Comma-separated variable names for --expr.
    #[arg(long, requires = "expr", value_delimiter = ',')]
    pub vars: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    /// Comma-separated coordinates, or E0, E1, ... for the idempotents of
    /// symdet / cheng_yau_det. Repeat for several points.
    #[arg(long = "point", allow_hyphen_values = true)]
    pub points: Vec<String>,

    /// File with one point per line; blank lines and `#` comments skipped.
    #[arg(long)]
    pub points_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct TolArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub tol_regular: f64,

    #[arg(long, default_value_t = 1e-10)]
    pub tol_nondegen: f64,
}

#[derive(Args, Debug)]
pub struct InvariantsArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub points: PointArgs,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// identities, examples, ruled, flow or all
    #[arg(long, default_value = "all")]
    pub suite: String,

    #[arg(long, env = "EQA_SEED", default_value_t = 7)]
    pub seed: u64,

    /// Table (default), or json / csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Run campaigns on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// helicoid3, genhel [Q] or ruled "a1;...;a(n+1)" [Q] [vars]
    #[arg(long)]
    pub builtin: String,

    #[arg(long = "param", allow_hyphen_values = true)]
    pub params: Vec<String>,

    /// Level value.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,

    /// Points per axis over (r, s): one count for every axis, or one per
    /// axis joined by `x` (2n axes), e.g. 50x50.
    #[arg(long, default_value = "10")]
    pub grid: String,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub points: PointArgs,
    #[command(flatten)]
    pub tol: TolArgs,

    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t_end: f64,

    #[arg(long, default_value_t = 100)]
    pub steps: usize,

    /// Also compare against the closed-form flow (ruled builtins only).
    #[arg(long)]
    pub exact: bool,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long)]
    pub out: Option<PathBuf>,
}
