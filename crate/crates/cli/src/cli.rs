use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "sbmlab",
    version,
    about = "Reproducible experiments on sparse planted-partition graphs",
    long_about = "Reproducible experiments on sparse planted-partition graphs.\n\n\
        Every run embeds its resolved configuration and seed in the output. Values \
        come from flags, then from the --config file, then from built-in defaults. \
        Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 budget exceeded."
)]
pub struct Cli {
    /// Base seed for every random stream in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true, env = "SBMLAB_THREADS")]
    pub threads: Option<usize>,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout; a timing log goes to `<output>.log`.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,

    /// TOML file with default values for any flag of the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Sbm,
    Er,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Exact,
    Nb,
    Auto,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a labeled graph and write it as an edge list.
    #[command(long_about = "Sample a labeled graph and write it as an edge list.\n\n\
        Exercises the planted bisection model: labels uniform in {+1,-1}, edges with \
        probability a/n inside a class and b/n across. With --model er the graph is \
        the mean-degree-matched null G(n, (a+b)/(2n)).")]
    Generate(GenerateArgs),

    /// Count short cycles in an edge-list graph.
    #[command(long_about = "Count short cycles in an edge-list graph.\n\n\
        Exercises the non-backtracking walk census of k-cycles (closed walks on the \
        radius-ceil(k/2) ball of each vertex), with exhaustive enumeration as oracle.")]
    Cycles(CyclesArgs),

    /// Compare the law of X_k with its Poisson limit.
    #[command(long_about = "Compare the law of X_k with its Poisson limit.\n\n\
        Exercises the Poisson limit for k-cycle counts: mean ((a+b)^k + (a-b)^k)/(k 2^(k+1)) \
        under the planted model and ((a+b)/2)^k/(2k) under the null.")]
    PoissonCheck(PoissonCheckArgs),

    /// Estimate (a, b) from an unlabeled graph.
    #[command(long_about = "Estimate (a, b) from an unlabeled graph.\n\n\
        Exercises the consistent cycle-count estimators d_hat = 2|E|/n, \
        f_hat = (2k X_k - d_hat^k)^(1/k), a_hat = d_hat + f_hat, b_hat = d_hat - f_hat.")]
    Estimate(EstimateArgs),

    /// Decide whether a graph looks planted or null.
    #[command(long_about = "Decide whether a graph looks planted or null.\n\n\
        Exercises the cycle-count test that separates the two models when \
        (a-b)^2 > 2(a+b). Below that line the models are mutually contiguous and \
        the command exits with status 2.")]
    Distinguish(DistinguishArgs),

    /// Root reconstruction on broadcast trees.
    #[command(long_about = "Root reconstruction on broadcast trees.\n\n\
        Exercises the Kesten-Stigum threshold for the two-state broadcast process on \
        Poisson Galton-Watson trees: the root is reconstructable iff d(1-2eps)^2 > 1.")]
    TreeRecon(TreeReconArgs),

    /// Tree-likeness of graph neighborhoods.
    #[command(long_about = "Tree-likeness of graph neighborhoods.\n\n\
        Exercises the coupling of a radius-R ball in the planted model with the \
        broadcast tree: tree fraction, shared-child and intra-level edge rates, and the \
        offspring law Pois(a/2) x Pois(b/2).")]
    Coupling(CouplingArgs),

    /// Moment identities of the likelihood ratio.
    #[command(long_about = "Moment identities of the likelihood ratio.\n\n\
        Exercises the second-moment and small-subgraph-conditioning identities: \
        E W_uv = 1, E Y = 1, E Y^2 -> exp(-t/2 - t^2/4)/sqrt(1-t) and \
        E[Y X_k] = lambda_k (1 + delta_k), with Y computed exactly on small graphs.")]
    Moments(MomentsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Cycles(_) => "cycles",
            Command::PoissonCheck(_) => "poisson-check",
            Command::Estimate(_) => "estimate",
            Command::Distinguish(_) => "distinguish",
            Command::TreeRecon(_) => "tree-recon",
            Command::Coupling(_) => "coupling",
            Command::Moments(_) => "moments",
        }
    }
}

// Flag structs carry only what the user typed; `None` fields are skipped when
// serialized so that config-file values and defaults can fill them in.

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelArg>,
    /// Force |V+| = floor(n/2) instead of binomial class sizes.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub balanced: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CyclesArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct PoissonCheckArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Cycle length; defaults to max(3, floor((ln n)^(1/4))).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct DistinguishArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TreeReconArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Deepest level R at which the posterior is evaluated.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Ball radius.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}
