//! Resolution of flags, config file and defaults into one experiment config.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cli::{Format, MethodArg, ModelArg};
use crate::error::CliError;

/// Keys that apply to every subcommand and are not part of its parameters.
const GLOBAL_KEYS: [&str; 4] = ["seed", "format", "threads", "output"];

/// What gets echoed into every output: the subcommand, its resolved
/// parameters, the seed and the generator. Thread count and output path are
/// left out because they must not change the bytes of a result.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub seed: u64,
    pub format: Format,
    pub rng: &'static str,
    pub params: Value,
}

/// Runtime-only settings.
#[derive(Clone, Debug, Default)]
pub struct RuntimeConfig {
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGlobals {
    seed: Option<u64>,
    format: Option<Format>,
    threads: Option<usize>,
    output: Option<PathBuf>,
}

/// Reads a flat TOML table.
pub fn load_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match serde_json::to_value(table) {
        Ok(Value::Object(map)) => Ok(map),
        _ => Err(CliError::Config(format!("{}: expected a table", path.display()))),
    }
}

pub struct Resolved<T> {
    pub experiment: ExperimentConfig,
    pub runtime: RuntimeConfig,
    pub params: T,
}

/// Merges `flags` over `file`, then deserializes the subcommand parameters
/// (filling defaults) and the global settings.
#[allow(clippy::too_many_arguments)]
pub fn resolve<A: Serialize, T: Serialize + DeserializeOwned>(
    command: &str,
    flags: &A,
    file: Map<String, Value>,
    seed: Option<u64>,
    format: Option<Format>,
    threads: Option<usize>,
    output: Option<PathBuf>,
    default_format: Format,
) -> Result<Resolved<T>, CliError> {
    let mut params = file;
    let mut globals = Map::new();
    for key in GLOBAL_KEYS {
        if let Some(v) = params.remove(key) {
            globals.insert(key.to_string(), v);
        }
    }
    let file_globals: FileGlobals = serde_json::from_value(Value::Object(globals))
        .map_err(|e| CliError::Config(format!("config file: {e}")))?;

    match serde_json::to_value(flags) {
        Ok(Value::Object(map)) => params.extend(map),
        Ok(_) => unreachable!("flag structs serialize as maps"),
        Err(e) => return Err(CliError::Config(e.to_string())),
    }
    let params: T = serde_json::from_value(Value::Object(params))
        .map_err(|e| CliError::Config(format!("{command}: {e}")))?;

    let threads = threads.or(file_globals.threads);
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let experiment = ExperimentConfig {
        command: command.to_string(),
        seed: seed.or(file_globals.seed).unwrap_or(0),
        format: format.or(file_globals.format).unwrap_or(default_format),
        rng: sbmlab_core::rng::RNG_ALGORITHM,
        params: serde_json::to_value(&params).map_err(|e| CliError::Config(e.to_string()))?,
    };
    Ok(Resolved {
        experiment,
        runtime: RuntimeConfig {
            threads,
            output: output.or(file_globals.output),
        },
        params,
    })
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required parameter --{name}")))
}

macro_rules! default_fn {
    ($name:ident, $ty:ty, $v:expr) => {
        fn $name() -> $ty {
            $v
        }
    };
}

default_fn!(model_sbm, ModelArg, ModelArg::Sbm);
default_fn!(model_both, ModelArg, ModelArg::Both);
default_fn!(method_auto, MethodArg, MethodArg::Auto);
default_fn!(k3, usize, 3);
default_fn!(k4, usize, 4);
default_fn!(trials500, usize, 500);
default_fn!(trials2000, usize, 2000);
default_fn!(trials5000, usize, 5000);
default_fn!(r_max8, usize, 8);
default_fn!(r2, usize, 2);
default_fn!(n12, usize, 12);

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "model_sbm")]
    pub model: ModelArg,
    #[serde(default)]
    pub balanced: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclesConfig {
    pub input: Option<PathBuf>,
    pub k: Option<usize>,
    #[serde(default = "method_auto")]
    pub method: MethodArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonCheckConfig {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "k3")]
    pub k: usize,
    #[serde(default = "trials500")]
    pub trials: usize,
    #[serde(default = "model_both")]
    pub model: ModelArg,
    #[serde(default = "method_auto")]
    pub method: MethodArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub input: Option<PathBuf>,
    pub k: Option<usize>,
    #[serde(default = "method_auto")]
    pub method: MethodArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistinguishConfig {
    pub input: Option<PathBuf>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "k4")]
    pub k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeReconConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "r_max8")]
    pub r_max: usize,
    #[serde(default = "trials2000")]
    pub trials: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "r2")]
    pub r: usize,
    #[serde(default = "trials500")]
    pub trials: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    #[serde(default = "n12")]
    pub n: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "k3")]
    pub k: usize,
    #[serde(default = "trials5000")]
    pub trials: usize,
}

/// Accessors that turn missing required values into validation errors.
pub trait Required {
    fn n(&self) -> Result<usize, CliError> {
        Err(CliError::Config("no --n for this subcommand".into()))
    }
    fn ab(&self) -> Result<(f64, f64), CliError>;
}

macro_rules! impl_ab {
    ($($t:ty),*) => {$(
        impl Required for $t {
            fn ab(&self) -> Result<(f64, f64), CliError> {
                Ok((required(self.a, "a")?, required(self.b, "b")?))
            }
        }
    )*};
}

impl_ab!(DistinguishConfig, TreeReconConfig, MomentsConfig);

macro_rules! impl_nab {
    ($($t:ty),*) => {$(
        impl Required for $t {
            fn n(&self) -> Result<usize, CliError> {
                required(self.n, "n")
            }
            fn ab(&self) -> Result<(f64, f64), CliError> {
                Ok((required(self.a, "a")?, required(self.b, "b")?))
            }
        }
    )*};
}

impl_nab!(GenerateConfig, PoissonCheckConfig, CouplingConfig);

pub fn required_input(input: &Option<PathBuf>) -> Result<&Path, CliError> {
    input
        .as_deref()
        .ok_or_else(|| CliError::Config("missing required parameter --input".into()))
}

pub fn required_k(k: Option<usize>) -> Result<usize, CliError> {
    required(k, "k")
}
