use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use sbmlab_core::broadcast::{ks_check, reconstruction_curve, ThresholdQuery};
use sbmlab_core::coupling::{tree_likeness, CouplingReport};
use sbmlab_core::cycles::{count_cycles, poisson_law_check, CountMethod, Model, PoissonCheckReport};
use sbmlab_core::estimation::{distinguish, estimate_params_with};
use sbmlab_core::moments::{conditioned_moment_check, identity_checks, MomentCheckRow};
use sbmlab_core::sample::{sample_sbm_with, SamplerOptions};
use sbmlab_core::{sample_er, LabeledGraph, ModelParams, ReconstructionCurve, RngStream};

use crate::cli::{Cli, Command, Format, MethodArg, ModelArg};
use crate::config::{self, required_input, required_k, ExperimentConfig, Required, Resolved};
use crate::error::CliError;

/// A finished result in both renderings.
struct Report {
    json: Value,
    csv_header: String,
    csv_rows: Vec<String>,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let file = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => Map::new(),
    };
    let name = cli.command.name();
    let g = Globals {
        seed: cli.seed,
        format: cli.format,
        threads: cli.threads,
        output: cli.output.clone(),
    };

    let (experiment, runtime, body) = match &cli.command {
        Command::Generate(args) => {
            let r: Resolved<config::GenerateConfig> = g.resolve(name, args, file, Format::Csv)?;
            let body = in_pool(r.runtime.threads, || generate(&r))?;
            (r.experiment, r.runtime, body)
        }
        Command::Cycles(args) => finish(g.resolve(name, args, file, Format::Json)?, cycles)?,
        Command::PoissonCheck(args) => finish(g.resolve(name, args, file, Format::Csv)?, poisson)?,
        Command::Estimate(args) => finish(g.resolve(name, args, file, Format::Json)?, estimate)?,
        Command::Distinguish(args) => {
            finish(g.resolve(name, args, file, Format::Json)?, distinguish_cmd)?
        }
        Command::TreeRecon(args) => finish(g.resolve(name, args, file, Format::Csv)?, tree_recon)?,
        Command::Coupling(args) => finish(g.resolve(name, args, file, Format::Csv)?, coupling)?,
        Command::Moments(args) => finish(g.resolve(name, args, file, Format::Csv)?, moments)?,
    };

    match &runtime.output {
        Some(path) => {
            write_file(path, body.as_bytes())?;
            let log = sidecar_log(&experiment, runtime.threads, started, clock.elapsed().as_millis());
            let mut log_path = path.clone().into_os_string();
            log_path.push(".log");
            write_file(Path::new(&log_path), log.as_bytes())?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Output {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    Ok(())
}

struct Globals {
    seed: Option<u64>,
    format: Option<Format>,
    threads: Option<usize>,
    output: Option<PathBuf>,
}

impl Globals {
    fn resolve<A: Serialize, T: Serialize + serde::de::DeserializeOwned>(
        &self,
        name: &str,
        args: &A,
        file: Map<String, Value>,
        default_format: Format,
    ) -> Result<Resolved<T>, CliError> {
        config::resolve(
            name,
            args,
            file,
            self.seed,
            self.format,
            self.threads,
            self.output.clone(),
            default_format,
        )
    }
}

type Finished = (ExperimentConfig, config::RuntimeConfig, String);

fn finish<T>(
    r: Resolved<T>,
    f: impl FnOnce(&T, &RngStream) -> Result<Report, CliError> + Send,
) -> Result<Finished, CliError>
where
    T: Sync,
{
    let rng = RngStream::new(r.experiment.seed, 0);
    let report = in_pool(r.runtime.threads, || f(&r.params, &rng))?;
    let body = render(&r.experiment, report)?;
    Ok((r.experiment, r.runtime, body))
}

fn in_pool<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<R, CliError> + Send,
) -> Result<R, CliError> {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?
            .install(f),
    }
}

fn render(experiment: &ExperimentConfig, report: Report) -> Result<String, CliError> {
    let to_config_err = |e: serde_json::Error| CliError::Config(e.to_string());
    match experiment.format {
        Format::Json => {
            let doc = json!({ "config": experiment, "result": report.json });
            let mut s = serde_json::to_string_pretty(&doc).map_err(to_config_err)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut s = format!(
                "# sbmlab {}\n# config {}\n{}\n",
                experiment.command,
                serde_json::to_string(experiment).map_err(to_config_err)?,
                report.csv_header
            );
            for row in report.csv_rows {
                s.push_str(&row);
                s.push('\n');
            }
            Ok(s)
        }
    }
}

fn sidecar_log(
    experiment: &ExperimentConfig,
    threads: Option<usize>,
    started: SystemTime,
    elapsed_ms: u128,
) -> String {
    let unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let threads = threads.unwrap_or_else(rayon::current_num_threads);
    format!(
        "command={}\nseed={}\nstarted_unix={unix}\nelapsed_ms={elapsed_ms}\nthreads={threads}\n",
        experiment.command, experiment.seed
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn read_graph(path: &Path) -> Result<LabeledGraph, CliError> {
    let file = File::open(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(LabeledGraph::read_edge_list(BufReader::new(file))?)
}

fn count_method(m: MethodArg) -> CountMethod {
    match m {
        MethodArg::Exact => CountMethod::Exact,
        MethodArg::Nb => CountMethod::NbWalk,
        MethodArg::Auto => CountMethod::Auto,
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))
}

fn generate(r: &Resolved<config::GenerateConfig>) -> Result<String, CliError> {
    let p = &r.params;
    let (a, b) = p.ab()?;
    let params = ModelParams::new(p.n()?, a, b)?;
    let mut rng = RngStream::new(r.experiment.seed, 0);
    let lg = match p.model {
        ModelArg::Sbm => sample_sbm_with(&params, SamplerOptions { balanced: p.balanced }, &mut rng)?,
        ModelArg::Er if !p.balanced => sample_er(params.n, params.null_intensity(), &mut rng)?,
        ModelArg::Er => return Err(CliError::Config("--balanced applies to --model sbm only".into())),
        ModelArg::Both => return Err(CliError::Config("generate needs --model sbm or er".into())),
    };
    let comments = vec![
        "sbmlab generate".to_string(),
        format!(
            "config {}",
            serde_json::to_string(&r.experiment).map_err(|e| CliError::Config(e.to_string()))?
        ),
    ];
    let mut buf = Vec::new();
    lg.write_edge_list(&mut buf, &comments)?;
    Ok(String::from_utf8(buf).expect("edge lists are ASCII"))
}

fn cycles(p: &config::CyclesConfig, _: &RngStream) -> Result<Report, CliError> {
    let k = required_k(p.k)?;
    let lg = read_graph(required_input(&p.input)?)?;
    let census = count_cycles(lg.graph(), k, count_method(p.method))?;
    let x = census.count(k);
    let flagged_fraction = census.flagged_vertices.len() as f64 / lg.n().max(1) as f64;
    let mut m = Map::new();
    m.insert("k".into(), json!(k));
    m.insert(format!("X_{k}"), json!(x));
    m.insert("flagged_fraction".into(), json!(flagged_fraction));
    m.insert("flagged_vertices".into(), json!(census.flagged_vertices.len()));
    m.insert("approximate".into(), json!(census.approximate));
    m.insert("method".into(), to_json(&census.method)?);
    m.insert("counts".into(), to_json(&census.counts)?);
    Ok(Report {
        json: Value::Object(m),
        csv_header: "k,x_k,method,flagged_fraction,approximate".into(),
        csv_rows: vec![format!(
            "{k},{x},{},{flagged_fraction},{}",
            to_json(&census.method)?.as_str().unwrap_or_default(),
            census.approximate
        )],
    })
}

fn poisson(p: &config::PoissonCheckConfig, rng: &RngStream) -> Result<Report, CliError> {
    let (a, b) = p.ab()?;
    let params = ModelParams::new(p.n()?, a, b)?;
    let models: &[Model] = match p.model {
        ModelArg::Sbm => &[Model::Sbm],
        ModelArg::Er => &[Model::Er],
        ModelArg::Both => &[Model::Sbm, Model::Er],
    };
    let reports = models
        .iter()
        .map(|&m| poisson_law_check(&params, m, p.k, p.trials, count_method(p.method), rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        json: to_json(&reports)?,
        csv_header: PoissonCheckReport::CSV_HEADER.into(),
        csv_rows: reports.iter().map(PoissonCheckReport::csv_row).collect(),
    })
}

fn estimate(p: &config::EstimateConfig, _: &RngStream) -> Result<Report, CliError> {
    let lg = read_graph(required_input(&p.input)?)?;
    let e = estimate_params_with(lg.graph(), p.k, count_method(p.method))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    Ok(Report {
        json: to_json(&e)?,
        csv_header: "n,edges,d_hat,f_hat,a_hat,b_hat,k_used,x_k,raw_statistic,f_undefined".into(),
        csv_rows: vec![format!(
            "{},{},{},{},{},{},{},{},{},{}",
            e.n,
            e.edges,
            e.d_hat,
            opt(e.f_hat),
            opt(e.a_hat),
            opt(e.b_hat),
            e.k_used,
            e.x_k,
            e.raw_statistic,
            e.flags.f_undefined
        )],
    })
}

fn distinguish_cmd(p: &config::DistinguishConfig, _: &RngStream) -> Result<Report, CliError> {
    let (a, b) = p.ab()?;
    let lg = read_graph(required_input(&p.input)?)?;
    let r = distinguish(lg.graph(), a, b, p.k)?;
    Ok(Report {
        json: to_json(&r)?,
        csv_header: "k,x_k,mean_er,threshold,rho,decision,zscore".into(),
        csv_rows: vec![format!(
            "{},{},{},{},{},{},{}",
            r.k,
            r.x_k,
            r.mean_er,
            r.threshold,
            r.rho,
            to_json(&r.decision)?.as_str().unwrap_or_default(),
            r.zscore
        )],
    })
}

fn tree_recon(p: &config::TreeReconConfig, rng: &RngStream) -> Result<Report, CliError> {
    let (a, b) = p.ab()?;
    let curve = reconstruction_curve(a, b, p.r_max, p.trials, rng)?;
    let verdict = ks_check(&ThresholdQuery::from_model(a, b)?);
    Ok(Report {
        json: json!({ "ks_check": to_json(&verdict)?, "curve": to_json(&curve)? }),
        csv_header: ReconstructionCurve::CSV_HEADER.into(),
        csv_rows: curve.csv_rows(),
    })
}

fn coupling(p: &config::CouplingConfig, rng: &RngStream) -> Result<Report, CliError> {
    let (a, b) = p.ab()?;
    let params = ModelParams::new(p.n()?, a, b)?;
    let report = tree_likeness(&params, p.r, p.trials, rng)?;
    Ok(Report {
        json: to_json(&report)?,
        csv_header: CouplingReport::CSV_HEADER.into(),
        csv_rows: vec![report.csv_row()],
    })
}

fn moments(p: &config::MomentsConfig, rng: &RngStream) -> Result<Report, CliError> {
    let (a, b) = p.ab()?;
    let mut rows = identity_checks(a, b, p.n)?;
    let report = conditioned_moment_check(a, b, p.n, p.k, p.trials, rng)?;
    rows.extend(report.rows());
    let mut summary = to_json(&report)?;
    if let Value::Object(m) = &mut summary {
        // Per-graph values are reproducible from the seed; keep output small.
        m.remove("y_values");
    }
    Ok(Report {
        json: json!({ "checks": to_json(&rows)?, "conditioned": summary }),
        csv_header: MomentCheckRow::CSV_HEADER.into(),
        csv_rows: rows.iter().map(MomentCheckRow::csv_row).collect(),
    })
}
