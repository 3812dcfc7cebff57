//! `tspd`: bounds, solvers and experiment tables for the traveling salesman
//! problem with drone.
//!
//! Results go to stdout (or `--out FILE`) as JSON unless `--format csv` is
//! given. Failures print `{"error": {"kind": ..., "message": ...}}` to
//! stderr and exit non-zero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tspd_core::experiment::{self, csv_string, report_json, CsvRow, ExperimentConfig, Metadata, Table};
use tspd_core::geometry::generate_instance;
use tspd_core::lower::{self, NormKind};
use tspd_core::solvers::{tspd_exact, tspd_heuristic, HeuristicConfig};
use tspd_core::strip::{self, PatternKind, DEFAULT_H_BRACKET};
use tspd_core::{Error, Instance, MetricPair, TruckNorm};

#[derive(Parser)]
#[command(
    name = "tspd",
    version,
    about = "Asymptotic bounds and solvers for the TSP with drone"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo strip upper bound for one pattern.
    UpperBound(UpperArgs),
    /// Closed-form lower bound for a TSP constant and speed ratio.
    LowerBound(LowerArgs),
    /// Compare simulated nearest-neighbour distances with their laws.
    NnCheck(NnArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Write a seeded uniform random instance.
    Gen(GenArgs),
    /// Reproduce a full table.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Euclidean truck and drone.
    Euclidean,
    /// Rectilinear truck, Euclidean drone.
    Mixed,
}

impl From<Metric> for TruckNorm {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Euclidean => TruckNorm::Euclidean,
            Metric::Mixed => TruckNorm::Rectilinear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Exact,
    Heuristic,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UpperArgs {
    #[arg(long)]
    pattern: PatternKind,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 2_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strip height parameter; required unless `--optimize-h`.
    #[arg(long, conflicts_with = "optimize_h", required_unless_present = "optimize_h")]
    h: Option<f64>,
    /// Minimise the bound over `h` by golden-section search.
    #[arg(long)]
    optimize_h: bool,
    #[arg(long, default_value_t = DEFAULT_H_BRACKET.0, requires = "optimize_h")]
    h_lo: f64,
    #[arg(long, default_value_t = DEFAULT_H_BRACKET.1, requires = "optimize_h")]
    h_hi: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LowerArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    beta: Option<f64>,
    /// Named TSP constant: gaudio, empirical_l2, nn_l1, empirical_l1.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    alpha: f64,
    /// Report the simple bound beta / (1 + alpha) instead.
    #[arg(long)]
    ratio: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct NnArgs {
    #[arg(long)]
    norm: NormKind,
    /// Poisson intensity.
    #[arg(long)]
    intensity: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "euclidean")]
    metric: Metric,
    #[arg(long, value_enum, default_value = "heuristic")]
    method: SolveMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Most points per ring (heuristic).
    #[arg(long)]
    max_ring: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
#[allow(clippy::enum_variant_names)]
enum ExperimentCommand {
    /// Strip upper bounds for every pattern and speed ratio.
    UpperTable(TableArgs),
    /// Mean scaled heuristic makespans per size and speed ratio.
    EmpiricalTable(TableArgs),
    /// Lower bounds per TSP constant and speed ratio.
    LowerTable(LowerTableArgs),
}

#[derive(Args)]
struct TableArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    patterns: Option<Vec<PatternKind>>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LowerTableArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.6277,0.71")]
    betas: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail("usage", &e.to_string()),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let err = json!({ "error": { "kind": kind, "message": message.trim_end() } });
    eprintln!("{err}");
    ExitCode::FAILURE
}

type Result<T> = std::result::Result<T, Error>;

fn run(command: Command) -> Result<()> {
    match command {
        Command::UpperBound(a) => upper_bound(a),
        Command::LowerBound(a) => lower_bound(a),
        Command::NnCheck(a) => nn_check(a),
        Command::Solve(a) => solve(a),
        Command::Gen(a) => {
            let inst = generate_instance(a.n, a.seed);
            inst.save(&a.out)?;
            emit(None, &json!({ "n": a.n, "seed": a.seed, "out": a.out }).to_string())
        }
        Command::Experiment(e) => experiment_cmd(e),
    }
}

fn upper_bound(a: UpperArgs) -> Result<()> {
    let (est, at_boundary) = if a.optimize_h {
        let opt = strip::optimize_h(a.pattern, a.alpha, a.samples, a.seed, a.h_lo, a.h_hi)?;
        (opt.estimate, Some(opt.at_boundary))
    } else {
        let h = a.h.expect("clap requires --h without --optimize-h");
        (strip::estimate_bound(a.pattern, a.alpha, h, a.samples, a.seed)?, None)
    };
    let mut fields = vec![
        ("pattern", json!(est.pattern)),
        ("alpha", json!(est.alpha)),
        ("h", json!(est.h)),
        ("mean", json!(est.mean)),
        ("stderr", json!(est.stderr)),
        ("samples", json!(est.samples)),
        ("seed", json!(est.seed)),
    ];
    if let Some(b) = at_boundary {
        fields.push(("at_boundary", json!(b)));
    }
    record(&a.output, &fields)
}

fn lower_bound(a: LowerArgs) -> Result<()> {
    let beta = match (&a.beta, &a.preset) {
        (Some(b), _) => *b,
        (None, Some(name)) => lower::preset(name).ok_or_else(|| Error::Parameter {
            name: "preset",
            reason: format!(
                "unknown preset `{name}`; known: {}",
                lower::PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
            ),
        })?,
        (None, None) => unreachable!("clap requires --beta or --preset"),
    };
    let (rho, bound) = if a.ratio {
        (Value::Null, lower::lb_ratio(beta, a.alpha)?)
    } else {
        (json!(lower::rho_star(beta, a.alpha)?), lower::lb_param(beta, a.alpha)?)
    };
    record(
        &a.output,
        &[
            ("beta", json!(beta)),
            ("alpha", json!(a.alpha)),
            ("rho_star", rho),
            ("bound", json!(bound)),
        ],
    )
}

fn nn_check(a: NnArgs) -> Result<()> {
    let s = lower::sample_nn_distances(a.norm, a.intensity, a.trials, a.seed)?;
    let first = lower::nn_expectation(a.norm, 1, a.intensity);
    let second = lower::nn_expectation(a.norm, 2, a.intensity);
    record(
        &a.output,
        &[
            ("norm", json!(a.norm)),
            ("intensity", json!(a.intensity)),
            ("trials", json!(a.trials)),
            ("seed", json!(a.seed)),
            ("nearest_analytic", json!(first)),
            ("nearest_empirical", json!(s.nearest_mean)),
            ("nearest_stderr", json!(s.nearest_stderr)),
            ("second_analytic", json!(second)),
            ("second_empirical", json!(s.second_mean)),
            ("second_stderr", json!(s.second_stderr)),
        ],
    )
}

fn solve(a: SolveArgs) -> Result<()> {
    let inst = Instance::load(&a.instance)?;
    let m = MetricPair::new(a.metric.into(), a.alpha)?;
    let report = match a.method {
        SolveMethod::Exact => tspd_exact(&inst, &m)?,
        SolveMethod::Heuristic => {
            let mut cfg = HeuristicConfig::default();
            if let Some(k) = a.max_ring {
                cfg.max_ring = k;
            }
            tspd_heuristic(&inst, &m, a.seed, &cfg)?
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialise");
    emit(a.out.as_deref(), &text)
}

fn experiment_cmd(e: ExperimentCommand) -> Result<()> {
    let started = Instant::now();
    match e {
        ExperimentCommand::UpperTable(a) => {
            let cfg = table_config(&a)?;
            let t = experiment::run_upper_table(&cfg)?;
            table_out(&a.output, &cfg, &cfg, t, started)
        }
        ExperimentCommand::EmpiricalTable(a) => {
            let cfg = table_config(&a)?;
            let t = experiment::run_empirical_table(&cfg)?;
            table_out(&a.output, &cfg, &cfg, t, started)
        }
        ExperimentCommand::LowerTable(a) => {
            let cfg = table_config(&a.table)?;
            let rows = experiment::run_lower_table(&cfg, &a.betas)?;
            let echo = json!({ "experiment": cfg, "betas": a.betas });
            let t = Table {
                rows,
                cell_seconds: Vec::new(),
            };
            table_out(&a.table.output, &cfg, &echo, t, started)
        }
    }
}

fn table_config(a: &TableArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &a.alphas {
        cfg.alphas = v.clone();
    }
    if let Some(v) = &a.sizes {
        cfg.sizes = v.clone();
    }
    if let Some(v) = &a.patterns {
        cfg.patterns = v.clone();
    }
    if let Some(v) = a.instances {
        cfg.instances_per_cell = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.metric {
        cfg.metric = v.into();
    }
    if a.output.out.is_some() {
        cfg.output_path = a.output.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn table_out<R: CsvRow + serde::Serialize>(
    out: &Output,
    cfg: &ExperimentConfig,
    echo: &impl serde::Serialize,
    t: Table<R>,
    started: Instant,
) -> Result<()> {
    let text = match out.format {
        Format::Csv => csv_string(&t.rows)?,
        Format::Json => {
            let mut meta = Metadata::new(cfg.seed, echo, started.elapsed().as_secs_f64());
            meta.cell_seconds = t.cell_seconds;
            report_json(&meta, &t.rows)
        }
    };
    emit(out.out.as_deref(), &text)
}

/// One result as a JSON object or a two-line CSV.
fn record(out: &Output, fields: &[(&str, Value)]) -> Result<()> {
    let text = match out.format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            serde_json::to_string_pretty(&Value::Object(map)).expect("values serialise")
        }
        Format::Csv => {
            let header: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let values: Vec<String> = fields
                .iter()
                .map(|(_, v)| match v {
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    v => v.to_string(),
                })
                .collect();
            format!("{}\n{}", header.join(","), values.join(","))
        }
    };
    emit(out.out.as_deref(), &text)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let text = if text.ends_with('\n') {
        text.to_string()
    } else {
        format!("{text}\n")
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
