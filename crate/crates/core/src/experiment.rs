//! Table runners and machine-readable reports.
//!
//! Every table cell draws its randomness from a seed derived from the
//! configured seed and the cell's coordinates (pattern, `α`, `n`, instance
//! index), never from scheduling, so tables are identical for any number of
//! worker threads. Timings are kept out of the rows and reported only in the
//! metadata header.
//!
//! CSV columns are fixed:
//!
//! * upper table: `pattern,alpha,h,bound,stderr,samples,at_boundary`, with
//!   `bound` rounded to 4 decimals;
//! * empirical table: `metric,n,alpha,instances,mean,stderr`, with `mean`
//!   rounded to 4 decimals;
//! * lower table: `beta,alpha,rho_star,bound`, with `bound` truncated to 4
//!   decimals.
//!
//! JSON reports carry the full-precision values.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generate_instance, MetricPair, TruckNorm};
use crate::lower::{lb_param, rho_star, truncate};
use crate::rng::{derive_seed, GENERATOR};
use crate::solvers::{tspd_heuristic, HeuristicConfig};
use crate::stats::Welford;
use crate::strip::{optimize_h, require_euclidean, PatternKind, DEFAULT_H_BRACKET};

pub const TOOL: &str = "tspd";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Table-kind tags mixed into cell seeds.
const UPPER_TAG: u64 = 1;
const EMPIRICAL_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub instances_per_cell: usize,
    /// Monte Carlo blocks per upper-bound evaluation.
    pub samples: u64,
    pub seed: u64,
    pub metric: TruckNorm,
    pub output_path: Option<PathBuf>,
    /// Patterns of the upper table.
    pub patterns: Vec<PatternKind>,
    /// Search settings of the empirical table.
    pub heuristic: HeuristicConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alphas: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            sizes: vec![50, 200, 500, 1000, 2000],
            instances_per_cell: 30,
            samples: 2_000_000,
            seed: 2024,
            metric: TruckNorm::Euclidean,
            output_path: None,
            patterns: PatternKind::ALL.to_vec(),
            heuristic: desk_heuristic(),
        }
    }
}

/// A single short search run per instance: full tables finish in minutes.
pub fn desk_heuristic() -> HeuristicConfig {
    HeuristicConfig {
        restarts: 1,
        patience: 4,
        ..HeuristicConfig::default()
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::param("alphas", "need at least one value"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a >= 1.0)) {
            return Err(Error::param("alphas", format!("every alpha must be >= 1, got {a}")));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::param("sizes", format!("every size must be >= 2, got {n}")));
        }
        if self.instances_per_cell == 0 {
            return Err(Error::param("instances_per_cell", "must be >= 1"));
        }
        if self.samples < 2 {
            return Err(Error::param("samples", "need at least 2 samples"));
        }
        self.heuristic.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperRow {
    pub pattern: PatternKind,
    pub alpha: f64,
    pub h: f64,
    pub bound: f64,
    pub stderr: f64,
    pub samples: u64,
    /// The minimising `h` sits on the edge of the search bracket.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRow {
    pub metric: TruckNorm,
    pub n: usize,
    pub alpha: f64,
    pub instances: usize,
    /// Mean of makespan / √n.
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerRow {
    pub beta: f64,
    pub alpha: f64,
    pub rho_star: f64,
    /// Truncated to 4 decimals.
    pub bound: f64,
}

/// Rows together with the seconds spent on each.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<R> {
    pub rows: Vec<R>,
    pub cell_seconds: Vec<f64>,
}

/// Strip upper bounds for every pattern × α, each at its optimised `h`.
pub fn run_upper_table(cfg: &ExperimentConfig) -> Result<Table<UpperRow>> {
    cfg.validate()?;
    require_euclidean(cfg.metric)?;
    let cells: Vec<(PatternKind, f64)> = cfg
        .patterns
        .iter()
        .flat_map(|&p| cfg.alphas.iter().map(move |&a| (p, a)))
        .collect();
    let mut rows = Vec::with_capacity(cells.len());
    let mut cell_seconds = Vec::with_capacity(cells.len());
    // the estimator parallelises over sample chunks, so cells run in turn
    for (pattern, alpha) in cells {
        let started = Instant::now();
        let seed = derive_seed(cfg.seed, &[UPPER_TAG, pattern.points() as u64, alpha.to_bits()]);
        let (lo, hi) = DEFAULT_H_BRACKET;
        let opt = optimize_h(pattern, alpha, cfg.samples, seed, lo, hi)?;
        rows.push(UpperRow {
            pattern,
            alpha,
            h: opt.estimate.h,
            bound: opt.estimate.mean,
            stderr: opt.estimate.stderr,
            samples: cfg.samples,
            at_boundary: opt.at_boundary,
        });
        cell_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(Table { rows, cell_seconds })
}

/// Instance `i` of size `n`; shared by every `α` so that columns differ
/// only through `α`.
pub fn empirical_instance_seed(seed: u64, n: usize, i: usize) -> u64 {
    derive_seed(seed, &[EMPIRICAL_TAG, n as u64, i as u64])
}

/// Mean scaled heuristic makespan per (n, α) over seeded random instances.
pub fn run_empirical_table(cfg: &ExperimentConfig) -> Result<Table<EmpiricalRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, f64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.alphas.iter().map(move |&a| (n, a)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.instances_per_cell).map(move |i| (c, i)))
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let started = Instant::now();
            let (n, alpha) = cells[c];
            let seed = empirical_instance_seed(cfg.seed, n, i);
            let inst = generate_instance(n, seed);
            let m = MetricPair::new(cfg.metric, alpha)?;
            let report = tspd_heuristic(&inst, &m, seed, &cfg.heuristic)?;
            Ok((report.makespan / (n as f64).sqrt(), started.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let per = cfg.instances_per_cell;
    let mut rows = Vec::with_capacity(cells.len());
    let mut cell_seconds = Vec::with_capacity(cells.len());
    for (c, &(n, alpha)) in cells.iter().enumerate() {
        let chunk = &results[c * per..(c + 1) * per];
        let w: Welford = chunk.iter().map(|r| r.0).collect();
        rows.push(EmpiricalRow {
            metric: cfg.metric,
            n,
            alpha,
            instances: per,
            mean: w.mean(),
            stderr: w.std_err(),
        });
        cell_seconds.push(chunk.iter().map(|r| r.1).sum());
    }
    Ok(Table { rows, cell_seconds })
}

/// Lower bounds over `betas × cfg.alphas`, truncated to 4 decimals.
pub fn run_lower_table(cfg: &ExperimentConfig, betas: &[f64]) -> Result<Vec<LowerRow>> {
    cfg.validate()?;
    if betas.is_empty() {
        return Err(Error::param("betas", "need at least one value"));
    }
    let mut rows = Vec::with_capacity(betas.len() * cfg.alphas.len());
    for &beta in betas {
        for &alpha in &cfg.alphas {
            rows.push(LowerRow {
                beta,
                alpha,
                rho_star: rho_star(beta, alpha)?,
                bound: truncate(lb_param(beta, alpha)?, 4),
            });
        }
    }
    Ok(rows)
}

/// Header of every JSON report. Only `wall_clock_seconds` and
/// `cell_seconds` vary between reruns of the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub generator: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cell_seconds: Vec<f64>,
    pub config: serde_json::Value,
}

impl Metadata {
    pub fn new(seed: u64, config: &impl Serialize, wall_clock_seconds: f64) -> Self {
        Metadata {
            tool: TOOL.into(),
            version: VERSION.into(),
            generator: GENERATOR.into(),
            seed,
            wall_clock_seconds,
            cell_seconds: Vec::new(),
            config: serde_json::to_value(config).expect("configs serialise"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub metadata: Metadata,
    pub payload: T,
}

/// Serialise `{metadata, payload}` as pretty JSON.
pub fn report_json<T: Serialize>(metadata: &Metadata, payload: &T) -> String {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        metadata: &'a Metadata,
        payload: &'a T,
    }
    serde_json::to_string_pretty(&Borrowed { metadata, payload }).expect("reports serialise")
}

/// Write the JSON report to `path`.
pub fn report_run<T: Serialize>(path: &Path, metadata: &Metadata, payload: &T) -> Result<()> {
    write_text(path, &(report_json(metadata, payload) + "\n"))
}

/// A row with a fixed CSV layout.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

impl CsvRow for UpperRow {
    const HEADER: &'static [&'static str] = &["pattern", "alpha", "h", "bound", "stderr", "samples", "at_boundary"];

    fn record(&self) -> Vec<String> {
        vec![
            self.pattern.name().into(),
            self.alpha.to_string(),
            format!("{:.3}", self.h),
            format!("{:.4}", self.bound),
            format!("{:.6}", self.stderr),
            self.samples.to_string(),
            self.at_boundary.to_string(),
        ]
    }
}

impl CsvRow for EmpiricalRow {
    const HEADER: &'static [&'static str] = &["metric", "n", "alpha", "instances", "mean", "stderr"];

    fn record(&self) -> Vec<String> {
        let metric = match self.metric {
            TruckNorm::Euclidean => "euclidean",
            TruckNorm::Rectilinear => "mixed",
        };
        vec![
            metric.into(),
            self.n.to_string(),
            self.alpha.to_string(),
            self.instances.to_string(),
            format!("{:.4}", self.mean),
            format!("{:.6}", self.stderr),
        ]
    }
}

impl CsvRow for LowerRow {
    const HEADER: &'static [&'static str] = &["beta", "alpha", "rho_star", "bound"];

    fn record(&self) -> Vec<String> {
        vec![
            self.beta.to_string(),
            self.alpha.to_string(),
            format!("{:.6}", self.rho_star),
            format!("{:.4}", self.bound),
        ]
    }
}

pub fn csv_string<R: CsvRow>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv<R: CsvRow>(path: &Path, rows: &[R]) -> Result<()> {
    write_text(path, &csv_string(rows)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            alphas: vec![1.0, 2.0],
            sizes: vec![12, 20],
            instances_per_cell: 3,
            samples: 20_000,
            patterns: vec![PatternKind::Straight, PatternKind::Triangle],
            ..Default::default()
        }
    }

    #[test]
    fn config_checks() {
        assert!(small().validate().is_ok());
        for bad in [
            ExperimentConfig {
                alphas: vec![0.5],
                ..small()
            },
            ExperimentConfig {
                sizes: vec![1],
                ..small()
            },
            ExperimentConfig {
                instances_per_cell: 0,
                ..small()
            },
            ExperimentConfig { samples: 1, ..small() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Parameter { .. })));
        }
    }

    #[test]
    fn upper_table_rejects_rectilinear() {
        let cfg = ExperimentConfig {
            metric: TruckNorm::Rectilinear,
            ..small()
        };
        assert!(matches!(run_upper_table(&cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn upper_table_layout() {
        let t = run_upper_table(&small()).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.cell_seconds.len(), 4);
        assert_eq!((t.rows[0].pattern, t.rows[0].alpha), (PatternKind::Straight, 1.0));
        assert_eq!((t.rows[3].pattern, t.rows[3].alpha), (PatternKind::Triangle, 2.0));
        let csv = csv_string(&t.rows).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "pattern,alpha,h,bound,stderr,samples,at_boundary");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("straight,1,"));
    }

    #[test]
    fn empirical_cells_share_instances() {
        let t = run_empirical_table(&small()).unwrap();
        assert_eq!(t.rows.len(), 4);
        for r in &t.rows {
            assert_eq!(r.instances, 3);
            assert!(r.mean > 0.0 && r.stderr >= 0.0);
        }
        // same instances, faster drone: never worse on average here
        assert!(t.rows[1].mean <= t.rows[0].mean + 1e-12);
        assert_eq!(t.rows, run_empirical_table(&small()).unwrap().rows);
    }

    #[test]
    fn lower_table_truncates() {
        let cfg = ExperimentConfig {
            alphas: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            ..small()
        };
        let rows = run_lower_table(&cfg, &[0.71]).unwrap();
        let got: Vec<f64> = rows.iter().map(|r| r.bound).collect();
        assert_eq!(got, vec![0.5670, 0.5217, 0.4858, 0.4564, 0.4317]);
        assert!(run_lower_table(&cfg, &[]).is_err());
        assert!(run_lower_table(&cfg, &[-1.0]).is_err());
        assert_eq!(
            csv_string(&rows).unwrap().lines().nth(3).unwrap(),
            format!("0.71,2,{:.6},0.4858", rows[2].rho_star)
        );
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lower.json");
        let cfg = small();
        let rows = run_lower_table(&cfg, &[0.6277]).unwrap();
        report_run(&path, &Metadata::new(cfg.seed, &cfg, 0.25), &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: Report<Vec<LowerRow>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.payload, rows);
        assert_eq!(back.metadata.generator, GENERATOR);
        let echoed: ExperimentConfig = serde_json::from_value(back.metadata.config).unwrap();
        assert_eq!(echoed, cfg);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_csv::<LowerRow>(Path::new("/nonexistent/dir/x.csv"), &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }
}
