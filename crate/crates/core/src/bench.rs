//! Seeded multi-start benchmark harness and CSV export.
//!
//! Run `r` of a suite uses seed `base_seed + r` for every problem, so the
//! same starting-point stream is shared across methods and problem order
//! never affects a run. Output rows are ordered by (problem, run) after
//! all runs finish, so worker count does not change the CSV bytes apart
//! from timing columns.

use std::fs::File;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::problems::{get_problem, EvalCounters, ProblemDef, ProblemError, EXAMPLES, TABLE2};
use crate::solver::{run, SolveResult, SolverError, SolverOptions, Status};

/// Environment variable read for the default worker count.
pub const WORKERS_ENV: &str = "VMETRIC_WORKERS";

pub const SUMMARY_HEADER: [&str; 6] = [
    "problem",
    "mean_iter",
    "mean_feval",
    "mean_time_s",
    "critical_fraction",
    "failures",
];
pub const RAW_HEADER: [&str; 8] = [
    "problem",
    "run",
    "seed",
    "status",
    "iters",
    "fevals",
    "time_s",
    "theta_final",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{problem} run {run}: {source}")]
    Solver {
        problem: String,
        run: usize,
        #[source]
        source: SolverError,
    },
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("result {index} has dimension {found}, problem {problem} expects {expected}")]
    DimensionMismatch {
        problem: String,
        index: usize,
        expected: usize,
        found: usize,
    },
}

/// Named problem lists: `table2` (17 problems), `examples`, `all`.
pub fn suite(name: &str) -> Option<Vec<String>> {
    let names: Vec<&str> = match name {
        "table2" => TABLE2.to_vec(),
        "examples" => EXAMPLES.to_vec(),
        "all" => TABLE2.iter().chain(EXAMPLES.iter()).copied().collect(),
        _ => return None,
    };
    Some(names.into_iter().map(String::from).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub problems: Vec<String>,
    pub runs: usize,
    pub seed: u64,
    pub opts: SolverOptions,
    pub out_dir: Option<PathBuf>,
    /// `None` falls back to `$VMETRIC_WORKERS`, then to the number of CPUs.
    pub workers: Option<usize>,
}

impl BenchConfig {
    pub fn new(problems: Vec<String>, runs: usize, seed: u64, opts: SolverOptions) -> Self {
        Self {
            problems,
            runs,
            seed,
            opts,
            out_dir: None,
            workers: None,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.runs == 0 {
            return Err(BenchError::InvalidConfig("runs must be >= 1".into()));
        }
        if self.problems.is_empty() {
            return Err(BenchError::InvalidConfig("no problems given".into()));
        }
        if self.workers == Some(0) {
            return Err(BenchError::InvalidConfig("workers must be >= 1".into()));
        }
        self.opts
            .validate()
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))
    }
}

/// One raw result row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub problem: String,
    pub run: usize,
    pub seed: u64,
    pub status: Status,
    pub iters: usize,
    pub fevals: u64,
    pub time_s: f64,
    pub theta_final: f64,
}

/// Per-problem aggregate. Means are taken over critical runs only.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub problem: String,
    pub runs: usize,
    pub mean_iter: f64,
    pub mean_feval: f64,
    pub mean_time: f64,
    pub critical_fraction: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub config: BenchConfig,
    pub stats: Vec<RunStats>,
    pub rows: Vec<RawRow>,
}

/// A single seeded run, handed to the per-run callback of [`run_starts`].
#[derive(Debug)]
pub struct SeededRun<'a> {
    pub problem: &'a ProblemDef,
    pub run: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub result: SolveResult,
}

/// Seed of run `run` under base seed `base`.
pub fn run_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add(run as u64)
}

/// Starting point of run `run`.
pub fn start_point(p: &ProblemDef, base: u64, run: usize) -> Vec<f64> {
    p.sample_start(&mut ChaCha8Rng::seed_from_u64(run_seed(base, run)))
}

fn worker_count(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var(WORKERS_ENV).ok()?.parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `runs` seeded starts of `p` and maps each finished run through `f`,
/// returning the mapped values in run order. Results are dropped after
/// mapping, so large traces never accumulate.
pub fn run_starts<T, F>(
    p: &ProblemDef,
    runs: usize,
    base_seed: u64,
    opts: &SolverOptions,
    workers: Option<usize>,
    f: F,
) -> Result<Vec<T>, BenchError>
where
    T: Send,
    F: Fn(SeededRun<'_>) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(workers))
        .build()
        .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|r| {
                let x0 = start_point(p, base_seed, r);
                let result = run(p, &x0, opts).map_err(|source| BenchError::Solver {
                    problem: p.name().to_string(),
                    run: r,
                    source,
                })?;
                Ok(f(SeededRun {
                    problem: p,
                    run: r,
                    seed: run_seed(base_seed, r),
                    x0,
                    result,
                }))
            })
            .collect()
    })
}

fn raw_row(sr: SeededRun<'_>) -> RawRow {
    RawRow {
        problem: sr.problem.name().to_string(),
        run: sr.run,
        seed: sr.seed,
        status: sr.result.status,
        iters: sr.result.iters,
        fevals: sr.result.fevals(),
        time_s: sr.result.wall_time.as_secs_f64(),
        theta_final: sr.result.theta_final,
    }
}

/// Aggregates raw rows of one problem.
pub fn aggregate(problem: &str, rows: &[RawRow]) -> RunStats {
    let done: Vec<&RawRow> = rows
        .iter()
        .filter(|r| r.status == Status::Critical)
        .collect();
    let mean = |f: &dyn Fn(&RawRow) -> f64| {
        if done.is_empty() {
            f64::NAN
        } else {
            done.iter().map(|r| f(r)).sum::<f64>() / done.len() as f64
        }
    };
    RunStats {
        problem: problem.to_string(),
        runs: rows.len(),
        mean_iter: mean(&|r| r.iters as f64),
        mean_feval: mean(&|r| r.fevals as f64),
        mean_time: mean(&|r| r.time_s),
        critical_fraction: if rows.is_empty() {
            0.0
        } else {
            done.len() as f64 / rows.len() as f64
        },
        failures: rows.len() - done.len(),
    }
}

/// Runs every problem of the configuration. All names are resolved before
/// the first run starts.
pub fn run_suite(config: &BenchConfig) -> Result<SuiteReport, BenchError> {
    config.validate()?;
    let problems = config
        .problems
        .iter()
        .map(|n| get_problem(n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut stats = Vec::with_capacity(problems.len());
    let mut rows = Vec::with_capacity(problems.len() * config.runs);
    for p in &problems {
        let mut prow = run_starts(
            p,
            config.runs,
            config.seed,
            &config.opts,
            config.workers,
            raw_row,
        )?;
        prow.sort_by_key(|r| r.run);
        stats.push(aggregate(p.name(), &prow));
        rows.extend(prow);
    }
    Ok(SuiteReport {
        config: config.clone(),
        stats,
        rows,
    })
}

fn fmt_f64(v: f64) -> String {
    // Display for f64 is the shortest round-trip representation.
    format!("{v}")
}

fn create(path: &Path) -> Result<File, BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_csv<I>(path: &Path, header: &[&str], records: I) -> Result<(), BenchError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(csv_err)?;
    for rec in records {
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Path of the raw per-run CSV written next to a summary file.
pub fn raw_path_for(summary: &Path) -> PathBuf {
    let stem = summary
        .file_stem()
        .map_or_else(|| "summary".into(), |s| s.to_string_lossy().into_owned());
    summary.with_file_name(format!("{stem}_runs.csv"))
}

/// Writes the summary CSV to `path` and the raw rows to
/// [`raw_path_for`]`(path)`. Returns both paths.
pub fn export_report(report: &SuiteReport, path: &Path) -> Result<(PathBuf, PathBuf), BenchError> {
    write_csv(
        path,
        &SUMMARY_HEADER,
        report.stats.iter().map(|s| {
            vec![
                s.problem.clone(),
                fmt_f64(s.mean_iter),
                fmt_f64(s.mean_feval),
                fmt_f64(s.mean_time),
                fmt_f64(s.critical_fraction),
                s.failures.to_string(),
            ]
        }),
    )?;
    let raw = raw_path_for(path);
    write_csv(
        &raw,
        &RAW_HEADER,
        report.rows.iter().map(|r| {
            vec![
                r.problem.clone(),
                r.run.to_string(),
                r.seed.to_string(),
                r.status.to_string(),
                r.iters.to_string(),
                r.fevals.to_string(),
                fmt_f64(r.time_s),
                fmt_f64(r.theta_final),
            ]
        }),
    )?;
    Ok((path.to_path_buf(), raw))
}

/// Writes terminal iterates as `x_0..x_{n-1},F_0..F_{m-1}` rows.
pub fn export_cloud(
    results: &[SolveResult],
    p: &ProblemDef,
    path: &Path,
) -> Result<(), BenchError> {
    let mut rows = Vec::with_capacity(results.len());
    let mut scratch = EvalCounters::default();
    for (index, r) in results.iter().enumerate() {
        if r.x_final.len() != p.n() {
            return Err(BenchError::DimensionMismatch {
                problem: p.name().to_string(),
                index,
                expected: p.n(),
                found: r.x_final.len(),
            });
        }
        let f = p
            .evaluate(&r.x_final, &mut scratch)
            .map_err(|e| BenchError::Solver {
                problem: p.name().to_string(),
                run: index,
                source: e.into(),
            })?;
        rows.push(r.x_final.iter().chain(&f).map(|v| fmt_f64(*v)).collect());
    }
    let header: Vec<String> = (0..p.n())
        .map(|i| format!("x_{i}"))
        .chain((0..p.m()).map(|i| format!("F_{i}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(path, &header, rows)
}

/// Writes a solve trace as CSV:
/// `k,theta,norm_d,alpha,backtracks,skipped,lambda_0..lambda_{m-1}`.
/// The final record has empty `alpha` and `backtracks` fields.
pub fn export_trace(result: &SolveResult, path: &Path) -> Result<(), BenchError> {
    let m = result.lambda_final.len();
    let mut header: Vec<String> = ["k", "theta", "norm_d", "alpha", "backtracks", "skipped"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..m).map(|i| format!("lambda_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = result.trace.iter().map(|rec| {
        let mut row = vec![
            rec.k.to_string(),
            fmt_f64(rec.theta),
            fmt_f64(rec.norm_d),
            rec.step.map_or_else(String::new, |s| fmt_f64(s.alpha)),
            rec.step
                .map_or_else(String::new, |s| s.backtracks.to_string()),
            rec.curvature_skipped.to_string(),
        ];
        row.extend(rec.lambda.as_slice().iter().map(|v| fmt_f64(*v)));
        row
    });
    write_csv(path, &header, rows)
}
