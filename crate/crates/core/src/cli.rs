//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unknown problem
//! or suite, malformed config), 2 on runtime failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bench::{
    export_cloud, export_report, export_trace, run_starts, run_suite, start_point, suite,
    BenchConfig,
};
use crate::linalg::norm_inf;
use crate::linesearch::LineSearchParams;
use crate::problems::{get_problem, ProblemDef, EXAMPLES, TABLE2};
use crate::solver::{run, LineSearchKind, MetricKind, SolverOptions};

const FD_STEP: f64 = 1e-6;
const FD_POINTS: usize = 100;
const FD_LIMIT: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(
    name = "vmetric",
    version,
    about = "Variable metric solver for multiobjective problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem from one starting point.
    Solve(SolveArgs),
    /// Seeded multi-start benchmark with CSV summary and raw rows.
    Bench(BenchArgs),
    /// Export terminal points of seeded runs (variable and objective space).
    Front(FrontArgs),
    /// Finite-difference check of every corpus Jacobian.
    Check(CheckArgs),
}

#[derive(Debug, Args, Default)]
struct SolverFlags {
    /// identity | bfgs | qn-per-objective
    #[arg(long)]
    metric: Option<MetricKind>,
    /// vector | aggregated
    #[arg(long)]
    linesearch: Option<LineSearchKind>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Stopping tolerance on |theta|.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// TOML file whose keys are flag names; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated coordinates, or `seed:<int>` to sample from the box.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// table2 | examples | all
    #[arg(long)]
    suite: Option<String>,
    /// Comma-separated problem names (overrides --suite).
    #[arg(long, value_delimiter = ',')]
    problems: Option<Vec<String>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for summary.csv and summary_runs.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Args)]
struct FrontArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Interior points per problem.
    #[arg(long, default_value_t = FD_POINTS)]
    points: usize,
    #[arg(long, default_value_t = FD_STEP)]
    h: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Config-file mirror of the command-line flags.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    problems: Option<Vec<String>>,
    suite: Option<String>,
    x0: Option<String>,
    trace: Option<PathBuf>,
    runs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    metric: Option<String>,
    linesearch: Option<String>,
    sigma: Option<f64>,
    gamma: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn solver_options(flags: &SolverFlags, file: &FileConfig) -> CliResult<SolverOptions> {
    let mut opts = SolverOptions::default();
    opts.metric = match (flags.metric, &file.metric) {
        (Some(m), _) => m,
        (None, Some(s)) => s.parse().map_err(usage)?,
        (None, None) => opts.metric,
    };
    opts.linesearch = match (flags.linesearch, &file.linesearch) {
        (Some(l), _) => l,
        (None, Some(s)) => s.parse().map_err(usage)?,
        (None, None) => opts.linesearch,
    };
    let defaults = LineSearchParams::default();
    opts.ls = LineSearchParams::new(
        flags.sigma.or(file.sigma).unwrap_or(defaults.sigma),
        flags.gamma.or(file.gamma).unwrap_or(defaults.gamma),
        defaults.max_backtracks,
    )
    .map_err(usage)?;
    opts.tol = flags.tol.or(file.tol).unwrap_or(opts.tol);
    opts.max_iter = flags.max_iter.or(file.max_iter).unwrap_or(opts.max_iter);
    opts.validate().map_err(usage)?;
    Ok(opts)
}

fn resolve_problem(name: Option<&String>) -> CliResult<ProblemDef> {
    let name = name.ok_or_else(|| usage("--problem is required"))?;
    get_problem(name).map_err(usage)
}

fn parse_x0(text: &str, p: &ProblemDef) -> CliResult<Vec<f64>> {
    if let Some(seed) = text.strip_prefix("seed:") {
        let seed: u64 = seed
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad seed in --x0 {text:?}")))?;
        return Ok(start_point(p, seed, 0));
    }
    let x: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad coordinate list {text:?}")))?;
    if x.len() != p.n() {
        return Err(usage(format!(
            "--x0 has {} coordinates, {} expects {}",
            x.len(),
            p.name(),
            p.n()
        )));
    }
    Ok(x)
}

fn fmt_list(v: &[f64]) -> String {
    const SHOW: usize = 10;
    let mut s: Vec<String> = v.iter().take(SHOW).map(|x| format!("{x}")).collect();
    if v.len() > SHOW {
        s.push(format!("... ({} total)", v.len()));
    }
    s.join(", ")
}

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    let file = load_config(args.solver.config.as_deref())?;
    let opts = solver_options(&args.solver, &file)?;
    let p = resolve_problem(args.problem.as_ref().or(file.problem.as_ref()))?;
    let x0 = match args.x0.as_ref().or(file.x0.as_ref()) {
        Some(text) => parse_x0(text, &p)?,
        None => start_point(&p, 0, 0),
    };
    let r = run(&p, &x0, &opts).map_err(runtime)?;
    println!("problem: {}", p.name());
    println!("status: {}", r.status);
    println!("iterations: {}", r.iters);
    println!("theta: {}", r.theta_final);
    println!("fevals: {}", r.fevals());
    println!("jacobian_evals: {}", r.counters.jac_calls);
    println!("x_final: {}", fmt_list(&r.x_final));
    println!("lambda: {}", fmt_list(r.lambda_final.as_slice()));
    if let Some(path) = args.trace.or(file.trace) {
        export_trace(&r, &path).map_err(runtime)?;
        println!("trace: {}", path.display());
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let file = load_config(args.solver.config.as_deref())?;
    let opts = solver_options(&args.solver, &file)?;
    let problems = match args.problems.or(file.problems) {
        Some(list) => list,
        None => {
            let name = args.suite.or(file.suite).unwrap_or_else(|| "table2".into());
            suite(&name).ok_or_else(|| usage(format!("unknown suite {name:?}")))?
        }
    };
    for name in &problems {
        get_problem(name).map_err(usage)?;
    }
    let mut config = BenchConfig::new(
        problems,
        args.runs.or(file.runs).unwrap_or(200),
        args.seed.or(file.seed).unwrap_or(1),
        opts,
    );
    config.workers = args.workers.or(file.workers);
    config.out_dir = Some(
        args.out
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("out")),
    );
    let report = run_suite(&config).map_err(runtime)?;
    let out = config.out_dir.as_ref().expect("set above");
    let (summary, raw) = export_report(&report, &out.join("summary.csv")).map_err(runtime)?;
    println!(
        "{:<8} {:>10} {:>10} {:>12} {:>9} {:>8}",
        "problem", "mean_iter", "mean_feval", "mean_time_s", "critical", "failures"
    );
    for s in &report.stats {
        println!(
            "{:<8} {:>10.2} {:>10.2} {:>12.6} {:>9.3} {:>8}",
            s.problem, s.mean_iter, s.mean_feval, s.mean_time, s.critical_fraction, s.failures
        );
    }
    println!("summary: {}", summary.display());
    println!("runs: {}", raw.display());
    Ok(())
}

fn cmd_front(args: FrontArgs) -> CliResult<()> {
    let file = load_config(args.solver.config.as_deref())?;
    let opts = solver_options(&args.solver, &file)?;
    let p = resolve_problem(args.problem.as_ref().or(file.problem.as_ref()))?;
    let runs = args.runs.or(file.runs).unwrap_or(200);
    if runs == 0 {
        return Err(usage("--runs must be >= 1"));
    }
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let out = args
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("{}_front.csv", p.name())));
    let results = run_starts(&p, runs, seed, &opts, args.workers.or(file.workers), |sr| {
        sr.result
    })
    .map_err(runtime)?;
    export_cloud(&results, &p, &out).map_err(runtime)?;
    println!("{} points written to {}", results.len(), out.display());
    Ok(())
}

fn cmd_check(args: CheckArgs) -> CliResult<()> {
    if args.points == 0 || !(args.h > 0.0) {
        return Err(usage("--points must be >= 1 and --h > 0"));
    }
    let mut worst = 0.0_f64;
    for name in TABLE2.iter().chain(EXAMPLES.iter()) {
        let p = get_problem(name).map_err(runtime)?;
        let err = (0..args.points)
            .map(|i| p.fd_check(&start_point(&p, args.seed, i), args.h))
            .fold(0.0, f64::max);
        println!("{name:<8} max_fd_error {err:e}");
        worst = worst.max(err);
    }
    println!("worst {worst:e} (limit {FD_LIMIT:e})");
    if worst < FD_LIMIT && norm_inf(&[worst]).is_finite() {
        Ok(())
    } else {
        Err(runtime(format!(
            "finite-difference error {worst:e} exceeds {FD_LIMIT:e}"
        )))
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Front(a) => cmd_front(a),
        Command::Check(a) => cmd_check(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `vmetric --help` for usage");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
