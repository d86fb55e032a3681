use std::path::Path;
use std::process::Command;

use vmetric::bench::{
    aggregate, export_cloud, export_report, export_trace, run_starts, run_suite, BenchConfig,
    RawRow, RAW_HEADER, SUMMARY_HEADER,
};
use vmetric::problems::get_problem;
use vmetric::solver::{run, SolverOptions, Status};

fn config(problems: &[&str], runs: usize, seed: u64) -> BenchConfig {
    BenchConfig::new(
        problems.iter().map(|s| s.to_string()).collect(),
        runs,
        seed,
        SolverOptions::vmm_bfgs(),
    )
}

fn strip_time(rows: &[RawRow]) -> Vec<(String, usize, u64, Status, usize, u64, u64)> {
    rows.iter()
        .map(|r| {
            (
                r.problem.clone(),
                r.run,
                r.seed,
                r.status,
                r.iters,
                r.fevals,
                r.theta_final.to_bits(),
            )
        })
        .collect()
}

#[test]
fn suite_is_reproducible_and_worker_independent() {
    let mut a = config(&["PNR", "WIT2", "Deb"], 12, 5);
    a.workers = Some(1);
    let mut b = a.clone();
    b.workers = Some(3);
    let ra = run_suite(&a).unwrap();
    let rb = run_suite(&b).unwrap();
    assert_eq!(strip_time(&ra.rows), strip_time(&rb.rows));
}

#[test]
fn seeds_do_not_depend_on_other_problems() {
    let alone = run_suite(&config(&["WIT5"], 8, 2)).unwrap();
    let mixed = run_suite(&config(&["EX41", "WIT5", "PNR"], 8, 2)).unwrap();
    let wit5: Vec<RawRow> = mixed
        .rows
        .into_iter()
        .filter(|r| r.problem == "WIT5")
        .collect();
    assert_eq!(strip_time(&alone.rows), strip_time(&wit5));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn summary_is_rederivable_from_raw_rows() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_suite(&config(&["PNR", "Deb"], 25, 7)).unwrap();
    let (summary, raw) = export_report(&report, &dir.path().join("summary.csv")).unwrap();
    assert_eq!(raw, dir.path().join("summary_runs.csv"));

    let (sh, srows) = read_csv(&summary);
    let (rh, rrows) = read_csv(&raw);
    assert_eq!(sh, SUMMARY_HEADER);
    assert_eq!(rh, RAW_HEADER);
    assert_eq!(rrows.len(), 50);

    for srow in &srows {
        let problem = &srow[0];
        let mine: Vec<&Vec<String>> = rrows.iter().filter(|r| &r[0] == problem).collect();
        let crit: Vec<&&Vec<String>> = mine.iter().filter(|r| r[3] == "critical").collect();
        let mean = |col: usize| {
            crit.iter()
                .map(|r| r[col].parse::<f64>().unwrap())
                .sum::<f64>()
                / crit.len() as f64
        };
        let parse = |i: usize| srow[i].parse::<f64>().unwrap();
        assert!((parse(1) - mean(4)).abs() < 1e-12, "{problem} mean_iter");
        assert!((parse(2) - mean(5)).abs() < 1e-12, "{problem} mean_feval");
        assert!((parse(4) - crit.len() as f64 / mine.len() as f64).abs() < 1e-12);
        assert_eq!(srow[5].parse::<usize>().unwrap(), mine.len() - crit.len());
    }
}

#[test]
fn aggregate_ignores_failed_runs() {
    let report = run_suite(&config(&["WIT1"], 6, 3)).unwrap();
    let mut rows = report.rows.clone();
    rows[0].status = Status::MaxIter;
    rows[0].iters = 10_000;
    let s = aggregate("WIT1", &rows);
    assert_eq!(s.failures, 1);
    assert!(s.mean_iter < 100.0);
    assert!((s.critical_fraction - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn cloud_and_trace_exports_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let p = get_problem("EX41").unwrap();
    let results = run_starts(&p, 4, 1, &SolverOptions::vmm_bfgs(), Some(1), |sr| {
        sr.result
    })
    .unwrap();
    let cloud = dir.path().join("front.csv");
    export_cloud(&results, &p, &cloud).unwrap();
    let (h, rows) = read_csv(&cloud);
    assert_eq!(h, ["x_0", "x_1", "F_0", "F_1"]);
    assert_eq!(rows.len(), 4);

    let r = run(&p, &[0.3, 0.4], &SolverOptions::vmm_bfgs()).unwrap();
    let trace = dir.path().join("trace.csv");
    export_trace(&r, &trace).unwrap();
    let (h, rows) = read_csv(&trace);
    assert_eq!(
        h,
        [
            "k",
            "theta",
            "norm_d",
            "alpha",
            "backtracks",
            "skipped",
            "lambda_0",
            "lambda_1"
        ]
    );
    assert_eq!(rows.len(), r.iters + 1);
    let last = rows.last().unwrap();
    assert!(last[3].is_empty() && last[4].is_empty());
}

fn vmetric() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vmetric"))
}

#[test]
fn cli_solve_reports_status() {
    let out = vmetric()
        .args(["solve", "--problem", "EX41", "--x0", "-1,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status: critical"), "{text}");
    assert!(text.contains("iterations: 0"), "{text}");
}

#[test]
fn cli_solve_writes_trace_with_seeded_start() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let status = vmetric()
        .args([
            "solve",
            "--problem",
            "PNR",
            "--x0",
            "seed:4",
            "--metric",
            "identity",
        ])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(!read_csv(&trace).1.is_empty());
}

#[test]
fn cli_usage_errors_exit_with_one() {
    let cases: [&[&str]; 4] = [
        &["solve", "--problem", "NOPE"],
        &["solve", "--problem", "PNR", "--metric", "newton"],
        &["solve", "--problem", "PNR", "--x0", "1,2,3"],
        &["bench", "--suite", "bogus"],
    ];
    for args in cases {
        let out = vmetric().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    assert_eq!(
        vmetric().arg("--help").output().unwrap().status.code(),
        Some(0)
    );
}

#[test]
fn cli_bench_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        "problems = [\"WIT1\", \"EX51\"]\nruns = 5\nseed = 3\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = vmetric()
        .arg("bench")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let (_, summary) = read_csv(&out_dir.join("summary.csv"));
    assert_eq!(summary.len(), 2);
    let (_, raw) = read_csv(&out_dir.join("summary_runs.csv"));
    assert_eq!(raw.len(), 10);

    std::fs::write(&cfg, "runz = 5\n").unwrap();
    let out = vmetric()
        .arg("bench")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_front_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let front = dir.path().join("front.csv");
    let status = vmetric()
        .args(["front", "--problem", "WIT3", "--runs", "7"])
        .arg("--out")
        .arg(&front)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(read_csv(&front).1.len(), 7);

    let out = vmetric().args(["check", "--points", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("JOS1d"));
}
