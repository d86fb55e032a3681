//! Outer iteration: variable metric method with a shared metric (identity
//! or BFGS), plus the per-objective quasi-Newton baseline.
//!
//! Each iteration solves the dual subproblem at `x_k`, stops when
//! `|θ_k| ≤ ε`, and otherwise takes `x_{k+1} = x_k + α_k d_k` with a
//! backtracking step. The shared BFGS metric is updated with
//! `s_k = x_{k+1} − x_k` and the multiplier-weighted gradient difference
//! `y_k = Σ λ_i^k (∇F_i(x_{k+1}) − ∇F_i(x_k))`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dual::{
    default_max_inner, solve_qnm_dual, solve_subproblem, DualError, DualResult, SimplexPoint,
    DEFAULT_DUAL_TOL,
};
use crate::linalg::{
    all_finite, bfgs_update_primal_in_place, eig_bounds_estimate, norm, sub, InverseMetric,
    LinalgError, Matrix, SymMatrix, DEFAULT_CURVATURE_TOL,
};
use crate::linesearch::{
    armijo_aggregated, armijo_vector, LineSearchError, LineSearchOutcome, LineSearchParams,
};
use crate::problems::{EvalCounters, EvalError, ProblemDef, ProblemError};

/// Default stopping tolerance on `|θ|`.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Stopping tolerance used to compute reference limit points.
pub const REFERENCE_TOL: f64 = 1e-14;
/// Window (in trace records) for the tail statistics of
/// [`assumption_diagnostics`].
pub const TAIL_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("starting point has dimension {found}, problem expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("starting point is not in the evaluation domain: {0}")]
    InfeasibleStart(EvalError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    LineSearch(#[from] LineSearchError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $s:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s $(| $alias)* => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} {s:?}", stringify!($name))),
                }
            }
        }
    };
}

/// How `B_k` (equivalently `H_k = B_k⁻¹`) evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// `B_k = I`: multiobjective steepest descent.
    Identity,
    /// One BFGS matrix shared by all objectives.
    BfgsShared,
    /// One BFGS matrix per objective (quasi-Newton baseline).
    BfgsPerObjective,
}

str_enum!(MetricKind {
    Identity => "identity",
    BfgsShared => "bfgs",
    BfgsPerObjective => "qn-per-objective",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchKind {
    Vector,
    Aggregated,
}

str_enum!(LineSearchKind {
    Vector => "vector",
    Aggregated => "aggregated",
});

/// Secant pairs for the per-objective baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecantRule {
    /// `y_i = ∇F_i(x_{k+1}) − ∇F_i(x_k)` for each objective.
    PerObjective,
    /// Every `B_i` receives the shared multiplier-weighted `y`; the
    /// matrices then stay identical to the shared metric.
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub metric: MetricKind,
    pub linesearch: LineSearchKind,
    /// Stop when `|θ_k| ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub ls: LineSearchParams,
    pub dual_tol: f64,
    /// `None` selects `10·m² + 100`.
    pub dual_max_inner: Option<usize>,
    pub curvature_tol: f64,
    /// Record metric spectrum bounds and `B_k d_k` at every iteration.
    pub diagnostics: bool,
    pub secant: SecantRule,
    /// Return the final metric in [`SolveResult::final_metric`].
    pub keep_final_metric: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            metric: MetricKind::BfgsShared,
            linesearch: LineSearchKind::Aggregated,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            ls: LineSearchParams::default(),
            dual_tol: DEFAULT_DUAL_TOL,
            dual_max_inner: None,
            curvature_tol: DEFAULT_CURVATURE_TOL,
            diagnostics: false,
            secant: SecantRule::PerObjective,
            keep_final_metric: false,
        }
    }
}

impl SolverOptions {
    /// Shared BFGS metric with the aggregated line search.
    pub fn vmm_bfgs() -> Self {
        Self::default()
    }

    /// Identity metric with the componentwise Armijo rule.
    pub fn steepest_descent() -> Self {
        Self {
            metric: MetricKind::Identity,
            linesearch: LineSearchKind::Vector,
            ..Self::default()
        }
    }

    /// Per-objective BFGS matrices with the componentwise Armijo rule.
    pub fn qn_per_objective() -> Self {
        Self {
            metric: MetricKind::BfgsPerObjective,
            linesearch: LineSearchKind::Vector,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol >= 0.0) {
            return Err(SolverError::InvalidOptions("tol must be >= 0".into()));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidOptions("max_iter must be >= 1".into()));
        }
        if !(self.dual_tol > 0.0) {
            return Err(SolverError::InvalidOptions("dual_tol must be > 0".into()));
        }
        if self.dual_max_inner == Some(0) {
            return Err(SolverError::InvalidOptions(
                "dual_max_inner must be >= 1".into(),
            ));
        }
        if !(self.curvature_tol >= 0.0) {
            return Err(SolverError::InvalidOptions(
                "curvature_tol must be >= 0".into(),
            ));
        }
        self.ls
            .validate()
            .map_err(|e| SolverError::InvalidOptions(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Critical,
    MaxIter,
    LineSearchFailure,
}

str_enum!(Status {
    Critical => "critical",
    MaxIter => "max_iter",
    LineSearchFailure => "linesearch_failure",
});

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub alpha: f64,
    pub backtracks: usize,
    pub trials: usize,
}

/// State at iterate `k`. The last record of a trace describes the final
/// iterate and carries no step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub theta: f64,
    pub lambda: SimplexPoint,
    pub d: Vec<f64>,
    pub norm_d: f64,
    pub dual_gap: f64,
    pub step: Option<StepRecord>,
    /// The metric update following this step was skipped by the curvature test.
    pub curvature_skipped: bool,
    /// `(λ_min, λ_max)` of `B_k`; always present for the identity metric,
    /// otherwise only in diagnostics mode.
    pub eig_bounds: Option<(f64, f64)>,
    /// `B_k d_k`, diagnostics mode only.
    pub metric_d: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalMetric {
    /// `H = B⁻¹`
    Shared(InverseMetric),
    /// The per-objective `B_i`.
    PerObjective(Vec<SymMatrix>),
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub x_final: Vec<f64>,
    pub theta_final: f64,
    pub lambda_final: SimplexPoint,
    /// Number of steps taken.
    pub iters: usize,
    pub counters: EvalCounters,
    /// Objective evaluations spent inside line searches.
    pub trial_evals: u64,
    pub trace: Vec<IterateRecord>,
    pub wall_time: Duration,
    pub final_metric: Option<FinalMetric>,
}

impl SolveResult {
    /// Evaluation count in the benchmark convention: line-search trial
    /// evaluations only (the starting evaluation is not counted).
    pub fn fevals(&self) -> u64 {
        self.trial_evals
    }
}

enum MetricState {
    Shared {
        h: InverseMetric,
        /// Primal mirror, maintained only for diagnostics.
        b: Option<SymMatrix>,
    },
    PerObjective(Vec<SymMatrix>),
}

impl MetricState {
    fn new(kind: MetricKind, n: usize, m: usize, diagnostics: bool) -> Self {
        match kind {
            MetricKind::Identity | MetricKind::BfgsShared => MetricState::Shared {
                h: InverseMetric::identity(n),
                b: (diagnostics && kind == MetricKind::BfgsShared).then(|| SymMatrix::identity(n)),
            },
            MetricKind::BfgsPerObjective => {
                MetricState::PerObjective(vec![SymMatrix::identity(n); m])
            }
        }
    }

    fn direction(&self, jac: &Matrix, tol: f64, max_inner: usize) -> Result<DualResult, DualError> {
        match self {
            MetricState::Shared { h, .. } => solve_subproblem(jac, h, tol, max_inner),
            MetricState::PerObjective(bs) => solve_qnm_dual(jac, bs, tol, max_inner),
        }
    }

    /// Spectrum bounds of `B`.
    fn eig_bounds(
        &self,
        kind: MetricKind,
        diagnostics: bool,
    ) -> Result<Option<(f64, f64)>, LinalgError> {
        if kind == MetricKind::Identity {
            return Ok(Some((1.0, 1.0)));
        }
        if !diagnostics {
            return Ok(None);
        }
        match self {
            MetricState::Shared { h, .. } => {
                let (lo, hi) = h.eig_bounds()?;
                Ok(Some((1.0 / hi, 1.0 / lo)))
            }
            MetricState::PerObjective(bs) => {
                let mut out = (f64::INFINITY, f64::NEG_INFINITY);
                for b in bs {
                    let (lo, hi) = eig_bounds_estimate(b)?;
                    out = (out.0.min(lo), out.1.max(hi));
                }
                Ok(Some(out))
            }
        }
    }

    /// `B_k d`
    fn metric_times(
        &self,
        kind: MetricKind,
        lambda: &[f64],
        d: &[f64],
    ) -> Result<Vec<f64>, LinalgError> {
        match self {
            _ if kind == MetricKind::Identity => Ok(d.to_vec()),
            MetricState::Shared { b: Some(b), .. } => b.mul_vec(d),
            MetricState::Shared { h, .. } => {
                // No mirror: recover B d by solving H z = d.
                let chol = crate::linalg::Cholesky::factor(&h.to_sym(), 0.0)?;
                chol.solve(d)
            }
            MetricState::PerObjective(bs) => {
                let mut out = vec![0.0; d.len()];
                for (w, b) in lambda.iter().zip(bs) {
                    for (o, v) in out.iter_mut().zip(b.mul_vec(d)?) {
                        *o += w * v;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Applies the BFGS update(s); returns true if any update was skipped.
    fn update(
        &mut self,
        opts: &SolverOptions,
        s: &[f64],
        jac_old: &Matrix,
        jac_new: &Matrix,
        lambda: &[f64],
    ) -> Result<bool, SolverError> {
        let aggregated_y = || {
            let mut y = vec![0.0; s.len()];
            for (i, &w) in lambda.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for ((yk, a), b) in y.iter_mut().zip(jac_new.row(i)).zip(jac_old.row(i)) {
                    *yk += w * (a - b);
                }
            }
            y
        };
        match self {
            _ if opts.metric == MetricKind::Identity => Ok(false),
            MetricState::Shared { h, b } => {
                let y = aggregated_y();
                let fired = h.bfgs_update(s, &y, opts.curvature_tol)?;
                if let Some(b) = b {
                    bfgs_update_primal_in_place(b, s, &y, opts.curvature_tol)?;
                }
                Ok(!fired)
            }
            MetricState::PerObjective(bs) => {
                let shared = (opts.secant == SecantRule::Aggregated).then(aggregated_y);
                let mut skipped = false;
                for (i, b) in bs.iter_mut().enumerate() {
                    let y = match &shared {
                        Some(y) => y.clone(),
                        None => sub(jac_new.row(i), jac_old.row(i)),
                    };
                    skipped |= !bfgs_update_primal_in_place(b, s, &y, opts.curvature_tol)?;
                }
                Ok(skipped)
            }
        }
    }

    fn into_final(self) -> FinalMetric {
        match self {
            MetricState::Shared { h, .. } => FinalMetric::Shared(h),
            MetricState::PerObjective(bs) => FinalMetric::PerObjective(bs),
        }
    }
}

/// Runs the method from `x0`.
pub fn run(p: &ProblemDef, x0: &[f64], opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    opts.validate()?;
    if x0.len() != p.n() {
        return Err(SolverError::DimensionMismatch {
            expected: p.n(),
            found: x0.len(),
        });
    }
    if !all_finite(x0) {
        return Err(SolverError::InfeasibleStart(EvalError::NonFinite));
    }
    let start = Instant::now();
    let max_inner = opts
        .dual_max_inner
        .unwrap_or_else(|| default_max_inner(p.m()));
    let mut counters = EvalCounters::default();
    let mut x = x0.to_vec();
    let mut jac = p
        .jacobian(&x, &mut counters)
        .map_err(SolverError::InfeasibleStart)?;
    let mut fx: Option<Vec<f64>> = None;
    let mut metric = MetricState::new(opts.metric, p.n(), p.m(), opts.diagnostics);
    let mut trace: Vec<IterateRecord> = Vec::new();
    let mut trial_evals = 0u64;

    let status = loop {
        let k = trace.len();
        let dual = metric.direction(&jac, opts.dual_tol, max_inner)?;
        let eig_bounds = metric.eig_bounds(opts.metric, opts.diagnostics)?;
        let metric_d = if opts.diagnostics {
            Some(metric.metric_times(opts.metric, dual.lambda.as_slice(), &dual.d)?)
        } else {
            None
        };
        trace.push(IterateRecord {
            k,
            x: x.clone(),
            theta: dual.theta,
            lambda: dual.lambda.clone(),
            norm_d: norm(&dual.d),
            d: dual.d.clone(),
            dual_gap: dual.gap,
            step: None,
            curvature_skipped: false,
            eig_bounds,
            metric_d,
        });

        if dual.theta.abs() <= opts.tol {
            break Status::Critical;
        }
        if k >= opts.max_iter {
            break Status::MaxIter;
        }

        let f0 = match fx.take() {
            Some(f) => f,
            None => p
                .evaluate(&x, &mut counters)
                .map_err(SolverError::InfeasibleStart)?,
        };
        let ls: LineSearchOutcome = match opts.linesearch {
            LineSearchKind::Vector => {
                let jd = jac.mul_vec(&dual.d)?;
                armijo_vector(p, &x, &f0, &dual.d, &jd, &opts.ls, &mut counters)?
            }
            LineSearchKind::Aggregated => armijo_aggregated(
                p,
                &x,
                &f0,
                &dual.d,
                &dual.lambda,
                dual.theta,
                &opts.ls,
                &mut counters,
            )?,
        };
        trial_evals += ls.trials as u64;
        let rec = trace.last_mut().expect("just pushed");
        rec.step = Some(StepRecord {
            alpha: ls.alpha,
            backtracks: ls.backtracks,
            trials: ls.trials,
        });
        if !ls.accepted {
            break Status::LineSearchFailure;
        }

        let x_new = ls.point;
        let jac_new = p.jacobian(&x_new, &mut counters)?;
        let s = sub(&x_new, &x);
        rec.curvature_skipped = metric.update(opts, &s, &jac, &jac_new, dual.lambda.as_slice())?;
        x = x_new;
        fx = ls.values;
        jac = jac_new;
    };

    let last = trace.last().expect("at least one record");
    let (theta_final, lambda_final) = (last.theta, last.lambda.clone());
    let iters = trace.len() - 1;
    Ok(SolveResult {
        status,
        x_final: x,
        theta_final,
        lambda_final,
        iters,
        counters,
        trial_evals,
        trace,
        wall_time: start.elapsed(),
        final_metric: opts.keep_final_metric.then(|| metric.into_final()),
    })
}

/// Limit-point estimate: the same run with `tol = 1e-14`.
pub fn reference_point(
    p: &ProblemDef,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<f64>, SolverError> {
    let tight = SolverOptions {
        tol: REFERENCE_TOL,
        diagnostics: false,
        keep_final_metric: false,
        ..*opts
    };
    Ok(run(p, x0, &tight)?.x_final)
}

/// `‖x_{k+1} − x_ref‖ / ‖x_k − x_ref‖` over consecutive trace iterates,
/// skipping denominators at or below `1e-14`.
pub fn superlinear_ratios(trace: &[IterateRecord], x_ref: &[f64]) -> Vec<f64> {
    let dist: Vec<f64> = trace.iter().map(|r| norm(&sub(&r.x, x_ref))).collect();
    dist.windows(2)
        .filter(|w| w[0] > 1e-14)
        .map(|w| w[1] / w[0])
        .collect()
}

/// `‖(B_k − Σ λ_i ∇²F_i(x_k)) d_k‖ / ‖d_k‖` for every record with `d_k ≠ 0`.
/// Needs a diagnostics-mode trace.
pub fn hessian_residual(p: &ProblemDef, trace: &[IterateRecord]) -> Result<Vec<f64>, SolverError> {
    let mut out = Vec::new();
    for rec in trace {
        if rec.norm_d == 0.0 {
            continue;
        }
        let Some(bd) = &rec.metric_d else {
            return Err(SolverError::InvalidOptions(
                "hessian_residual needs a trace recorded with diagnostics enabled".into(),
            ));
        };
        let hessians = p.hessians(&rec.x)?;
        let mut resid = bd.clone();
        for (w, h) in rec.lambda.as_slice().iter().zip(&hessians) {
            if *w == 0.0 {
                continue;
            }
            for (r, v) in resid.iter_mut().zip(h.mul_vec(&rec.d)?) {
                *r -= w * v;
            }
        }
        out.push(norm(&resid) / rec.norm_d);
    }
    Ok(out)
}

/// Run-level summary of the quantities the convergence theory assumes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionSummary {
    /// Smallest recorded `λ_min(B_k)`.
    pub eig_lo_min: Option<f64>,
    /// Largest recorded `λ_max(B_k)`.
    pub eig_hi_max: Option<f64>,
    pub curvature_skips: usize,
    /// Largest `‖λ^{k+1} − λ^k‖` over the last [`TAIL_WINDOW`] records.
    pub lambda_change_tail_max: f64,
    /// Largest `‖d_k‖` over the last [`TAIL_WINDOW`] records.
    pub norm_d_tail_max: f64,
    pub norm_d_final: f64,
}

pub fn assumption_diagnostics(trace: &[IterateRecord]) -> AssumptionSummary {
    let eig: Vec<(f64, f64)> = trace.iter().filter_map(|r| r.eig_bounds).collect();
    let tail = &trace[trace.len().saturating_sub(TAIL_WINDOW)..];
    let lambda_change_tail_max = trace[trace.len().saturating_sub(TAIL_WINDOW + 1)..]
        .windows(2)
        .map(|w| norm(&sub(w[1].lambda.as_slice(), w[0].lambda.as_slice())))
        .fold(0.0, f64::max);
    AssumptionSummary {
        eig_lo_min: eig.iter().map(|e| e.0).reduce(f64::min),
        eig_hi_max: eig.iter().map(|e| e.1).reduce(f64::max),
        curvature_skips: trace.iter().filter(|r| r.curvature_skipped).count(),
        lambda_change_tail_max,
        norm_d_tail_max: tail.iter().map(|r| r.norm_d).fold(0.0, f64::max),
        norm_d_final: trace.last().map_or(0.0, |r| r.norm_d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::get_problem;

    #[test]
    fn ex41_is_critical_at_start() {
        let p = get_problem("EX41").unwrap();
        for opts in [
            SolverOptions::vmm_bfgs(),
            SolverOptions::steepest_descent(),
            SolverOptions::qn_per_objective(),
        ] {
            let r = run(&p, &[-1.0, 2.0], &opts).unwrap();
            assert_eq!(r.status, Status::Critical);
            assert_eq!(r.iters, 0);
            assert_eq!(r.counters.f_calls, 0);
            assert_eq!(r.fevals(), 0);
        }
    }

    #[test]
    fn jos1_first_step_with_identity() {
        let p = get_problem("JOS1:2").unwrap();
        let r = run(&p, &[2.0, 0.0], &SolverOptions::steepest_descent()).unwrap();
        let first = &r.trace[0];
        assert!((first.d[0] + 1.0).abs() < 1e-12 && (first.d[1] - 1.0).abs() < 1e-12);
        assert!((first.theta + 1.0).abs() < 1e-12);
        // Hessian is I, so the unit step lands on (1, 1), which is critical.
        assert_eq!(first.step.unwrap().alpha, 1.0);
        assert_eq!(r.status, Status::Critical);
        assert_eq!(r.iters, 1);
    }

    #[test]
    fn status_and_theta_agree() {
        let p = get_problem("PNR").unwrap();
        let r = run(&p, &[1.5, -0.5], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Critical);
        assert!(r.theta_final.abs() <= DEFAULT_TOL);
        assert_eq!(r.trace.len(), r.iters + 1);
        assert!(r.trace.last().unwrap().step.is_none());
        assert_eq!(r.fevals(), r.counters.f_calls - 1);
    }

    #[test]
    fn max_iter_status() {
        let p = get_problem("JOS1a").unwrap();
        let x0 = vec![1.5; 100]
            .into_iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { v } else { -v })
            .collect::<Vec<_>>();
        let opts = SolverOptions {
            max_iter: 3,
            ..SolverOptions::steepest_descent()
        };
        let r = run(&p, &x0, &opts).unwrap();
        assert_eq!(r.status, Status::MaxIter);
        assert_eq!(r.iters, 3);
        assert!(r.theta_final.abs() > opts.tol);
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let p = get_problem("Deb").unwrap();
        let err = run(&p, &[-0.5, 0.5], &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::InfeasibleStart(_)));
        let err = run(&p, &[0.5], &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::DimensionMismatch { .. }));
    }

    #[test]
    fn invalid_options() {
        let p = get_problem("PNR").unwrap();
        let opts = SolverOptions {
            max_iter: 0,
            ..SolverOptions::default()
        };
        assert!(matches!(
            run(&p, &[0.0, 0.0], &opts),
            Err(SolverError::InvalidOptions(_))
        ));
    }

    #[test]
    fn identity_diagnostics_report_unit_spectrum() {
        let p = get_problem("EX51").unwrap();
        let opts = SolverOptions {
            diagnostics: true,
            max_iter: 20,
            ..SolverOptions::steepest_descent()
        };
        let r = run(&p, &[0.2, 1.7], &opts).unwrap();
        let summary = assumption_diagnostics(&r.trace);
        assert_eq!(summary.eig_lo_min, Some(1.0));
        assert_eq!(summary.eig_hi_max, Some(1.0));
        assert!(r.trace.iter().all(|rec| rec.eig_bounds == Some((1.0, 1.0))));
    }

    #[test]
    fn hessian_residual_identity_on_ex51() {
        let p = get_problem("EX51").unwrap();
        let opts = SolverOptions {
            diagnostics: true,
            max_iter: 10,
            ..SolverOptions::steepest_descent()
        };
        let r = run(&p, &[0.2, 1.7], &opts).unwrap();
        let rho = hessian_residual(&p, &r.trace).unwrap();
        assert!(!rho.is_empty());
        // Σλ∇²f_i = (0.02 λ1 + 2 λ2) I, so ρ_k = |1 − 0.02 λ1 − 2 λ2|.
        for (rec, rho) in r.trace.iter().filter(|r| r.norm_d > 0.0).zip(&rho) {
            let l = rec.lambda.as_slice();
            let expected = (1.0 - 0.02 * l[0] - 2.0 * l[1]).abs();
            assert!((rho - expected).abs() < 1e-12);
        }
        assert!(rho.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn hessian_residual_requires_diagnostics() {
        let p = get_problem("EX51").unwrap();
        let r = run(&p, &[0.2, 1.7], &SolverOptions::default()).unwrap();
        assert!(hessian_residual(&p, &r.trace).is_err());
    }

    #[test]
    fn superlinear_ratio_edge_cases() {
        assert!(superlinear_ratios(&[], &[0.0]).is_empty());
        let p = get_problem("JOS1:2").unwrap();
        let r = run(&p, &[2.0, 0.0], &SolverOptions::steepest_descent()).unwrap();
        // One step straight onto the limit point: a single ratio of 0.
        let ratios = superlinear_ratios(&r.trace, &r.x_final);
        assert_eq!(ratios, vec![0.0]);
    }

    #[test]
    fn str_enums_round_trip() {
        for m in [
            MetricKind::Identity,
            MetricKind::BfgsShared,
            MetricKind::BfgsPerObjective,
        ] {
            assert_eq!(m.as_str().parse::<MetricKind>().unwrap(), m);
        }
        assert_eq!(
            "aggregated".parse::<LineSearchKind>().unwrap(),
            LineSearchKind::Aggregated
        );
        assert!("bogus".parse::<LineSearchKind>().is_err());
        assert_eq!(Status::LineSearchFailure.to_string(), "linesearch_failure");
    }
}
