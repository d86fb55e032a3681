//! C ABI over the `vmetric` solver.
//!
//! Problems and results are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`VmErrorCode`]; the
//! message of the most recent failure on the calling thread is available
//! from [`vm_last_error_message`]. Vectors are caller-allocated buffers
//! passed with their length, and Jacobians are row-major `m × n`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vmetric::bench::start_point;
use vmetric::dual::{default_max_inner, solve_subproblem, DEFAULT_DUAL_TOL};
use vmetric::linalg::{InverseMetric, Matrix, SymMatrix};
use vmetric::linesearch::LineSearchParams;
use vmetric::problems::{get_problem, EvalCounters, ProblemDef};
use vmetric::solver::{run, LineSearchKind, MetricKind, SolveResult, SolverOptions, Status};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmErrorCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownProblem = 3,
    DimensionMismatch = 4,
    Evaluation = 5,
    Solver = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmMetric {
    Identity = 0,
    Bfgs = 1,
    QnPerObjective = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmLineSearch {
    Vector = 0,
    Aggregated = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmSolveStatus {
    Critical = 0,
    MaxIter = 1,
    LineSearchFailure = 2,
}

/// Solver settings. Start from [`vm_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmOptions {
    pub metric: VmMetric,
    pub linesearch: VmLineSearch,
    pub sigma: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

/// Opaque problem handle.
pub struct VmProblem(ProblemDef);

/// Opaque result handle.
pub struct VmResult(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(VmErrorCode, String);

type FfiResult = Result<(), Failure>;

fn fail<T>(code: VmErrorCode, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(code, msg.into()))
}

fn guard(f: impl FnOnce() -> FfiResult) -> VmErrorCode {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VmErrorCode::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            VmErrorCode::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return fail(VmErrorCode::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return fail(VmErrorCode::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn problem<'a>(p: *const VmProblem) -> Result<&'a ProblemDef, Failure> {
    match p.as_ref() {
        Some(p) => Ok(&p.0),
        None => fail(VmErrorCode::NullPointer, "problem handle is null"),
    }
}

unsafe fn result<'a>(r: *const VmResult) -> Result<&'a SolveResult, Failure> {
    match r.as_ref() {
        Some(r) => Ok(&r.0),
        None => fail(VmErrorCode::NullPointer, "result handle is null"),
    }
}

fn expect_len(found: usize, expected: usize, what: &str) -> FfiResult {
    if found != expected {
        return fail(
            VmErrorCode::DimensionMismatch,
            format!("{what}: expected length {expected}, got {found}"),
        );
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn vm_options_default() -> VmOptions {
    let o = SolverOptions::vmm_bfgs();
    VmOptions {
        metric: VmMetric::Bfgs,
        linesearch: VmLineSearch::Aggregated,
        sigma: o.ls.sigma,
        gamma: o.ls.gamma,
        tol: o.tol,
        max_iter: o.max_iter,
        max_backtracks: o.ls.max_backtracks,
    }
}

fn to_solver_options(o: &VmOptions) -> Result<SolverOptions, Failure> {
    let ls = LineSearchParams::new(o.sigma, o.gamma, o.max_backtracks)
        .or_else(|e| fail(VmErrorCode::InvalidArgument, e.to_string()))?;
    let opts = SolverOptions {
        metric: match o.metric {
            VmMetric::Identity => MetricKind::Identity,
            VmMetric::Bfgs => MetricKind::BfgsShared,
            VmMetric::QnPerObjective => MetricKind::BfgsPerObjective,
        },
        linesearch: match o.linesearch {
            VmLineSearch::Vector => LineSearchKind::Vector,
            VmLineSearch::Aggregated => LineSearchKind::Aggregated,
        },
        tol: o.tol,
        max_iter: o.max_iter,
        ls,
        ..SolverOptions::default()
    };
    opts.validate()
        .or_else(|e| fail(VmErrorCode::InvalidArgument, e.to_string()))?;
    Ok(opts)
}

/// Looks up a corpus problem by name (e.g. `"JOS1a"`, `"WIT3"`, `"JOS1:50"`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vm_problem_new(
    name: *const c_char,
    out: *mut *mut VmProblem,
) -> VmErrorCode {
    guard(|| {
        if name.is_null() || out.is_null() {
            return fail(VmErrorCode::NullPointer, "name or out is null");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(VmErrorCode::InvalidArgument, "name is not UTF-8");
        };
        let p = get_problem(name).or_else(|e| fail(VmErrorCode::UnknownProblem, e.to_string()))?;
        *out = Box::into_raw(Box::new(VmProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`vm_problem_new`] and not be used afterwards. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn vm_problem_free(p: *mut VmProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live problem handle; `n` and `m` writable.
#[no_mangle]
pub unsafe extern "C" fn vm_problem_dims(
    p: *const VmProblem,
    n: *mut usize,
    m: *mut usize,
) -> VmErrorCode {
    guard(|| {
        let p = problem(p)?;
        if n.is_null() || m.is_null() {
            return fail(VmErrorCode::NullPointer, "n or m is null");
        }
        *n = p.n();
        *m = p.m();
        Ok(())
    })
}

/// Writes `F(x)` into `f` (length `m`).
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn vm_problem_evaluate(
    p: *const VmProblem,
    x: *const f64,
    n: usize,
    f: *mut f64,
    m: usize,
) -> VmErrorCode {
    guard(|| {
        let p = problem(p)?;
        expect_len(n, p.n(), "x")?;
        expect_len(m, p.m(), "f")?;
        let (x, f) = (slice(x, n, "x")?, slice_mut(f, m, "f")?);
        let v = p
            .evaluate(x, &mut EvalCounters::default())
            .or_else(|e| fail(VmErrorCode::Evaluation, e.to_string()))?;
        f.copy_from_slice(&v);
        Ok(())
    })
}

/// Writes the row-major Jacobian into `jac` (length `m * n`).
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn vm_problem_jacobian(
    p: *const VmProblem,
    x: *const f64,
    n: usize,
    jac: *mut f64,
    len: usize,
) -> VmErrorCode {
    guard(|| {
        let p = problem(p)?;
        expect_len(n, p.n(), "x")?;
        expect_len(len, p.n() * p.m(), "jac")?;
        let (x, out) = (slice(x, n, "x")?, slice_mut(jac, len, "jac")?);
        let j = p
            .jacobian(x, &mut EvalCounters::default())
            .or_else(|e| fail(VmErrorCode::Evaluation, e.to_string()))?;
        out.copy_from_slice(j.as_slice());
        Ok(())
    })
}

/// Draws a seeded starting point from the problem's box, the same one the
/// benchmark harness uses for that seed.
///
/// # Safety
/// `x` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn vm_problem_sample_start(
    p: *const VmProblem,
    seed: u64,
    x: *mut f64,
    n: usize,
) -> VmErrorCode {
    guard(|| {
        let p = problem(p)?;
        expect_len(n, p.n(), "x")?;
        let x = slice_mut(x, n, "x")?;
        x.copy_from_slice(&start_point(p, seed, 0));
        Ok(())
    })
}

/// Solves from `x0`. `opts` may be NULL for the defaults. On success `*out`
/// receives a result handle to release with [`vm_result_free`].
///
/// # Safety
/// `x0` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vm_solve(
    p: *const VmProblem,
    x0: *const f64,
    n: usize,
    opts: *const VmOptions,
    out: *mut *mut VmResult,
) -> VmErrorCode {
    guard(|| {
        let p = problem(p)?;
        if out.is_null() {
            return fail(VmErrorCode::NullPointer, "out is null");
        }
        expect_len(n, p.n(), "x0")?;
        let x0 = slice(x0, n, "x0")?;
        let opts = to_solver_options(opts.as_ref().unwrap_or(&vm_options_default()))?;
        let r = run(p, x0, &opts).or_else(|e| fail(VmErrorCode::Solver, e.to_string()))?;
        *out = Box::into_raw(Box::new(VmResult(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must come from [`vm_solve`] and not be used afterwards. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn vm_result_free(r: *mut VmResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live result handle and `status` writable.
#[no_mangle]
pub unsafe extern "C" fn vm_result_status(
    r: *const VmResult,
    status: *mut VmSolveStatus,
) -> VmErrorCode {
    guard(|| {
        let r = result(r)?;
        if status.is_null() {
            return fail(VmErrorCode::NullPointer, "status is null");
        }
        *status = match r.status {
            Status::Critical => VmSolveStatus::Critical,
            Status::MaxIter => VmSolveStatus::MaxIter,
            Status::LineSearchFailure => VmSolveStatus::LineSearchFailure,
        };
        Ok(())
    })
}

/// Iterations taken, or `usize::MAX` for a NULL handle.
///
/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn vm_result_iterations(r: *const VmResult) -> usize {
    r.as_ref().map_or(usize::MAX, |r| r.0.iters)
}

/// Line-search objective evaluations, or `u64::MAX` for a NULL handle.
///
/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn vm_result_fevals(r: *const VmResult) -> u64 {
    r.as_ref().map_or(u64::MAX, |r| r.0.fevals())
}

/// Final criticality value, or NaN for a NULL handle.
///
/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn vm_result_theta(r: *const VmResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.theta_final)
}

/// # Safety
/// `x` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn vm_result_x_final(
    r: *const VmResult,
    x: *mut f64,
    n: usize,
) -> VmErrorCode {
    guard(|| {
        let r = result(r)?;
        expect_len(n, r.x_final.len(), "x")?;
        slice_mut(x, n, "x")?.copy_from_slice(&r.x_final);
        Ok(())
    })
}

/// # Safety
/// `lambda` must hold `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn vm_result_lambda(
    r: *const VmResult,
    lambda: *mut f64,
    m: usize,
) -> VmErrorCode {
    guard(|| {
        let r = result(r)?;
        let l = r.lambda_final.as_slice();
        expect_len(m, l.len(), "lambda")?;
        slice_mut(lambda, m, "lambda")?.copy_from_slice(l);
        Ok(())
    })
}

/// Direction-finding subproblem for a row-major Jacobian `jac` (`m × n`)
/// under the inverse metric `h` (row-major `n × n`, NULL for the identity).
/// Writes the multipliers, the direction and `θ`.
///
/// # Safety
/// All buffers must hold the stated number of doubles; `theta` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn vm_subproblem(
    jac: *const f64,
    m: usize,
    n: usize,
    h: *const f64,
    lambda: *mut f64,
    d: *mut f64,
    theta: *mut f64,
) -> VmErrorCode {
    guard(|| {
        if m == 0 || n == 0 {
            return fail(VmErrorCode::InvalidArgument, "m and n must be positive");
        }
        if theta.is_null() {
            return fail(VmErrorCode::NullPointer, "theta is null");
        }
        let jac = Matrix::from_row_major(m, n, slice(jac, m * n, "jac")?.to_vec())
            .or_else(|e| fail(VmErrorCode::InvalidArgument, e.to_string()))?;
        let metric = if h.is_null() {
            InverseMetric::identity(n)
        } else {
            let h = slice(h, n * n, "h")?;
            let rows: Vec<Vec<f64>> = h.chunks(n).map(<[f64]>::to_vec).collect();
            let sym = SymMatrix::from_rows(&rows)
                .or_else(|e| fail(VmErrorCode::InvalidArgument, e.to_string()))?;
            InverseMetric::from_sym(sym)
        };
        let r = solve_subproblem(&jac, &metric, DEFAULT_DUAL_TOL, default_max_inner(m))
            .or_else(|e| fail(VmErrorCode::Solver, e.to_string()))?;
        slice_mut(lambda, m, "lambda")?.copy_from_slice(r.lambda.as_slice());
        slice_mut(d, n, "d")?.copy_from_slice(&r.d);
        *theta = r.theta;
        Ok(())
    })
}
