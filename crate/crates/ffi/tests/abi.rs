use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use vmetric_ffi::*;

fn new_problem(name: &str) -> *mut VmProblem {
    let name = CString::new(name).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { vm_problem_new(name.as_ptr(), &mut p) },
        VmErrorCode::Ok
    );
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let msg = vm_last_error_message();
    assert!(!msg.is_null());
    unsafe { CStr::from_ptr(msg) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn problem_handle_round_trip() {
    let p = new_problem("EX51");
    let (mut n, mut m) = (0, 0);
    unsafe {
        assert_eq!(vm_problem_dims(p, &mut n, &mut m), VmErrorCode::Ok);
        assert_eq!((n, m), (2, 2));
        let x = [1.0, 1.0];
        let mut f = [0.0; 2];
        assert_eq!(
            vm_problem_evaluate(p, x.as_ptr(), 2, f.as_mut_ptr(), 2),
            VmErrorCode::Ok
        );
        assert_eq!(f, [0.02, 2.0]);
        let mut j = [0.0; 4];
        assert_eq!(
            vm_problem_jacobian(p, x.as_ptr(), 2, j.as_mut_ptr(), 4),
            VmErrorCode::Ok
        );
        assert_eq!(j, [0.02, 0.02, -2.0, -2.0]);
        let mut f3 = [0.0; 3];
        assert_eq!(
            vm_problem_evaluate(p, x.as_ptr(), 2, f3.as_mut_ptr(), 3),
            VmErrorCode::DimensionMismatch
        );
        vm_problem_free(p);
    }
}

#[test]
fn solve_through_the_abi() {
    let p = new_problem("EX41");
    let x0 = [-1.0, 2.0];
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(
            vm_solve(p, x0.as_ptr(), 2, ptr::null(), &mut r),
            VmErrorCode::Ok
        );
        let mut status = VmSolveStatus::MaxIter;
        assert_eq!(vm_result_status(r, &mut status), VmErrorCode::Ok);
        assert_eq!(status, VmSolveStatus::Critical);
        assert_eq!(vm_result_iterations(r), 0);
        assert_eq!(vm_result_fevals(r), 0);
        assert!(vm_result_theta(r).abs() <= 1e-8);
        let mut lambda = [0.0; 2];
        assert_eq!(vm_result_lambda(r, lambda.as_mut_ptr(), 2), VmErrorCode::Ok);
        assert!((lambda[0] - 0.5).abs() < 1e-6);
        let mut x = [0.0; 2];
        assert_eq!(vm_result_x_final(r, x.as_mut_ptr(), 2), VmErrorCode::Ok);
        assert_eq!(x, x0);
        vm_result_free(r);
        vm_problem_free(p);
    }
}

#[test]
fn options_select_the_baseline() {
    let p = new_problem("JOS1:4");
    let mut x0 = [0.0; 4];
    unsafe {
        assert_eq!(
            vm_problem_sample_start(p, 3, x0.as_mut_ptr(), 4),
            VmErrorCode::Ok
        );
        let mut opts = vm_options_default();
        let mut fast = ptr::null_mut();
        assert_eq!(
            vm_solve(p, x0.as_ptr(), 4, &opts, &mut fast),
            VmErrorCode::Ok
        );
        opts.metric = VmMetric::Identity;
        opts.linesearch = VmLineSearch::Vector;
        let mut slow = ptr::null_mut();
        assert_eq!(
            vm_solve(p, x0.as_ptr(), 4, &opts, &mut slow),
            VmErrorCode::Ok
        );
        assert!(vm_result_iterations(slow) >= vm_result_iterations(fast));
        opts.sigma = 2.0;
        let mut bad = ptr::null_mut();
        assert_eq!(
            vm_solve(p, x0.as_ptr(), 4, &opts, &mut bad),
            VmErrorCode::InvalidArgument
        );
        assert!(bad.is_null());
        assert!(!last_error().is_empty());
        vm_result_free(fast);
        vm_result_free(slow);
        vm_problem_free(p);
    }
}

#[test]
fn errors_are_reported() {
    let name = CString::new("NOPE").unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            vm_problem_new(name.as_ptr(), &mut p),
            VmErrorCode::UnknownProblem
        );
        assert!(last_error().contains("NOPE"));
        assert_eq!(
            vm_problem_new(ptr::null(), &mut p),
            VmErrorCode::NullPointer
        );
        assert_eq!(vm_result_iterations(ptr::null()), usize::MAX);
        assert!(vm_result_theta(ptr::null()).is_nan());
        vm_problem_free(ptr::null_mut());
        vm_result_free(ptr::null_mut());
    }
    let deb = new_problem("Deb");
    let x = [-0.5, 0.5];
    let mut f = [0.0; 2];
    unsafe {
        assert_eq!(
            vm_problem_evaluate(deb, x.as_ptr(), 2, f.as_mut_ptr(), 2),
            VmErrorCode::Evaluation
        );
        vm_problem_free(deb);
    }
}

#[test]
fn subproblem_matches_two_gradient_case() {
    // ∇F₁ = (1, 0), ∇F₂ = (0, 1) under H = I: λ = (½, ½), d = −(½, ½), θ = −¼.
    let jac = [1.0, 0.0, 0.0, 1.0];
    let (mut lambda, mut d, mut theta) = ([0.0; 2], [0.0; 2], 0.0);
    let code = unsafe {
        vm_subproblem(
            jac.as_ptr(),
            2,
            2,
            ptr::null(),
            lambda.as_mut_ptr(),
            d.as_mut_ptr(),
            &mut theta,
        )
    };
    assert_eq!(code, VmErrorCode::Ok);
    assert!((lambda[0] - 0.5).abs() < 1e-12 && (d[1] + 0.5).abs() < 1e-12);
    assert!((theta + 0.25).abs() < 1e-12);

    let h = [2.0, 0.0, 0.0, 2.0];
    let code = unsafe {
        vm_subproblem(
            jac.as_ptr(),
            2,
            2,
            h.as_ptr(),
            lambda.as_mut_ptr(),
            d.as_mut_ptr(),
            &mut theta,
        )
    };
    assert_eq!(code, VmErrorCode::Ok);
    assert!((theta + 0.5).abs() < 1e-12);
    let asym = [1.0, 0.5, 0.0, 1.0];
    let code = unsafe {
        vm_subproblem(
            jac.as_ptr(),
            2,
            2,
            asym.as_ptr(),
            lambda.as_mut_ptr(),
            d.as_mut_ptr(),
            &mut theta,
        )
    };
    assert_eq!(code, VmErrorCode::InvalidArgument);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(vm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vmetric.h")).unwrap()
}

#[test]
fn header_declares_the_abi() {
    let h = header();
    for name in [
        "vm_version",
        "vm_last_error_message",
        "vm_options_default",
        "vm_problem_new",
        "vm_problem_free",
        "vm_problem_dims",
        "vm_problem_evaluate",
        "vm_problem_jacobian",
        "vm_problem_sample_start",
        "vm_solve",
        "vm_result_free",
        "vm_result_status",
        "vm_result_iterations",
        "vm_result_fevals",
        "vm_result_theta",
        "vm_result_x_final",
        "vm_result_lambda",
        "vm_subproblem",
        "typedef struct VmProblem VmProblem",
        "VM_ERROR_CODE_OK = 0",
        "VM_SOLVE_STATUS_CRITICAL = 0",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vmetric.h"))
        .output()
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
