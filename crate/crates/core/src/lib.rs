//! Variable metric method for unconstrained multiobjective optimization.
//!
//! A single BFGS matrix is shared by all objectives; the direction comes
//! from a dual problem over the unit simplex solved by Frank-Wolfe, and the
//! step from an aggregated (multiplier-weighted) Armijo rule. Steepest
//! descent and a per-objective quasi-Newton method are provided as
//! baselines, together with a test-problem corpus and a seeded benchmark
//! harness.
//!
//! ```
//! use vmetric::{problems::get_problem, solver::{run, SolverOptions, Status}};
//!
//! let p = get_problem("EX51").unwrap();
//! let r = run(&p, &[0.5, 1.8], &SolverOptions::vmm_bfgs()).unwrap();
//! assert_eq!(r.status, Status::Critical);
//! ```

// NaN-rejecting `!(x > 0.0)` checks and index loops are deliberate in the
// numeric kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod dual;
pub mod linalg;
pub mod linesearch;
pub mod problems;
pub mod solver;
