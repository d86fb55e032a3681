use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmetric::bench::start_point;
use vmetric::dual::{solve_subproblem, SimplexPoint, DEFAULT_DUAL_TOL};
use vmetric::linalg::{dot, norm, sub, InverseMetric, Matrix};
use vmetric::linesearch::{armijo_aggregated, armijo_vector, LineSearchParams};
use vmetric::problems::{get_problem, EvalCounters, EvalError, Objectives, ProblemDef};
use vmetric::solver::{run, LineSearchKind, SecantRule, SolverOptions, Status};

/// `f(x) = Σ a_k x_k² + b_k x_k` with `a_k > 0`.
#[derive(Debug)]
struct Quadratic {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Objectives for Quadratic {
    fn n(&self) -> usize {
        self.a.len()
    }
    fn m(&self) -> usize {
        1
    }
    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(vec![x
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(x, (a, b))| a * x * x + b * x)
            .sum()])
    }
    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        let row = x
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(x, (a, b))| 2.0 * a * x + b)
            .collect();
        Ok(Matrix::from_rows(&[row]).unwrap())
    }
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> (ProblemDef, Vec<f64>, Vec<f64>) {
    let n = rng.random_range(1..=4);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    // A descent direction that is not the exact gradient.
    let g: Vec<f64> = x
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(x, (a, b))| 2.0 * a * x + b)
        .collect();
    let d: Vec<f64> = g
        .iter()
        .map(|gk| -gk * rng.random_range(0.2..3.0))
        .collect();
    let p = ProblemDef::new(
        "quad",
        vec![-10.0; n],
        vec![10.0; n],
        Arc::new(Quadratic { a, b }),
    )
    .unwrap();
    (p, x, d)
}

#[test]
fn single_objective_searches_agree_when_thresholds_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = LineSearchParams::default();
    let lambda = SimplexPoint::uniform(1);
    let (mut looser, mut checked) = (0, 0);
    while checked < 500 {
        let (p, x, d) = random_quadratic(&mut rng);
        let mut c = EvalCounters::default();
        let fx = p.evaluate(&x, &mut c).unwrap();
        let jd = p.jacobian(&x, &mut c).unwrap().mul_vec(&d).unwrap();
        if jd[0] >= -1e-9 {
            continue;
        }
        checked += 1;
        let vector = armijo_vector(&p, &x, &fx, &d, &jd, &params, &mut c).unwrap();
        let same = armijo_aggregated(&p, &x, &fx, &d, &lambda, jd[0], &params, &mut c).unwrap();
        assert_eq!(vector.alpha, same.alpha);
        assert_eq!(vector.trials, same.trials);
        // With θ = ½ dᵀ∇f the aggregated threshold is half as strict, so its
        // step is never shorter.
        let half =
            armijo_aggregated(&p, &x, &fx, &d, &lambda, 0.5 * jd[0], &params, &mut c).unwrap();
        assert!(half.alpha >= vector.alpha);
        looser += usize::from(half.alpha > vector.alpha);
    }
    assert!(looser < checked);
}

fn corpus_runs(
    opts: &SolverOptions,
    runs: usize,
) -> Vec<(ProblemDef, vmetric::solver::SolveResult)> {
    let mut out = Vec::new();
    for name in [
        "Deb", "PNR", "WIT0", "WIT2", "WIT5", "EX41", "EX51", "JOS1:10",
    ] {
        for r in 0..runs {
            let p = get_problem(name).unwrap();
            let x0 = start_point(&p, 3, r);
            let res = run(&p, &x0, opts).unwrap();
            out.push((p, res));
        }
    }
    out
}

#[test]
fn aggregated_merit_decreases_at_every_step() {
    for (p, res) in corpus_runs(&SolverOptions::vmm_bfgs(), 10) {
        let mut c = EvalCounters::default();
        for w in res.trace.windows(2) {
            let lam = w[0].lambda.as_slice();
            let before = dot(lam, &p.evaluate(&w[0].x, &mut c).unwrap());
            let after = dot(lam, &p.evaluate(&w[1].x, &mut c).unwrap());
            let step = w[0].step.unwrap();
            assert!(
                after - before <= 0.1 * step.alpha * w[0].theta,
                "{} k={}: merit change {:e}",
                p.name(),
                w[0].k,
                after - before
            );
        }
    }
}

#[test]
fn vector_search_is_componentwise_monotone() {
    for (p, res) in corpus_runs(&SolverOptions::steepest_descent(), 5) {
        let mut c = EvalCounters::default();
        for w in res.trace.windows(2) {
            let f0 = p.evaluate(&w[0].x, &mut c).unwrap();
            let f1 = p.evaluate(&w[1].x, &mut c).unwrap();
            for (a, b) in f1.iter().zip(&f0) {
                assert!(a <= b, "{} k={}: {a} > {b}", p.name(), w[0].k);
            }
        }
    }
}

#[test]
fn identity_direction_matches_two_gradient_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let g1: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g2: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let jac = Matrix::from_rows(&[g1.clone(), g2.clone()]).unwrap();
        let r = solve_subproblem(&jac, &InverseMetric::identity(n), DEFAULT_DUAL_TOL, 500).unwrap();
        // Minimum-norm point of the segment [g1, g2].
        let diff = sub(&g1, &g2);
        let dd = dot(&diff, &diff);
        let l = if dd > 0.0 {
            (-dot(&g2, &diff) / dd).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let d: Vec<f64> = g1
            .iter()
            .zip(&g2)
            .map(|(a, b)| -(l * a + (1.0 - l) * b))
            .collect();
        assert!(
            norm(&sub(&r.d, &d)) <= 1e-8 * (1.0 + norm(&d)),
            "{:?} vs {d:?}",
            r.d
        );
        assert!((r.theta + 0.5 * dot(&d, &d)).abs() <= 1e-10 * (1.0 + dot(&d, &d)));
    }
}

#[test]
fn per_objective_metric_with_shared_secant_tracks_shared_metric() {
    let shared = SolverOptions::vmm_bfgs();
    let per_objective = SolverOptions {
        secant: SecantRule::Aggregated,
        linesearch: LineSearchKind::Aggregated,
        ..SolverOptions::qn_per_objective()
    };
    for name in ["PNR", "WIT3", "EX51", "JOS1:6"] {
        let p = get_problem(name).unwrap();
        for r in 0..5 {
            let x0 = start_point(&p, 4, r);
            let a = run(&p, &x0, &shared).unwrap();
            let b = run(&p, &x0, &per_objective).unwrap();
            assert_eq!(a.iters, b.iters, "{name}#{r}");
            for (ra, rb) in a.trace.iter().zip(&b.trace) {
                let gap = norm(&sub(&ra.x, &rb.x));
                assert!(
                    gap <= 1e-8 * (1.0 + norm(&ra.x)),
                    "{name}#{r} k={}: {gap:e}",
                    ra.k
                );
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let p = get_problem("WIT4").unwrap();
    let x0 = start_point(&p, 9, 0);
    for opts in [
        SolverOptions::vmm_bfgs(),
        SolverOptions::steepest_descent(),
        SolverOptions::qn_per_objective(),
    ] {
        let a = run(&p, &x0, &opts).unwrap();
        let b = run(&p, &x0, &opts).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.x_final, b.x_final);
        assert_eq!(a.fevals(), b.fevals());
    }
}

#[test]
fn vmm_beats_steepest_descent_on_convex_quadratics() {
    let p = get_problem("JOS1:20").unwrap();
    for r in 0..10 {
        let x0 = start_point(&p, 5, r);
        let vmm = run(&p, &x0, &SolverOptions::vmm_bfgs()).unwrap();
        let sd = run(&p, &x0, &SolverOptions::steepest_descent()).unwrap();
        assert_eq!(vmm.status, Status::Critical);
        assert!(vmm.iters <= sd.iters);
    }
}
