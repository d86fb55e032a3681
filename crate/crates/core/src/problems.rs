//! Test-problem corpus with analytic Jacobians and Hessians.
//!
//! The boxes attached to each problem are start-sampling regions only:
//! iterates are never projected back into them.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::Rng;
use thiserror::Error;

use crate::linalg::{all_finite, norm_inf, Matrix, SymMatrix};

/// Problems used in the iteration/evaluation comparison table, in table order.
pub const TABLE2: [&str; 17] = [
    "Deb", "JOS1a", "JOS1b", "JOS1c", "JOS1d", "JOS1e", "JOS1f", "JOS1g", "JOS1h", "PNR", "WIT0",
    "WIT1", "WIT2", "WIT3", "WIT4", "WIT5", "WIT6",
];

/// The two worked examples (a critical point of a nonconvex pair, and the
/// unit-step counterexample).
pub const EXAMPLES: [&str; 2] = ["EX41", "EX51"];

/// WIT1..WIT6 parameter values.
pub const WIT_PARAMS: [f64; 6] = [0.0, 0.5, 0.9, 0.99, 0.999, 1.0];

/// Smallest admissible first coordinate for Deb.
pub const DEB_X1_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("expected a point of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("infeasible evaluation: {0}")]
    Infeasible(String),
    #[error("objective produced a non-finite value")]
    NonFinite,
}

impl EvalError {
    /// True for evaluation failures a line search should treat as a
    /// rejected trial rather than a hard error.
    pub fn is_rejection(&self) -> bool {
        matches!(self, EvalError::Infeasible(_) | EvalError::NonFinite)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem {0:?}")]
    Unknown(String),
    #[error("invalid problem definition: {0}")]
    Invalid(String),
    #[error("problem {0} provides no analytic Hessians")]
    NoHessians(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// An objective vector `F: ℝⁿ → ℝᵐ` with first and (optionally) second
/// derivatives.
pub trait Objectives: Send + Sync + fmt::Debug {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError>;
    /// Row `i` is `∇F_i(x)ᵀ`.
    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError>;
    fn hessians(&self, _x: &[f64]) -> Option<Vec<SymMatrix>> {
        None
    }
}

/// Per-run evaluation counts. One `f_calls` increment is one full objective
/// vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub f_calls: u64,
    pub jac_calls: u64,
}

impl EvalCounters {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// A named multiobjective instance with its start-sampling box.
#[derive(Debug, Clone)]
pub struct ProblemDef {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objectives: Arc<dyn Objectives>,
}

impl ProblemDef {
    pub fn new(
        name: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        objectives: Arc<dyn Objectives>,
    ) -> Result<Self, ProblemError> {
        let name = name.into();
        let n = objectives.n();
        if lower.len() != n || upper.len() != n {
            return Err(ProblemError::Invalid(format!(
                "{name}: box dimension does not match n = {n}"
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(ProblemError::Invalid(format!(
                "{name}: lower bound must be below upper bound"
            )));
        }
        if objectives.m() == 0 {
            return Err(ProblemError::Invalid(format!("{name}: no objectives")));
        }
        Ok(Self {
            name,
            lower,
            upper,
            objectives,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.objectives.n()
    }

    pub fn m(&self) -> usize {
        self.objectives.m()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.n() {
            return Err(EvalError::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `F(x)`, counted as one objective-vector evaluation.
    pub fn evaluate(&self, x: &[f64], counters: &mut EvalCounters) -> Result<Vec<f64>, EvalError> {
        self.check_dim(x)?;
        counters.f_calls += 1;
        let f = self.objectives.values(x)?;
        if !all_finite(&f) {
            return Err(EvalError::NonFinite);
        }
        Ok(f)
    }

    /// `JF(x)`, counted as one Jacobian evaluation.
    pub fn jacobian(&self, x: &[f64], counters: &mut EvalCounters) -> Result<Matrix, EvalError> {
        self.check_dim(x)?;
        counters.jac_calls += 1;
        let j = self.objectives.jacobian(x)?;
        if !j.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(j)
    }

    pub fn hessians(&self, x: &[f64]) -> Result<Vec<SymMatrix>, ProblemError> {
        self.check_dim(x)?;
        self.objectives
            .hessians(x)
            .ok_or_else(|| ProblemError::NoHessians(self.name.clone()))
    }

    /// Maximum relative error between analytic Jacobian rows and central
    /// differences with step `h`. Each row error is
    /// `‖a − fd‖∞ / max(1, ‖a‖∞)`. Returns `+∞` if any evaluation fails.
    pub fn fd_check(&self, x: &[f64], h: f64) -> f64 {
        let Ok(jac) = self.objectives.jacobian(x) else {
            return f64::INFINITY;
        };
        let (n, m) = (self.n(), self.m());
        let mut fd = Matrix::zeros(m, n);
        let mut xp = x.to_vec();
        for k in 0..n {
            xp[k] = x[k] + h;
            let fp = self.objectives.values(&xp);
            xp[k] = x[k] - h;
            let fm = self.objectives.values(&xp);
            xp[k] = x[k];
            let (Ok(fp), Ok(fm)) = (fp, fm) else {
                return f64::INFINITY;
            };
            for i in 0..m {
                fd.set(i, k, (fp[i] - fm[i]) / (2.0 * h));
            }
        }
        (0..m)
            .map(|i| {
                let a = jac.row(i);
                let diff: Vec<f64> = a.iter().zip(fd.row(i)).map(|(p, q)| p - q).collect();
                norm_inf(&diff) / norm_inf(a).max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Uniform draw from the open box `(lower, upper)`.
    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                let t: f64 = rng.sample(Open01);
                let v = l + t * (u - l);
                // Guard against rounding onto a bound when the box is tiny.
                if v > l && v < u {
                    v
                } else {
                    0.5 * (l + u)
                }
            })
            .collect()
    }
}

/// Looks up a corpus problem by name.
///
/// Besides the named corpus, `JOS1:<n>` builds a JOS1 instance of any
/// dimension on the box `[-2, 2]ⁿ`.
pub fn get_problem(name: &str) -> Result<ProblemDef, ProblemError> {
    let boxed = |n: usize, half: f64, obj: Arc<dyn Objectives>| {
        ProblemDef::new(name, vec![-half; n], vec![half; n], obj)
    };
    let jos = |n: usize, half: f64| boxed(n, half, Arc::new(Jos1 { n }));
    match name {
        "Deb" => ProblemDef::new(name, vec![0.1, 0.1], vec![1.0, 1.0], Arc::new(Deb)),
        "JOS1a" => jos(100, 2.0),
        "JOS1b" => jos(200, 2.0),
        "JOS1c" => jos(500, 2.0),
        "JOS1d" => jos(1000, 2.0),
        "JOS1e" => jos(100, 10.0),
        "JOS1f" => jos(100, 50.0),
        "JOS1g" => jos(100, 100.0),
        "JOS1h" => jos(200, 100.0),
        "PNR" => boxed(2, 2.0, Arc::new(Pnr)),
        "WIT0" => boxed(2, 2.0, Arc::new(Wit0)),
        "EX41" => boxed(2, 2.0, Arc::new(Ex41)),
        "EX51" => boxed(2, 2.0, Arc::new(Ex51)),
        _ => {
            if let Some(k) = name.strip_prefix("WIT") {
                if let Ok(k @ 1..=6) = k.parse::<usize>() {
                    return boxed(
                        2,
                        2.0,
                        Arc::new(Wit {
                            lambda: WIT_PARAMS[k - 1],
                        }),
                    );
                }
            }
            if let Some(n) = name.strip_prefix("JOS1:") {
                if let Ok(n @ 1..) = n.parse::<usize>() {
                    return jos(n, 2.0);
                }
            }
            Err(ProblemError::Unknown(name.to_string()))
        }
    }
}

fn expect_dim(x: &[f64], n: usize) -> Result<(), EvalError> {
    if x.len() != n {
        return Err(EvalError::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    Ok(())
}

fn jac2(rows: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_row_major(2, 2, vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]])
        .expect("2x2 shape")
}

fn sym2(a: f64, b: f64, c: f64) -> SymMatrix {
    SymMatrix::from_upper_fn(2, |i, j| match (i, j) {
        (0, 0) => a,
        (0, 1) => b,
        _ => c,
    })
}

/// `( (1/n) Σ xᵢ², (1/n) Σ (xᵢ − 2)² )`
#[derive(Debug, Clone, Copy)]
pub struct Jos1 {
    pub n: usize,
}

impl Objectives for Jos1 {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, self.n)?;
        let inv = 1.0 / self.n as f64;
        let f1 = x.iter().map(|v| v * v).sum::<f64>() * inv;
        let f2 = x.iter().map(|v| (v - 2.0) * (v - 2.0)).sum::<f64>() * inv;
        Ok(vec![f1, f2])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, self.n)?;
        let c = 2.0 / self.n as f64;
        let mut j = Matrix::zeros(2, self.n);
        for (k, &v) in x.iter().enumerate() {
            j.set(0, k, c * v);
            j.set(1, k, c * (v - 2.0));
        }
        Ok(j)
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<SymMatrix>> {
        let h = SymMatrix::scaled_identity(self.n, 2.0 / self.n as f64);
        Some(vec![h.clone(), h])
    }
}

/// Deb's bimodal problem `(x₁, g(x₂)/x₁)` on `x₁ > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Deb;

const DEB_C1: f64 = 0.2;
const DEB_W1: f64 = 0.004;
const DEB_C2: f64 = 0.6;
const DEB_W2: f64 = 0.4;
const DEB_A2: f64 = 0.8;

impl Deb {
    /// `(g, g', g'')` at `x2`.
    fn g(x2: f64) -> (f64, f64, f64) {
        let u1 = (x2 - DEB_C1) / DEB_W1;
        let u2 = (x2 - DEB_C2) / DEB_W2;
        let e1 = (-u1 * u1).exp();
        let e2 = DEB_A2 * (-u2 * u2).exp();
        let g = 2.0 - e1 - e2;
        let dg = 2.0 * u1 / DEB_W1 * e1 + 2.0 * u2 / DEB_W2 * e2;
        let d2g = 2.0 / (DEB_W1 * DEB_W1) * (1.0 - 2.0 * u1 * u1) * e1
            + 2.0 / (DEB_W2 * DEB_W2) * (1.0 - 2.0 * u2 * u2) * e2;
        (g, dg, d2g)
    }

    fn guard(x: &[f64]) -> Result<(), EvalError> {
        if !(x[0] > DEB_X1_GUARD) {
            return Err(EvalError::Infeasible(format!(
                "Deb requires x1 > {DEB_X1_GUARD:e}, got {}",
                x[0]
            )));
        }
        Ok(())
    }
}

impl Objectives for Deb {
    fn n(&self) -> usize {
        2
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, 2)?;
        Self::guard(x)?;
        let (g, _, _) = Self::g(x[1]);
        Ok(vec![x[0], g / x[0]])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, 2)?;
        Self::guard(x)?;
        let (g, dg, _) = Self::g(x[1]);
        Ok(jac2([[1.0, 0.0], [-g / (x[0] * x[0]), dg / x[0]]]))
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<SymMatrix>> {
        let (g, dg, d2g) = Self::g(x[1]);
        let x1 = x[0];
        Some(vec![
            SymMatrix::zeros(2),
            sym2(2.0 * g / (x1 * x1 * x1), -dg / (x1 * x1), d2g / x1),
        ])
    }
}

/// PNR: a quartic/quadratic pair.
#[derive(Debug, Clone, Copy)]
pub struct Pnr;

impl Objectives for Pnr {
    fn n(&self) -> usize {
        2
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        let f1 = a.powi(4) + b.powi(4) - a * a + b * b - 10.0 * a * b + 0.25 * a + 20.0;
        let f2 = (a - 1.0) * (a - 1.0) + b * b;
        Ok(vec![f1, f2])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        Ok(jac2([
            [
                4.0 * a.powi(3) - 2.0 * a - 10.0 * b + 0.25,
                4.0 * b.powi(3) + 2.0 * b - 10.0 * a,
            ],
            [2.0 * (a - 1.0), 2.0 * b],
        ]))
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<SymMatrix>> {
        let (a, b) = (x[0], x[1]);
        Some(vec![
            sym2(12.0 * a * a - 2.0, -10.0, 12.0 * b * b + 2.0),
            sym2(2.0, 0.0, 2.0),
        ])
    }
}

/// WIT0: a pair with a nonconvex Pareto front.
#[derive(Debug, Clone, Copy)]
pub struct Wit0;

impl Objectives for Wit0 {
    fn n(&self) -> usize {
        2
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, 2)?;
        let p = x[0] + x[1];
        let q = x[0] - x[1];
        let base = 0.5 * ((1.0 + p * p).sqrt() + (1.0 + q * q).sqrt());
        let bump = 0.6 * (-q * q).exp();
        Ok(vec![base + 0.5 * q + bump, base - 0.5 * q + bump])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, 2)?;
        let p = x[0] + x[1];
        let q = x[0] - x[1];
        let dp = 0.5 * p / (1.0 + p * p).sqrt();
        let dq = 0.5 * q / (1.0 + q * q).sqrt() - 1.2 * q * (-q * q).exp();
        // ∂p/∂x = (1, 1), ∂q/∂x = (1, −1).
        Ok(jac2([
            [dp + dq + 0.5, dp - dq - 0.5],
            [dp + dq - 0.5, dp - dq + 0.5],
        ]))
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<SymMatrix>> {
        let p = x[0] + x[1];
        let q = x[0] - x[1];
        let hp = 0.5 / (1.0 + p * p).powf(1.5);
        let hq = 0.5 / (1.0 + q * q).powf(1.5) + 0.6 * (4.0 * q * q - 2.0) * (-q * q).exp();
        // Linear terms vanish; both objectives share the Hessian.
        let h = sym2(hp + hq, hp - hq, hp + hq);
        Some(vec![h.clone(), h])
    }
}

/// WIT1..WIT6, parameterized by `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct Wit {
    pub lambda: f64,
}

impl Objectives for Wit {
    fn n(&self) -> usize {
        2
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, 2)?;
        let l = self.lambda;
        let (a, b) = (x[0] - 2.0, x[1] - 2.0);
        let f1 = l * (a * a + b * b) + (1.0 - l) * (a.powi(4) + b.powi(8));
        let (c, d) = (x[0] + 2.0 * l, x[1] + 2.0 * l);
        Ok(vec![f1, c * c + d * d])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, 2)?;
        let l = self.lambda;
        let (a, b) = (x[0] - 2.0, x[1] - 2.0);
        Ok(jac2([
            [
                2.0 * l * a + 4.0 * (1.0 - l) * a.powi(3),
                2.0 * l * b + 8.0 * (1.0 - l) * b.powi(7),
            ],
            [2.0 * (x[0] + 2.0 * l), 2.0 * (x[1] + 2.0 * l)],
        ]))
    }

    fn hessians(&self, x: &[f64]) -> Option<Vec<SymMatrix>> {
        let l = self.lambda;
        let (a, b) = (x[0] - 2.0, x[1] - 2.0);
        Some(vec![
            sym2(
                2.0 * l + 12.0 * (1.0 - l) * a * a,
                0.0,
                2.0 * l + 56.0 * (1.0 - l) * b.powi(6),
            ),
            sym2(2.0, 0.0, 2.0),
        ])
    }
}

/// `(2x₁² − x₂², −(x₁ − 1)² + 2(x₂ − 1)²)`: both objectives nonconvex,
/// `(−1, 2)` is critical with multiplier `(½, ½)`.
#[derive(Debug, Clone, Copy)]
pub struct Ex41;

impl Objectives for Ex41 {
    fn n(&self) -> usize {
        2
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        Ok(vec![
            2.0 * a * a - b * b,
            -(a - 1.0) * (a - 1.0) + 2.0 * (b - 1.0) * (b - 1.0),
        ])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        Ok(jac2([
            [4.0 * a, -2.0 * b],
            [-2.0 * (a - 1.0), 4.0 * (b - 1.0)],
        ]))
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<SymMatrix>> {
        Some(vec![sym2(4.0, 0.0, -2.0), sym2(-2.0, 0.0, 4.0)])
    }
}

/// `((x₁² + x₂²)/100, (x₁ − 2)² + (x₂ − 2)²)`: critical at `(1, 1)` with
/// multiplier `(100/101, 1/101)`.
#[derive(Debug, Clone, Copy)]
pub struct Ex51;

impl Objectives for Ex51 {
    fn n(&self) -> usize {
        2
    }

    fn m(&self) -> usize {
        2
    }

    fn values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        expect_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        Ok(vec![
            (a * a + b * b) / 100.0,
            (a - 2.0) * (a - 2.0) + (b - 2.0) * (b - 2.0),
        ])
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix, EvalError> {
        expect_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        Ok(jac2([[0.02 * a, 0.02 * b], [2.0 * a - 4.0, 2.0 * b - 4.0]]))
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<SymMatrix>> {
        Some(vec![sym2(0.02, 0.0, 0.02), sym2(2.0, 0.0, 2.0)])
    }
}
