//! Backtracking line searches over the grid `α ∈ {1, γ, γ², …}`.
//!
//! * [`armijo_vector`]: every objective must satisfy its own Armijo
//!   inequality `F_i(x + αd) − F_i(x) ≤ σα (JF(x)d)_i`.
//! * [`armijo_aggregated`]: only the multiplier-weighted sum has to
//!   decrease, `λ·F(x + αd) − λ·F(x) ≤ σαθ`. Individual objectives may go
//!   up, which is what lets unit steps through near a Pareto critical point
//!   whose objectives have very different curvature.
//!
//! Trial points that fail to evaluate (outside the domain, non-finite) are
//! rejected trials, not errors.

use thiserror::Error;

use crate::dual::SimplexPoint;
use crate::linalg::dot;
use crate::problems::{EvalCounters, EvalError, ProblemDef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineSearchError {
    #[error("invalid line-search parameters: {0}")]
    InvalidParams(&'static str),
    #[error("aggregated search requires θ < 0, got {0}")]
    NotDescent(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub sigma: f64,
    pub gamma: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            gamma: 0.5,
            max_backtracks: 60,
        }
    }
}

impl LineSearchParams {
    pub fn new(sigma: f64, gamma: f64, max_backtracks: usize) -> Result<Self, LineSearchError> {
        let p = Self {
            sigma,
            gamma,
            max_backtracks,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LineSearchError> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(LineSearchError::InvalidParams("sigma must lie in (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(LineSearchError::InvalidParams("gamma must lie in (0, 1)"));
        }
        if self.max_backtracks == 0 {
            return Err(LineSearchError::InvalidParams(
                "max_backtracks must be >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub backtracks: usize,
    pub accepted: bool,
    /// Number of objective-vector evaluations spent.
    pub trials: usize,
    /// The last trial point `x + αd` and, if it evaluated, `F` there.
    pub point: Vec<f64>,
    pub values: Option<Vec<f64>>,
}

fn backtrack(
    p: &ProblemDef,
    x: &[f64],
    d: &[f64],
    params: &LineSearchParams,
    counters: &mut EvalCounters,
    mut accept: impl FnMut(f64, &[f64]) -> bool,
) -> Result<LineSearchOutcome, LineSearchError> {
    params.validate()?;
    if x.len() != p.n() || d.len() != p.n() {
        return Err(LineSearchError::DimensionMismatch {
            expected: p.n(),
            found: if x.len() != p.n() { x.len() } else { d.len() },
        });
    }
    let mut alpha = 1.0;
    let mut point = vec![0.0; x.len()];
    let mut values = None;
    for b in 0..=params.max_backtracks {
        if b > 0 {
            alpha *= params.gamma;
        }
        for ((pk, xk), dk) in point.iter_mut().zip(x).zip(d) {
            *pk = xk + alpha * dk;
        }
        values = match p.evaluate(&point, counters) {
            Ok(f) => Some(f),
            Err(e) if e.is_rejection() => None,
            Err(e) => return Err(e.into()),
        };
        if let Some(f) = &values {
            if accept(alpha, f) {
                return Ok(LineSearchOutcome {
                    alpha,
                    backtracks: b,
                    accepted: true,
                    trials: b + 1,
                    point,
                    values,
                });
            }
        }
    }
    Ok(LineSearchOutcome {
        alpha,
        backtracks: params.max_backtracks,
        accepted: false,
        trials: params.max_backtracks + 1,
        point,
        values,
    })
}

/// Componentwise Armijo rule. `fx = F(x)` and `jd = JF(x) d` are supplied
/// by the caller and not re-evaluated.
pub fn armijo_vector(
    p: &ProblemDef,
    x: &[f64],
    fx: &[f64],
    d: &[f64],
    jd: &[f64],
    params: &LineSearchParams,
    counters: &mut EvalCounters,
) -> Result<LineSearchOutcome, LineSearchError> {
    if fx.len() != p.m() || jd.len() != p.m() {
        return Err(LineSearchError::DimensionMismatch {
            expected: p.m(),
            found: if fx.len() != p.m() {
                fx.len()
            } else {
                jd.len()
            },
        });
    }
    let sigma = params.sigma;
    backtrack(p, x, d, params, counters, |alpha, f| {
        f.iter()
            .zip(fx)
            .zip(jd)
            .all(|((fi, f0), ji)| fi - f0 <= sigma * alpha * ji)
    })
}

/// Aggregated (multiplier-weighted) Armijo rule.
#[allow(clippy::too_many_arguments)]
pub fn armijo_aggregated(
    p: &ProblemDef,
    x: &[f64],
    fx: &[f64],
    d: &[f64],
    lambda: &SimplexPoint,
    theta: f64,
    params: &LineSearchParams,
    counters: &mut EvalCounters,
) -> Result<LineSearchOutcome, LineSearchError> {
    if fx.len() != p.m() || lambda.len() != p.m() {
        return Err(LineSearchError::DimensionMismatch {
            expected: p.m(),
            found: if fx.len() != p.m() {
                fx.len()
            } else {
                lambda.len()
            },
        });
    }
    if !(theta < 0.0) {
        return Err(LineSearchError::NotDescent(theta));
    }
    let w = lambda.as_slice();
    let merit0 = dot(w, fx);
    let sigma = params.sigma;
    backtrack(p, x, d, params, counters, |alpha, f| {
        dot(w, f) - merit0 <= sigma * alpha * theta
    })
}
