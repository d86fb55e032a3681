//! Direction-finding subproblem.
//!
//! The primal problem `min_d max_i ∇F_iᵀd + ½ dᵀBd` is solved through its
//! dual over the unit simplex,
//!
//! ```text
//! min_{λ ∈ Δ_m} ½ (Σ λ_i ∇F_i)ᵀ H (Σ λ_i ∇F_i),   H = B⁻¹,
//! ```
//!
//! whose dimension is the number of objectives regardless of `n`. The
//! direction is recovered as `d = −H Σ λ_i ∇F_i` and the criticality value
//! is `θ = −½ g_λᵀ H g_λ ≤ 0`, zero exactly at Pareto critical points.

use thiserror::Error;

use crate::linalg::{dot, Cholesky, InverseMetric, LinalgError, Matrix, SymMatrix};

/// Absolute Frank-Wolfe gap tolerance used by the solver.
pub const DEFAULT_DUAL_TOL: f64 = 1e-12;

/// Inner iteration budget `10·m² + 100`.
pub fn default_max_inner(m: usize) -> usize {
    10 * m * m + 100
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid Frank-Wolfe parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no objectives")]
    Empty,
}

/// A point of the unit simplex `Δ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn vertex(m: usize, j: usize) -> Self {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        Self(v)
    }

    /// Validates nonnegativity and `|Σλ − 1| ≤ 1e-12`.
    pub fn new(weights: Vec<f64>) -> Option<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return None;
        }
        Some(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(1 − γ) λ + γ e_j`; stays exactly nonnegative.
    fn step_toward(&mut self, j: usize, gamma: f64) {
        for w in self.0.iter_mut() {
            *w *= 1.0 - gamma;
        }
        self.0[j] += gamma;
    }
}

/// Output of the direction-finding subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualResult {
    pub lambda: SimplexPoint,
    pub d: Vec<f64>,
    /// Criticality value, `≤ 0`.
    pub theta: f64,
    /// Upper bound on every `∇F_iᵀd`; equals `2θ = −dᵀBd` for a shared metric.
    pub t: f64,
    pub gap: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrankWolfeOutcome {
    pub lambda: SimplexPoint,
    pub gap: f64,
    pub inner_iters: usize,
}

/// `G_ij = ∇F_iᵀ H ∇F_j`.
pub fn build_gram(jac: &Matrix, h: &InverseMetric) -> Result<SymMatrix, DualError> {
    Ok(gram_with_images(jac, h)?.0)
}

/// Gram matrix plus the images `H ∇F_i`, which the direction reuses.
fn gram_with_images(
    jac: &Matrix,
    h: &InverseMetric,
) -> Result<(SymMatrix, Vec<Vec<f64>>), DualError> {
    if jac.cols() != h.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: h.dim(),
            found: jac.cols(),
        }
        .into());
    }
    let m = jac.rows();
    let images = (0..m)
        .map(|i| h.apply(jac.row(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let g = SymMatrix::from_upper_fn(m, |i, j| {
        // Average both orders so G is symmetric even when H is only
        // numerically symmetric.
        0.5 * (dot(jac.row(i), &images[j]) + dot(jac.row(j), &images[i]))
    });
    Ok((g, images))
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = j;
        }
    }
    best
}

/// Frank-Wolfe with exact line search for `min ½ λᵀGλ` over `Δ_m`, started
/// from the barycenter. Budget exhaustion is reported through `gap > tol`.
pub fn frank_wolfe_simplex(
    g: &SymMatrix,
    tol: f64,
    max_inner: usize,
) -> Result<FrankWolfeOutcome, DualError> {
    if !(tol > 0.0) {
        return Err(DualError::InvalidParams("tol must be positive"));
    }
    if max_inner == 0 {
        return Err(DualError::InvalidParams("max_inner must be at least 1"));
    }
    let m = g.dim();
    if m == 0 {
        return Err(DualError::Empty);
    }
    let mut lambda = SimplexPoint::uniform(m);
    let mut iters = 0;
    loop {
        let grad = g.mul_vec(lambda.as_slice())?;
        let j = argmin_first(&grad);
        let lgl = dot(&grad, lambda.as_slice());
        let gap = lgl - grad[j];
        if gap <= tol || iters == max_inner {
            return Ok(FrankWolfeOutcome {
                lambda,
                gap,
                inner_iters: iters,
            });
        }
        // v = e_j − λ:  g·v = −gap,  vᵀGv = G_jj − 2(Gλ)_j + λᵀGλ.
        let vgv = g.get(j, j) - 2.0 * grad[j] + lgl;
        let gamma = if vgv <= 0.0 {
            1.0
        } else {
            (gap / vgv).clamp(0.0, 1.0)
        };
        lambda.step_toward(j, gamma);
        iters += 1;
    }
}

/// Solves the shared-metric subproblem at a point with Jacobian `jac`.
pub fn solve_subproblem(
    jac: &Matrix,
    h: &InverseMetric,
    tol: f64,
    max_inner: usize,
) -> Result<DualResult, DualError> {
    let (gram, images) = gram_with_images(jac, h)?;
    let fw = frank_wolfe_simplex(&gram, tol, max_inner)?;
    let lambda = fw.lambda;
    let g_lambda = jac.tr_mul_vec(lambda.as_slice())?;
    // d = −H g_λ = −Σ λ_i H ∇F_i
    let mut d = vec![0.0; jac.cols()];
    for (w, img) in lambda.as_slice().iter().zip(&images) {
        if *w != 0.0 {
            for (dk, ik) in d.iter_mut().zip(img) {
                *dk -= w * ik;
            }
        }
    }
    let theta = (0.5 * dot(&g_lambda, &d)).min(0.0);
    Ok(DualResult {
        lambda,
        d,
        theta,
        t: 2.0 * theta,
        gap: fw.gap,
        inner_iters: fw.inner_iters,
    })
}

struct QnmEval {
    q: f64,
    grad: Vec<f64>,
    d: Vec<f64>,
}

/// `q(λ) = ½ g_λᵀ M_λ⁻¹ g_λ` with `M_λ = Σ λ_i B_i`, its gradient and the
/// direction `d = −M_λ⁻¹ g_λ`.
fn qnm_eval(jac: &Matrix, b_list: &[SymMatrix], lambda: &[f64]) -> Result<QnmEval, DualError> {
    let n = jac.cols();
    let mut metric = SymMatrix::zeros(n);
    for (w, b) in lambda.iter().zip(b_list) {
        if *w != 0.0 {
            metric.add_scaled(*w, b)?;
        }
    }
    let chol = Cholesky::factor(&metric, 0.0)?;
    let g_lambda = jac.tr_mul_vec(lambda)?;
    let mut d = chol.solve(&g_lambda)?;
    d.iter_mut().for_each(|v| *v = -*v);
    let q = -0.5 * dot(&g_lambda, &d);
    let grad = (0..jac.rows())
        .map(|j| Ok(-(dot(jac.row(j), &d) + 0.5 * b_list[j].quad_form(&d)?)))
        .collect::<Result<Vec<_>, LinalgError>>()?;
    Ok(QnmEval { q, grad, d })
}

/// Dual of the per-objective-metric subproblem
/// `min_d max_i ∇F_iᵀd + ½ dᵀB_i d`, solved by Frank-Wolfe with halving
/// step sizes. Used by the quasi-Newton baseline.
pub fn solve_qnm_dual(
    jac: &Matrix,
    b_list: &[SymMatrix],
    tol: f64,
    max_inner: usize,
) -> Result<DualResult, DualError> {
    if !(tol > 0.0) {
        return Err(DualError::InvalidParams("tol must be positive"));
    }
    if max_inner == 0 {
        return Err(DualError::InvalidParams("max_inner must be at least 1"));
    }
    let m = jac.rows();
    if m == 0 {
        return Err(DualError::Empty);
    }
    if b_list.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m,
            found: b_list.len(),
        }
        .into());
    }
    if let Some(b) = b_list.iter().find(|b| b.dim() != jac.cols()) {
        return Err(LinalgError::DimensionMismatch {
            expected: jac.cols(),
            found: b.dim(),
        }
        .into());
    }

    let mut lambda = SimplexPoint::uniform(m);
    let mut cur = qnm_eval(jac, b_list, lambda.as_slice())?;
    let mut iters = 0;
    let gap = loop {
        let j = argmin_first(&cur.grad);
        let gap = dot(&cur.grad, lambda.as_slice()) - cur.grad[j];
        if gap <= tol || iters == max_inner {
            break gap;
        }
        // Halve from γ = 1 until q decreases, then keep halving while it
        // still improves.
        let mut best: Option<(SimplexPoint, QnmEval)> = None;
        let mut gamma = 1.0;
        while gamma > 1e-20 {
            let mut trial = lambda.clone();
            trial.step_toward(j, gamma);
            let eval = qnm_eval(jac, b_list, trial.as_slice())?;
            let bar = best.as_ref().map_or(cur.q, |(_, b)| b.q);
            if eval.q < bar {
                best = Some((trial, eval));
            } else if best.is_some() {
                break;
            }
            gamma *= 0.5;
        }
        iters += 1;
        match best {
            Some((l, e)) => {
                lambda = l;
                cur = e;
            }
            None => break gap,
        }
    };
    let t = (0..m)
        .map(|i| dot(jac.row(i), &cur.d))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DualResult {
        lambda,
        d: cur.d,
        theta: (-cur.q).min(0.0),
        t,
        gap,
        inner_iters: iters,
    })
}
