//! Dense vector and matrix kernels plus the BFGS metric-update pair.
//!
//! Everything here is small-scale dense numerics: the largest corpus
//! instance has n = 1000, so row-major `Vec<f64>` storage is adequate.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

/// Default relative curvature threshold for the BFGS updates.
pub const DEFAULT_CURVATURE_TOL: f64 = 1e-10;

const EIGEN_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric (entry ({row}, {col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),
    #[error("symmetric eigensolver did not converge within {0} sweeps")]
    EigenNoConvergence(usize),
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `a - b`, elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

fn check_len(expected: usize, v: &[f64]) -> Result<(), LinalgError> {
    if v.len() != expected {
        return Err(LinalgError::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// Dense row-major `rows × cols` matrix. Jacobians live here, one row per
/// objective gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        check_len(rows * cols, &data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r)?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.cols, x)?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.rows, v)?;
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }
}

/// Dense symmetric matrix with full storage. Every constructor and mutator
/// writes both triangles, so `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds from rows, requiring symmetry to `1e-12` relative; the stored
    /// value is the average of the two triangles.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        for r in rows {
            check_len(n, r)?;
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                let diff = (a - b).abs();
                if diff > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    /// Builds from a generator evaluated on the upper triangle only.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Writes `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.n, x)?;
        Ok((0..self.n).map(|i| dot(self.row(i), x)).collect())
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[f64]) -> Result<f64, LinalgError> {
        Ok(dot(x, &self.mul_vec(x)?))
    }

    /// `self += c · u vᵀ + c · v uᵀ` (a symmetric rank-two term).
    pub fn add_sym_rank2(&mut self, c: f64, u: &[f64], v: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let (ui, vi) = (c * u[i], c * v[i]);
            for j in i..n {
                let t = self.data[i * n + j] + (ui * v[j] + vi * u[j]);
                self.data[i * n + j] = t;
                self.data[j * n + i] = t;
            }
        }
    }

    /// `self += c · u uᵀ`
    pub fn add_rank1(&mut self, c: f64, u: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let ui = c * u[i];
            for j in i..n {
                let t = self.data[i * n + j] + ui * u[j];
                self.data[i * n + j] = t;
                self.data[j * n + i] = t;
            }
        }
    }

    /// `self += c · other`
    pub fn add_scaled(&mut self, c: f64, other: &SymMatrix) -> Result<(), LinalgError> {
        if other.n != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &SymMatrix) -> Result<Matrix, LinalgError> {
        if other.n != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (o, b) in row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `m`, failing if any pivot is `<= pivot_tol`.
    pub fn factor(m: &SymMatrix, pivot_tol: f64) -> Result<Self, LinalgError> {
        let n = m.dim();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = m.get(j, j);
            for k in 0..j {
                pivot -= l[j * n + k] * l[j * n + k];
            }
            if !(pivot > pivot_tol) {
                return Err(LinalgError::NotPositiveDefinite("cholesky pivot"));
            }
            let ljj = pivot.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut v = m.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.n, b)?;
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut v = z[i];
            for k in 0..i {
                v -= self.l[i * n + k] * z[k];
            }
            z[i] = v / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in i + 1..n {
                v -= self.l[k * n + i] * z[k];
            }
            z[i] = v / self.l[i * n + i];
        }
        Ok(z)
    }
}

/// True iff a Cholesky factorization of `m` succeeds with every pivot
/// strictly above `tol`.
pub fn spd_check(m: &SymMatrix, tol: f64) -> bool {
    Cholesky::factor(m, tol).is_ok()
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn eig_bounds_estimate(m: &SymMatrix) -> Result<(f64, f64), LinalgError> {
    if m.dim() == 0 {
        return Err(LinalgError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite("matrix"));
    }
    let eig = SymmetricEigen::try_new(m.to_nalgebra(), f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or(LinalgError::EigenNoConvergence(EIGEN_MAX_SWEEPS))?;
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// The BFGS curvature test `s·y > tol·‖s‖‖y‖`.
pub fn curvature_holds(s: &[f64], y: &[f64], curvature_tol: f64) -> bool {
    dot(s, y) > curvature_tol * norm(s) * norm(y)
}

fn check_pair(n: usize, s: &[f64], y: &[f64], curvature_tol: f64) -> Result<(), LinalgError> {
    check_len(n, s)?;
    check_len(n, y)?;
    if !all_finite(s) {
        return Err(LinalgError::NonFinite("s"));
    }
    if !all_finite(y) {
        return Err(LinalgError::NonFinite("y"));
    }
    if !(curvature_tol >= 0.0) {
        return Err(LinalgError::NonFinite("curvature_tol"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum MetricRepr {
    Identity(usize),
    Dense(SymMatrix),
}

/// The inverse metric `H = B⁻¹` maintained by the variable metric method.
///
/// Starts as the identity, which is kept implicit until the first update
/// fires so that steepest-descent runs never touch `n × n` storage.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMetric {
    repr: MetricRepr,
}

impl InverseMetric {
    pub fn identity(n: usize) -> Self {
        Self {
            repr: MetricRepr::Identity(n),
        }
    }

    /// Wraps an explicit matrix. Positive definiteness is checked on demand
    /// via [`spd_check`], not here.
    pub fn from_sym(h: SymMatrix) -> Self {
        Self {
            repr: MetricRepr::Dense(h),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            MetricRepr::Identity(n) => *n,
            MetricRepr::Dense(h) => h.dim(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, MetricRepr::Identity(_))
    }

    /// `H v`
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        match &self.repr {
            MetricRepr::Identity(n) => {
                check_len(*n, v)?;
                Ok(v.to_vec())
            }
            MetricRepr::Dense(h) => h.mul_vec(v),
        }
    }

    pub fn to_sym(&self) -> SymMatrix {
        match &self.repr {
            MetricRepr::Identity(n) => SymMatrix::identity(*n),
            MetricRepr::Dense(h) => h.clone(),
        }
    }

    /// Spectrum bounds of `H`.
    pub fn eig_bounds(&self) -> Result<(f64, f64), LinalgError> {
        match &self.repr {
            MetricRepr::Identity(_) => Ok((1.0, 1.0)),
            MetricRepr::Dense(h) => eig_bounds_estimate(h),
        }
    }

    /// In-place inverse BFGS update. Returns whether the curvature branch
    /// fired; on a skip `self` is left untouched.
    pub fn bfgs_update(
        &mut self,
        s: &[f64],
        y: &[f64],
        curvature_tol: f64,
    ) -> Result<bool, LinalgError> {
        let n = self.dim();
        check_pair(n, s, y, curvature_tol)?;
        if !curvature_holds(s, y, curvature_tol) {
            return Ok(false);
        }
        let rho = 1.0 / dot(s, y);
        let hy = self.apply(y)?;
        let yhy = dot(y, &hy);
        if let MetricRepr::Identity(n) = self.repr {
            self.repr = MetricRepr::Dense(SymMatrix::identity(n));
        }
        let MetricRepr::Dense(h) = &mut self.repr else {
            unreachable!()
        };
        // (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ, expanded.
        h.add_sym_rank2(-rho, s, &hy);
        h.add_rank1(rho * rho * yhy + rho, s);
        Ok(true)
    }
}

/// Inverse BFGS update; returns `h` unchanged when the curvature test fails.
pub fn bfgs_update_inverse(
    h: &InverseMetric,
    s: &[f64],
    y: &[f64],
    curvature_tol: f64,
) -> Result<InverseMetric, LinalgError> {
    let mut out = h.clone();
    out.bfgs_update(s, y, curvature_tol)?;
    Ok(out)
}

/// In-place primal BFGS update of `b`. Returns whether the update fired.
pub fn bfgs_update_primal_in_place(
    b: &mut SymMatrix,
    s: &[f64],
    y: &[f64],
    curvature_tol: f64,
) -> Result<bool, LinalgError> {
    check_pair(b.dim(), s, y, curvature_tol)?;
    if !curvature_holds(s, y, curvature_tol) {
        return Ok(false);
    }
    let bs = b.mul_vec(s)?;
    let sbs = dot(s, &bs);
    if !(sbs > 0.0) {
        return Err(LinalgError::NotPositiveDefinite("sᵀBs <= 0"));
    }
    b.add_rank1(-1.0 / sbs, &bs);
    b.add_rank1(1.0 / dot(s, y), y);
    Ok(true)
}

/// Primal BFGS update `B - B s sᵀ B / (sᵀ B s) + y yᵀ / (sᵀ y)`, or `b`
/// unchanged when the curvature test fails.
pub fn bfgs_update_primal(
    b: &SymMatrix,
    s: &[f64],
    y: &[f64],
    curvature_tol: f64,
) -> Result<SymMatrix, LinalgError> {
    let mut out = b.clone();
    bfgs_update_primal_in_place(&mut out, s, y, curvature_tol)?;
    Ok(out)
}
