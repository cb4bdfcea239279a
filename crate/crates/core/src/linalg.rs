//! Small dense linear algebra kernels.
//!
//! Everything here works on tiny row-major matrices (a handful of states and
//! inputs), so the routines favour clarity and determinism over blocking or
//! SIMD. Spectral norms come from power iteration on `MᵀM` with fixed start
//! vectors; least squares goes through a one-sided Jacobi SVD so that
//! rank-deficient systems return the minimum-norm solution.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Relative tolerance targeted by [`spectral_norm`].
pub const NORM_TOL: f64 = 1e-10;
/// Relative singular-value cutoff used by [`solve_least_squares`].
pub const LSQ_REG: f64 = 1e-12;
/// Iteration cap for power iteration.
pub const POWER_ITER_CAP: usize = 10_000;
/// Power iteration stops once the Rayleigh quotient changes by less than
/// this, relative; well inside `NORM_TOL` on the singular value.
const POWER_STALL_TOL: f64 = 1e-14;

const JACOBI_SWEEP_CAP: usize = 100;

#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        Vector((0..dim).map(f).collect())
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Vector(vec![value; dim])
    }

    /// Unit vector along axis `i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{what} has non-finite entries")))
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * s).collect())
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Vector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn check_dim(&self, expected: usize, what: &str) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what}: expected dimension {expected}, got {}",
                self.dim()
            )))
        }
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl<const D: usize> From<[f64; D]> for Vector {
    fn from(v: [f64; D]) -> Self {
        Vector(v.to_vec())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scaled(-1.0)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scaled(self)
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        let m = Matrix { rows, cols, data };
        m.ensure_finite("matrix")?;
        Ok(m)
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n_rows, n_cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// `u vᵀ`
    pub fn outer(u: &Vector, v: &Vector) -> Self {
        Self::from_fn(u.dim(), v.dim(), |i, j| u[i] * v[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{what} has non-finite entries")))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `M x`
    pub fn mul_vec(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.cols, x.dim());
        Vector::from_fn(self.rows, |i| {
            self.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum()
        })
    }

    /// `Mᵀ x` without forming the transpose.
    pub fn tr_mul_vec(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.rows, x.dim());
        let mut out = Vector::zeros(self.cols);
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.as_mut_slice().iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute asymmetry `|m_ij − m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(M + Mᵀ) / 2`
    pub fn symmetrized(&self) -> Matrix {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `x ᵀ M x`
    pub fn quadratic_form(&self, x: &Vector) -> f64 {
        x.dot(&self.mul_vec(x))
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, k: usize) -> Matrix {
        debug_assert!(self.is_square());
        let mut p = Matrix::identity(self.rows);
        for _ in 0..k {
            p = p.matmul(self);
        }
        p
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// Largest singular value of `m`.
///
/// Power iteration on `MᵀM`, started from the normalized all-ones vector and
/// from a fixed irregular vector (the all-ones start can sit exactly inside a
/// non-dominant eigenspace); the larger estimate wins.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    m.ensure_finite("spectral_norm input")?;
    if m.rows == 0 || m.cols == 0 || m.is_zero() {
        return Ok(0.0);
    }
    let n = m.cols;
    let ones = Vector::filled(n, 1.0);
    // Fractional parts of multiples of the golden ratio, shifted off zero.
    let irregular = Vector::from_fn(n, |i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5);
    let a = power_iterate_gram(m, ones);
    let b = power_iterate_gram(m, irregular);
    Ok(a.max(b).sqrt())
}

/// Dominant eigenvalue of `MᵀM` from the given start vector.
fn power_iterate_gram(m: &Matrix, start: Vector) -> f64 {
    let norm = start.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut v = start.scaled(1.0 / norm);
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_CAP {
        let mv = m.mul_vec(&v);
        let next_lambda = mv.norm_squared();
        let w = m.tr_mul_vec(&mv);
        let w_norm = w.norm();
        if w_norm == 0.0 {
            return next_lambda;
        }
        let converged = (next_lambda - lambda).abs() <= POWER_STALL_TOL * next_lambda;
        lambda = next_lambda;
        v = w.scaled(1.0 / w_norm);
        if converged {
            break;
        }
    }
    // Rayleigh quotient at the final iterate.
    lambda.max(m.mul_vec(&v).norm_squared())
}

/// Thin singular value decomposition `A = Σ σ_j u_j v_jᵀ`.
struct Svd {
    left: Vec<Vector>,
    sigma: Vec<f64>,
    right: Vec<Vector>,
}

/// One-sided Jacobi SVD. Handles wide matrices by factoring the transpose.
fn jacobi_svd(a: &Matrix) -> Svd {
    if a.rows < a.cols {
        let t = jacobi_svd(&a.transpose());
        return Svd {
            left: t.right,
            sigma: t.sigma,
            right: t.left,
        };
    }
    let (m, n) = (a.rows, a.cols);
    // Columns of the working matrix and of V, stored column-major.
    let mut w: Vec<Vector> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vector> = (0..n).map(|j| Vector::basis(n, j)).collect();
    for _ in 0..JACOBI_SWEEP_CAP {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w[p].norm_squared();
                let beta = w[q].norm_squared();
                let gamma = w[p].dot(&w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s, m);
                rotate_pair(&mut v, p, q, c, s, n);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for col in w {
        let s = col.norm();
        left.push(if s > 0.0 { col.scaled(1.0 / s) } else { col });
        sigma.push(s);
    }
    Svd {
        left,
        sigma,
        right: v,
    }
}

#[allow(clippy::needless_range_loop)]
fn rotate_pair(cols: &mut [Vector], p: usize, q: usize, c: f64, s: f64, len: usize) {
    for k in 0..len {
        let a = cols[p][k];
        let b = cols[q][k];
        cols[p][k] = c * a - s * b;
        cols[q][k] = s * a + c * b;
    }
}

/// Moore–Penrose pseudo-inverse from an SVD; singular values at or below
/// `LSQ_REG · σ_max` are treated as zero.
pub fn pseudo_inverse(a: &Matrix) -> Result<Matrix> {
    a.ensure_finite("pseudo-inverse input")?;
    let svd = jacobi_svd(a);
    let sigma_max = svd.sigma.iter().cloned().fold(0.0, f64::max);
    let mut pinv = Matrix::zeros(a.cols, a.rows);
    if sigma_max == 0.0 {
        return Ok(pinv);
    }
    let cutoff = LSQ_REG * sigma_max;
    for ((u, s), v) in svd.left.iter().zip(&svd.sigma).zip(&svd.right) {
        if *s > cutoff {
            pinv.axpy(1.0 / s, &Matrix::outer(v, u));
        }
    }
    Ok(pinv)
}

/// Minimum-norm minimizer of `‖A x − b‖²`, via [`pseudo_inverse`].
pub fn solve_least_squares(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.rows != b.dim() {
        return Err(Error::invalid(format!(
            "least squares: matrix has {} rows but rhs has dimension {}",
            a.rows,
            b.dim()
        )));
    }
    b.ensure_finite("least squares rhs")?;
    Ok(pseudo_inverse(a)?.mul_vec(b))
}

/// Solves the square system `A x = b` by Gaussian elimination with partial
/// pivoting.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if !a.is_square() {
        return Err(Error::invalid("solve: matrix is not square"));
    }
    b.check_dim(a.rows, "solve rhs")?;
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap_or(col);
        if m[(pivot, col)].abs() <= 1e-14 * scale {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        if pivot != col {
            for j in 0..n {
                m.data.swap(pivot * n + j, col * n + j);
            }
            rhs.0.swap(pivot, col);
        }
        let p = m[(col, col)];
        for i in (col + 1)..n {
            let f = m[(i, col)] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m.data[i * n + j] -= f * m.data[col * n + j];
            }
            rhs.0[i] -= f * rhs.0[col];
        }
    }
    let mut x = Vector::zeros(n);
    for i in (0..n).rev() {
        let tail: f64 = ((i + 1)..n).map(|j| m[(i, j)] * x[j]).sum();
        x[i] = (rhs[i] - tail) / m[(i, i)];
    }
    Ok(x)
}

/// Solves `A X = B` column by column.
pub fn solve_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::invalid("solve_matrix: row mismatch"));
    }
    let mut out = Matrix::zeros(a.cols, b.cols);
    for j in 0..b.cols {
        let x = solve(a, &b.column(j))?;
        for i in 0..a.cols {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

/// `‖A^K‖^(1/K)`, an upper-biased estimate of the spectral radius.
///
/// Powers are renormalized after each multiplication so that neither
/// contractive nor expansive matrices under/overflow.
pub fn spectral_radius_estimate(a: &Matrix, k: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "spectral radius: matrix is {}x{}, not square",
            a.rows, a.cols
        )));
    }
    if k < 8 {
        return Err(Error::invalid(format!("spectral radius: K = {k} < 8")));
    }
    a.ensure_finite("spectral radius input")?;
    let mut power = Matrix::identity(a.rows);
    let mut log_scale = 0.0;
    for _ in 0..k {
        power = power.matmul(a);
        let s = power.max_abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        power = power.scaled(1.0 / s);
        log_scale += s.ln();
    }
    let norm = spectral_norm(&power)?;
    Ok(((norm.ln() + log_scale) / k as f64).exp())
}
