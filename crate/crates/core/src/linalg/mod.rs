//! Dense row-major matrices and the small set of numerical primitives the
//! rest of the library is built on: normal-equation least squares with a
//! Tikhonov fallback for rank-deficient designs, Cholesky factorization, and
//! seeded multivariate normal sampling.
//!
//! Problem sizes here are small (at most a few hundred columns), so the
//! solver strategy is the classic one: form the Gram matrix, factor it with
//! Cholesky, and substitute. The same factorization backs the sampler.

mod rng;

pub use rng::Rng;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative symmetry tolerance accepted by [`cholesky`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Relative pivot threshold below which a Gram matrix is treated as
/// rank-deficient and the jittered system is solved instead.
const RANK_DEFICIENT_PIVOT: f64 = 1e-12;

/// Dense row-major matrix of `f64`. All public constructors reject
/// non-finite entries, and rows * cols always equals the data length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_vec".into(),
                expected: format!("{} values ({rows}x{cols})", rows * cols),
                actual: format!("{} values", data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "Matrix::from_vec".into(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a closure over (row, col). The closure must yield finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Matrix { rows, cols, data }
    }

    /// Single-column matrix from a vector.
    pub fn column_vector(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Matrix::from_vec(n, 1, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// self * other. Panics on incompatible shapes (internal contract; the
    /// public operations validate shapes up front and return errors).
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self^T * other, computed without materializing the transpose.
    pub fn t_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_mul shape mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let rhs_row = other.row(r);
            for (i, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self^T * self (symmetric Gram matrix).
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut out = Matrix::zeros(p, p);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..p {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * p..i * p + p];
                for j in i..p {
                    out_row[j] += a * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                out.data[i * p + j] = out.data[j * p + i];
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Horizontal concatenation. All parts must share the row count.
    pub fn hstack(parts: &[&Matrix]) -> Matrix {
        assert!(!parts.is_empty());
        let rows = parts[0].rows;
        assert!(parts.iter().all(|p| p.rows == rows), "hstack row mismatch");
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &r in indices {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Keep the columns where `mask` is true.
    pub fn select_cols(&self, mask: &[bool]) -> Matrix {
        assert_eq!(mask.len(), self.cols);
        let kept: Vec<usize> = (0..self.cols).filter(|&c| mask[c]).collect();
        Matrix::from_fn(self.rows, kept.len(), |r, c| self.get(r, kept[c]))
    }

    /// Append an all-ones column on the right.
    pub fn append_ones_column(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.push(1.0);
        }
        Matrix {
            rows: self.rows,
            cols: self.cols + 1,
            data,
        }
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// The input is checked for symmetry within [`SYMMETRY_TOLERANCE`] (relative
/// to the largest entry) and then symmetrized as `(M + M^T)/2` before
/// factoring. Returns the lower-triangular `L` with `L * L^T = M`.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch {
            context: "cholesky".into(),
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.rows, m.cols),
        });
    }
    let scale = m.max_abs().max(1e-300);
    let mut deviation = 0.0f64;
    for i in 0..m.rows {
        for j in 0..i {
            deviation = deviation.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if deviation > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric {
            deviation,
            tolerance: SYMMETRY_TOLERANCE,
        });
    }
    let sym = Matrix::from_fn(m.rows, m.cols, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    cholesky_unchecked(&sym)
}

/// Factorization core without the symmetry check; reads the lower triangle.
fn cholesky_unchecked(m: &Matrix) -> Result<Matrix> {
    let n = m.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solve `L y = b` then `L^T x = y` for one right-hand side.
fn cholesky_solve_column(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

fn trace(m: &Matrix) -> f64 {
    (0..m.rows.min(m.cols)).map(|i| m.get(i, i)).sum()
}

/// Solve the normal equations `gram * B = rhs` for a symmetric `gram`.
///
/// If the plain factorization hits a non-positive (or negligible relative to
/// the diagonal) pivot, the system is re-solved with the Tikhonov jitter
/// `gram + lambda I`, `lambda = 1e-10 * trace(gram) / p`, so collinear
/// designs never abort.
pub fn solve_normal_equations(gram: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let p = gram.rows;
    let max_diag = (0..p).fold(0.0f64, |m, i| m.max(gram.get(i, i).abs()));
    let factor = match cholesky_unchecked(gram) {
        Ok(l) => {
            let min_diag = (0..p).fold(f64::INFINITY, |m, i| m.min(l.get(i, i)));
            if min_diag * min_diag <= RANK_DEFICIENT_PIVOT * max_diag {
                None
            } else {
                Some(l)
            }
        }
        Err(_) => None,
    };
    let factor = match factor {
        Some(l) => l,
        None => {
            let lambda = if trace(gram) > 0.0 {
                1e-10 * trace(gram) / p as f64
            } else {
                f64::MIN_POSITIVE
            };
            let jittered = Matrix::from_fn(p, p, |i, j| {
                gram.get(i, j) + if i == j { lambda } else { 0.0 }
            });
            cholesky_unchecked(&jittered)?
        }
    };
    let mut out = Matrix::zeros(p, rhs.cols);
    let mut col = vec![0.0; p];
    for c in 0..rhs.cols {
        for r in 0..p {
            col[r] = rhs.get(r, c);
        }
        let x = cholesky_solve_column(&factor, &col);
        for r in 0..p {
            out.set(r, c, x[r]);
        }
    }
    if !out.data.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "solve_normal_equations".into(),
        });
    }
    Ok(out)
}

/// Least-squares solve: the `p x q` coefficient matrix `B` minimizing the
/// Frobenius norm of `design * B - targets`, via the (possibly jittered)
/// normal equations.
pub fn solve_least_squares(design: &Matrix, targets: &Matrix) -> Result<Matrix> {
    if design.rows != targets.rows {
        return Err(Error::DimensionMismatch {
            context: "solve_least_squares".into(),
            expected: format!("{} target rows", design.rows),
            actual: format!("{} target rows", targets.rows),
        });
    }
    if design.rows == 0 || design.cols == 0 || targets.cols == 0 {
        return Err(Error::invalid(
            "solve_least_squares requires n >= 1, p >= 1, q >= 1",
        ));
    }
    let gram = design.gram();
    let rhs = design.t_mul(targets);
    solve_normal_equations(&gram, &rhs)
}

/// Two-stage least-squares coefficient vector: regress the columns of `x`
/// on the instruments `z`, then regress `y` on the fitted values.
///
/// Provided as a validation path for the solver; requires at least as many
/// instrument columns as regressors and more rows than instruments.
pub fn project_2sls(z: &Matrix, x: &Matrix, y: &Matrix) -> Result<Matrix> {
    if z.rows != x.rows || x.rows != y.rows {
        return Err(Error::DimensionMismatch {
            context: "project_2sls".into(),
            expected: "equal row counts for z, x, y".into(),
            actual: format!("{}, {}, {}", z.rows, x.rows, y.rows),
        });
    }
    if z.cols < x.cols {
        return Err(Error::UnderIdentified {
            instruments: z.cols,
            regressors: x.cols,
        });
    }
    if z.rows <= z.cols {
        return Err(Error::invalid(format!(
            "project_2sls requires n > k (got n = {}, k = {})",
            z.rows, z.cols
        )));
    }
    let first = solve_least_squares(z, x)?;
    let fitted = z.matmul(&first);
    solve_least_squares(&fitted, y)
}

/// Draw `n` i.i.d. samples from `N(mean, cov)` as `mean + L g`, with `L` the
/// Cholesky factor of `cov` and `g` standard normal from the seeded stream.
/// Rows are generated in order, one sample per row.
pub fn sample_mvn(mean: &[f64], cov: &Matrix, n: usize, rng: &mut Rng) -> Result<Matrix> {
    let d = mean.len();
    if cov.rows != d || cov.cols != d {
        return Err(Error::DimensionMismatch {
            context: "sample_mvn".into(),
            expected: format!("{d}x{d} covariance"),
            actual: format!("{}x{}", cov.rows, cov.cols),
        });
    }
    let l = cholesky(cov)?;
    let mut out = Matrix::zeros(n, d);
    let mut g = vec![0.0; d];
    for r in 0..n {
        for gi in g.iter_mut() {
            *gi = rng.next_normal();
        }
        for i in 0..d {
            let mut v = mean[i];
            for k in 0..=i {
                v += l.get(i, k) * g[k];
            }
            out.set(r, i, v);
        }
    }
    if !out.data.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "sample_mvn".into(),
        });
    }
    Ok(out)
}
