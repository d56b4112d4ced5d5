//! Dense real-matrix kernels.
//!
//! Everything in this crate works with small dense matrices (at most a few
//! hundred rows), so a single row-major [`Matrix`] type with straightforward
//! O(n³) routines covers all needs: products, Kronecker products, Cholesky
//! factorization, log-determinants of symmetric positive-definite matrices,
//! and a pivoted LU for the occasional general solve.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot tolerance used to declare a matrix not positive definite.
pub const PIVOT_TOL: f64 = 1e-12;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; use the
    /// `TryFrom<Vec<Vec<f64>>>` impl for untrusted data.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nested: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Matrix::try_from(nested).expect("rectangular finite rows")
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

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_matmul row mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let b_row = other.row(l);
            for (i, &a) in self.row(l).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Column-stacking vectorization.
    pub fn vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst =
                &mut self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + block.cols];
            dst.copy_from_slice(block.row(i));
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Dense matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        Matrix::from_row_major(nrows, ncols, rows.into_iter().flatten().collect())
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = (b.rows, b.cols);
    let mut out = Matrix::zeros(a.rows * br, a.cols * bc);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Cholesky factorization up to the first failing pivot.
///
/// Returns the partially filled lower factor and the number of columns that
/// were factored successfully. Column `j` fails when its pivot is at most
/// `PIVOT_TOL` times the largest diagonal entry of `a`. Since the Cholesky
/// factor of a leading principal submatrix is the leading block of the full
/// factor, the first `completed` columns are exact for every prefix.
pub fn cholesky_prefix(a: &Matrix) -> (Matrix, usize) {
    assert!(a.is_square(), "cholesky of non-square matrix");
    let n = a.rows;
    let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(a[(i, i)]));
    let tol = PIVOT_TOL * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j);
        let mut d = a[(j, j)] - lj[..j].iter().map(|v| v * v).sum::<f64>();
        if d.is_nan() || d <= tol || max_diag <= 0.0 {
            return (l, j);
        }
        d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s: f64 = l.row(i)[..j]
                .iter()
                .zip(&l.row(j)[..j])
                .map(|(x, y)| x * y)
                .sum();
            l[(i, j)] = (a[(i, j)] - s) / d;
        }
    }
    (l, n)
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = a` and positive diagonal.
pub fn cholesky_lower(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky of {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let (l, done) = cholesky_prefix(a);
    if done < a.rows {
        return Err(Error::NotPositiveDefinite { pivot: done });
    }
    Ok(l)
}

/// `ln |a|` for symmetric positive-definite `a`, as `2 Σ ln Lᵢᵢ`.
pub fn log_det_spd(a: &Matrix) -> Result<f64> {
    let l = cholesky_lower(a)?;
    Ok(log_det_from_cholesky(&l, l.rows))
}

/// `ln |a[..n, ..n]|` from the Cholesky factor of `a`.
pub fn log_det_from_cholesky(l: &Matrix, n: usize) -> f64 {
    2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// Solves `L·Lᵀ·X = B` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows;
    assert_eq!(b.rows, n);
    let mut x = b.clone();
    for c in 0..b.cols {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Inverse of a symmetric positive-definite matrix; the result is symmetrized.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky_lower(a)?;
    let inv = cholesky_solve(&l, &Matrix::identity(a.rows));
    Ok(symmetrize(&inv))
}

/// `(a + aᵀ) / 2`.
pub fn symmetrize(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows, a.cols, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// LU factorization with partial pivoting, stored compactly.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

fn lu_decompose(a: &Matrix) -> Result<Lu> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("LU of non-square matrix".into()));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let scale = a.max_abs();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pmax <= PIVOT_TOL * scale || scale == 0.0 {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
    }
    Ok(Lu { lu, perm, sign })
}

/// Solves the general square system `a·X = b` by pivoted LU.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let Lu { lu, perm, .. } = lu_decompose(a)?;
    let n = a.rows;
    if b.rows != n {
        return Err(Error::DimensionMismatch(
            "solve: right-hand side rows".into(),
        ));
    }
    let mut x = Matrix::from_fn(n, b.cols, |i, j| b[(perm[i], j)]);
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Determinant of a general square matrix; zero when LU finds it singular.
pub fn det(a: &Matrix) -> f64 {
    match lu_decompose(a) {
        Ok(Lu { lu, sign, .. }) => sign * (0..a.rows).map(|i| lu[(i, i)]).product::<f64>(),
        Err(_) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows)
    }

    fn random_matrix(rows: usize, cols: usize, vals: &[f64]) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| vals[(i * cols + j) % vals.len()])
    }

    fn spd_from(vals: &[f64], n: usize) -> Matrix {
        let a = random_matrix(n, n, vals);
        &a.t_matmul(&a) + &Matrix::identity(n)
    }

    #[test]
    fn kron_identity_gives_block_diagonal() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = kron(&Matrix::identity(2), &a);
        assert_eq!(k.block(0, 0, 2, 2), a);
        assert_eq!(k.block(2, 2, 2, 2), a);
        assert_eq!(k.block(0, 2, 2, 2), Matrix::zeros(2, 2));
        assert_eq!(k.block(2, 0, 2, 2), Matrix::zeros(2, 2));
    }

    #[test]
    fn kron_dimensions_and_scalar() {
        let k = kron(&Matrix::zeros(2, 3), &Matrix::zeros(4, 5));
        assert_eq!((k.rows(), k.cols()), (8, 15));
        let s = kron(&m(&[&[2.0]]), &Matrix::identity(2));
        assert_eq!(s, m(&[&[2.0, 0.0], &[0.0, 2.0]]));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky_lower(&m(&[&[4.0, 0.0], &[0.0, 9.0]])).unwrap();
        assert_eq!(l, m(&[&[2.0, 0.0], &[0.0, 3.0]]));

        let a = m(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = cholesky_lower(&a).unwrap();
        let expect = m(&[&[2.0, 0.0], &[1.0, 2f64.sqrt()]]);
        assert!(l.max_abs_diff(&expect) < 1e-15);
        assert!(l.matmul(&l.transpose()).max_abs_diff(&a) < 1e-12);

        match cholesky_lower(&m(&[&[1.0, 2.0], &[2.0, 1.0]])) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(log_det_spd(&Matrix::identity(5)).unwrap(), 0.0);
        let v = log_det_spd(&Matrix::from_diag(&[2.0, 3.0])).unwrap();
        assert!((v - 6f64.ln()).abs() < 1e-14);
        let v = log_det_spd(&m(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        assert!((v - 8f64.ln()).abs() < 1e-14);
        assert!((v - 2.079442).abs() < 1e-6);
    }

    #[test]
    fn spd_inverse_examples() {
        assert_eq!(
            spd_inverse(&Matrix::identity(3)).unwrap(),
            Matrix::identity(3)
        );
        let inv = spd_inverse(&Matrix::from_diag(&[2.0, 4.0])).unwrap();
        assert!(inv.max_abs_diff(&Matrix::from_diag(&[0.5, 0.25])) < 1e-15);
        let inv = spd_inverse(&m(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        let expect = m(&[&[3.0, -2.0], &[-2.0, 4.0]]).scale(1.0 / 8.0);
        assert!(inv.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn zero_matrix_is_not_pd() {
        assert!(cholesky_lower(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn non_square_cholesky_is_dimension_error() {
        assert!(matches!(
            cholesky_lower(&Matrix::zeros(2, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn lu_solve_and_det() {
        let a = m(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        // expansion along the first row: -2·(1-0) + 1·(0-3) = -5
        assert!((det(&a) + 5.0).abs() < 1e-14);
        let b = Matrix::column(&[1.0, 2.0, 3.0]);
        let x = solve(&a, &b).unwrap();
        assert!(a.matmul(&x).max_abs_diff(&b) < 1e-14);
        assert_eq!(det(&m(&[&[1.0, 2.0], &[2.0, 4.0]])), 0.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::try_from(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(Matrix::try_from(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn vec_is_column_stacking() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.vec(), vec![1.0, 3.0, 2.0, 4.0]);
    }

    proptest! {
        #[test]
        fn vec_identity_of_kron(
            n in 2usize..=3,
            vals in prop::collection::vec(-2.0f64..2.0, 27),
        ) {
            let a = random_matrix(n, n, &vals[0..9]);
            let x = random_matrix(n, n, &vals[9..18]);
            let b = random_matrix(n, n, &vals[18..27]);
            let lhs = a.matmul(&x).matmul(&b.transpose()).vec();
            let rhs = kron(&b, &a).mul_vec(&x.vec());
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() < 1e-10);
            }
        }

        #[test]
        fn cholesky_reconstructs(
            n in 1usize..=6,
            vals in prop::collection::vec(-3.0f64..3.0, 36),
        ) {
            let a = spd_from(&vals, n);
            let l = cholesky_lower(&a).unwrap();
            for i in 0..n {
                prop_assert!(l[(i, i)] > 0.0);
                for j in i + 1..n {
                    prop_assert_eq!(l[(i, j)], 0.0);
                }
            }
            let err = l.matmul(&l.transpose()).max_abs_diff(&a);
            prop_assert!(err <= 1e-10 * a.max_abs());
            // deterministic factor
            prop_assert_eq!(cholesky_lower(&a).unwrap(), l);
        }

        #[test]
        fn log_det_of_inverse_cancels(
            n in 1usize..=6,
            vals in prop::collection::vec(-3.0f64..3.0, 36),
        ) {
            let a = spd_from(&vals, n);
            let inv = spd_inverse(&a).unwrap();
            let s = log_det_spd(&a).unwrap() + log_det_spd(&inv).unwrap();
            prop_assert!(s.abs() < 1e-8);
            let err = inv.matmul(&a).max_abs_diff(&Matrix::identity(n));
            prop_assert!(err < 1e-8);
        }

        #[test]
        fn det_agrees_with_log_det(
            n in 1usize..=5,
            vals in prop::collection::vec(-3.0f64..3.0, 25),
        ) {
            let a = spd_from(&vals, n);
            let ld = log_det_spd(&a).unwrap();
            prop_assert!((det(&a).ln() - ld).abs() < 1e-10 * ld.abs().max(1.0));
        }
    }
}
