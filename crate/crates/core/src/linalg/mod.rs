//! Dense matrices and the norms the capacity measures are built from.

mod svd;

use matrixmultiply::dgemm;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use rand_distr::{Distribution, StandardNormal};

pub use svd::jacobi_singular_values;

/// Largest Hadamard order [`hadamard`] will build without an explicit cap.
pub const DEFAULT_HADAMARD_MAX_ORDER: usize = 1 << 14;

/// Default relative tolerance for [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-9;
/// Default iteration budget for [`spectral_norm`].
pub const SPECTRAL_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("hadamard order 2^{k} exceeds the cap of {cap}")]
    TooLarge { k: u32, cap: usize },
}

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Matrix({}x{})", self.rows, self.cols)?;
        if self.data.len() <= 64 {
            for r in 0..self.rows {
                write!(f, "\n  {:?}", self.row(r))?;
            }
        }
        Ok(())
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::Shape(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Diagonal matrix with `diag` on the diagonal.
    pub fn diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Entries drawn i.i.d. from a standard normal, scaled by `scale`.
    pub fn random_normal(rows: usize, cols: usize, scale: f64, seed: u64) -> Self {
        let mut r = rng::substream(seed, "matrix");
        Self::from_fn(rows, cols, |_, _| {
            let z: f64 = StandardNormal.sample(&mut r);
            scale * z
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::Shape(format!(
                "cannot subtract {:?} from {:?}",
                other.shape(),
                self.shape()
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(
            self.rows,
            self.cols,
            other.cols,
            1.0,
            View::row_major(&self.data, self.cols),
            View::row_major(&other.data, other.cols),
            0.0,
            &mut out.data,
            other.cols,
        );
        Ok(out)
    }

    /// `self * other^T`, without materializing the transpose.
    pub fn matmul_transposed(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::Shape(format!(
                "cannot multiply {:?} by transpose of {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        gemm(
            self.rows,
            self.cols,
            other.rows,
            1.0,
            View::row_major(&self.data, self.cols),
            View::transposed(&other.data, other.cols),
            0.0,
            &mut out.data,
            other.rows,
        );
        Ok(out)
    }

    /// `self * x` for a vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::Shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T * y` for a vector `y`.
    pub fn matvec_transposed(&self, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if y.len() != self.rows {
            return Err(LinalgError::Shape(format!(
                "vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    /// Rows reordered so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(perm.len(), self.cols);
        for (i, &p) in perm.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(p));
        }
        out
    }

    /// Columns reordered so that column `j` of the result is column `perm[j]`.
    pub fn permute_cols(&self, perm: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, perm.len(), |i, j| self.get(i, perm[j]))
    }
}

/// Strided view of a row-major buffer, possibly read as its transpose.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub row_stride: isize,
    pub col_stride: isize,
}

impl<'a> View<'a> {
    pub fn row_major(data: &'a [f64], cols: usize) -> Self {
        Self { data, row_stride: cols as isize, col_stride: 1 }
    }

    pub fn transposed(data: &'a [f64], cols: usize) -> Self {
        Self { data, row_stride: 1, col_stride: cols as isize }
    }
}

/// `c = alpha * a * b + beta * c` where `a` is `m x k`, `b` is `k x n` and
/// `c` is row-major `m x n` with row stride `ldc`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: View<'_>,
    b: View<'_>,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let max_a = (m - 1) as isize * a.row_stride + (k.max(1) - 1) as isize * a.col_stride;
    let max_b = (k.max(1) - 1) as isize * b.row_stride + (n - 1) as isize * b.col_stride;
    assert!(k == 0 || (max_a as usize) < a.data.len(), "gemm: lhs view out of bounds");
    assert!(k == 0 || (max_b as usize) < b.data.len(), "gemm: rhs view out of bounds");
    assert!((m - 1) * ldc + n <= c.len(), "gemm: output out of bounds");
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is uniquely borrowed.
    unsafe {
        dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr(),
            b.row_stride,
            b.col_stride,
            beta,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `l_p` norm of a vector; `p = f64::INFINITY` gives the max-abs norm.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    if p == 2.0 {
        return l2_norm(v);
    }
    // Scale by the max entry so large p cannot overflow.
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    l2_norm(m.as_slice())
}

/// Result of [`spectral_norm`]. `converged == false` means the iteration
/// budget ran out and `value` is the last iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value by power iteration on `M^T M` or `M M^T`,
/// whichever Gram matrix is smaller.
///
/// Starts from the all-ones vector. If the iterate collapses (the start is
/// orthogonal to the row space of the Gram matrix), restarts from a seeded
/// Gaussian vector.
pub fn spectral_norm(m: &Matrix, tol: f64, max_iter: usize) -> Result<SpectralNorm, LinalgError> {
    if !(tol > 0.0) {
        return Err(LinalgError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(LinalgError::InvalidArgument("max_iter must be at least 1".into()));
    }
    if frobenius_norm(m) == 0.0 {
        return Ok(SpectralNorm { value: 0.0, iterations: 0, converged: true });
    }
    let use_cols = m.cols() <= m.rows();
    let dim = if use_cols { m.cols() } else { m.rows() };

    let ones = vec![1.0; dim];
    if let Some(res) = power_iterate(m, use_cols, ones, tol, max_iter) {
        return Ok(res);
    }
    let mut r = rng::substream(0x5eed, "spectral-restart");
    let start: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
    Ok(power_iterate(m, use_cols, start, tol, max_iter).unwrap_or(SpectralNorm {
        value: 0.0,
        iterations: max_iter,
        converged: false,
    }))
}

/// Returns `None` when the iterate collapses to zero.
fn power_iterate(
    m: &Matrix,
    use_cols: bool,
    mut v: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<SpectralNorm> {
    let n = l2_norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        // `mid = A v` is the half-step; sigma = ||A v|| for unit v.
        let (mid, w) = if use_cols {
            let mid = m.matvec(&v).expect("shape");
            let w = m.matvec_transposed(&mid).expect("shape");
            (mid, w)
        } else {
            let mid = m.matvec_transposed(&v).expect("shape");
            let w = m.matvec(&mid).expect("shape");
            (mid, w)
        };
        let next_sigma = l2_norm(&mid);
        let wn = l2_norm(&w);
        if !(wn > 0.0) || !wn.is_finite() {
            return None;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if it > 1 && (next_sigma - sigma).abs() <= tol * next_sigma {
            return Some(SpectralNorm { value: next_sigma, iterations: it, converged: true });
        }
        sigma = next_sigma;
    }
    Some(SpectralNorm { value: sigma, iterations: max_iter, converged: false })
}

/// Which axis the inner norm runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Inner norm over each row, outer norm across rows.
    Rows,
    /// Inner norm over each column, outer norm across columns.
    Cols,
}

/// Inner norm applied to each row/column before the outer `l_p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerNorm {
    L1,
    L2,
}

impl InnerNorm {
    fn apply(self, v: &[f64]) -> f64 {
        match self {
            InnerNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            InnerNorm::L2 => l2_norm(v),
        }
    }
}

/// Mixed norm: the `inner` norm of each row (or column), then the `l_p` norm
/// of those values. `p = f64::INFINITY` takes the max.
pub fn group_norm(m: &Matrix, axis: Axis, p: f64, inner: InnerNorm) -> Result<f64, LinalgError> {
    if p.is_nan() || p < 1.0 {
        return Err(LinalgError::InvalidArgument(format!("group norm needs p >= 1, got {p}")));
    }
    let parts: Vec<f64> = match axis {
        Axis::Rows => (0..m.rows()).map(|i| inner.apply(m.row(i))).collect(),
        Axis::Cols => (0..m.cols()).map(|j| inner.apply(&m.column(j))).collect(),
    };
    Ok(lp_norm(&parts, p))
}

/// Normalized Sylvester Hadamard matrix of order `2^k`.
pub fn hadamard(k: u32) -> Result<Matrix, LinalgError> {
    hadamard_capped(k, DEFAULT_HADAMARD_MAX_ORDER)
}

/// [`hadamard`] with an explicit cap on the order.
pub fn hadamard_capped(k: u32, max_order: usize) -> Result<Matrix, LinalgError> {
    let order = 1usize.checked_shl(k).filter(|&n| n <= max_order && k < usize::BITS);
    let Some(n) = order else {
        return Err(LinalgError::TooLarge { k, cap: max_order });
    };
    let scale = 2f64.powf(-(k as f64) / 2.0);
    Ok(Matrix::from_fn(n, n, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            scale
        } else {
            -scale
        }
    }))
}

/// Angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_degrees(u: &[f64], v: &[f64]) -> Result<f64, LinalgError> {
    if u.len() != v.len() {
        return Err(LinalgError::Shape(format!("lengths {} and {}", u.len(), v.len())));
    }
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    if nu < 1e-30 || nv < 1e-30 {
        return Err(LinalgError::Degenerate("angle with a zero-norm vector".into()));
    }
    let cos = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees().clamp(0.0, 180.0))
}

/// Nearest-rank percentile: the element at 1-based rank `ceil(q n / 100)`
/// of the sorted values.
pub fn percentile_nearest_rank(values: &[f64], q: f64) -> Result<f64, LinalgError> {
    if values.is_empty() {
        return Err(LinalgError::InvalidArgument("percentile of an empty set".into()));
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(LinalgError::InvalidArgument(format!("percentile must be in (0, 100], got {q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q * n as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&Matrix::zeros(2, 2)), 0.0);
        assert_relative_eq!(frobenius_norm(&Matrix::identity(3)), 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(frobenius_norm(&Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap()), 5.0);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(Matrix::new(0, 2, vec![]), Err(LinalgError::Empty { .. })));
        assert!(matches!(Matrix::new(1, 2, vec![1.0]), Err(LinalgError::Shape(_))));
        assert!(matches!(Matrix::new(1, 2, vec![1.0, f64::NAN]), Err(LinalgError::NonFinite(1))));
    }

    #[test]
    fn spectral_examples() {
        let s = spectral_norm(&Matrix::identity(4), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert_relative_eq!(s.value, 1.0, epsilon = 1e-12);
        assert!(s.converged);
        let d = spectral_norm(&Matrix::diag(&[3.0, 2.0]), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert_relative_eq!(d.value, 3.0, max_relative = 1e-8);
    }

    #[test]
    fn spectral_matches_jacobi_oracle() {
        let m = Matrix::random_normal(5, 3, 1.0, 11);
        let oracle = jacobi_singular_values(&m)[0];
        let s = spectral_norm(&m, 1e-14, 100_000).unwrap();
        assert!((s.value - oracle).abs() <= 1e-8 * oracle, "{} vs {}", s.value, oracle);
    }

    #[test]
    fn spectral_restarts_when_ones_is_in_the_null_space() {
        // Rows sum to zero: M * 1 = 0 although M != 0.
        let m = Matrix::from_rows(&[vec![1.0, -1.0], vec![2.0, -2.0]]).unwrap();
        let s = spectral_norm(&m, 1e-12, 1000).unwrap();
        assert_relative_eq!(s.value, 10f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn spectral_rejects_bad_arguments_and_flags_budget() {
        let m = Matrix::identity(2);
        assert!(spectral_norm(&m, 0.0, 10).is_err());
        assert!(spectral_norm(&m, 1e-9, 0).is_err());
        // Nearly equal top singular values converge slowly.
        let slow = Matrix::diag(&[1.0, 0.999_999, 0.5]);
        let s = spectral_norm(&slow, 1e-15, 2).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 2);
    }

    #[test]
    fn group_norm_examples() {
        let id = Matrix::identity(2);
        assert_eq!(group_norm(&id, Axis::Rows, 1.0, InnerNorm::L2).unwrap(), 2.0);
        let m = Matrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(group_norm(&m, Axis::Rows, f64::INFINITY, InnerNorm::L1).unwrap(), 7.0);
        assert!(group_norm(&m, Axis::Rows, 0.5, InnerNorm::L2).is_err());
    }

    #[test]
    fn group_norm_matches_direct_sum() {
        let m = Matrix::random_normal(4, 3, 1.0, 5);
        let mut acc = 0.0;
        for i in 0..4 {
            let mut row = 0.0;
            for j in 0..3 {
                row += m.get(i, j) * m.get(i, j);
            }
            acc += row.sqrt().powi(3);
        }
        let oracle = acc.powf(1.0 / 3.0);
        let got = group_norm(&m, Axis::Rows, 3.0, InnerNorm::L2).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0));
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard(0).unwrap().as_slice(), &[1.0]);
        let h1 = hadamard(1).unwrap();
        let s = 0.5f64.sqrt();
        for (a, b) in h1.as_slice().iter().zip([s, s, s, -s]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let h3 = hadamard(3).unwrap();
        let gram = h3.transpose().matmul(&h3).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram.get(i, j) - expect).abs() < 1e-12);
            }
        }
        let mag = 2f64.powf(-1.5);
        assert!(h3.as_slice().iter().all(|v| (v.abs() - mag).abs() < 1e-15));
        assert!(matches!(hadamard_capped(5, 16), Err(LinalgError::TooLarge { .. })));
        assert!(hadamard(15).is_err());
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angle_degrees(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(angle_degrees(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 90.0, epsilon = 1e-12);
        assert_relative_eq!(angle_degrees(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 180.0, epsilon = 1e-12);
        assert!(matches!(angle_degrees(&[0.0, 0.0], &[1.0, 0.0]), Err(LinalgError::Degenerate(_))));
    }

    #[test]
    fn percentile_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 5.0).unwrap(), 5.0);
        assert_eq!(percentile_nearest_rank(&[7.0], 5.0).unwrap(), 7.0);
        assert_eq!(percentile_nearest_rank(&[3.0, 1.0, 2.0], 100.0).unwrap(), 3.0);
        assert!(percentile_nearest_rank(&[], 5.0).is_err());
        assert!(percentile_nearest_rank(&[1.0], 0.0).is_err());
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Matrix::random_normal(3, 4, 1.0, 1);
        let b = Matrix::random_normal(5, 4, 1.0, 2);
        let direct = a.matmul(&b.transpose()).unwrap();
        let fused = a.matmul_transposed(&b).unwrap();
        for (x, y) in direct.as_slice().iter().zip(fused.as_slice()) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
        for i in 0..3 {
            for j in 0..5 {
                let naive: f64 = (0..4).map(|k| a.get(i, k) * b.get(j, k)).sum();
                assert_relative_eq!(fused.get(i, j), naive, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn norm_sandwich_on_seeded_matrices() {
        for seed in 0..100u64 {
            let rows = 1 + (seed % 7) as usize;
            let cols = 1 + ((seed / 7) % 6) as usize;
            let m = Matrix::random_normal(rows, cols, 1.0, seed);
            let spec = spectral_norm(&m, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap().value;
            let fro = frobenius_norm(&m);
            let r = rows.min(cols) as f64;
            assert!(spec <= fro * (1.0 + 1e-9), "seed {seed}");
            assert!(fro <= r.sqrt() * spec * (1.0 + 1e-6), "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn group_norm_2_2_is_frobenius(seed in 0u64..10_000, rows in 1usize..6, cols in 1usize..6) {
            let m = Matrix::random_normal(rows, cols, 2.0, seed);
            let g = group_norm(&m, Axis::Rows, 2.0, InnerNorm::L2).unwrap();
            prop_assert!((g - frobenius_norm(&m)).abs() <= 1e-12 * g.max(1.0));
        }

        #[test]
        fn group_norm_nonincreasing_in_p(seed in 0u64..10_000, p1 in 1.0f64..8.0, dp in 0.0f64..8.0) {
            let m = Matrix::random_normal(5, 3, 1.0, seed);
            let a = group_norm(&m, Axis::Rows, p1, InnerNorm::L2).unwrap();
            let b = group_norm(&m, Axis::Rows, p1 + dp, InnerNorm::L2).unwrap();
            let c = group_norm(&m, Axis::Rows, f64::INFINITY, InnerNorm::L2).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-12));
            prop_assert!(c <= b * (1.0 + 1e-12));
        }

        #[test]
        fn hadamard_positive_part_inequality(k in 0u32..6, seed in 0u64..1000) {
            let f = hadamard(k).unwrap();
            let n = f.rows();
            let mut r = rng::substream(seed, "s");
            let s: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut r, 0.01..3.0)).collect();
            let total: f64 = s.iter().sum();
            let bound = 2f64.powf(-(k as f64) / 2.0 - 1.0) * total;
            for i in 0..n {
                let col = f.column(i);
                let pos: f64 = col.iter().zip(&s).map(|(c, w)| c.max(0.0) * w).sum();
                let neg: f64 = col.iter().zip(&s).map(|(c, w)| (-c).max(0.0) * w).sum();
                prop_assert!(pos.max(neg) >= bound - 1e-12);
            }
        }
    }
}
