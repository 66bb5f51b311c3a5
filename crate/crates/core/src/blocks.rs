//! Column-major views over flat buffers and batched products.
//!
//! Per-level data is stored as one `rows x nodes` column-major buffer, so the
//! children of a node are adjacent columns and a level operation is one GEMM.

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;

/// Parallelism used for large products.
pub fn par() -> Par {
    #[cfg(feature = "parallel")]
    {
        Par::rayon(0)
    }
    #[cfg(not(feature = "parallel"))]
    {
        Par::Seq
    }
}

pub fn view(s: &[Complex64], rows: usize, cols: usize) -> MatRef<'_, Complex64> {
    MatRef::from_column_major_slice(&s[..rows * cols], rows, cols)
}

pub fn view_mut(s: &mut [Complex64], rows: usize, cols: usize) -> MatMut<'_, Complex64> {
    MatMut::from_column_major_slice_mut(&mut s[..rows * cols], rows, cols)
}

/// Every other column starting at column `first` of a `rows x 2 half` buffer.
pub fn alternate(s: &[Complex64], rows: usize, half: usize, first: usize) -> MatRef<'_, Complex64> {
    if half == 0 {
        return MatRef::from_column_major_slice(&[], rows, 0);
    }
    let start = first * rows;
    MatRef::from_column_major_slice_with_stride(&s[start..start + (2 * half - 1) * rows], rows, half, 2 * rows)
}

pub fn alternate_mut(s: &mut [Complex64], rows: usize, half: usize, first: usize) -> MatMut<'_, Complex64> {
    if half == 0 {
        return MatMut::from_column_major_slice_mut(&mut [], rows, 0);
    }
    let start = first * rows;
    MatMut::from_column_major_slice_with_stride_mut(&mut s[start..start + (2 * half - 1) * rows], rows, half, 2 * rows)
}

/// `dst = a b` (or `dst += a b`).
pub fn gemm(dst: MatMut<'_, Complex64>, accumulate: bool, a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) {
    gemm_scaled(dst, accumulate, a, b, Complex64::new(1.0, 0.0));
}

/// `dst = alpha a b` (or `dst += alpha a b`).
pub fn gemm_scaled(
    dst: MatMut<'_, Complex64>,
    accumulate: bool,
    a: MatRef<'_, Complex64>,
    b: MatRef<'_, Complex64>,
    alpha: Complex64,
) {
    let accum = if accumulate { Accum::Add } else { Accum::Replace };
    let big = dst.nrows() * dst.ncols() * a.ncols() > 1 << 18;
    matmul(dst, accum, a, b, alpha, if big { par() } else { Par::Seq });
}

/// `dst = a^T b` (or `dst += a^T b`).
pub fn gemm_tn(dst: MatMut<'_, Complex64>, accumulate: bool, a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) {
    gemm(dst, accumulate, a.transpose(), b);
}
