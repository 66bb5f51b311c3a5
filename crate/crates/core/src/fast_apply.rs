//! Fast application of the kernel matrix by circulant embedding and the FFT.
//!
//! `G` is block Toeplitz with Toeplitz blocks. Its generator is embedded in a
//! `2 n1 x 2 n2` circulant whose index `n1` (and `n2`) carries a zero line;
//! a product with `G` is then one forward and one inverse 2D FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::discretization::{kernel_entry, CorrectionOrder, CorrectionTable, UniformGrid};
use crate::error::{Error, Result};

/// Spectral representation of `G` on a uniform grid.
#[derive(Clone)]
pub struct ConvolutionOperator {
    n1: usize,
    n2: usize,
    pub kappa: f64,
    pub order: CorrectionOrder,
    /// Spectrum of the padded tableau, stored transposed: entry `(a, b)` at
    /// `a * 2 n2 + b` for frequency `a` along x and `b` along y.
    spectrum: Vec<Complex64>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ConvolutionOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionOperator")
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("kappa", &self.kappa)
            .field("order", &self.order)
            .finish()
    }
}

/// Signed offset represented by padded index `a` in a circulant of size `2 n`.
/// Index `n` is the zero line.
#[inline]
fn wrap_offset(a: usize, n: usize) -> Option<i64> {
    match a.cmp(&n) {
        std::cmp::Ordering::Less => Some(a as i64),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(a as i64 - 2 * n as i64),
    }
}

impl ConvolutionOperator {
    /// Builds the operator; one forward FFT of size `2 n1 x 2 n2`.
    pub fn new(grid: &UniformGrid, kappa: f64, corr: Option<&CorrectionTable>) -> Self {
        let (n1, n2) = (grid.n1, grid.n2);
        let (p1, p2) = (2 * n1, 2 * n2);
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(p1);
        let row_inv = planner.plan_fft_inverse(p1);
        let col_fwd = planner.plan_fft_forward(p2);
        let col_inv = planner.plan_fft_inverse(p2);

        // Radially symmetric: evaluate each |offset| once.
        let mut quarter = vec![Complex64::new(0.0, 0.0); n1 * n2];
        quarter.par_chunks_mut(n1).enumerate().for_each(|(b, row)| {
            for (a, v) in row.iter_mut().enumerate() {
                *v = kernel_entry(grid, (a as i64, b as i64), kappa, corr);
            }
        });
        let mut tableau = vec![Complex64::new(0.0, 0.0); p1 * p2];
        tableau.par_chunks_mut(p1).enumerate().for_each(|(b, row)| {
            let Some(d2) = wrap_offset(b, n2) else { return };
            for (a, v) in row.iter_mut().enumerate() {
                if let Some(d1) = wrap_offset(a, n1) {
                    *v = quarter[d2.unsigned_abs() as usize * n1 + d1.unsigned_abs() as usize];
                }
            }
        });
        let mut op = Self {
            n1,
            n2,
            kappa,
            order: if corr.is_some() { CorrectionOrder::Fourth } else { CorrectionOrder::Second },
            spectrum: Vec::new(),
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
        };
        fft_rows(&op.row_fwd, &mut tableau, p1, p2);
        let mut spectrum = transpose(&tableau, p1, p2);
        fft_rows(&op.col_fwd, &mut spectrum, p2, p1);
        op.spectrum = spectrum;
        op
    }

    /// Convenience constructor from a problem's order.
    pub fn for_order(grid: &UniformGrid, kappa: f64, order: CorrectionOrder) -> Result<Self> {
        let corr = match order {
            CorrectionOrder::Second => None,
            CorrectionOrder::Fourth => Some(crate::discretization::fit_diagonal_correction(kappa * grid.h)?),
        };
        Ok(Self::new(grid, kappa, corr.as_ref()))
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// `(2 n1, 2 n2)`.
    pub fn spectrum_shape(&self) -> (usize, usize) {
        (2 * self.n1, 2 * self.n2)
    }

    /// `G q`.
    pub fn apply_g(&self, q: &[Complex64]) -> Result<Vec<Complex64>> {
        if q.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: q.len() });
        }
        let (n1, n2) = (self.n1, self.n2);
        let (p1, p2) = (2 * n1, 2 * n2);
        let mut buf = vec![Complex64::new(0.0, 0.0); p1 * n2];
        for (dst, src) in buf.chunks_mut(p1).zip(q.chunks(n1)) {
            dst[..n1].copy_from_slice(src);
        }
        fft_rows(&self.row_fwd, &mut buf, p1, n2);
        // Rows n2..2n2 are zero; the transpose pads each column with them.
        let mut cols = transpose_padded(&buf, p1, n2, p2);
        fft_rows(&self.col_fwd, &mut cols, p2, p1);
        cols.par_iter_mut().zip(self.spectrum.par_iter()).for_each(|(c, s)| *c *= s);
        fft_rows(&self.col_inv, &mut cols, p2, p1);
        // Only the first n2 rows of the result are needed.
        let mut rows = transpose_truncated(&cols, p2, p1, n2);
        fft_rows(&self.row_inv, &mut rows, p1, n2);
        let scale = 1.0 / (p1 * p2) as f64;
        let mut out = Vec::with_capacity(self.len());
        for row in rows.chunks(p1) {
            out.extend(row[..n1].iter().map(|v| v * scale));
        }
        Ok(out)
    }

    /// `q + b .* (G q)`.
    pub fn apply_forward(&self, b: &[f64], q: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: b.len() });
        }
        let mut y = self.apply_g(q)?;
        y.par_iter_mut().zip(b.par_iter().zip(q.par_iter())).for_each(|(y, (b, q))| *y = q + *b * *y);
        Ok(y)
    }
}

/// In-place FFT of `rows` consecutive rows of length `len`.
fn fft_rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], len: usize, rows: usize) {
    let data = &mut data[..len * rows];
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// Transpose of a `rows x cols` row-major array.
fn transpose(src: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
    transpose_padded(src, cols, rows, rows)
}

/// Transpose of a `rows x cols` array into `cols` rows of length `out_len`,
/// zero-filled past `rows`.
fn transpose_padded(src: &[Complex64], cols: usize, rows: usize, out_len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); cols * out_len];
    out.par_chunks_mut(out_len).enumerate().for_each(|(c, dst)| {
        for r in 0..rows {
            dst[r] = src[r * cols + c];
        }
    });
    out
}

/// The first `keep` rows of the transpose of a `rows x cols` array.
fn transpose_truncated(src: &[Complex64], cols: usize, rows: usize, keep: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); keep * rows];
    out.par_chunks_mut(rows).enumerate().for_each(|(c, dst)| {
        for r in 0..rows {
            dst[r] = src[r * cols + c];
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{kernel_matrix, kernel_matvec, rel_diff};
    use crate::discretization::fit_diagonal_correction;

    #[test]
    fn one_point_grid_is_scalar() {
        let g = UniformGrid::unit_square(1);
        let c = fit_diagonal_correction(2.0 * g.h).unwrap();
        let op = ConvolutionOperator::new(&g, 2.0, Some(&c));
        let y = op.apply_g(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((y[0] - g.h * g.h * c.tau).norm() < 1e-15);
        let op2 = ConvolutionOperator::new(&g, 2.0, None);
        assert!(op2.apply_g(&[Complex64::new(1.0, 0.0)]).unwrap()[0].norm() < 1e-16);
    }

    #[test]
    fn impulse_reproduces_dense_column() {
        let g = UniformGrid::unit_square(8);
        let c = fit_diagonal_correction(9.0 * g.h).unwrap();
        let op = ConvolutionOperator::new(&g, 9.0, Some(&c));
        assert_eq!(op.spectrum_shape(), (16, 16));
        let m = kernel_matrix(&g, 9.0, Some(&c)).unwrap();
        for i in [0, 9, 37, 63] {
            let mut e = vec![Complex64::new(0.0, 0.0); g.len()];
            e[i] = Complex64::new(1.0, 0.0);
            let y = op.apply_g(&e).unwrap();
            let col: Vec<Complex64> = (0..g.len()).map(|r| m[(r, i)]).collect();
            assert!(rel_diff(&y, &col) < 1e-12);
        }
    }

    #[test]
    fn rectangular_grid_matches_dense() {
        let g = UniformGrid::new([0.0, 0.0], 0.03, 13, 7).unwrap();
        let op = ConvolutionOperator::new(&g, 20.0, None);
        let q: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let y = op.apply_g(&q).unwrap();
        let d = kernel_matvec(&g, 20.0, None, &q).unwrap();
        assert!(rel_diff(&y, &d) < 1e-12);
    }

    #[test]
    fn zero_potential_is_identity() {
        let g = UniformGrid::unit_square(5);
        let op = ConvolutionOperator::new(&g, 3.0, None);
        let q: Vec<Complex64> = (0..25).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let y = op.apply_forward(&[0.0; 25], &q).unwrap();
        assert_eq!(y, q);
        assert!(op.apply_forward(&[0.0; 24], &q).is_err());
        assert!(op.apply_g(&q[1..]).is_err());
    }
}
