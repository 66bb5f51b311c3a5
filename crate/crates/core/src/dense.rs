//! Dense reference operators: explicit assembly of `G` and `I + BG`, direct
//! matvecs and LU solves. Used as oracles and for small subproblems.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::triangular_solve::{solve_unit_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, MatMut, MatRef, Par};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::discretization::{CorrectionTable, KernelTable, UniformGrid};
use crate::error::{Error, Result};

/// Largest `N` for which a dense `N x N` matrix is assembled.
pub const DENSE_CAP: usize = 6400;

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::TooLarge { n, cap: DENSE_CAP });
    }
    Ok(())
}

/// The full kernel matrix `G`.
pub fn kernel_matrix(grid: &UniformGrid, kappa: f64, corr: Option<&CorrectionTable>) -> Result<Mat<Complex64>> {
    check_cap(grid.len())?;
    let table = KernelTable::for_grid(grid, kappa, corr, 0);
    let n = grid.len();
    Ok(Mat::from_fn(n, n, |i, j| {
        let (a, b) = (grid.coords(i), grid.coords(j));
        table.get(a.0 as i64 - b.0 as i64, a.1 as i64 - b.1 as i64)
    }))
}

/// The system matrix `I + diag(b) G`.
pub fn system_matrix(
    grid: &UniformGrid,
    kappa: f64,
    corr: Option<&CorrectionTable>,
    b: &[f64],
) -> Result<Mat<Complex64>> {
    if b.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: b.len() });
    }
    let mut a = kernel_matrix(grid, kappa, corr)?;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            a[(i, j)] *= b[i];
        }
        a[(i, i)] += 1.0;
    }
    Ok(a)
}

/// `G q` by direct summation, without storing `G`.
pub fn kernel_matvec(
    grid: &UniformGrid,
    kappa: f64,
    corr: Option<&CorrectionTable>,
    q: &[Complex64],
) -> Result<Vec<Complex64>> {
    if q.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: q.len() });
    }
    let table = KernelTable::for_grid(grid, kappa, corr, 0);
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = grid.coords(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &qj) in q.iter().enumerate() {
                let (jx, jy) = grid.coords(j);
                acc += table.get(ix as i64 - jx as i64, iy as i64 - jy as i64) * qj;
            }
            acc
        })
        .collect())
}

/// Partial-pivoting LU in packed form, with its growth factor
/// `max|U| / max|A|`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    packed: Mat<Complex64>,
    perm: Vec<usize>,
    perm_inv: Vec<usize>,
    pub growth: f64,
}

impl DenseLu {
    /// Factors `a`; returns `None` if a pivot vanishes or is not finite.
    pub fn factor(a: MatRef<'_, Complex64>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut packed = a.to_owned();
        let mut perm = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let par = if n >= 512 { crate::blocks::par() } else { Par::Seq };
        lu_in_place(
            packed.as_mut(),
            &mut perm,
            &mut perm_inv,
            par,
            MemStack::new(&mut MemBuffer::new(lu_in_place_scratch::<usize, Complex64>(n, n, par, Default::default()))),
            Default::default(),
        );
        Self::from_parts(packed, perm, a.norm_max())
    }

    /// Rebuilds from a packed factorization, validating its pivots.
    pub(crate) fn from_parts(packed: Mat<Complex64>, perm: Vec<usize>, amax: f64) -> Option<Self> {
        let n = packed.nrows();
        let mut umax = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                let v = packed[(i, j)].norm();
                if !v.is_finite() {
                    return None;
                }
                umax = umax.max(v);
            }
        }
        for i in 0..n {
            let p = packed[(i, i)].norm();
            if p == 0.0 || p <= f64::EPSILON * 1e-3 * amax {
                return None;
            }
        }
        let mut perm_inv = vec![0usize; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n {
                return None;
            }
            perm_inv[p] = i;
        }
        let growth = if amax > 0.0 { umax / amax } else { 1.0 };
        Some(Self { packed, perm, perm_inv, growth })
    }

    /// Rebuilds from stored parts, rejecting non-finite entries, zero pivots
    /// and malformed permutations.
    pub(crate) fn restore(packed: Mat<Complex64>, perm: Vec<usize>, growth: f64) -> Option<Self> {
        let n = packed.nrows();
        if packed.ncols() != n || perm.len() != n {
            return None;
        }
        for j in 0..n {
            for i in 0..n {
                if !packed[(i, j)].re.is_finite() || !packed[(i, j)].im.is_finite() {
                    return None;
                }
            }
            if packed[(j, j)].norm() == 0.0 {
                return None;
            }
        }
        let mut perm_inv = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || perm_inv[p] != usize::MAX {
                return None;
            }
            perm_inv[p] = i;
        }
        Some(Self { packed, perm, perm_inv, growth })
    }

    pub fn dim(&self) -> usize {
        self.packed.nrows()
    }

    pub(crate) fn packed(&self) -> MatRef<'_, Complex64> {
        self.packed.as_ref()
    }

    pub(crate) fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Overwrites `rhs` with `A^{-1} rhs`.
    pub fn solve_in_place(&self, mut rhs: MatMut<'_, Complex64>) {
        let n = self.dim();
        debug_assert_eq!(rhs.nrows(), n);
        debug_assert_eq!(self.perm_inv.len(), n);
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..rhs.ncols() {
            for i in 0..n {
                tmp[i] = rhs[(self.perm[i], j)];
            }
            for i in 0..n {
                rhs[(i, j)] = tmp[i];
            }
        }
        let lu = self.packed.as_ref();
        solve_unit_lower_triangular_in_place(lu, rhs.as_mut(), Par::Seq);
        solve_upper_triangular_in_place(lu, rhs, Par::Seq);
    }

    pub fn solve_vec(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut v = rhs.to_vec();
        self.solve_in_place(crate::blocks::view_mut(&mut v, rhs.len(), 1));
        v
    }

    /// The explicit inverse.
    pub fn inverse(&self) -> Mat<Complex64> {
        let n = self.dim();
        let mut m = Mat::<Complex64>::identity(n, n);
        self.solve_in_place(m.as_mut());
        m
    }
}

/// Solves `(I + diag(b) G) q = f` densely.
pub fn dense_solve(
    grid: &UniformGrid,
    kappa: f64,
    corr: Option<&CorrectionTable>,
    b: &[f64],
    f: &[Complex64],
) -> Result<Vec<Complex64>> {
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: f.len() });
    }
    let a = system_matrix(grid, kappa, corr, b)?;
    let lu = DenseLu::factor(a.as_ref()).ok_or(Error::SingularLeaf { leaf: 0 })?;
    Ok(lu.solve_vec(f))
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b|| / ||b||`.
pub fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    d / norm2(b).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::fit_diagonal_correction;

    #[test]
    fn kernel_matrix_is_complex_symmetric() {
        let g = UniformGrid::new([0.0, 0.0], 0.05, 7, 5).unwrap();
        let c = fit_diagonal_correction(10.0 * g.h).unwrap();
        let m = kernel_matrix(&g, 10.0, Some(&c)).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn matvec_matches_matrix() {
        let g = UniformGrid::unit_square(6);
        let m = kernel_matrix(&g, 5.0, None).unwrap();
        let q: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let y = kernel_matvec(&g, 5.0, None, &q).unwrap();
        for i in 0..g.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..g.len() {
                acc += m[(i, j)] * q[j];
            }
            assert!((acc - y[i]).norm() < 1e-14 * acc.norm().max(1.0));
        }
    }

    #[test]
    fn lu_solves_and_reports_growth() {
        let a = Mat::from_fn(3, 3, |i, j| Complex64::new(if i == j { 4.0 } else { 1.0 }, (i + j) as f64 * 0.1));
        let lu = DenseLu::factor(a.as_ref()).unwrap();
        let x = lu.solve_vec(&[Complex64::new(1.0, 0.0); 3]);
        for i in 0..3 {
            let r: Complex64 = (0..3).map(|j| a[(i, j)] * x[j]).sum();
            assert!((r - 1.0).norm() < 1e-14);
        }
        assert!(lu.growth >= 1.0 && lu.growth < 2.0);
        assert!(DenseLu::factor(Mat::<Complex64>::zeros(2, 2).as_ref()).is_none());
    }

    #[test]
    fn refuses_large() {
        let g = UniformGrid::unit_square(81);
        assert!(matches!(kernel_matrix(&g, 1.0, None), Err(Error::TooLarge { .. })));
    }
}
