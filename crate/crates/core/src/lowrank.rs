//! Interpolative decompositions by truncated column-pivoted QR, and the
//! two-sided low-rank factors built from them.

use faer::{Mat, MatRef};
use num_complex::Complex64;

/// Row interpolative decomposition `A ~ X A(J, :)`.
#[derive(Debug, Clone)]
pub struct IdFactors {
    /// Skeleton rows `J`, in pivot order.
    pub skeleton: Vec<usize>,
    /// Interpolation matrix, `m x k`, with `X(J, :)` the identity.
    pub interp: Mat<Complex64>,
}

impl IdFactors {
    pub fn rank(&self) -> usize {
        self.skeleton.len()
    }
}

/// Low-rank factors `A ~ L R^*`.
#[derive(Debug, Clone)]
pub struct LrFactors {
    pub l: Mat<Complex64>,
    pub r: Mat<Complex64>,
}

impl LrFactors {
    pub fn rank(&self) -> usize {
        self.l.ncols()
    }
}

/// Column-pivoted Householder QR of `m` (columns stored contiguously),
/// stopped at the first step whose largest remaining column norm is below
/// `tol`. Returns the pivot order and the upper-trapezoidal `k x n` factor
/// (in pivoted column order).
fn truncated_cpqr(cols: &mut [Vec<Complex64>], tol: f64) -> (Vec<usize>, Vec<Vec<Complex64>>) {
    let n = cols.len();
    let m = cols.first().map_or(0, |c| c.len());
    let mut perm: Vec<usize> = (0..n).collect();
    let kmax = m.min(n);
    let mut k = 0;
    let mut v = vec![Complex64::new(0.0, 0.0); m];
    while k < kmax {
        // Exact trailing norms; the first index wins ties.
        let mut best = k;
        let mut best_norm = -1.0;
        for (j, col) in cols.iter().enumerate().skip(k) {
            let s: f64 = col[k..].iter().map(|x| x.norm_sqr()).sum();
            if s > best_norm {
                best_norm = s;
                best = j;
            }
        }
        let best_norm = best_norm.sqrt();
        if best_norm < tol || best_norm == 0.0 {
            break;
        }
        cols.swap(k, best);
        perm.swap(k, best);

        // Householder reflector taking cols[k][k..] to alpha e_1.
        let x0 = cols[k][k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * best_norm;
        let len = m - k;
        v[..len].copy_from_slice(&cols[k][k..]);
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 > 0.0 {
            for col in cols[k + 1..].iter_mut() {
                let tail = &mut col[k..];
                let dot: Complex64 = v[..len].iter().zip(tail.iter()).map(|(a, b)| a.conj() * b).sum();
                let f = dot * (2.0 / vnorm2);
                for (t, a) in tail.iter_mut().zip(&v[..len]) {
                    *t -= f * a;
                }
            }
        }
        cols[k][k] = alpha;
        for x in cols[k][k + 1..].iter_mut() {
            *x = Complex64::new(0.0, 0.0);
        }
        k += 1;
    }
    let r = cols.iter().map(|c| c[..k].to_vec()).collect();
    (perm, r)
}

/// Row ID of `a` to absolute tolerance `tol`.
///
/// The rank is the first CPQR step whose trailing column norm falls below
/// `tol`. Skeleton rows appear in pivot order.
pub fn id_rows(a: MatRef<'_, Complex64>, tol: f64) -> IdFactors {
    let (m, n) = (a.nrows(), a.ncols());
    // Column ID of the transpose: the columns of A^T are the rows of A.
    let mut cols: Vec<Vec<Complex64>> = (0..m).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let (perm, r) = truncated_cpqr(&mut cols, tol);
    let k = r.first().map_or(0, |c| c.len());
    let skeleton: Vec<usize> = perm[..k].to_vec();

    // T = R11^{-1} R12 by back substitution, one column of R12 at a time.
    let mut interp = Mat::<Complex64>::zeros(m, k);
    for (p, &row) in skeleton.iter().enumerate() {
        interp[(row, p)] = Complex64::new(1.0, 0.0);
    }
    let mut t = vec![Complex64::new(0.0, 0.0); k];
    for (c, &row) in perm.iter().enumerate().skip(k) {
        t.copy_from_slice(&r[c][..k]);
        for i in (0..k).rev() {
            let mut s = t[i];
            for j in i + 1..k {
                s -= r[j][i] * t[j];
            }
            t[i] = s / r[i][i];
        }
        for (p, &v) in t.iter().enumerate() {
            interp[(row, p)] = v;
        }
    }
    IdFactors { skeleton, interp }
}

/// `A ~ L R^*` from a row ID: `L = X`, `R = A(J, :)^*`.
pub fn lr_factor(a: MatRef<'_, Complex64>, tol: f64) -> LrFactors {
    let id = id_rows(a, tol);
    let r = Mat::from_fn(a.ncols(), id.rank(), |j, p| a[(id.skeleton[p], j)].conj());
    LrFactors { l: id.interp, r }
}

/// Largest interpolation-entry magnitude; zero for a rank-zero ID.
pub fn entry_magnitude_stats(x: MatRef<'_, Complex64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            m = m.max(x[(i, j)].norm());
        }
    }
    m
}

/// Frobenius norm of a matrix.
pub fn frobenius(a: MatRef<'_, Complex64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}
