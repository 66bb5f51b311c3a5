//! GMRES with optional left preconditioning, and a dense spectrum probe of
//! the preconditioned operator.

use web_time::Instant;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dense::norm2;
use crate::error::{Error, Result};

/// A linear operator on complex vectors.
pub type Operator<'a> = &'a (dyn Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync);

/// Largest `N` accepted by [`spectrum_probe`].
pub const SPECTRUM_CAP: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    /// Target for the relative residual.
    pub tol: f64,
    /// Cap on the total number of iterations.
    pub maxit: usize,
    /// Krylov space size per cycle; `None` keeps the full history.
    pub restart: Option<usize>,
}

impl GmresConfig {
    pub fn new(tol: f64, maxit: usize) -> Self {
        Self { tol, maxit, restart: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("GMRES tolerance must be positive, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidParameter("GMRES needs maxit >= 1".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::InvalidParameter("GMRES restart length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationLog {
    /// Relative preconditioned residual after each iteration.
    pub residuals: Vec<f64>,
    /// `||A q - f|| / ||f||` of the returned iterate.
    pub true_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall time in seconds.
    pub time: f64,
}

/// Rotation `[c, s; -conj(s), c]` taking `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let r = a.norm().hypot(b.norm());
    (a.norm() / r, a * b.conj() / (a.norm() * r))
}

fn rotate(c: f64, s: Complex64, x: &mut Complex64, y: &mut Complex64) {
    let (a, b) = (*x, *y);
    *x = c * a + s * b;
    *y = -s.conj() * a + c * b;
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
}

fn residual(apply_a: Operator<'_>, f: &[Complex64], q: &[Complex64]) -> Result<Vec<Complex64>> {
    let aq = apply_a(q)?;
    Ok(f.iter().zip(&aq).map(|(f, a)| f - a).collect())
}

/// Solves `A q = f` by GMRES on `M A q = M f`.
///
/// Convergence is monitored on the preconditioned residual. When it reaches
/// the target, the true residual is recomputed; if that is still above
/// `tol`, the iteration restarts from the current iterate with a tighter
/// internal target. On hitting `maxit` the best iterate is returned with
/// `converged = false`.
pub fn gmres(
    apply_a: Operator<'_>,
    apply_m: Option<Operator<'_>>,
    f: &[Complex64],
    cfg: &GmresConfig,
) -> Result<(Vec<Complex64>, IterationLog)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = f.len();
    let mut log = IterationLog::default();
    let fnorm = norm2(f);
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    if fnorm == 0.0 {
        log.converged = true;
        log.time = start.elapsed().as_secs_f64();
        return Ok((q, log));
    }
    if f.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidParameter("right-hand side is not finite".into()));
    }
    let precond = |v: Vec<Complex64>| -> Result<Vec<Complex64>> {
        match apply_m {
            Some(m) => m(&v),
            None => Ok(v),
        }
    };
    let op = |v: &[Complex64]| -> Result<Vec<Complex64>> { precond(apply_a(v)?) };
    let mf_norm = norm2(&precond(f.to_vec())?);
    let mut target = cfg.tol;

    loop {
        let r0 = precond(residual(apply_a, f, &q)?)?;
        let beta = norm2(&r0);
        if beta / mf_norm <= target {
            let t = norm2(&residual(apply_a, f, &q)?) / fnorm;
            if t <= cfg.tol || log.iterations >= cfg.maxit {
                log.true_residual = t;
                log.converged = t <= cfg.tol;
                break;
            }
            target *= 0.5 * cfg.tol / t;
            continue;
        }
        let m = cfg.restart.unwrap_or(cfg.maxit).min(cfg.maxit - log.iterations);
        if m == 0 {
            log.true_residual = norm2(&residual(apply_a, f, &q)?) / fnorm;
            break;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r0.iter().map(|v| v / beta).collect()];
        // Column j of the Hessenberg matrix, already rotated.
        let mut hess: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(m);
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut reached = false;
        for j in 0..m {
            let mut w = op(&basis[j])?;
            let before = norm2(&w);
            let mut h = vec![Complex64::new(0.0, 0.0); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                h[i] = c;
                axpy(&mut w, -c, v);
            }
            if norm2(&w) < 0.7 * before {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[i] += c;
                    axpy(&mut w, -c, v);
                }
            }
            let hn = norm2(&w);
            h[j + 1] = Complex64::new(hn, 0.0);
            for (i, &(c, s)) in rots.iter().enumerate() {
                let (a, b) = h.split_at_mut(i + 1);
                rotate(c, s, &mut a[i], &mut b[0]);
            }
            let (c, s) = givens(h[j], h[j + 1]);
            let (a, b) = h.split_at_mut(j + 1);
            rotate(c, s, &mut a[j], &mut b[0]);
            rots.push((c, s));
            g.push(Complex64::new(0.0, 0.0));
            let (a, b) = g.split_at_mut(j + 1);
            rotate(c, s, &mut a[j], &mut b[0]);
            h.truncate(j + 1);
            hess.push(h);
            log.iterations += 1;
            let est = g[j + 1].norm() / mf_norm;
            log.residuals.push(est);
            let breakdown = hn <= 1e-14 * before.max(f64::MIN_POSITIVE);
            if est <= target || breakdown {
                reached = true;
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // Back substitution on the rotated triangle.
        let k = hess.len();
        let mut y = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, col) in hess.iter().enumerate().skip(i + 1) {
                s -= col[i] * y[jj];
            }
            y[i] = if hess[i][i].norm() > 0.0 { s / hess[i][i] } else { Complex64::new(0.0, 0.0) };
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut q, *yi, &basis[i]);
        }
        if !reached && log.iterations >= cfg.maxit {
            log.true_residual = norm2(&residual(apply_a, f, &q)?) / fnorm;
            break;
        }
    }
    log.time = start.elapsed().as_secs_f64();
    Ok((q, log))
}

/// Eigenvalues of `M A`, assembled densely column by column, ordered by
/// decreasing distance from 1. At most `n_eigs` are returned when given.
pub fn spectrum_probe(
    apply_a: Operator<'_>,
    apply_m: Option<Operator<'_>>,
    n: usize,
    n_eigs: Option<usize>,
) -> Result<Vec<Complex64>> {
    if n > SPECTRUM_CAP {
        return Err(Error::TooLarge { n, cap: SPECTRUM_CAP });
    }
    let cols = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            let a = apply_a(&e)?;
            match apply_m {
                Some(m) => m(&a),
                None => Ok(a),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mat = Mat::from_fn(n, n, |i, j| cols[j][i]);
    let mut ev = mat.eigenvalues().map_err(|_| Error::Eigen)?;
    ev.sort_by(|a, b| (b - 1.0).norm().total_cmp(&(a - 1.0).norm()));
    if let Some(k) = n_eigs {
        ev.truncate(k);
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::rel_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    fn matrix_op(a: &Mat<Complex64>) -> impl Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync + '_ {
        move |v| Ok((0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum()).collect())
    }

    fn test_matrix(n: usize, seed: u64) -> Mat<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |i, j| {
            let d = if i == j { Complex64::new(2.0 + i as f64 * 0.05, 0.3) } else { Complex64::new(0.0, 0.0) };
            d + Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (0.8 / (n as f64).sqrt())
        })
    }

    #[test]
    fn identity_converges_in_one_step() {
        let id = |v: &[Complex64]| Ok(v.to_vec());
        let f = random_vec(30, 1);
        let (q, log) = gmres(&id, None, &f, &GmresConfig::new(1e-12, 10)).unwrap();
        assert_eq!(log.iterations, 1);
        assert!(log.converged);
        assert!(rel_diff(&q, &f) < 1e-14);
    }

    #[test]
    fn zero_rhs() {
        let id = |v: &[Complex64]| Ok(v.to_vec());
        let (q, log) = gmres(&id, None, &[Complex64::new(0.0, 0.0); 5], &GmresConfig::new(1e-8, 3)).unwrap();
        assert!(q.iter().all(|v| v.norm() == 0.0));
        assert!(log.converged && log.iterations == 0);
    }

    #[test]
    fn solves_and_residuals_decrease() {
        let a = test_matrix(60, 2);
        let op = matrix_op(&a);
        let f = random_vec(60, 3);
        let (q, log) = gmres(&op, None, &f, &GmresConfig::new(1e-11, 100)).unwrap();
        assert!(log.converged);
        assert!(log.true_residual <= 1e-11);
        assert!(log.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let r = residual(&op, &f, &q).unwrap();
        assert!(norm2(&r) / norm2(&f) <= 1e-11);
    }

    #[test]
    fn exact_preconditioner_takes_one_step() {
        let a = test_matrix(40, 4);
        let lu = crate::dense::DenseLu::factor(a.as_ref()).unwrap();
        let op = matrix_op(&a);
        let m = |v: &[Complex64]| Ok(lu.solve_vec(v));
        let f = random_vec(40, 5);
        let (_, log) = gmres(&op, Some(&m), &f, &GmresConfig::new(1e-10, 20)).unwrap();
        assert!(log.converged);
        assert!(log.iterations <= 2);
    }

    #[test]
    fn cap_reports_non_convergence() {
        let a = test_matrix(50, 6);
        let op = matrix_op(&a);
        let f = random_vec(50, 7);
        let (_, log) = gmres(&op, None, &f, &GmresConfig::new(1e-14, 3)).unwrap();
        assert!(!log.converged);
        assert_eq!(log.iterations, 3);
        assert!(log.true_residual > 1e-14 && log.true_residual < 1.0);
    }

    #[test]
    fn restarted_still_converges() {
        let a = test_matrix(50, 8);
        let op = matrix_op(&a);
        let f = random_vec(50, 9);
        let cfg = GmresConfig { tol: 1e-10, maxit: 200, restart: Some(5) };
        let (_, log) = gmres(&op, None, &f, &cfg).unwrap();
        assert!(log.converged, "{log:?}");
    }

    #[test]
    fn rejects_bad_config() {
        let id = |v: &[Complex64]| Ok(v.to_vec());
        let f = random_vec(3, 1);
        assert!(gmres(&id, None, &f, &GmresConfig::new(0.0, 3)).is_err());
        assert!(gmres(&id, None, &f, &GmresConfig::new(1e-3, 0)).is_err());
    }

    #[test]
    fn spectrum_of_identity() {
        let id = |v: &[Complex64]| Ok(v.to_vec());
        let ev = spectrum_probe(&id, None, 12, None).unwrap();
        assert_eq!(ev.len(), 12);
        assert!(ev.iter().all(|l| (l - 1.0).norm() < 1e-13));
        assert!(spectrum_probe(&id, None, SPECTRUM_CAP + 1, None).is_err());
    }

    #[test]
    fn spectrum_is_sorted_by_distance() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { Complex64::new([1.5, 3.0, 0.9][i], 0.0) } else { 0.0.into() });
        let op = matrix_op(&a);
        let ev = spectrum_probe(&op, None, 3, Some(2)).unwrap();
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - 3.0).norm() < 1e-12 && (ev[1] - 1.5).norm() < 1e-12);
    }
}
