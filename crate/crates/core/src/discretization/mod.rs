//! Nystrom discretization of the Lippmann-Schwinger equation on a uniform grid.

pub mod grid;
pub mod kernel;
pub mod potential;
pub mod quadrature;

use num_complex::Complex64;
use rayon::prelude::*;

pub use grid::{build_grid, Rect, UniformGrid};
pub use kernel::{
    fit_diagonal_correction, fit_diagonal_correction_with, greens_function, kernel_entry, CorrectionOrder,
    CorrectionTable, KernelTable,
};
pub use potential::{IncidentField, PotentialSpec};

use crate::error::{Error, Result};

/// A complete scattering problem: grid, physics and quadrature order.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kappa: f64,
    pub potential: PotentialSpec,
    pub incident: IncidentField,
    pub order: CorrectionOrder,
    pub grid: UniformGrid,
}

impl ProblemSpec {
    pub fn new(
        grid: UniformGrid,
        kappa: f64,
        potential: PotentialSpec,
        incident: IncidentField,
        order: CorrectionOrder,
    ) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {kappa}")));
        }
        Ok(Self { kappa, potential, incident, order, grid })
    }

    /// Correction table for this problem's order, if any.
    pub fn correction(&self) -> Result<Option<CorrectionTable>> {
        match self.order {
            CorrectionOrder::Second => Ok(None),
            CorrectionOrder::Fourth => fit_diagonal_correction(self.kappa * self.grid.h).map(Some),
        }
    }

    /// Diagonal of `B`: `kappa^2 b(x_i)`.
    pub fn b_diagonal(&self) -> Vec<f64> {
        let k2 = self.kappa * self.kappa;
        self.grid.points().map(|x| k2 * self.potential.value(x)).collect()
    }

    pub fn incident_on_grid(&self) -> Vec<Complex64> {
        self.grid.points().map(|x| self.incident.value(self.kappa, x)).collect()
    }
}

/// Right-hand side `f(i) = -kappa^2 b(x_i) u_inc(x_i)`.
pub fn assemble_rhs(spec: &ProblemSpec) -> Vec<Complex64> {
    let k2 = spec.kappa * spec.kappa;
    spec.grid
        .points()
        .map(|x| -k2 * spec.potential.value(x) * spec.incident.value(spec.kappa, x))
        .collect()
}

/// Scattered field `u(x) = sum_j G(x, x_j) q(j)` with the quadrature weights
/// of the discretization, by direct summation.
///
/// A target that coincides with a grid point uses the diagonal weight of the
/// matrix (`h^2 tau`, or nothing for the punctured rule).
pub fn evaluate_scattered_field(
    grid: &UniformGrid,
    kappa: f64,
    corr: Option<&CorrectionTable>,
    q: &[Complex64],
    targets: &[[f64; 2]],
) -> Result<Vec<Complex64>> {
    if q.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: q.len() });
    }
    let h2 = grid.h * grid.h;
    Ok(targets
        .par_iter()
        .map(|&x| {
            let hit = grid.locate(x);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &qj) in q.iter().enumerate() {
                if qj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if Some(j) == hit {
                    if let Some(c) = corr {
                        acc += h2 * c.tau * qj;
                    }
                    continue;
                }
                let y = grid.point(j);
                let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                acc += h2 * greens_function(kappa, r) * qj;
            }
            acc
        })
        .collect())
}

/// Five-point finite-difference check of the Helmholtz equation
/// `Lap u + kappa^2 (1 - b) u = 0` for the total field `u = u_inc + u_s`,
/// with `u_s` from [`evaluate_scattered_field`] on grid points.
///
/// At each probe (snapped to the nearest grid point at least one cell away
/// from the grid edge) returns `|L_h u| / (kappa^2 max |u|)`, the maximum
/// taken over the five stencil points.
pub fn helmholtz_defect(spec: &ProblemSpec, q: &[Complex64], probes: &[[f64; 2]]) -> Result<Vec<f64>> {
    let grid = &spec.grid;
    if grid.n1 < 3 || grid.n2 < 3 {
        return Err(Error::InvalidParameter("the stencil needs a grid of at least 3 x 3 points".into()));
    }
    let corr = spec.correction()?;
    let k2 = spec.kappa * spec.kappa;
    let h = grid.h;
    probes
        .iter()
        .map(|&p| {
            let (ix, iy) = grid.coords(grid.nearest(p));
            let (ix, iy) = (ix.clamp(1, grid.n1 - 2), iy.clamp(1, grid.n2 - 2));
            let stencil = [(ix, iy), (ix + 1, iy), (ix - 1, iy), (ix, iy + 1), (ix, iy - 1)];
            let pts: Vec<[f64; 2]> = stencil.iter().map(|&(x, y)| grid.point(grid.index(x, y))).collect();
            let us = evaluate_scattered_field(grid, spec.kappa, corr.as_ref(), q, &pts)?;
            let u: Vec<Complex64> =
                pts.iter().zip(&us).map(|(&x, s)| spec.incident.value(spec.kappa, x) + s).collect();
            let lap = (u[1] + u[2] + u[3] + u[4] - 4.0 * u[0]) / (h * h);
            let defect = lap + k2 * (1.0 - spec.potential.value(pts[0])) * u[0];
            let scale = k2 * u.iter().map(|v| v.norm()).fold(0.0, f64::max);
            Ok(defect.norm() / scale)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(potential: PotentialSpec, kappa: f64) -> ProblemSpec {
        ProblemSpec::new(
            UniformGrid::unit_square(8),
            kappa,
            potential,
            IncidentField::along_x(),
            CorrectionOrder::Second,
        )
        .unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_rhs() {
        let f = assemble_rhs(&problem(PotentialSpec::Zero, 3.0));
        assert!(f.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn unit_potential_gives_negative_plane_wave() {
        let p = problem(PotentialSpec::Gaussian { amplitude: 1.0, width: 0.0 }, 1.0);
        let f = assemble_rhs(&p);
        for (i, v) in f.iter().enumerate() {
            let x = p.grid.point(i);
            assert!((v + Complex64::from_polar(1.0, x[0])).norm() < 1e-15);
        }
    }

    #[test]
    fn gaussian_rhs_near_origin() {
        let mut p = problem(PotentialSpec::gaussian(), 25.0);
        p.grid = UniformGrid::unit_square(81);
        let f = assemble_rhs(&p);
        let i = p.grid.nearest([0.0, 0.0]);
        assert!((f[i].norm() - 25.0 * 25.0 * 1.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_kappa() {
        let g = UniformGrid::unit_square(4);
        let r = ProblemSpec::new(g, 0.0, PotentialSpec::Zero, IncidentField::along_x(), CorrectionOrder::Second);
        assert!(r.is_err());
    }

    #[test]
    fn field_from_zero_density_vanishes() {
        let g = UniformGrid::unit_square(6);
        let q = vec![Complex64::new(0.0, 0.0); g.len()];
        let u = evaluate_scattered_field(&g, 2.0, None, &q, &[[0.0, 0.0], [3.0, 1.0]]).unwrap();
        assert!(u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn single_charge_far_target() {
        let g = UniformGrid::unit_square(6);
        let mut q = vec![Complex64::new(0.0, 0.0); g.len()];
        q[7] = Complex64::new(1.0, 0.0);
        let x = [2.0, -1.0];
        let u = evaluate_scattered_field(&g, 2.0, None, &q, &[x]).unwrap();
        let y = g.point(7);
        let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        let expect = g.h * g.h * greens_function(2.0, r);
        assert!((u[0] - expect).norm() < 1e-16);
        assert!(evaluate_scattered_field(&g, 2.0, None, &q[1..], &[x]).is_err());
    }
}
