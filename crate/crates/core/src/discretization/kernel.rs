//! Kernel matrix entries `G(i, j)` on the uniform grid and the single-point
//! diagonal correction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::UniformGrid;
use super::quadrature::integrate_adaptive;
use crate::error::{Error, Result};
use crate::special::hankel_h0_unchecked;

const I_QUARTER: Complex64 = Complex64::new(0.0, 0.25);

/// Quadrature order of the discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum CorrectionOrder {
    /// Punctured trapezoidal rule: the self-interaction is dropped.
    Second,
    /// Single-point correction: the diagonal carries the weight `h^2 tau`.
    Fourth,
}

impl CorrectionOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }
}

impl TryFrom<u32> for CorrectionOrder {
    type Error = String;

    fn try_from(v: u32) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            6 | 8 | 10 => Err(format!(
                "correction order {v} needs multi-point correction stencils, which are not supported; use 2 or 4"
            )),
            _ => Err(format!("unsupported correction order {v}; use 2 or 4")),
        }
    }
}

impl From<CorrectionOrder> for u32 {
    fn from(o: CorrectionOrder) -> u32 {
        o.as_u32()
    }
}

/// `(i/4) H0(kappa r)` for `r > 0`.
#[inline]
pub fn greens_function(kappa: f64, r: f64) -> Complex64 {
    I_QUARTER * hankel_h0_unchecked(kappa * r)
}

/// Entry of the kernel matrix for the index offset `(d1, d2)`.
///
/// Off the diagonal this is `h^2 (i/4) H0(kappa h |d|)`; on the diagonal it
/// is `h^2 tau` with a correction, or zero without one.
pub fn kernel_entry(grid: &UniformGrid, d: (i64, i64), kappa: f64, corr: Option<&CorrectionTable>) -> Complex64 {
    let h2 = grid.h * grid.h;
    if d == (0, 0) {
        return corr.map_or(Complex64::new(0.0, 0.0), |c| h2 * c.tau);
    }
    let r = ((d.0 * d.0 + d.1 * d.1) as f64).sqrt() * grid.h;
    h2 * greens_function(kappa, r)
}

/// Diagonal weight `tau(kappa h)` of the single-point corrected rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTable {
    pub tau: Complex64,
    pub kappa_h: f64,
    /// Gaussian exponent in lattice units (`alpha h^2`) of the fitting density.
    pub shape: f64,
}

/// Default fitting-density exponent in lattice units.
pub const DEFAULT_FIT_SHAPE: f64 = 2e-4;

/// `log(1e16)`: the fitting density is below `1e-16` outside the patch.
const PATCH_DECAY: f64 = 36.841361487904734;

/// Fits the diagonal weight for the given `kappa h`.
pub fn fit_diagonal_correction(kappa_h: f64) -> Result<CorrectionTable> {
    fit_diagonal_correction_with(kappa_h, DEFAULT_FIT_SHAPE)
}

/// Fits `tau` so that the corrected lattice rule reproduces the integral of
/// `G(x_c, y) phi(y)` exactly, where `phi` is the Gaussian combination
/// `2 exp(-(shape/2) |z|^2) - exp(-shape |z|^2)` in lattice units `y = x_c + h z`.
///
/// A single Gaussian leaves a defect in `tau` proportional to its exponent;
/// the combination cancels it. Each reference integral is radial:
/// `I / h^2 = int_0^inf (i/4) H0(kappa h rho) exp(-s rho^2) 2 pi rho drho`.
pub fn fit_diagonal_correction_with(kappa_h: f64, shape: f64) -> Result<CorrectionTable> {
    if !(kappa_h > 0.0 && kappa_h < PI) {
        return Err(Error::InvalidParameter(format!(
            "kappa*h = {kappa_h} outside (0, pi); the grid must resolve at least two points per wavelength"
        )));
    }
    if !(shape > 0.0 && shape < 1.0) {
        return Err(Error::InvalidParameter(format!("fit shape must be in (0, 1), got {shape}")));
    }
    let (reference, lattice) = fit_terms(kappa_h, shape);
    // phi equals one at the centre.
    Ok(CorrectionTable { tau: reference - lattice, kappa_h, shape })
}

impl CorrectionTable {
    /// Relative defect of the corrected rule on its own fitting integral.
    pub fn fit_residual(&self) -> f64 {
        let (reference, lattice) = fit_terms(self.kappa_h, self.shape);
        (lattice + self.tau - reference).norm() / reference.norm()
    }
}

fn fit_terms(kappa_h: f64, shape: f64) -> (Complex64, Complex64) {
    let half = 0.5 * shape;
    let reference = 2.0 * reference_integral(kappa_h, half) - reference_integral(kappa_h, shape);
    let lattice = 2.0 * punctured_lattice_sum(kappa_h, half) - punctured_lattice_sum(kappa_h, shape);
    (reference, lattice)
}

fn patch_radius(shape: f64) -> f64 {
    (PATCH_DECAY / shape).sqrt()
}

pub(crate) fn reference_integral(kappa_h: f64, shape: f64) -> Complex64 {
    let f = |rho: f64| {
        if rho == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        greens_function(kappa_h, rho) * ((-shape * rho * rho).exp() * 2.0 * PI * rho)
    };
    let r = patch_radius(shape) * 1.05;
    // Panels of about half a wavelength so the adaptive rule starts resolved.
    let panels = ((r * kappa_h / PI).ceil() as usize).max(8);
    integrate_adaptive(f, 0.0, r, panels, 1e-15)
}

/// `sum_{z != 0} (i/4) H0(kappa h |z|) exp(-shape |z|^2)` over the lattice.
pub(crate) fn punctured_lattice_sum(kappa_h: f64, shape: f64) -> Complex64 {
    let rmax = patch_radius(shape).ceil() as i64 + 1;
    let mut acc = NeumaierSum::default();
    // Sum over the octant a >= b >= 0 with multiplicities.
    for a in 1..=rmax {
        for b in 0..=a {
            let r2 = (a * a + b * b) as f64;
            let w = (-shape * r2).exp();
            if w < 1e-300 {
                break;
            }
            let mult = if b == 0 || b == a { 4.0 } else { 8.0 };
            acc.add(greens_function(kappa_h, r2.sqrt()) * (w * mult));
        }
    }
    acc.value()
}

/// Compensated complex summation.
#[derive(Default)]
struct NeumaierSum {
    sum: Complex64,
    comp: Complex64,
}

impl NeumaierSum {
    fn add(&mut self, v: Complex64) {
        let t = self.sum + v;
        let c = |s: f64, x: f64, t: f64| if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        self.comp.re += c(self.sum.re, v.re, t.re);
        self.comp.im += c(self.sum.im, v.im, t.im);
        self.sum = t;
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Kernel values for every offset `(|d1|, |d2|)` up to the given extents,
/// evaluated once and then looked up.
#[derive(Debug, Clone)]
pub struct KernelTable {
    e1: usize,
    e2: usize,
    values: Vec<Complex64>,
}

impl KernelTable {
    /// Table covering `|d1| <= e1` and `|d2| <= e2`.
    pub fn new(grid: &UniformGrid, kappa: f64, corr: Option<&CorrectionTable>, e1: usize, e2: usize) -> Self {
        let mut values = Vec::with_capacity((e1 + 1) * (e2 + 1));
        for b in 0..=e2 {
            for a in 0..=e1 {
                values.push(kernel_entry(grid, (a as i64, b as i64), kappa, corr));
            }
        }
        Self { e1, e2, values }
    }

    /// Covers every offset between two points of `grid` plus a margin.
    pub fn for_grid(grid: &UniformGrid, kappa: f64, corr: Option<&CorrectionTable>, margin: usize) -> Self {
        Self::new(grid, kappa, corr, grid.n1 + margin, grid.n2 + margin)
    }

    #[inline]
    pub fn get(&self, d1: i64, d2: i64) -> Complex64 {
        let (a, b) = (d1.unsigned_abs() as usize, d2.unsigned_abs() as usize);
        debug_assert!(a <= self.e1 && b <= self.e2, "offset ({d1}, {d2}) outside kernel table");
        self.values[b * (self.e1 + 1) + a]
    }

    pub fn extents(&self) -> (usize, usize) {
        (self.e1, self.e2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_without_correction_is_zero() {
        let g = UniformGrid::unit_square(10);
        assert_eq!(kernel_entry(&g, (0, 0), 5.0, None), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unit_offset_matches_hankel() {
        let g = UniformGrid::unit_square(10);
        let kappa = 1.0 / g.h;
        let v = kernel_entry(&g, (1, 0), kappa, None);
        let h0 = Complex64::new(0.7651976865579666, 0.08825696421567696);
        let expect = g.h * g.h * Complex64::new(0.0, 0.25) * h0;
        assert!((v - expect).norm() <= 1e-15 * expect.norm());
    }

    #[test]
    fn radial_symmetry() {
        let g = UniformGrid::unit_square(16);
        let a = kernel_entry(&g, (3, 4), 7.0, None);
        assert_eq!(a, kernel_entry(&g, (-3, -4), 7.0, None));
        assert_eq!(a, kernel_entry(&g, (4, 3), 7.0, None));
        assert_eq!(a, kernel_entry(&g, (0, 5), 7.0, None));
    }

    #[test]
    fn corrected_diagonal() {
        let g = UniformGrid::unit_square(20);
        let c = fit_diagonal_correction(3.0 * g.h).unwrap();
        let d = kernel_entry(&g, (0, 0), 3.0, Some(&c));
        assert_eq!(d, g.h * g.h * c.tau);
    }

    #[test]
    fn fit_reproduces_its_integral() {
        let c = fit_diagonal_correction(0.5).unwrap();
        assert!(c.tau.re.is_finite() && c.tau.im.is_finite());
        assert!(c.fit_residual() <= 1e-10, "residual {:e}", c.fit_residual());
    }

    #[test]
    fn reference_integral_matches_closed_form() {
        // -exp(-c) Ei(c) / (4 s) + i pi exp(-c) / (4 s) with c = (kappa h)^2 / (4 s),
        // evaluated at 40 digits.
        let cases = [
            (0.5, 2e-5, -4.0012808199874402468, 0.0),
            (1.0, 1e-3, -1.004032390269914437, 0.0),
            (2.0, 1e-2, -0.25255156319370892786, 0.0),
            (0.3, 0.05, -0.9081591279530057579, 10.015839584285008953),
        ];
        for (kh, s, re, im) in cases {
            let v = reference_integral(kh, s);
            let exact = Complex64::new(re, im);
            assert!((v - exact).norm() <= 1e-12 * exact.norm(), "kh={kh} s={s}: {v} vs {exact}");
        }
    }

    #[test]
    fn fit_is_shape_independent() {
        let a = fit_diagonal_correction_with(0.2, 4e-4).unwrap().tau;
        let b = fit_diagonal_correction_with(0.2, 5e-5).unwrap().tau;
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn imaginary_part_is_smooth_limit() {
        // Im G is smooth, so the lattice rule integrates it exactly and the
        // correction carries J0(0)/4.
        for kh in [0.05, 0.5, 1.5] {
            let t = fit_diagonal_correction(kh).unwrap().tau;
            assert!((t.im - 0.25).abs() < 1e-9, "{kh}: {t}");
        }
    }

    #[test]
    fn fit_is_continuous() {
        let a = fit_diagonal_correction(0.5).unwrap().tau;
        let b = fit_diagonal_correction(0.501).unwrap().tau;
        assert!((a - b).norm() < 1e-2 * a.norm(), "{a} vs {b}");
    }

    #[test]
    fn fit_rejects_underresolved() {
        assert!(fit_diagonal_correction(0.0).is_err());
        assert!(fit_diagonal_correction(PI).is_err());
        assert!(fit_diagonal_correction(4.0).is_err());
    }

    #[test]
    fn order_parsing() {
        assert_eq!(CorrectionOrder::try_from(2).unwrap(), CorrectionOrder::Second);
        assert_eq!(CorrectionOrder::try_from(4).unwrap(), CorrectionOrder::Fourth);
        let e = CorrectionOrder::try_from(10).unwrap_err();
        assert!(e.contains("not supported"));
        assert!(CorrectionOrder::try_from(3).is_err());
    }

    #[test]
    fn table_matches_direct_entries() {
        let g = UniformGrid::unit_square(12);
        let c = fit_diagonal_correction(4.0 * g.h).unwrap();
        let t = KernelTable::for_grid(&g, 4.0, Some(&c), 3);
        for &(a, b) in &[(0, 0), (1, 0), (-5, 7), (14, -15), (0, 12)] {
            assert_eq!(t.get(a, b), kernel_entry(&g, (a, b), 4.0, Some(&c)));
        }
    }
}
