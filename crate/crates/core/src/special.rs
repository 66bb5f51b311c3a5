//! Bessel, Hankel and error functions on the real line.
//!
//! `J0`/`Y0` and their first-order companions use the classic two-regime
//! rational approximations (polynomial/rational fits for `x < 8` and the
//! Hankel amplitude-phase asymptotics beyond), as implemented by the `libm`
//! crate. The wrappers here fix the domain conventions the rest of the
//! crate relies on.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bessel function of the first kind of order zero.
#[inline]
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Bessel function of the first kind of order one.
#[inline]
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Bessel function of the second kind of order zero.
///
/// Logarithmically singular at the origin, so `x <= 0` is rejected.
pub fn bessel_y0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Y0 requires x > 0, got {x}")));
    }
    Ok(libm::y0(x))
}

/// Bessel function of the second kind of order one, `x > 0`.
pub fn bessel_y1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Y1 requires x > 0, got {x}")));
    }
    Ok(libm::y1(x))
}

/// Hankel function of the first kind of order zero, `H0(x) = J0(x) + i Y0(x)`.
pub fn hankel_h0(x: f64) -> Result<Complex64> {
    let y = bessel_y0(x)?;
    Ok(Complex64::new(bessel_j0(x), y))
}

/// Unchecked `H0` for hot loops where `x > 0` is guaranteed by construction.
#[inline]
pub(crate) fn hankel_h0_unchecked(x: f64) -> Complex64 {
    debug_assert!(x > 0.0);
    Complex64::new(libm::j0(x), libm::y0(x))
}

/// The error function.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}
