use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::tree::{proxy_ring, LatticeBox};
use crate::discretization::{kernel_entry, UniformGrid};
use crate::error::{Error, Result};

/// Accuracy of the proxy-ring basis for one box.
///
/// A square box of `side x side` points spanning `wavelengths` wavelengths
/// sits at the centre of a grid four times its size. With
/// `B = G(box, complement)` and `Q` an orthonormal basis for the range of
/// `G(box, proxy ring)`, returns `max|B - Q Q^* B| / max|B|`.
pub fn proxy_error(side: usize, wavelengths: f64, width: usize) -> Result<f64> {
    if side < 2 || !(1..=3).contains(&width) || !(wavelengths > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "proxy test needs side >= 2, width 1..=3 and a positive size, got {side}, {width}, {wavelengths}"
        )));
    }
    let n = 4 * side;
    let grid = UniformGrid::unit_square(n);
    let kappa = 2.0 * PI * wavelengths / (side as f64 * grid.h);
    let off = (n - side) as i64 / 2;
    let b = LatticeBox { x0: off, y0: off, nx: side, ny: side };
    let targets: Vec<(i64, i64)> = b.points().collect();
    let outside: Vec<(i64, i64)> =
        LatticeBox { x0: 0, y0: 0, nx: n, ny: n }.points().filter(|p| !b.contains(*p)).collect();
    let proxy = proxy_ring(&b, width);
    let block = |cols: &[(i64, i64)]| {
        let entries: Vec<Complex64> = cols
            .par_iter()
            .flat_map_iter(|c| {
                targets.iter().map(move |t| kernel_entry(&grid, (t.0 - c.0, t.1 - c.1), kappa, None))
            })
            .collect();
        Mat::from_fn(targets.len(), cols.len(), |i, j| entries[j * targets.len() + i])
    };
    let far = block(&outside);
    // The proxy block is numerically rank deficient at width 3; without
    // pivoting the computed basis stalls near 1e-13.
    let q = block(&proxy).col_piv_qr().compute_thin_Q();
    let resid = &far - &q * (q.adjoint() * &far);
    Ok(resid.norm_max() / far.norm_max())
}
