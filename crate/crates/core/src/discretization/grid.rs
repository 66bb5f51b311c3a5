use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    /// The default computational domain `[-0.5, 0.5]^2`.
    pub fn unit_centered() -> Self {
        Self::new(-0.5, -0.5, 0.5, 0.5)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }
}

/// Cell-centred uniform lattice on a rectangle.
///
/// Point `i` sits at `origin + h * (i % n1, i / n1)`; `origin` is the centre
/// of the lower-left cell so the `n1 x n2` cells tile the rectangle exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: [f64; 2],
    pub h: f64,
    pub n1: usize,
    pub n2: usize,
}

impl UniformGrid {
    pub fn new(origin: [f64; 2], h: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("mesh width must be positive, got {h}")));
        }
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        Ok(Self { origin, h, n1, n2 })
    }

    /// `n x n` grid of mesh width `1/n` on `[-0.5, 0.5]^2`.
    pub fn unit_square(n: usize) -> Self {
        let h = 1.0 / n as f64;
        Self { origin: [-0.5 + 0.5 * h, -0.5 + 0.5 * h], h, n1: n, n2: n }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice coordinates `(ix, iy)` of point `i`.
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.n1, i / self.n1)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n1 + ix
    }

    /// Physical location of lattice coordinates, which may lie outside the grid.
    #[inline]
    pub fn lattice_point(&self, ix: i64, iy: i64) -> [f64; 2] {
        [
            self.origin[0] + self.h * ix as f64,
            self.origin[1] + self.h * iy as f64,
        ]
    }

    #[inline]
    pub fn point(&self, i: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(i);
        self.lattice_point(ix as i64, iy as i64)
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// The rectangle tiled by the grid cells.
    pub fn domain(&self) -> Rect {
        let x0 = self.origin[0] - 0.5 * self.h;
        let y0 = self.origin[1] - 0.5 * self.h;
        Rect::new(x0, y0, x0 + self.h * self.n1 as f64, y0 + self.h * self.n2 as f64)
    }

    /// Index of the grid point at `x`, if `x` coincides with one.
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let fx = (x[0] - self.origin[0]) / self.h;
        let fy = (x[1] - self.origin[1]) / self.h;
        let (rx, ry) = (fx.round(), fy.round());
        let tol = 1e-9;
        if (fx - rx).abs() > tol || (fy - ry).abs() > tol {
            return None;
        }
        if rx < 0.0 || ry < 0.0 || rx >= self.n1 as f64 || ry >= self.n2 as f64 {
            return None;
        }
        Some(self.index(rx as usize, ry as usize))
    }

    /// Nearest grid index to `x` (clamped into the grid).
    pub fn nearest(&self, x: [f64; 2]) -> usize {
        let fx = ((x[0] - self.origin[0]) / self.h).round();
        let fy = ((x[1] - self.origin[1]) / self.h).round();
        let ix = fx.clamp(0.0, (self.n1 - 1) as f64) as usize;
        let iy = fy.clamp(0.0, (self.n2 - 1) as f64) as usize;
        self.index(ix, iy)
    }
}

/// Places a uniform grid of mesh width at most `target_h` on `domain`.
///
/// The first side fixes `h = width / ceil(width / target_h)`; the second
/// side is stretched symmetrically about its centre to the next multiple of `h`.
pub fn build_grid(domain: Rect, target_h: f64) -> Result<UniformGrid> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::InvalidParameter(format!("target mesh width must be positive, got {target_h}")));
    }
    let (w, ht) = (domain.width(), domain.height());
    if !(w > 0.0 && ht > 0.0) {
        return Err(Error::InvalidParameter("degenerate domain".into()));
    }
    let n1 = ((w / target_h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = w / n1 as f64;
    let n2 = ((ht / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let cy = domain.center()[1];
    let y0 = cy - 0.5 * h * n2 as f64;
    UniformGrid::new([domain.x0 + 0.5 * h, y0 + 0.5 * h], h, n1, n2)
}
