use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::UniformGrid;
use crate::error::{Error, Result};
use crate::special::erf;

/// Scattering potential `b(x)` on the plane; zero outside its support.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Zero,
    /// `amplitude * exp(-width * |x|^2)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `(1 - sin(theta/2)^500) exp(-2000 (0.1 - r^2)^2)`, opening towards `-x1`.
    Cavity,
    /// `4 (x2 - 0.1) (1 - erf(25 (|x| - 0.3)))`.
    Lens,
    RandomBumps(RandomBumps),
    PhotonicCrystal(PhotonicCrystal),
    Tabulated(Tabulated),
}

impl PotentialSpec {
    /// The Gaussian bump with amplitude 1.5 and exponent 160.
    pub fn gaussian() -> Self {
        Self::Gaussian { amplitude: 1.5, width: 160.0 }
    }

    pub fn random_bumps(seed: u64, count: usize) -> Self {
        Self::RandomBumps(RandomBumps::new(seed, count))
    }

    pub fn photonic_crystal(channel: bool) -> Self {
        Self::PhotonicCrystal(PhotonicCrystal::new(channel))
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Gaussian { amplitude, width } => amplitude * (-width * norm2(x)).exp(),
            Self::Cavity => cavity(x),
            Self::Lens => lens(x),
            Self::RandomBumps(p) => p.value(x),
            Self::PhotonicCrystal(p) => p.value(x),
            Self::Tabulated(t) => t.value(x),
        }
    }

    /// Values at every grid point in row-major order.
    pub fn sample(&self, grid: &UniformGrid) -> Vec<f64> {
        grid.points().map(|x| self.value(x)).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Gaussian { .. } => "gaussian",
            Self::Cavity => "cavity",
            Self::Lens => "lens",
            Self::RandomBumps(_) => "random_bumps",
            Self::PhotonicCrystal(_) => "photonic_crystal",
            Self::Tabulated(_) => "tabulated",
        }
    }
}

#[inline]
fn norm2(x: [f64; 2]) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

fn cavity(x: [f64; 2]) -> f64 {
    let r2 = norm2(x);
    let theta = x[1].atan2(x[0]);
    let s = (0.5 * theta).sin();
    (1.0 - s.powi(500)) * (-2000.0 * (0.1 - r2).powi(2)).exp()
}

fn lens(x: [f64; 2]) -> f64 {
    let r = norm2(x).sqrt();
    4.0 * (x[1] - 0.1) * (1.0 - erf(25.0 * (r - 0.3)))
}

/// Radial roll-off that is ~1 inside radius 0.42 and ~0 on the boundary of
/// `[-0.5, 0.5]^2`.
fn rolloff(x: [f64; 2]) -> f64 {
    0.5 * (1.0 - erf(40.0 * (norm2(x).sqrt() - 0.42)))
}

/// Sum of Gaussian bumps at seeded random centres, smoothly rolled off.
#[derive(Debug, Clone)]
pub struct RandomBumps {
    pub seed: u64,
    pub centers: Vec<[f64; 2]>,
    pub width: f64,
    /// Overall factor applied to the bump sum so that its peak stays below 1.
    pub scale: f64,
}

impl RandomBumps {
    pub const WIDTH: f64 = 200.0;
    pub const PEAK: f64 = 0.9;

    pub fn new(seed: u64, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = (0..count)
            .map(|_| [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)])
            .collect();
        let mut p = Self { seed, centers, width: Self::WIDTH, scale: 1.0 };
        let m = 256;
        let mut peak = 0.0f64;
        for j in 0..=m {
            for i in 0..=m {
                let x = [-0.5 + i as f64 / m as f64, -0.5 + j as f64 / m as f64];
                peak = peak.max(p.value(x));
            }
        }
        if peak > 0.0 {
            p.scale = Self::PEAK / peak;
        }
        p
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        let sum: f64 = self
            .centers
            .iter()
            .map(|c| (-self.width * norm2([x[0] - c[0], x[1] - c[1]])).exp())
            .sum();
        self.scale * sum * rolloff(x)
    }
}

/// 20 x 20 lattice of Gaussian bumps, optionally with one row removed.
#[derive(Debug, Clone)]
pub struct PhotonicCrystal {
    pub channel: bool,
    pub amplitude: f64,
    pub spacing: f64,
    pub width: f64,
}

impl PhotonicCrystal {
    pub const COUNT: usize = 20;
    /// Row removed when the channel is enabled.
    pub const CHANNEL_ROW: usize = 10;

    pub fn new(channel: bool) -> Self {
        let spacing = 0.04;
        // A bump falls below 1e-6 at the neighbouring centre.
        let width = 1e6f64.ln() / (spacing * spacing) * 1.01;
        Self { channel, amplitude: 0.99, spacing, width }
    }

    fn center(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (Self::COUNT - 1) as f64) * self.spacing
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        // Only the nearest few lattice sites contribute above round-off.
        let c0 = 0.5 * (Self::COUNT - 1) as f64;
        let fx = x[0] / self.spacing + c0;
        let fy = x[1] / self.spacing + c0;
        let mut sum = 0.0;
        let lo = |f: f64| ((f.floor() as i64) - 2).max(0) as usize;
        let hi = |f: f64| ((f.ceil() as i64) + 2).clamp(-1, Self::COUNT as i64 - 1);
        let (xl, xh, yl, yh) = (lo(fx), hi(fx), lo(fy), hi(fy));
        if xh < 0 || yh < 0 {
            return 0.0;
        }
        for j in yl..=(yh as usize) {
            if self.channel && j == Self::CHANNEL_ROW {
                continue;
            }
            for i in xl..=(xh as usize) {
                let d = [x[0] - self.center(i), x[1] - self.center(j)];
                sum += (-self.width * norm2(d)).exp();
            }
        }
        self.amplitude * sum
    }
}

/// Potential tabulated on a grid, read as raw little-endian `f64` values in
/// row-major grid order. Evaluates by nearest grid point and is zero outside
/// the grid's rectangle.
#[derive(Debug, Clone)]
pub struct Tabulated {
    pub grid: UniformGrid,
    pub values: Arc<[f64]>,
}

impl Tabulated {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values: values.into() })
    }

    pub fn from_le_bytes(grid: UniformGrid, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 8 * grid.len() {
            return Err(Error::LengthMismatch { expected: 8 * grid.len(), got: bytes.len() });
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(grid, values)
    }

    pub fn read(grid: UniformGrid, path: &std::path::Path) -> Result<Self> {
        Self::from_le_bytes(grid, &std::fs::read(path)?)
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        let d = self.grid.domain();
        if x[0] < d.x0 || x[0] > d.x1 || x[1] < d.y0 || x[1] > d.y1 {
            return 0.0;
        }
        self.values[self.grid.nearest(x)]
    }
}

/// Incident field `u_inc`.
#[derive(Clone)]
pub enum IncidentField {
    /// `exp(i (kappa d.x + phase))` with unit direction `d`.
    PlaneWave { direction: [f64; 2], phase: f64 },
    Custom(Arc<dyn Fn([f64; 2]) -> Complex64 + Send + Sync>),
}

impl std::fmt::Debug for IncidentField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::PlaneWave { direction, phase } => f
                .debug_struct("PlaneWave")
                .field("direction", direction)
                .field("phase", phase)
                .finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl IncidentField {
    pub fn plane_wave(direction: [f64; 2], phase: f64) -> Result<Self> {
        let n = norm2(direction).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("plane-wave direction must have unit norm, got {n}")));
        }
        Ok(Self::PlaneWave { direction, phase })
    }

    /// `exp(i kappa x1)`.
    pub fn along_x() -> Self {
        Self::PlaneWave { direction: [1.0, 0.0], phase: 0.0 }
    }

    pub fn value(&self, kappa: f64, x: [f64; 2]) -> Complex64 {
        match self {
            Self::PlaneWave { direction, phase } => {
                Complex64::from_polar(1.0, kappa * (direction[0] * x[0] + direction[1] * x[1]) + phase)
            }
            Self::Custom(f) => f(x),
        }
    }
}

/// Cartesian point from polar coordinates.
pub fn polar(r: f64, theta: f64) -> [f64; 2] {
    [r * theta.cos(), r * theta.sin()]
}
