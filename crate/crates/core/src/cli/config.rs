use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::{
    build_grid, potential::Tabulated, CorrectionOrder, IncidentField, PotentialSpec, ProblemSpec, Rect, UniformGrid,
};
use crate::error::{Error, Result};
use crate::krylov::GmresConfig;

/// Driver mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Direct,
    Pgmres,
    CompressStats,
    QuadTest,
    Spectrum,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Pgmres => "pgmres",
            Self::CompressStats => "compress-stats",
            Self::QuadTest => "quad-test",
            Self::Spectrum => "spectrum",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| format!("unknown mode '{s}'; expected direct, pgmres, compress-stats, quad-test or spectrum"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Gaussian {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
    Cavity,
    Lens,
    RandomBumps {
        seed: u64,
        #[serde(default = "default_bumps")]
        count: usize,
    },
    PhotonicCrystal {
        #[serde(default)]
        channel: bool,
    },
    /// Raw little-endian `f64` values on the problem grid, row-major.
    Tabulated { path: PathBuf },
}

fn default_amplitude() -> f64 {
    1.5
}

fn default_width() -> f64 {
    160.0
}

fn default_bumps() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points along the first side; the mesh width is `width / n`.
    pub n: Option<usize>,
    /// Target mesh width, used when `n` is absent.
    pub h: Option<f64>,
    /// `[x0, y0, x1, y1]`; defaults to `[-0.5, -0.5, 0.5, 0.5]`.
    pub domain: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentConfig {
    #[serde(default = "default_direction")]
    pub direction: [f64; 2],
    #[serde(default)]
    pub phase: f64,
}

fn default_direction() -> [f64; 2] {
    [1.0, 0.0]
}

impl Default for IncidentConfig {
    fn default() -> Self {
        Self { direction: default_direction(), phase: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub potential: PotentialConfig,
    pub kappa: f64,
    pub grid: GridConfig,
    #[serde(default = "default_order")]
    pub order: CorrectionOrder,
    #[serde(default)]
    pub incident: IncidentConfig,
}

fn default_order() -> CorrectionOrder {
    CorrectionOrder::Fourth
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmresSettings {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_maxit")]
    pub maxit: usize,
    #[serde(default)]
    pub restart: Option<usize>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_maxit() -> usize {
    100
}

impl Default for GmresSettings {
    fn default() -> Self {
        Self { tol: default_tol(), maxit: default_maxit(), restart: None }
    }
}

impl GmresSettings {
    pub fn to_config(&self) -> GmresConfig {
        GmresConfig { tol: self.tol, maxit: self.maxit, restart: self.restart }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File name of the JSON report inside the output directory.
    #[serde(default = "default_report")]
    pub report: String,
    /// Export the total field on the grid as CSV and LSF2.
    #[serde(default)]
    pub field: bool,
    /// Write the HBS factors (and inverse, when built) to `factors.hbs`.
    #[serde(default)]
    pub factors: bool,
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { report: default_report(), field: false, factors: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must agree with the mode given on the command line.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub problem: ProblemConfig,
    /// Compression tolerance of the direct solver.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Preconditioner tolerance for `pgmres`; absent means no preconditioner.
    #[serde(default)]
    pub eps_pre: Option<f64>,
    #[serde(default)]
    pub proxy_width: Option<usize>,
    #[serde(default = "default_leaf")]
    pub leaf_size: usize,
    #[serde(default)]
    pub gmres: GmresSettings,
    /// Points where the scattered field is reported.
    #[serde(default = "default_probes")]
    pub probes: Vec<[f64; 2]>,
    /// Grid refinements for `quad-test`, as multiples of the base `n`.
    #[serde(default = "default_refinements")]
    pub refinements: Vec<usize>,
    /// Side counts for a scaling sweep in `direct` or `compress-stats` mode.
    #[serde(default)]
    pub sweep: Option<Vec<usize>>,
    /// Eigenvalues listed by `spectrum`, farthest from 1 first.
    #[serde(default = "default_eigs")]
    pub n_eigs: usize,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Seed of the random vectors used by diagnostics.
    #[serde(default)]
    pub seed: u64,
}

fn default_eps() -> f64 {
    1e-6
}

fn default_leaf() -> usize {
    100
}

fn default_probes() -> Vec<[f64; 2]> {
    vec![[0.25, 0.0], [1.0, 0.5]]
}

fn default_refinements() -> Vec<usize> {
    vec![1, 2, 4]
}

fn default_eigs() -> usize {
    20
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn tolerance(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid(format!("{name} must be in (0, 1), got {v}")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses JSON, reporting the path of the offending field on error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                invalid(inner.to_string())
            } else {
                invalid(format!("{path}: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let PotentialConfig::Tabulated { path: p } = &mut cfg.problem.potential {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        positive("problem.kappa", p.kappa)?;
        match (p.grid.n, p.grid.h) {
            (Some(0), _) => return Err(invalid("problem.grid.n must be at least 1")),
            (Some(_), Some(_)) => return Err(invalid("problem.grid: give either n or h, not both")),
            (None, None) => return Err(invalid("problem.grid: one of n or h is required")),
            (None, Some(h)) => positive("problem.grid.h", h)?,
            _ => {}
        }
        if let Some([x0, y0, x1, y1]) = p.grid.domain {
            if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
                return Err(invalid("problem.grid.domain must be [x0, y0, x1, y1] with x1 > x0 and y1 > y0"));
            }
        }
        let [dx, dy] = p.incident.direction;
        if !((dx * dx + dy * dy).sqrt() > 0.0) {
            return Err(invalid("problem.incident.direction must be nonzero"));
        }
        match &p.potential {
            PotentialConfig::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() {
                    return Err(invalid("problem.potential.amplitude must be finite"));
                }
                positive("problem.potential.width", *width)?;
            }
            PotentialConfig::RandomBumps { count, .. } if *count == 0 => {
                return Err(invalid("problem.potential.count must be at least 1"));
            }
            _ => {}
        }
        tolerance("eps", self.eps)?;
        if let Some(e) = self.eps_pre {
            tolerance("eps_pre", e)?;
        }
        if let Some(w) = self.proxy_width {
            if !(1..=3).contains(&w) {
                return Err(invalid(format!("proxy_width must be 1, 2 or 3, got {w}")));
            }
        }
        if self.leaf_size < 4 {
            return Err(invalid(format!("leaf_size must be at least 4, got {}", self.leaf_size)));
        }
        positive("gmres.tol", self.gmres.tol)?;
        if self.gmres.maxit == 0 {
            return Err(invalid("gmres.maxit must be at least 1"));
        }
        if self.gmres.restart == Some(0) {
            return Err(invalid("gmres.restart must be at least 1"));
        }
        if self.refinements.len() < 3 || self.refinements.contains(&0) {
            return Err(invalid("refinements needs at least three positive multiples"));
        }
        if self.refinements.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("refinements must be strictly increasing"));
        }
        if let Some(s) = &self.sweep {
            if s.len() < 3 {
                return Err(invalid(format!("sweep needs at least three grid sizes, got {}", s.len())));
            }
            if s.contains(&0) {
                return Err(invalid("sweep sizes must be positive"));
            }
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        if self.probes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("probes must be finite"));
        }
        if self.output.report.is_empty() || self.output.report.contains(['/', '\\']) {
            return Err(invalid("output.report must be a plain file name"));
        }
        Ok(())
    }

    /// Resolves the mode from the command line and the config.
    pub fn resolve_mode(&self, cli: Option<Mode>) -> Result<Mode> {
        match (cli, self.mode) {
            (Some(a), Some(b)) if a != b => {
                Err(invalid(format!("mode '{}' on the command line conflicts with '{}' in the config", a.name(), b.name())))
            }
            (Some(m), _) | (None, Some(m)) => Ok(m),
            (None, None) => Err(invalid("no mode given")),
        }
    }

    fn domain(&self) -> Rect {
        match self.problem.grid.domain {
            Some([x0, y0, x1, y1]) => Rect::new(x0, y0, x1, y1),
            None => Rect::unit_centered(),
        }
    }

    /// The grid with `n` points along the first side.
    pub fn grid_with_side(&self, n: usize) -> Result<UniformGrid> {
        let d = self.domain();
        build_grid(d, d.width() / n as f64)
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        match (self.problem.grid.n, self.problem.grid.h) {
            (Some(n), _) => self.grid_with_side(n),
            (None, Some(h)) => build_grid(self.domain(), h),
            (None, None) => Err(invalid("problem.grid: one of n or h is required")),
        }
    }

    /// The problem on `grid` with the configured order.
    pub fn problem_on(&self, grid: UniformGrid) -> Result<ProblemSpec> {
        self.problem_with_order(grid, self.problem.order)
    }

    pub fn problem_with_order(&self, grid: UniformGrid, order: CorrectionOrder) -> Result<ProblemSpec> {
        let p = &self.problem;
        let potential = match &p.potential {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::Gaussian { amplitude, width } => {
                PotentialSpec::Gaussian { amplitude: *amplitude, width: *width }
            }
            PotentialConfig::Cavity => PotentialSpec::Cavity,
            PotentialConfig::Lens => PotentialSpec::Lens,
            PotentialConfig::RandomBumps { seed, count } => PotentialSpec::random_bumps(*seed, *count),
            PotentialConfig::PhotonicCrystal { channel } => PotentialSpec::photonic_crystal(*channel),
            PotentialConfig::Tabulated { path } => PotentialSpec::Tabulated(
                Tabulated::read(grid, path)
                    .map_err(|e| invalid(format!("tabulated potential {}: {e}", path.display())))?,
            ),
        };
        let [dx, dy] = p.incident.direction;
        let len = dx.hypot(dy);
        let incident = IncidentField::plane_wave([dx / len, dy / len], p.incident.phase)?;
        ProblemSpec::new(grid, p.kappa, potential, incident, order)
    }
}
