use std::path::{Path, PathBuf};
use std::sync::Mutex;
use web_time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Mode, RunConfig};
use super::export::{export_field, FieldPoints};
use crate::dense::rel_diff;
use crate::discretization::{assemble_rhs, evaluate_scattered_field, CorrectionOrder, ProblemSpec, UniformGrid};
use crate::error::{Error, Result};
use crate::fast_apply::ConvolutionOperator;
use crate::hbs::{compress, hbs_matvec, proxy_error, CompressOptions, HbsFactors, HbsTree, LevelStats};
use crate::io;
use crate::krylov::{gmres, spectrum_probe, GmresConfig, IterationLog};
use crate::solver::{apply_inverse_with, build_inverse, BuildStats, ScatteringInverse, SolveWorkspace};

#[derive(Debug, Clone, Serialize)]
pub struct ProbeValue {
    pub x: f64,
    pub y: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProxyRow {
    pub width: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderConvergence {
    pub order: u32,
    /// `values[size][probe]`: scattered field at each probe.
    pub values: Vec<Vec<[f64; 2]>>,
    /// `slopes[probe][i]`: observed order from sizes `i, i + 1, i + 2`.
    pub slopes: Vec<Vec<f64>>,
    /// Mean over probes of the slope from the three finest sizes.
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadReport {
    pub sides: Vec<usize>,
    pub orders: Vec<OrderConvergence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub preconditioned: bool,
    /// Largest `|lambda - 1|`.
    pub max_distance: f64,
    /// Eigenvalues farthest from 1, as `[re, im]`.
    pub farthest: Vec<[f64; 2]>,
    /// Largest `|lambda - 1|` without the preconditioner.
    pub unpreconditioned_max_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct SweepSlopes {
    pub T_skel: f64,
    pub T_build: f64,
    pub T_apply: f64,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct SweepReport {
    pub N: Vec<usize>,
    pub T_skel: Vec<f64>,
    pub T_build: Vec<f64>,
    pub T_apply: Vec<f64>,
    pub ranks: Vec<Vec<usize>>,
    pub slopes: SweepSlopes,
}

/// Result of one driver run.
#[derive(Debug, Clone, Default, Serialize)]
#[allow(non_snake_case)]
pub struct RunReport {
    pub mode: String,
    pub potential: String,
    pub N: usize,
    pub n1: usize,
    pub n2: usize,
    pub h: f64,
    pub kappa: f64,
    pub order: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_pre: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_width: Option<usize>,
    pub leaf_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub T_skel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub T_build: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub T_apply: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub T_gmres: Option<f64>,
    /// Bytes of the serialized factors (and inverse, when built).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mem: Option<u64>,
    /// `||(I + BG) q - f|| / ||f||` through the FFT operator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ranks: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<LevelStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmres: Option<IterationLog>,
    /// Relative error of the HBS matvec against the FFT operator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matvec_error: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub proxy: Vec<ProxyRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    fn for_problem(cfg: &RunConfig, mode: Mode, spec: &ProblemSpec) -> Self {
        Self {
            mode: mode.name().into(),
            potential: spec.potential.name().into(),
            N: spec.grid.len(),
            n1: spec.grid.n1,
            n2: spec.grid.n2,
            h: spec.grid.h,
            kappa: spec.kappa,
            order: spec.order.as_u32(),
            leaf_size: cfg.leaf_size,
            ..Default::default()
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Everything needed to apply the direct solver.
pub struct DirectSolver {
    pub tree: HbsTree,
    pub factors: HbsFactors,
    pub inverse: ScatteringInverse,
}

impl DirectSolver {
    pub fn build(spec: &ProblemSpec, eps: f64, proxy_width: Option<usize>, leaf_size: usize) -> Result<Self> {
        let corr = spec.correction()?;
        let tree = HbsTree::new(&spec.grid, leaf_size)?;
        let factors = compress(&tree, spec.kappa, corr.as_ref(), CompressOptions { eps, proxy_width })?;
        let inverse = build_inverse(&factors, &tree, &spec.b_diagonal())?;
        Ok(Self { tree, factors, inverse })
    }

    pub fn workspace(&self) -> SolveWorkspace {
        SolveWorkspace::new(&self.factors, &self.tree)
    }

    pub fn apply(&self, f: &[Complex64], ws: &mut SolveWorkspace) -> Result<Vec<Complex64>> {
        apply_inverse_with(&self.inverse, &self.factors, &self.tree, f, ws)
    }

    /// Bytes of the serialized factors and inverse.
    pub fn mem(&self) -> u64 {
        io::serialized_size(&self.factors, Some(&self.inverse))
    }
}

fn forward(spec: &ProblemSpec) -> Result<(ConvolutionOperator, Vec<f64>)> {
    let corr = spec.correction()?;
    Ok((ConvolutionOperator::new(&spec.grid, spec.kappa, corr.as_ref()), spec.b_diagonal()))
}

fn relative_residual(op: &ConvolutionOperator, b: &[f64], q: &[Complex64], f: &[Complex64]) -> Result<f64> {
    Ok(rel_diff(&op.apply_forward(b, q)?, f))
}

/// Solves by GMRES, left-preconditioned by the direct solver at `eps_pre`
/// when given. Returns the density, the log and the preconditioner.
pub fn solve_gmres(
    spec: &ProblemSpec,
    eps_pre: Option<f64>,
    proxy_width: Option<usize>,
    leaf_size: usize,
    cfg: &GmresConfig,
) -> Result<(Vec<Complex64>, IterationLog, Option<DirectSolver>)> {
    let (op, b) = forward(spec)?;
    let f = assemble_rhs(spec);
    let pre = eps_pre.map(|e| DirectSolver::build(spec, e, proxy_width, leaf_size)).transpose()?;
    let a = |v: &[Complex64]| op.apply_forward(&b, v);
    let (q, log) = match &pre {
        Some(p) => {
            let ws = Mutex::new(p.workspace());
            let m = |v: &[Complex64]| p.apply(v, &mut ws.lock().expect("workspace lock"));
            gmres(&a, Some(&m), &f, cfg)?
        }
        None => gmres(&a, None, &f, cfg)?,
    };
    Ok((q, log, pre))
}

fn probe_values(spec: &ProblemSpec, q: &[Complex64], probes: &[[f64; 2]]) -> Result<Vec<ProbeValue>> {
    let corr = spec.correction()?;
    let u = evaluate_scattered_field(&spec.grid, spec.kappa, corr.as_ref(), q, probes)?;
    Ok(probes.iter().zip(u).map(|(p, v)| ProbeValue { x: p[0], y: p[1], re: v.re, im: v.im }).collect())
}

fn export_total_field(spec: &ProblemSpec, q: &[Complex64], out: &Path) -> Result<Vec<PathBuf>> {
    let corr = spec.correction()?;
    let op = ConvolutionOperator::new(&spec.grid, spec.kappa, corr.as_ref());
    let us = op.apply_g(q)?;
    let u: Vec<Complex64> = spec.incident_on_grid().iter().zip(&us).map(|(a, b)| a + b).collect();
    let (csv, bin) = export_field(&out.join("total_field"), FieldPoints::Grid(&spec.grid), &u)?;
    Ok(vec![csv, bin])
}

fn random_vector(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn direct(cfg: &RunConfig, spec: &ProblemSpec, out: Option<&Path>) -> Result<RunReport> {
    let mut r = RunReport::for_problem(cfg, Mode::Direct, spec);
    let solver = DirectSolver::build(spec, cfg.eps, cfg.proxy_width, cfg.leaf_size)?;
    let f = assemble_rhs(spec);
    let mut ws = solver.workspace();
    let start = Instant::now();
    let q = solver.apply(&f, &mut ws)?;
    r.T_apply = Some(start.elapsed().as_secs_f64());
    let (op, b) = forward(spec)?;
    r.res = Some(relative_residual(&op, &b, &q, &f)?);
    fill_compression(&mut r, &solver.factors);
    r.eps = Some(cfg.eps);
    r.T_build = Some(solver.inverse.stats.t_build);
    r.build = Some(solver.inverse.stats.clone());
    r.mem = Some(solver.mem());
    r.probes = probe_values(spec, &q, &cfg.probes)?;
    if let Some(out) = out {
        if cfg.output.field {
            r.artifacts.extend(export_total_field(spec, &q, out)?);
        }
        if cfg.output.factors {
            let path = out.join("factors.hbs");
            io::save(&path, &solver.factors, Some(&solver.inverse))?;
            r.artifacts.push(path);
        }
    }
    if let Some(sizes) = &cfg.sweep {
        r.sweep = Some(scaling_sweep(cfg, sizes)?);
    }
    Ok(r)
}

fn fill_compression(r: &mut RunReport, f: &HbsFactors) {
    r.T_skel = Some(f.t_skel);
    r.proxy_width = Some(f.proxy_width);
    r.ranks = f.ranks();
    r.levels = f.stats.clone();
}

fn pgmres(cfg: &RunConfig, spec: &ProblemSpec, out: Option<&Path>) -> Result<RunReport> {
    let mut r = RunReport::for_problem(cfg, Mode::Pgmres, spec);
    let (q, log, pre) = solve_gmres(spec, cfg.eps_pre, cfg.proxy_width, cfg.leaf_size, &cfg.gmres.to_config())?;
    if let Some(p) = &pre {
        fill_compression(&mut r, &p.factors);
        r.eps_pre = cfg.eps_pre;
        r.T_build = Some(p.inverse.stats.t_build);
        r.build = Some(p.inverse.stats.clone());
        r.mem = Some(p.mem());
    }
    r.T_gmres = Some(log.time);
    r.res = Some(log.true_residual);
    r.iter = Some(log.iterations);
    r.converged = Some(log.converged);
    r.probes = probe_values(spec, &q, &cfg.probes)?;
    r.gmres = Some(log);
    if let (Some(out), true) = (out, cfg.output.field) {
        r.artifacts.extend(export_total_field(spec, &q, out)?);
    }
    Ok(r)
}

fn compress_stats(cfg: &RunConfig, spec: &ProblemSpec, out: Option<&Path>) -> Result<RunReport> {
    let mut r = RunReport::for_problem(cfg, Mode::CompressStats, spec);
    let corr = spec.correction()?;
    let tree = HbsTree::new(&spec.grid, cfg.leaf_size)?;
    let fac = compress(&tree, spec.kappa, corr.as_ref(), CompressOptions { eps: cfg.eps, proxy_width: cfg.proxy_width })?;
    fill_compression(&mut r, &fac);
    r.eps = Some(cfg.eps);
    r.mem = Some(io::serialized_size(&fac, None));
    let q = random_vector(spec.grid.len(), cfg.seed);
    let op = ConvolutionOperator::new(&spec.grid, spec.kappa, corr.as_ref());
    let start = Instant::now();
    let y = hbs_matvec(&fac, &tree, &q)?;
    r.T_apply = Some(start.elapsed().as_secs_f64());
    r.matvec_error = Some(rel_diff(&y, &op.apply_g(&q)?));
    r.proxy = (1..=3).map(|w| Ok(ProxyRow { width: w, error: proxy_error(20, 1.0, w)? })).collect::<Result<_>>()?;
    if let (Some(out), true) = (out, cfg.output.factors) {
        let path = out.join("factors.hbs");
        io::save(&path, &fac, None)?;
        r.artifacts.push(path);
    }
    if let Some(sizes) = &cfg.sweep {
        r.sweep = Some(scaling_sweep(cfg, sizes)?);
    }
    Ok(r)
}

fn quad_test(cfg: &RunConfig, spec: &ProblemSpec) -> Result<RunReport> {
    let mut r = RunReport::for_problem(cfg, Mode::QuadTest, spec);
    let base = spec.grid.n1;
    let sides: Vec<usize> = cfg.refinements.iter().map(|m| m * base).collect();
    let gcfg = cfg.gmres.to_config();
    let gcfg = GmresConfig { tol: gcfg.tol.min(1e-12), ..gcfg };
    let eps_pre = cfg.eps_pre.or(Some(1e-4));
    let mut orders = Vec::new();
    for order in [CorrectionOrder::Second, CorrectionOrder::Fourth] {
        let mut values = Vec::with_capacity(sides.len());
        for &n in &sides {
            let s = cfg.problem_with_order(cfg.grid_with_side(n)?, order)?;
            let (q, log, _) = solve_gmres(&s, eps_pre, cfg.proxy_width, cfg.leaf_size, &gcfg)?;
            if !log.converged {
                return Err(Error::InvalidParameter(format!(
                    "quadrature test solve at n = {n} stalled at residual {:.2e}",
                    log.true_residual
                )));
            }
            let corr = s.correction()?;
            let u = evaluate_scattered_field(&s.grid, s.kappa, corr.as_ref(), &q, &cfg.probes)?;
            values.push(u);
        }
        let slopes: Vec<Vec<f64>> = (0..cfg.probes.len())
            .map(|p| {
                (0..sides.len() - 2)
                    .map(|i| {
                        let d0 = (values[i][p] - values[i + 1][p]).norm();
                        let d1 = (values[i + 1][p] - values[i + 2][p]).norm();
                        (d0 / d1).ln() / (sides[i + 1] as f64 / sides[i] as f64).ln()
                    })
                    .collect()
            })
            .collect();
        let slope = slopes.iter().map(|s| s[s.len() - 1]).sum::<f64>() / slopes.len().max(1) as f64;
        orders.push(OrderConvergence {
            order: order.as_u32(),
            values: values.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
            slopes,
            slope,
        });
    }
    r.quad = Some(QuadReport { sides, orders });
    Ok(r)
}

fn spectrum(cfg: &RunConfig, spec: &ProblemSpec, out: Option<&Path>) -> Result<RunReport> {
    let mut r = RunReport::for_problem(cfg, Mode::Spectrum, spec);
    let n = spec.grid.len();
    if n > crate::krylov::SPECTRUM_CAP {
        return Err(Error::TooLarge { n, cap: crate::krylov::SPECTRUM_CAP });
    }
    let (op, b) = forward(spec)?;
    let a = |v: &[Complex64]| op.apply_forward(&b, v);
    let pre = cfg.eps_pre.map(|e| DirectSolver::build(spec, e, cfg.proxy_width, cfg.leaf_size)).transpose()?;
    let ev = match &pre {
        Some(p) => {
            let m = |v: &[Complex64]| p.apply(v, &mut p.workspace());
            spectrum_probe(&a, Some(&m), n, None)?
        }
        None => spectrum_probe(&a, None, n, None)?,
    };
    let raw = match pre {
        Some(p) => {
            fill_compression(&mut r, &p.factors);
            r.eps_pre = cfg.eps_pre;
            Some(spectrum_probe(&a, None, n, Some(1))?[0])
        }
        None => None,
    };
    if let Some(out) = out {
        let path = out.join("spectrum.csv");
        let mut text = String::from("re,im\n");
        for l in &ev {
            text.push_str(&format!("{:.16e},{:.16e}\n", l.re, l.im));
        }
        std::fs::write(&path, text)?;
        r.artifacts.push(path);
    }
    r.spectrum = Some(SpectrumReport {
        preconditioned: r.eps_pre.is_some(),
        max_distance: ev.first().map_or(0.0, |l| (l - 1.0).norm()),
        farthest: ev.iter().take(cfg.n_eigs).map(|l| [l.re, l.im]).collect(),
        unpreconditioned_max_distance: raw.map(|l| (l - 1.0).norm()),
    });
    Ok(r)
}

/// Times compression, inverse build and one inverse application for each
/// side count in `sides`, and fits log-log slopes against `N`.
///
/// Stages shorter than half a second are repeated (up to five times) and the
/// fastest run is kept.
pub fn scaling_sweep(cfg: &RunConfig, sides: &[usize]) -> Result<SweepReport> {
    if sides.len() < 3 {
        return Err(Error::Config(format!("scaling sweep needs at least three grid sizes, got {}", sides.len())));
    }
    let mut rep = SweepReport {
        N: Vec::new(),
        T_skel: Vec::new(),
        T_build: Vec::new(),
        T_apply: Vec::new(),
        ranks: Vec::new(),
        slopes: SweepSlopes { T_skel: 0.0, T_build: 0.0, T_apply: 0.0 },
    };
    for &n in sides {
        let spec = cfg.problem_on(cfg.grid_with_side(n)?)?;
        let corr = spec.correction()?;
        let tree = HbsTree::new(&spec.grid, cfg.leaf_size)?;
        let b = spec.b_diagonal();
        let f = assemble_rhs(&spec);
        let opts = CompressOptions { eps: cfg.eps, proxy_width: cfg.proxy_width };
        let (mut t_skel, mut t_build, mut t_apply) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut spent = 0.0;
        let mut ranks = Vec::new();
        for _ in 0..5 {
            let fac = compress(&tree, spec.kappa, corr.as_ref(), opts)?;
            let inv = build_inverse(&fac, &tree, &b)?;
            let mut ws = SolveWorkspace::new(&fac, &tree);
            apply_inverse_with(&inv, &fac, &tree, &f, &mut ws)?;
            let start = Instant::now();
            apply_inverse_with(&inv, &fac, &tree, &f, &mut ws)?;
            let ta = start.elapsed().as_secs_f64();
            t_skel = t_skel.min(fac.t_skel);
            t_build = t_build.min(inv.stats.t_build);
            t_apply = t_apply.min(ta);
            spent += fac.t_skel + inv.stats.t_build;
            ranks = fac.ranks();
            if spent > 0.5 {
                break;
            }
        }
        rep.N.push(spec.grid.len());
        rep.T_skel.push(t_skel);
        rep.T_build.push(t_build);
        rep.T_apply.push(t_apply);
        rep.ranks.push(ranks);
    }
    let n: Vec<f64> = rep.N.iter().map(|&v| v as f64).collect();
    rep.slopes = SweepSlopes {
        T_skel: loglog_slope(&n, &rep.T_skel),
        T_build: loglog_slope(&n, &rep.T_build),
        T_apply: loglog_slope(&n, &rep.T_apply),
    };
    Ok(rep)
}

/// Runs one mode. When `out` is given, artifacts and the JSON report are
/// written there.
pub fn run(cfg: &RunConfig, mode: Mode, out: Option<&Path>) -> Result<RunReport> {
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
    }
    let grid: UniformGrid = cfg.grid()?;
    let spec = cfg.problem_on(grid)?;
    let report = match mode {
        Mode::Direct => direct(cfg, &spec, out)?,
        Mode::Pgmres => pgmres(cfg, &spec, out)?,
        Mode::CompressStats => compress_stats(cfg, &spec, out)?,
        Mode::QuadTest => quad_test(cfg, &spec)?,
        Mode::Spectrum => spectrum(cfg, &spec, out)?,
    };
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(out.join(&cfg.output.report), text)?;
    }
    Ok(report)
}
