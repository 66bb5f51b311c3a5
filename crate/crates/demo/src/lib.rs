//! Browser bindings for a few interactive pieces of the solver: the Hankel
//! kernel, the proxy-ring accuracy table and a small direct solve whose
//! total field the page draws on a canvas.

use ls2d::cli::DirectSolver;
use ls2d::dense::rel_diff;
use ls2d::discretization::{
    assemble_rhs, CorrectionOrder, IncidentField, PotentialSpec, ProblemSpec, UniformGrid,
};
use ls2d::fast_apply::ConvolutionOperator;
use wasm_bindgen::prelude::*;

/// Largest grid side the page accepts; keeps a solve under a few seconds.
pub const MAX_SIDE: usize = 128;

fn js(e: ls2d::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `H0(x)` as `[re, im]`.
#[wasm_bindgen]
pub fn hankel(x: f64) -> Result<Vec<f64>, JsError> {
    let h = ls2d::special::hankel_h0(x).map_err(js)?;
    Ok(vec![h.re, h.im])
}

/// Relative error of the proxy-ring basis for a `side x side` box spanning
/// `wavelengths` wavelengths.
#[wasm_bindgen]
pub fn proxy_error(side: usize, wavelengths: f64, width: usize) -> Result<f64, JsError> {
    ls2d::hbs::proxy_error(side, wavelengths, width).map_err(js)
}

/// Total field of a direct solve on an `n x n` grid, row-major.
#[wasm_bindgen]
pub struct Scattering {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    residual: f64,
    ranks: Vec<u32>,
    millis: f64,
}

#[wasm_bindgen]
impl Scattering {
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real(&self) -> Vec<f64> {
        self.re.clone()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.im.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn ranks(&self) -> Vec<u32> {
        self.ranks.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn millis(&self) -> f64 {
        self.millis
    }
}

/// Solves for a plane wave along `x` hitting `potential` (gaussian, lens,
/// cavity or crystal) and returns the total field on the grid.
#[wasm_bindgen]
pub fn solve(potential: &str, kappa: f64, n: usize, eps: f64) -> Result<Scattering, JsError> {
    solve_native(potential, kappa, n, eps).map_err(js)
}

pub fn potential_by_name(name: &str) -> ls2d::Result<PotentialSpec> {
    match name {
        "gaussian" => Ok(PotentialSpec::gaussian()),
        "lens" => Ok(PotentialSpec::Lens),
        "cavity" => Ok(PotentialSpec::Cavity),
        "crystal" => Ok(PotentialSpec::photonic_crystal(true)),
        other => Err(ls2d::Error::InvalidParameter(format!("unknown potential '{other}'"))),
    }
}

pub fn solve_native(potential: &str, kappa: f64, n: usize, eps: f64) -> ls2d::Result<Scattering> {
    if !(4..=MAX_SIDE).contains(&n) {
        return Err(ls2d::Error::InvalidParameter(format!("grid side must be in 4..={MAX_SIDE}, got {n}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ls2d::Error::InvalidParameter(format!("tolerance must be in (0, 1), got {eps}")));
    }
    let start = web_time::Instant::now();
    let spec = ProblemSpec::new(
        UniformGrid::unit_square(n),
        kappa,
        potential_by_name(potential)?,
        IncidentField::along_x(),
        CorrectionOrder::Fourth,
    )?;
    let solver = DirectSolver::build(&spec, eps, None, 64)?;
    let f = assemble_rhs(&spec);
    let q = solver.apply(&f, &mut solver.workspace())?;
    let corr = spec.correction()?;
    let op = ConvolutionOperator::new(&spec.grid, kappa, corr.as_ref());
    let residual = rel_diff(&op.apply_forward(&spec.b_diagonal(), &q)?, &f);
    let scattered = op.apply_g(&q)?;
    let total: Vec<_> = spec.incident_on_grid().iter().zip(&scattered).map(|(a, b)| a + b).collect();
    Ok(Scattering {
        n,
        re: total.iter().map(|z| z.re).collect(),
        im: total.iter().map(|z| z.im).collect(),
        residual,
        ranks: solver.factors.ranks().iter().map(|&r| r as u32).collect(),
        millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_solve_has_small_residual() {
        let s = solve_native("gaussian", 25.0, 32, 1e-6).unwrap();
        assert_eq!(s.re.len(), 32 * 32);
        assert!(s.residual < 1e-5);
        assert!(!s.ranks.is_empty());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(solve_native("square", 25.0, 32, 1e-6).is_err());
        assert!(solve_native("lens", 25.0, 1000, 1e-6).is_err());
        assert!(solve_native("lens", 25.0, 32, 0.0).is_err());
    }
}
