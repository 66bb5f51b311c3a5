//! Direct solver: local solution operators and scattering matrices built
//! bottom-up, applied with an upward and a downward sweep.

mod lemma;

use web_time::Instant;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::{gemm, gemm_scaled, gemm_tn, view, view_mut};
use crate::dense::DenseLu;
use crate::error::{Error, Result};
use crate::hbs::{sibling_exchange, HbsFactors, HbsTree};

pub use lemma::lemma1_check;

/// Woodbury is used when the sibling rank is below this fraction of `k`.
pub const WOODBURY_RATIO: f64 = 0.75;

/// Solution operator of a parent's coupled sibling system
/// `[I, S_a G_ab; S_b G_ba, I]`.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ParentSolve {
    /// `M^{-1} = I - P (I + QP)^{-1} Q` with `P = diag(S_a L_ab, S_b L_ba)`
    /// and `Q = [0, R_ab^*; R_ba^*, 0]`.
    Woodbury { sl_a: Mat<Complex64>, sl_b: Mat<Complex64>, r_adj: Mat<Complex64>, l_t: Mat<Complex64>, core: DenseLu },
    Dense(DenseLu),
}

impl ParentSolve {
    pub(crate) fn growth(&self) -> f64 {
        match self {
            Self::Woodbury { core, .. } => core.growth,
            Self::Dense(lu) => lu.growth,
        }
    }
}

/// Build diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildStats {
    pub t_build: f64,
    pub woodbury_nodes: usize,
    pub dense_nodes: usize,
    pub max_leaf_growth: f64,
    pub max_coupling_growth: f64,
}

/// Approximate inverse of `I + B G` in scattering-matrix form.
#[derive(Debug, Clone)]
pub struct ScatteringInverse {
    /// `kappa^2 b` in tree order.
    pub(crate) b: Vec<f64>,
    /// `X` of every leaf.
    pub(crate) leaves: Vec<DenseLu>,
    /// `s[l - 1][j]` is `S` of node `(l, j)` for `l = 1..=L`.
    pub(crate) s: Vec<Vec<Mat<Complex64>>>,
    /// `parents[l][j]` solves the sibling system of node `(l, j)` for `l < L`.
    pub(crate) parents: Vec<Vec<ParentSolve>>,
    pub stats: BuildStats,
}

fn sibling_factors(f: &HbsFactors, l: usize) -> (Mat<Complex64>, Mat<Complex64>) {
    // G_ab ~ L R^*, so G_ba = G_ab^T ~ conj(R) (conj(L))^*.
    let lr = &f.level(l).lr;
    (lr.l.clone(), lr.r.clone())
}

impl ParentSolve {
    /// Builds the solver for children with scattering matrices `sa`, `sb`
    /// on level `l`.
    fn build(f: &HbsFactors, l: usize, sa: &Mat<Complex64>, sb: &Mat<Complex64>, node: usize) -> Result<Self> {
        let lf = f.level(l);
        let k = lf.rank();
        let r = lf.lr.rank();
        let singular = || Error::SingularCoupling { level: l - 1, node };
        if k > 0 && (r as f64) < WOODBURY_RATIO * k as f64 {
            let (l_ab, r_ab) = sibling_factors(f, l);
            let sl_a = sa * &l_ab;
            let sl_b = sb * r_ab.conjugate();
            let r_adj = r_ab.adjoint().to_owned();
            let l_t = l_ab.transpose().to_owned();
            let top = &r_adj * &sl_b;
            let bottom = &l_t * &sl_a;
            let core = Mat::from_fn(2 * r, 2 * r, |i, j| {
                let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                match (i < r, j < r) {
                    (true, false) => top[(i, j - r)],
                    (false, true) => bottom[(i - r, j)],
                    _ => id,
                }
            });
            let core = DenseLu::factor(core.as_ref()).ok_or_else(singular)?;
            Ok(Self::Woodbury { sl_a, sl_b, r_adj, l_t, core })
        } else {
            let top = sa * &lf.g_ab;
            let bottom = sb * lf.g_ab.transpose();
            let m = Mat::from_fn(2 * k, 2 * k, |i, j| {
                let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                match (i < k, j < k) {
                    (true, false) => top[(i, j - k)],
                    (false, true) => bottom[(i - k, j)],
                    _ => id,
                }
            });
            Ok(Self::Dense(DenseLu::factor(m.as_ref()).ok_or_else(singular)?))
        }
    }

    /// Overwrites the `2k x c` matrix `v` with `M^{-1} v`.
    fn apply(&self, mut v: faer::MatMut<'_, Complex64>) {
        match self {
            Self::Dense(lu) => {
                if lu.dim() > 0 {
                    lu.solve_in_place(v)
                }
            }
            Self::Woodbury { sl_a, sl_b, r_adj, l_t, core } => {
                let k = sl_a.nrows();
                let r = sl_a.ncols();
                let c = v.ncols();
                let mut t = Mat::<Complex64>::zeros(2 * r, c);
                {
                    let (va, vb) = v.as_ref().split_at_row(k);
                    gemm(t.as_mut().subrows_mut(0, r), false, r_adj.as_ref(), vb);
                    gemm(t.as_mut().subrows_mut(r, r), false, l_t.as_ref(), va);
                }
                core.solve_in_place(t.as_mut());
                let (mut va, mut vb) = v.as_mut().split_at_row_mut(k);
                let minus = Complex64::new(-1.0, 0.0);
                gemm_scaled(va.as_mut(), true, sl_a.as_ref(), t.as_ref().subrows(0, r), minus);
                gemm_scaled(vb.as_mut(), true, sl_b.as_ref(), t.as_ref().subrows(r, r), minus);
            }
        }
    }
}

/// Builds the approximate inverse of `I + diag(b) G^eps`.
///
/// `b` holds `kappa^2 b(x_i)` in grid order.
pub fn build_inverse(f: &HbsFactors, tree: &HbsTree, b: &[f64]) -> Result<ScatteringInverse> {
    f.check_tree(tree)?;
    if b.len() != tree.len() {
        return Err(Error::LengthMismatch { expected: tree.len(), got: b.len() });
    }
    let start = Instant::now();
    let depth = f.depth();
    let bp = tree.permute(b);
    let m = tree.node_size(depth);
    let nl = tree.nodes_at(depth);

    let leaf_results: Vec<Result<(DenseLu, Option<Mat<Complex64>>)>> = (0..nl)
        .into_par_iter()
        .map(|leaf| {
            let bl = &bp[leaf * m..(leaf + 1) * m];
            let a = Mat::from_fn(m, m, |i, j| {
                let v = f.leaf_block[(i, j)] * bl[i];
                if i == j {
                    v + 1.0
                } else {
                    v
                }
            });
            let lu = DenseLu::factor(a.as_ref()).ok_or(Error::SingularLeaf { leaf })?;
            let s = (depth > 0).then(|| {
                let u = &f.level(depth).u;
                let mut y = Mat::from_fn(m, u.ncols(), |i, j| u[(i, j)] * bl[i]);
                lu.solve_in_place(y.as_mut());
                u.transpose() * &y
            });
            Ok((lu, s))
        })
        .collect();
    let mut leaves = Vec::with_capacity(nl);
    let mut s_leaf = Vec::with_capacity(nl);
    for r in leaf_results {
        let (lu, s) = r?;
        leaves.push(lu);
        if let Some(s) = s {
            s_leaf.push(s);
        }
    }

    let mut s: Vec<Vec<Mat<Complex64>>> = vec![Vec::new(); depth];
    let mut parents: Vec<Vec<ParentSolve>> = (0..depth).map(|_| Vec::new()).collect();
    if depth > 0 {
        s[depth - 1] = s_leaf;
    }
    for l in (0..depth).rev() {
        let children = &s[l];
        let built: Vec<Result<(ParentSolve, Option<Mat<Complex64>>)>> = (0..tree.nodes_at(l))
            .into_par_iter()
            .map(|j| {
                let (sa, sb) = (&children[2 * j], &children[2 * j + 1]);
                let solve = ParentSolve::build(f, l + 1, sa, sb, j)?;
                let st = (l > 0).then(|| {
                    let u = &f.level(l).u;
                    let k = sa.nrows();
                    let mut z = Mat::<Complex64>::zeros(2 * k, u.ncols());
                    gemm(z.as_mut().subrows_mut(0, k), false, sa.as_ref(), u.as_ref().subrows(0, k));
                    gemm(z.as_mut().subrows_mut(k, k), false, sb.as_ref(), u.as_ref().subrows(k, k));
                    solve.apply(z.as_mut());
                    u.transpose() * &z
                });
                Ok((solve, st))
            })
            .collect();
        let mut level_solves = Vec::with_capacity(built.len());
        let mut level_s = Vec::new();
        for r in built {
            let (solve, st) = r?;
            level_solves.push(solve);
            if let Some(st) = st {
                level_s.push(st);
            }
        }
        parents[l] = level_solves;
        if l > 0 {
            s[l - 1] = level_s;
        }
    }

    let woodbury_nodes = parents.iter().flatten().filter(|p| matches!(p, ParentSolve::Woodbury { .. })).count();
    let stats = BuildStats {
        t_build: start.elapsed().as_secs_f64(),
        woodbury_nodes,
        dense_nodes: parents.iter().map(Vec::len).sum::<usize>() - woodbury_nodes,
        max_leaf_growth: leaves.iter().map(|l| l.growth).fold(0.0, f64::max),
        max_coupling_growth: parents.iter().flatten().map(ParentSolve::growth).fold(0.0, f64::max),
    };
    Ok(ScatteringInverse { b: bp, leaves, s, parents, stats })
}

/// Reusable buffers for [`apply_inverse_with`].
#[derive(Debug, Clone, Default)]
pub struct SolveWorkspace {
    r: Vec<Complex64>,
    rt: Vec<Vec<Complex64>>,
    qt: Vec<Vec<Complex64>>,
    wt: Vec<Vec<Complex64>>,
    z: Vec<Vec<Complex64>>,
}

impl SolveWorkspace {
    pub fn new(f: &HbsFactors, tree: &HbsTree) -> Self {
        let depth = f.depth();
        let sized = |l: usize| vec![Complex64::new(0.0, 0.0); f.rank(l) * tree.nodes_at(l)];
        Self {
            r: vec![Complex64::new(0.0, 0.0); tree.len()],
            rt: (1..=depth).map(sized).collect(),
            qt: (1..=depth).map(sized).collect(),
            wt: (1..=depth).map(sized).collect(),
            z: (1..=depth).map(sized).collect(),
        }
    }

    fn fits(&self, f: &HbsFactors, tree: &HbsTree) -> bool {
        self.r.len() == tree.len()
            && self.rt.len() == f.depth()
            && (1..=f.depth()).all(|l| self.rt[l - 1].len() == f.rank(l) * tree.nodes_at(l))
    }
}

/// Applies the approximate inverse to `f` (grid order).
pub fn apply_inverse(
    inv: &ScatteringInverse,
    fac: &HbsFactors,
    tree: &HbsTree,
    f: &[Complex64],
) -> Result<Vec<Complex64>> {
    let mut ws = SolveWorkspace::new(fac, tree);
    apply_inverse_with(inv, fac, tree, f, &mut ws)
}

/// Applies the approximate inverse reusing the buffers in `ws`.
pub fn apply_inverse_with(
    inv: &ScatteringInverse,
    fac: &HbsFactors,
    tree: &HbsTree,
    f: &[Complex64],
    ws: &mut SolveWorkspace,
) -> Result<Vec<Complex64>> {
    fac.check_tree(tree)?;
    if f.len() != tree.len() {
        return Err(Error::LengthMismatch { expected: tree.len(), got: f.len() });
    }
    if !ws.fits(fac, tree) {
        *ws = SolveWorkspace::new(fac, tree);
    }
    let depth = fac.depth();
    let m = tree.node_size(depth);
    let nl = tree.nodes_at(depth);
    let fp = tree.permute(f);

    // Leaves: r = X f.
    ws.r.copy_from_slice(&fp);
    ws.r.par_chunks_mut(m).zip(inv.leaves.par_iter()).for_each(|(r, lu)| {
        lu.solve_in_place(view_mut(r, m, 1));
    });
    if depth == 0 {
        return Ok(tree.unpermute(&ws.r));
    }

    // Upward: r~ = U^T r on the leaves, r~ = U^T X [r~_a; r~_b] above.
    let lf = fac.level(depth);
    gemm_tn(view_mut(&mut ws.rt[depth - 1], lf.rank(), nl), false, lf.u.as_ref(), view(&ws.r, m, nl));
    for l in (1..depth).rev() {
        let lf = fac.level(l);
        let n = tree.nodes_at(l);
        let rows = lf.rows();
        let mut tmp = ws.rt[l].clone();
        tmp.par_chunks_mut(rows.max(1)).zip(inv.parents[l].par_iter()).for_each(|(v, p)| {
            p.apply(view_mut(v, rows, 1));
        });
        gemm_tn(view_mut(&mut ws.rt[l - 1], lf.rank(), n), false, lf.u.as_ref(), view(&tmp, rows, n));
    }

    // Root: q~ on level 1, then the sibling exchange gives w~ on level 1.
    let k1 = fac.rank(1);
    ws.qt[0].copy_from_slice(&ws.rt[0]);
    inv.parents[0][0].apply(view_mut(&mut ws.qt[0], 2 * k1, 1));
    ws.wt[0].fill(Complex64::new(0.0, 0.0));
    sibling_exchange(fac, 1, &ws.qt[0], &mut ws.wt[0]);

    // Downward: q~ = X (r~ - diag(S) U w~_parent), w~ = sibling + U w~_parent.
    for l in 1..depth {
        let lf = fac.level(l);
        let n = tree.nodes_at(l);
        let kc = fac.rank(l + 1);
        let (upper, lower) = ws.wt.split_at_mut(l);
        gemm(view_mut(&mut ws.z[l], lf.rows(), n), false, lf.u.as_ref(), view(&upper[l - 1], lf.rank(), n));
        let s_children = &inv.s[l];
        let rt = &ws.rt[l];
        let z = &ws.z[l];
        ws.qt[l]
            .par_chunks_mut((2 * kc).max(1))
            .enumerate()
            .zip(inv.parents[l].par_iter())
            .for_each(|((j, v), p)| {
                for c in 0..2 {
                    let s = &s_children[2 * j + c];
                    let zc = &z[(2 * j + c) * kc..(2 * j + c + 1) * kc];
                    let rc = &rt[(2 * j + c) * kc..(2 * j + c + 1) * kc];
                    for i in 0..kc {
                        let mut acc = rc[i];
                        for t in 0..kc {
                            acc -= s[(i, t)] * zc[t];
                        }
                        v[c * kc + i] = acc;
                    }
                }
                p.apply(view_mut(v, 2 * kc, 1));
            });
        let w = &mut lower[0];
        w.copy_from_slice(&ws.z[l]);
        sibling_exchange(fac, l + 1, &ws.qt[l], w);
    }

    // Leaves: q = X (f - B U w~).
    let lf = fac.level(depth);
    let mut u_w = vec![Complex64::new(0.0, 0.0); tree.len()];
    gemm(view_mut(&mut u_w, m, nl), false, lf.u.as_ref(), view(&ws.wt[depth - 1], lf.rank(), nl));
    ws.r.par_iter_mut()
        .zip(fp.par_iter().zip(u_w.par_iter().zip(inv.b.par_iter())))
        .for_each(|(r, (f, (uw, b)))| *r = f - *b * uw);
    ws.r.par_chunks_mut(m).zip(inv.leaves.par_iter()).for_each(|(r, lu)| {
        lu.solve_in_place(view_mut(r, m, 1));
    });
    Ok(tree.unpermute(&ws.r))
}
