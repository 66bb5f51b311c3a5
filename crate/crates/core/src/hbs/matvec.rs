use num_complex::Complex64;

use super::compress::HbsFactors;
use super::tree::HbsTree;
use crate::blocks::{alternate, alternate_mut, gemm, gemm_tn, view, view_mut};
use crate::error::{Error, Result};

/// Outgoing expansions `q~_l` for every level `l = 1..=L` (index `l - 1`),
/// each a `k_l x 2^l` column-major buffer, from a tree-ordered `q`.
pub(crate) fn upward(f: &HbsFactors, tree: &HbsTree, qp: &[Complex64]) -> Vec<Vec<Complex64>> {
    let depth = f.depth();
    let mut out: Vec<Vec<Complex64>> = vec![Vec::new(); depth];
    if depth == 0 {
        return out;
    }
    let m = tree.node_size(depth);
    for l in (1..=depth).rev() {
        let lf = f.level(l);
        let n = tree.nodes_at(l);
        let mut qt = vec![Complex64::new(0.0, 0.0); lf.rank() * n];
        let input = if l == depth { view(qp, m, n) } else { view(&out[l], lf.rows(), n) };
        gemm_tn(view_mut(&mut qt, lf.rank(), n), false, lf.u.as_ref(), input);
        out[l - 1] = qt;
    }
    out
}

/// Sibling exchange on level `l`: `w~_a = G_ab q~_b`, `w~_b = G_ab^T q~_a`,
/// added into `wt`.
pub(crate) fn sibling_exchange(f: &HbsFactors, l: usize, qt: &[Complex64], wt: &mut [Complex64]) {
    let lf = f.level(l);
    let k = lf.rank();
    let half = 1usize << (l - 1);
    gemm(alternate_mut(wt, k, half, 0), true, lf.g_ab.as_ref(), alternate(qt, k, half, 1));
    gemm(alternate_mut(wt, k, half, 1), true, lf.g_ab.transpose(), alternate(qt, k, half, 0));
}

/// Approximate `G q` through the HBS factors; `q` in grid order.
pub fn hbs_matvec(f: &HbsFactors, tree: &HbsTree, q: &[Complex64]) -> Result<Vec<Complex64>> {
    f.check_tree(tree)?;
    if q.len() != tree.len() {
        return Err(Error::LengthMismatch { expected: tree.len(), got: q.len() });
    }
    let depth = f.depth();
    let qp = tree.permute(q);
    let m = tree.node_size(depth);
    let nl = tree.nodes_at(depth);
    let mut y = vec![Complex64::new(0.0, 0.0); tree.len()];
    gemm(view_mut(&mut y, m, nl), false, f.leaf_block.as_ref(), view(&qp, m, nl));
    if depth > 0 {
        let qt = upward(f, tree, &qp);
        let mut wt: Vec<Vec<Complex64>> =
            (1..=depth).map(|l| vec![Complex64::new(0.0, 0.0); f.rank(l) * tree.nodes_at(l)]).collect();
        for l in 1..=depth {
            sibling_exchange(f, l, &qt[l - 1], &mut wt[l - 1]);
        }
        for l in 1..depth {
            let lf = f.level(l);
            let n = tree.nodes_at(l);
            let (upper, lower) = wt.split_at_mut(l);
            gemm(view_mut(&mut lower[0], lf.rows(), n), true, lf.u.as_ref(), view(&upper[l - 1], lf.rank(), n));
        }
        let lf = f.level(depth);
        gemm(view_mut(&mut y, m, nl), true, lf.u.as_ref(), view(&wt[depth - 1], lf.rank(), nl));
    }
    Ok(tree.unpermute(&y))
}
