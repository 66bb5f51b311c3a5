use num_complex::Complex64;

use crate::dense::norm2;
use crate::discretization::KernelTable;
use crate::error::{Error, Result};
use crate::fast_apply::ConvolutionOperator;
use crate::hbs::{sibling_exchange, upward, HbsFactors, HbsTree};

/// Largest `N` accepted by [`lemma1_check`].
pub const LEMMA_CAP: usize = 6400;

/// Checks the incoming-expansion recursion on every non-root level.
///
/// For each node `t` with children `a`, `b`, the exact incoming fields
/// `w~` at the children's skeleton points (the field of all charges outside
/// the child, from `G`) are compared with the sibling term built from the
/// outgoing expansions plus `U_t w~_t`. Returns the largest relative defect
/// over all nodes. `B` does not enter.
pub fn lemma1_check(f: &HbsFactors, tree: &HbsTree, q: &[Complex64]) -> Result<f64> {
    f.check_tree(tree)?;
    if q.len() != tree.len() {
        return Err(Error::LengthMismatch { expected: tree.len(), got: q.len() });
    }
    if tree.len() > LEMMA_CAP {
        return Err(Error::TooLarge { n: tree.len(), cap: LEMMA_CAP });
    }
    let depth = f.depth();
    if depth == 0 {
        return Ok(0.0);
    }
    let grid = &tree.grid;
    let op = ConvolutionOperator::new(grid, f.kappa, f.corr.as_ref());
    let field = op.apply_g(q)?;
    let table = KernelTable::for_grid(grid, f.kappa, f.corr.as_ref(), 0);

    // Exact incoming expansions per level, k_l x 2^l column-major.
    let exact: Vec<Vec<Complex64>> = (1..=depth)
        .map(|l| {
            let mut w = Vec::with_capacity(f.rank(l) * tree.nodes_at(l));
            for j in 0..tree.nodes_at(l) {
                let own = tree.index_set(l, j);
                for (x, y) in f.global_skeleton(tree, l, j) {
                    let mut v = field[grid.index(x as usize, y as usize)];
                    for &i in own {
                        let (ix, iy) = grid.coords(i);
                        v -= table.get(x - ix as i64, y - iy as i64) * q[i];
                    }
                    w.push(v);
                }
            }
            w
        })
        .collect();

    let qt = upward(f, tree, &tree.permute(q));
    let mut worst = 0.0f64;
    for l in 1..=depth {
        let lf_child = f.level(l);
        let k = lf_child.rank();
        let mut model = vec![Complex64::new(0.0, 0.0); k * tree.nodes_at(l)];
        if l > 1 {
            let lf = f.level(l - 1);
            let n = tree.nodes_at(l - 1);
            crate::blocks::gemm(
                crate::blocks::view_mut(&mut model, lf.rows(), n),
                false,
                lf.u.as_ref(),
                crate::blocks::view(&exact[l - 2], lf.rank(), n),
            );
        }
        sibling_exchange(f, l, &qt[l - 1], &mut model);
        for j in 0..tree.nodes_at(l - 1) {
            let range = 2 * j * k..2 * (j + 1) * k;
            let e = &exact[l - 1][range.clone()];
            let d: Vec<Complex64> = e.iter().zip(&model[range]).map(|(a, b)| a - b).collect();
            let scale = norm2(e);
            if scale > 0.0 {
                worst = worst.max(norm2(&d) / scale);
            }
        }
    }
    Ok(worst)
}
