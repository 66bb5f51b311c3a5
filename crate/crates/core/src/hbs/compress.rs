use web_time::Instant;

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use super::tree::{proxy_ring, HbsTree, LatticeBox};
use crate::discretization::{kernel_entry, CorrectionTable, UniformGrid};
use crate::error::{Error, Result};
use crate::lowrank::{entry_magnitude_stats, frobenius, id_rows, lr_factor, LrFactors};

/// Proxy band width for a compression tolerance.
pub fn default_proxy_width(eps: f64) -> usize {
    if eps >= 1e-4 {
        1
    } else if eps >= 1e-10 {
        2
    } else {
        3
    }
}

/// Factors shared by every node of one level.
#[derive(Debug, Clone)]
pub struct LevelFactors {
    /// Basis `U`: `m x k` on the leaf level, `2 k_child x k` above.
    pub u: Mat<Complex64>,
    /// Selected rows of the level's ID, as indices into the rows of `u`.
    pub skeleton: Vec<usize>,
    /// Skeleton points in lattice coordinates relative to the box corner.
    pub pattern: Vec<(i64, i64)>,
    /// Interaction from the second sibling's skeleton to the first's.
    pub g_ab: Mat<Complex64>,
    /// Low-rank factors of `g_ab`.
    pub lr: LrFactors,
}

impl LevelFactors {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }
}

/// Diagnostics of one level's compression.
#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub rows: usize,
    pub rank: usize,
    pub proxy_points: usize,
    pub sibling_rank: usize,
    pub max_interp_entry: f64,
}

/// HBS representation of the kernel matrix on a uniform grid.
///
/// Every box on a level is a translate of every other, so a level stores a
/// single basis, skeleton pattern and sibling-interaction matrix, and the
/// leaves share one diagonal block.
#[derive(Debug, Clone)]
pub struct HbsFactors {
    pub grid: UniformGrid,
    pub kappa: f64,
    pub corr: Option<CorrectionTable>,
    pub eps: f64,
    pub proxy_width: usize,
    pub leaf_size: usize,
    /// `levels[l - 1]` holds level `l`, for `l = 1..=L`.
    pub levels: Vec<LevelFactors>,
    /// Diagonal block shared by all leaves.
    pub leaf_block: Mat<Complex64>,
    pub stats: Vec<LevelStats>,
    /// Wall time of the compression in seconds.
    pub t_skel: f64,
}

impl HbsFactors {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Factors of level `l >= 1`.
    pub fn level(&self, l: usize) -> &LevelFactors {
        &self.levels[l - 1]
    }

    /// Rank `k_l` of level `l >= 1`.
    pub fn rank(&self, l: usize) -> usize {
        self.level(l).rank()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|f| f.rank()).collect()
    }

    /// Global lattice coordinates of the skeleton of node `(l, j)`.
    pub fn global_skeleton(&self, tree: &HbsTree, l: usize, j: usize) -> Vec<(i64, i64)> {
        let b = tree.lattice_box(l, j);
        self.level(l).pattern.iter().map(|&(x, y)| (b.x0 + x, b.y0 + y)).collect()
    }

    pub(crate) fn check_tree(&self, tree: &HbsTree) -> Result<()> {
        if tree.grid != self.grid || tree.levels != self.depth() {
            return Err(Error::InvalidParameter("tree does not match the HBS factors".into()));
        }
        Ok(())
    }
}

/// Compression options.
#[derive(Debug, Clone, Copy)]
pub struct CompressOptions {
    pub eps: f64,
    /// Overrides the width chosen from `eps`.
    pub proxy_width: Option<usize>,
}

impl CompressOptions {
    pub fn new(eps: f64) -> Self {
        Self { eps, proxy_width: None }
    }
}

fn kernel_block(
    grid: &UniformGrid,
    kappa: f64,
    corr: Option<&CorrectionTable>,
    rows: &[(i64, i64)],
    cols: &[(i64, i64)],
) -> Mat<Complex64> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| {
        let (a, b) = (rows[i], cols[j]);
        kernel_entry(grid, (a.0 - b.0, a.1 - b.1), kappa, corr)
    })
}

/// Builds the HBS factors by proxy compression of one representative box
/// per level, from the leaves up.
pub fn compress(
    tree: &HbsTree,
    kappa: f64,
    corr: Option<&CorrectionTable>,
    opts: CompressOptions,
) -> Result<HbsFactors> {
    let eps = opts.eps;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("compression tolerance must be in (0, 1), got {eps}")));
    }
    let width = opts.proxy_width.unwrap_or_else(|| default_proxy_width(eps));
    if !(1..=3).contains(&width) {
        return Err(Error::InvalidParameter(format!("proxy width must be 1, 2 or 3, got {width}")));
    }
    let start = Instant::now();
    let grid = &tree.grid;
    let depth = tree.levels;
    let (lx, ly) = tree.leaf_dims();
    let leaf_box = LatticeBox { x0: 0, y0: 0, nx: lx, ny: ly };
    let leaf_points: Vec<(i64, i64)> = leaf_box.points().collect();
    let leaf_block = kernel_block(grid, kappa, corr, &leaf_points, &leaf_points);

    let mut built: Vec<LevelFactors> = Vec::with_capacity(depth);
    let mut stats = Vec::with_capacity(depth);
    for l in (1..=depth).rev() {
        let (nx, ny) = tree.box_dims(l);
        let bx = LatticeBox { x0: 0, y0: 0, nx, ny };
        let rows: Vec<(i64, i64)> = match built.last() {
            None => leaf_points.clone(),
            Some(child) => {
                let (sx, sy) = tree.sibling_shift(l);
                let mut r = child.pattern.clone();
                r.extend(child.pattern.iter().map(|&(x, y)| (x + sx, y + sy)));
                r
            }
        };
        let proxy = proxy_ring(&bx, width);
        let a = kernel_block(grid, kappa, corr, &rows, &proxy);
        let id = id_rows(a.as_ref(), eps * frobenius(a.as_ref()));
        let pattern: Vec<(i64, i64)> = id.skeleton.iter().map(|&i| rows[i]).collect();

        let (sx, sy) = tree.sibling_shift(l - 1);
        let shifted: Vec<(i64, i64)> = pattern.iter().map(|&(x, y)| (x + sx, y + sy)).collect();
        let g_ab = kernel_block(grid, kappa, corr, &pattern, &shifted);
        let lr = lr_factor(g_ab.as_ref(), eps * frobenius(g_ab.as_ref()));

        stats.push(LevelStats {
            level: l,
            rows: rows.len(),
            rank: id.rank(),
            proxy_points: proxy.len(),
            sibling_rank: lr.rank(),
            max_interp_entry: entry_magnitude_stats(id.interp.as_ref()),
        });
        built.push(LevelFactors { u: id.interp, skeleton: id.skeleton, pattern, g_ab, lr });
    }
    built.reverse();
    stats.reverse();
    Ok(HbsFactors {
        grid: *grid,
        kappa,
        corr: corr.copied(),
        eps,
        proxy_width: width,
        leaf_size: tree.leaf_size,
        levels: built,
        leaf_block,
        stats,
        t_skel: start.elapsed().as_secs_f64(),
    })
}
