use crate::discretization::{Rect, UniformGrid};
use crate::error::{Error, Result};

/// An axis-aligned block of lattice points `[x0, x0 + nx) x [y0, y0 + ny)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBox {
    pub x0: i64,
    pub y0: i64,
    pub nx: usize,
    pub ny: usize,
}

impl LatticeBox {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, p: (i64, i64)) -> bool {
        p.0 >= self.x0 && p.0 < self.x0 + self.nx as i64 && p.1 >= self.y0 && p.1 < self.y0 + self.ny as i64
    }

    /// Points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.ny as i64).flat_map(move |y| (0..self.nx as i64).map(move |x| (self.x0 + x, self.y0 + y)))
    }
}

/// Uniform binary tree over the grid with alternating cuts.
///
/// Level 0 is the whole grid. Nodes on even levels are split by a vertical
/// cut (halving the x extent) and nodes on odd levels by a horizontal cut.
/// Node `j` on level `l` has children `2j` (left or bottom) and `2j + 1`
/// on level `l + 1`. All leaves sit on level `levels`.
///
/// Points are reordered leaf by leaf, row-major inside each leaf, so every
/// node owns a contiguous range of the permuted ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct HbsTree {
    pub grid: UniformGrid,
    pub leaf_size: usize,
    pub levels: usize,
    /// Permuted position to grid index.
    pub perm: Vec<usize>,
    /// Grid index to permuted position.
    pub inv_perm: Vec<usize>,
}

impl HbsTree {
    /// Builds the tree with the fewest levels whose leaves hold at most
    /// `leaf_size` points.
    pub fn new(grid: &UniformGrid, leaf_size: usize) -> Result<Self> {
        if leaf_size < 4 {
            return Err(Error::InvalidParameter(format!("leaf size must be at least 4, got {leaf_size}")));
        }
        let (mut nx, mut ny) = (grid.n1, grid.n2);
        let mut levels = 0;
        while nx * ny > leaf_size {
            let vertical = levels % 2 == 0;
            let side = if vertical { nx } else { ny };
            if side % 2 != 0 {
                return Err(Error::GridNotDivisible {
                    n1: grid.n1,
                    n2: grid.n2,
                    leaf_size,
                    reason: format!(
                        "level {levels} box is {nx}x{ny} and its {} side cannot be halved; choose n1 and n2 as \
                         a leaf side times a power of two",
                        if vertical { "x" } else { "y" }
                    ),
                });
            }
            if vertical {
                nx /= 2;
            } else {
                ny /= 2;
            }
            levels += 1;
        }
        let mut tree = Self { grid: *grid, leaf_size, levels, perm: Vec::new(), inv_perm: Vec::new() };
        let mut perm = Vec::with_capacity(grid.len());
        for j in 0..tree.nodes_at(levels) {
            let b = tree.lattice_box(levels, j);
            perm.extend(b.points().map(|(x, y)| grid.index(x as usize, y as usize)));
        }
        let mut inv_perm = vec![0; grid.len()];
        for (p, &g) in perm.iter().enumerate() {
            inv_perm[g] = p;
        }
        tree.perm = perm;
        tree.inv_perm = inv_perm;
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes_at(&self, level: usize) -> usize {
        1 << level
    }

    /// Whether nodes on `level` are split by a vertical cut.
    pub fn cut_is_vertical(level: usize) -> bool {
        level.is_multiple_of(2)
    }

    /// Box dimensions `(nx, ny)` shared by every node on `level`.
    pub fn box_dims(&self, level: usize) -> (usize, usize) {
        let vertical_cuts = level.div_ceil(2);
        let horizontal_cuts = level / 2;
        (self.grid.n1 >> vertical_cuts, self.grid.n2 >> horizontal_cuts)
    }

    pub fn leaf_dims(&self) -> (usize, usize) {
        self.box_dims(self.levels)
    }

    /// Number of points in each node on `level`.
    pub fn node_size(&self, level: usize) -> usize {
        let (nx, ny) = self.box_dims(level);
        nx * ny
    }

    pub fn lattice_box(&self, level: usize, j: usize) -> LatticeBox {
        let (mut nx, mut ny) = (self.grid.n1, self.grid.n2);
        let (mut x0, mut y0) = (0i64, 0i64);
        for t in 0..level {
            let bit = (j >> (level - 1 - t)) & 1;
            if Self::cut_is_vertical(t) {
                nx /= 2;
                x0 += (bit * nx) as i64;
            } else {
                ny /= 2;
                y0 += (bit * ny) as i64;
            }
        }
        LatticeBox { x0, y0, nx, ny }
    }

    /// Physical rectangle covered by a node.
    pub fn rect(&self, level: usize, j: usize) -> Rect {
        let b = self.lattice_box(level, j);
        let d = self.grid.domain();
        let h = self.grid.h;
        Rect::new(
            d.x0 + h * b.x0 as f64,
            d.y0 + h * b.y0 as f64,
            d.x0 + h * (b.x0 as usize + b.nx) as f64,
            d.y0 + h * (b.y0 as usize + b.ny) as f64,
        )
    }

    /// Offset of the second child relative to the first for nodes on `level`.
    pub fn sibling_shift(&self, level: usize) -> (i64, i64) {
        let (nx, ny) = self.box_dims(level + 1);
        if Self::cut_is_vertical(level) {
            (nx as i64, 0)
        } else {
            (0, ny as i64)
        }
    }

    /// Range of permuted positions owned by a node.
    pub fn range(&self, level: usize, j: usize) -> std::ops::Range<usize> {
        let s = self.node_size(level);
        j * s..(j + 1) * s
    }

    /// Grid indices owned by a node.
    pub fn index_set(&self, level: usize, j: usize) -> &[usize] {
        &self.perm[self.range(level, j)]
    }

    pub fn parent(level: usize, j: usize) -> Option<(usize, usize)> {
        (level > 0).then(|| (level - 1, j / 2))
    }

    pub fn children(&self, level: usize, j: usize) -> Option<[(usize, usize); 2]> {
        (level < self.levels).then(|| [(level + 1, 2 * j), (level + 1, 2 * j + 1)])
    }

    /// Reorders a grid-ordered vector into tree order.
    pub fn permute<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.perm.iter().map(|&g| v[g]).collect()
    }

    /// Reorders a tree-ordered vector back into grid order.
    pub fn unpermute<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.inv_perm.iter().map(|&p| v[p]).collect()
    }
}

/// Lattice points in the band of `width` cells immediately outside `b`, in
/// row-major order. Points outside the grid are included; only their
/// geometry is used.
pub fn proxy_ring(b: &LatticeBox, width: usize) -> Vec<(i64, i64)> {
    let w = width as i64;
    let outer = LatticeBox { x0: b.x0 - w, y0: b.y0 - w, nx: b.nx + 2 * width, ny: b.ny + 2 * width };
    outer.points().filter(|p| !b.contains(*p)).collect()
}
