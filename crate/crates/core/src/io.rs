//! Binary container for HBS factors and, optionally, their scattering-matrix
//! inverse.
//!
//! All integers and floats are little-endian. Matrices are written as
//! `u32 rows, u32 cols` followed by `rows * cols` complex128 entries in
//! row-major order (real part first).
//!
//! ```text
//! "HBS2"  u32 version
//! grid:   u32 n1, u32 n2, f64 h, f64 origin_x, f64 origin_y
//! f64 kappa, f64 eps, f64 t_skel, u32 proxy_width, u32 leaf_size, u32 depth
//! u8 has_correction [, f64 tau_re, f64 tau_im, f64 kappa_h, f64 shape]
//! matrix leaf_block
//! per level, leaf level first (l = depth down to 1):
//!   u32 k; k x u32 skeleton rows; k x (i32 x, i32 y) pattern
//!   matrix u, matrix g_ab, matrix lr.l, matrix lr.r
//!   stats: u32 rows, u32 proxy_points, f64 max_interp_entry
//! u8 has_inverse
//! if has_inverse:
//!   "SINV"  f64 t_build
//!   u32 n, n x f64 b (tree order)
//!   u32 leaves, per leaf: lu
//!   per level l = 1..=depth: u32 count, count x matrix S
//!   per level l = 0..depth: u32 count, per node:
//!     u8 0 then lu (dense coupling), or
//!     u8 1 then matrix sl_a, matrix sl_b, matrix r_adj, matrix l_t, lu core
//! lu: matrix packed, n x u32 row permutation, f64 growth
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;

use crate::dense::DenseLu;
use crate::discretization::{CorrectionTable, UniformGrid};
use crate::error::{Error, Result};
use crate::hbs::{HbsFactors, LevelFactors, LevelStats};
use crate::lowrank::LrFactors;
use crate::solver::{BuildStats, ParentSolve, ScatteringInverse};

pub const MAGIC: &[u8; 4] = b"HBS2";
pub const INVERSE_TAG: &[u8; 4] = b"SINV";
pub const VERSION: u32 = 1;

struct Out<W: Write> {
    w: W,
    bytes: u64,
}

impl<W: Write> Out<W> {
    fn raw(&mut self, b: &[u8]) -> Result<()> {
        self.bytes += b.len() as u64;
        self.w.write_all(b)?;
        Ok(())
    }

    fn u8(&mut self, v: u8) -> Result<()> {
        self.raw(&[v])
    }

    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        self.raw(&v.to_le_bytes())
    }

    fn i32(&mut self, v: i64) -> Result<()> {
        let v = i32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in i32")))?;
        self.raw(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.raw(&v.to_le_bytes())
    }

    fn matrix(&mut self, m: &Mat<Complex64>) -> Result<()> {
        self.u32(m.nrows())?;
        self.u32(m.ncols())?;
        let mut buf = Vec::with_capacity(16 * m.ncols());
        for i in 0..m.nrows() {
            buf.clear();
            for j in 0..m.ncols() {
                buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
            self.raw(&buf)?;
        }
        Ok(())
    }

    fn lu(&mut self, lu: &DenseLu) -> Result<()> {
        self.matrix(&lu.packed().to_owned())?;
        for &p in lu.perm() {
            self.u32(p)?;
        }
        self.f64(lu.growth)
    }
}

struct In<R: Read> {
    r: R,
}

impl<R: Read> In<R> {
    fn raw<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("unexpected end of file".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.raw::<1>()?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.raw()?) as usize)
    }

    fn i32(&mut self) -> Result<i64> {
        Ok(i32::from_le_bytes(self.raw()?) as i64)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.raw()?))
    }

    fn count(&mut self, max: usize, what: &str) -> Result<usize> {
        let n = self.u32()?;
        if n > max {
            return Err(Error::Format(format!("{what} count {n} exceeds {max}")));
        }
        Ok(n)
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Mat<Complex64>> {
        let (r, c) = (self.u32()?, self.u32()?);
        if (r, c) != (rows, cols) {
            return Err(Error::Format(format!("{what} is {r}x{c}, expected {rows}x{cols}")));
        }
        let mut m = Mat::<Complex64>::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = Complex64::new(self.f64()?, self.f64()?);
            }
        }
        Ok(m)
    }

    fn any_matrix(&mut self, max: usize, what: &str) -> Result<Mat<Complex64>> {
        let (r, c) = (self.u32()?, self.u32()?);
        if r > max || c > max {
            return Err(Error::Format(format!("{what} is {r}x{c}, larger than {max}")));
        }
        let mut m = Mat::<Complex64>::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = Complex64::new(self.f64()?, self.f64()?);
            }
        }
        Ok(m)
    }

    fn lu(&mut self, n: usize, what: &str) -> Result<DenseLu> {
        let packed = self.matrix(n, n, what)?;
        let perm = (0..n).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        let growth = self.f64()?;
        DenseLu::restore(packed, perm, growth).ok_or_else(|| Error::Format(format!("{what} is not a valid LU")))
    }
}

fn write_all<W: Write>(out: &mut Out<W>, f: &HbsFactors, inv: Option<&ScatteringInverse>) -> Result<()> {
    out.raw(MAGIC)?;
    out.u32(VERSION as usize)?;
    let g = &f.grid;
    out.u32(g.n1)?;
    out.u32(g.n2)?;
    out.f64(g.h)?;
    out.f64(g.origin[0])?;
    out.f64(g.origin[1])?;
    out.f64(f.kappa)?;
    out.f64(f.eps)?;
    out.f64(f.t_skel)?;
    out.u32(f.proxy_width)?;
    out.u32(f.leaf_size)?;
    out.u32(f.depth())?;
    match &f.corr {
        None => out.u8(0)?,
        Some(c) => {
            out.u8(1)?;
            out.f64(c.tau.re)?;
            out.f64(c.tau.im)?;
            out.f64(c.kappa_h)?;
            out.f64(c.shape)?;
        }
    }
    out.matrix(&f.leaf_block)?;
    for (lf, st) in f.levels.iter().zip(&f.stats).rev() {
        out.u32(lf.rank())?;
        for &s in &lf.skeleton {
            out.u32(s)?;
        }
        for &(x, y) in &lf.pattern {
            out.i32(x)?;
            out.i32(y)?;
        }
        out.matrix(&lf.u)?;
        out.matrix(&lf.g_ab)?;
        out.matrix(&lf.lr.l)?;
        out.matrix(&lf.lr.r)?;
        out.u32(st.rows)?;
        out.u32(st.proxy_points)?;
        out.f64(st.max_interp_entry)?;
    }
    let Some(inv) = inv else {
        return out.u8(0);
    };
    out.u8(1)?;
    out.raw(INVERSE_TAG)?;
    out.f64(inv.stats.t_build)?;
    out.u32(inv.b.len())?;
    for &b in &inv.b {
        out.f64(b)?;
    }
    out.u32(inv.leaves.len())?;
    for lu in &inv.leaves {
        out.lu(lu)?;
    }
    for level in &inv.s {
        out.u32(level.len())?;
        for m in level {
            out.matrix(m)?;
        }
    }
    for level in &inv.parents {
        out.u32(level.len())?;
        for p in level {
            match p {
                ParentSolve::Dense(lu) => {
                    out.u8(0)?;
                    out.lu(lu)?;
                }
                ParentSolve::Woodbury { sl_a, sl_b, r_adj, l_t, core } => {
                    out.u8(1)?;
                    out.matrix(sl_a)?;
                    out.matrix(sl_b)?;
                    out.matrix(r_adj)?;
                    out.matrix(l_t)?;
                    out.lu(core)?;
                }
            }
        }
    }
    Ok(())
}

/// Writes the factors, and the inverse if given, to `w`. Returns the number
/// of bytes written.
pub fn write_factors<W: Write>(w: W, f: &HbsFactors, inv: Option<&ScatteringInverse>) -> Result<u64> {
    let mut out = Out { w, bytes: 0 };
    write_all(&mut out, f, inv)?;
    out.w.flush()?;
    Ok(out.bytes)
}

/// Size in bytes of the serialized factors (and inverse, if given).
pub fn serialized_size(f: &HbsFactors, inv: Option<&ScatteringInverse>) -> u64 {
    let mut out = Out { w: std::io::sink(), bytes: 0 };
    write_all(&mut out, f, inv).expect("writing to a sink cannot fail");
    out.bytes
}

pub fn save(path: impl AsRef<Path>, f: &HbsFactors, inv: Option<&ScatteringInverse>) -> Result<u64> {
    write_factors(BufWriter::new(File::create(path)?), f, inv)
}

/// Reads factors and the optional inverse written by [`write_factors`].
pub fn read_factors<R: Read>(r: R) -> Result<(HbsFactors, Option<ScatteringInverse>)> {
    let mut inp = In { r };
    if &inp.raw::<4>()? != MAGIC {
        return Err(Error::Format("bad magic, expected HBS2".into()));
    }
    let version = inp.u32()?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (n1, n2) = (inp.u32()?, inp.u32()?);
    let h = inp.f64()?;
    let origin = [inp.f64()?, inp.f64()?];
    let grid = UniformGrid::new(origin, h, n1, n2).map_err(|e| Error::Format(e.to_string()))?;
    let n = grid.len();
    let kappa = inp.f64()?;
    let eps = inp.f64()?;
    let t_skel = inp.f64()?;
    let proxy_width = inp.u32()?;
    let leaf_size = inp.u32()?;
    let depth = inp.count(usize::BITS as usize, "level")?;
    let corr = match inp.u8()? {
        0 => None,
        1 => Some(CorrectionTable {
            tau: Complex64::new(inp.f64()?, inp.f64()?),
            kappa_h: inp.f64()?,
            shape: inp.f64()?,
        }),
        t => return Err(Error::Format(format!("bad correction flag {t}"))),
    };
    let tree = crate::hbs::HbsTree::new(&grid, leaf_size).map_err(|e| Error::Format(e.to_string()))?;
    if tree.levels != depth {
        return Err(Error::Format(format!("depth {depth} does not match the tree ({})", tree.levels)));
    }
    let m = tree.node_size(depth);
    let leaf_block = inp.matrix(m, m, "leaf block")?;

    let mut levels = Vec::with_capacity(depth);
    let mut stats = Vec::with_capacity(depth);
    let mut child_rank = 0;
    for l in (1..=depth).rev() {
        let rows = if l == depth { m } else { 2 * child_rank };
        let k = inp.count(rows, "rank")?;
        let skeleton = (0..k).map(|_| inp.u32()).collect::<Result<Vec<_>>>()?;
        if skeleton.iter().any(|&s| s >= rows) {
            return Err(Error::Format(format!("skeleton index out of range at level {l}")));
        }
        let pattern = (0..k).map(|_| Ok((inp.i32()?, inp.i32()?))).collect::<Result<Vec<_>>>()?;
        let u = inp.matrix(rows, k, "basis")?;
        let g_ab = inp.matrix(k, k, "sibling block")?;
        let ll = inp.any_matrix(k.max(1), "low-rank factor")?;
        let r = ll.ncols();
        let lr_r = inp.matrix(k, r, "low-rank factor")?;
        if ll.nrows() != k {
            return Err(Error::Format(format!("low-rank factor at level {l} has {} rows", ll.nrows())));
        }
        let st_rows = inp.u32()?;
        let proxy_points = inp.u32()?;
        let max_interp_entry = inp.f64()?;
        stats.push(LevelStats { level: l, rows: st_rows, rank: k, proxy_points, sibling_rank: r, max_interp_entry });
        levels.push(LevelFactors { u, skeleton, pattern, g_ab, lr: LrFactors { l: ll, r: lr_r } });
        child_rank = k;
    }
    levels.reverse();
    stats.reverse();
    let f = HbsFactors { grid, kappa, corr, eps, proxy_width, leaf_size, levels, leaf_block, stats, t_skel };

    let inv = match inp.u8()? {
        0 => None,
        1 => Some(read_inverse(&mut inp, &f, &tree, n)?),
        t => return Err(Error::Format(format!("bad inverse flag {t}"))),
    };
    Ok((f, inv))
}

fn read_inverse<R: Read>(
    inp: &mut In<R>,
    f: &HbsFactors,
    tree: &crate::hbs::HbsTree,
    n: usize,
) -> Result<ScatteringInverse> {
    if &inp.raw::<4>()? != INVERSE_TAG {
        return Err(Error::Format("missing SINV section".into()));
    }
    let depth = f.depth();
    let t_build = inp.f64()?;
    if inp.u32()? != n {
        return Err(Error::Format("potential length does not match the grid".into()));
    }
    let b = (0..n).map(|_| inp.f64()).collect::<Result<Vec<_>>>()?;
    let m = tree.node_size(depth);
    if inp.u32()? != tree.nodes_at(depth) {
        return Err(Error::Format("leaf count does not match the tree".into()));
    }
    let leaves = (0..tree.nodes_at(depth)).map(|_| inp.lu(m, "leaf LU")).collect::<Result<Vec<_>>>()?;
    let mut s = Vec::with_capacity(depth);
    for l in 1..=depth {
        if inp.u32()? != tree.nodes_at(l) {
            return Err(Error::Format(format!("scattering matrix count at level {l}")));
        }
        let k = f.rank(l);
        s.push((0..tree.nodes_at(l)).map(|_| inp.matrix(k, k, "scattering matrix")).collect::<Result<Vec<_>>>()?);
    }
    let mut parents = Vec::with_capacity(depth);
    for l in 0..depth {
        if inp.u32()? != tree.nodes_at(l) {
            return Err(Error::Format(format!("coupling count at level {l}")));
        }
        let lf = f.level(l + 1);
        let (k, r) = (lf.rank(), lf.lr.rank());
        let mut level = Vec::with_capacity(tree.nodes_at(l));
        for _ in 0..tree.nodes_at(l) {
            level.push(match inp.u8()? {
                0 => ParentSolve::Dense(inp.lu(2 * k, "coupling LU")?),
                1 => ParentSolve::Woodbury {
                    sl_a: inp.matrix(k, r, "Woodbury factor")?,
                    sl_b: inp.matrix(k, r, "Woodbury factor")?,
                    r_adj: inp.matrix(r, k, "Woodbury factor")?,
                    l_t: inp.matrix(r, k, "Woodbury factor")?,
                    core: inp.lu(2 * r, "Woodbury core")?,
                },
                t => return Err(Error::Format(format!("bad coupling tag {t}"))),
            });
        }
        parents.push(level);
    }
    let woodbury_nodes = parents.iter().flatten().filter(|p| matches!(p, ParentSolve::Woodbury { .. })).count();
    let stats = BuildStats {
        t_build,
        woodbury_nodes,
        dense_nodes: parents.iter().map(Vec::len).sum::<usize>() - woodbury_nodes,
        max_leaf_growth: leaves.iter().map(|l| l.growth).fold(0.0, f64::max),
        max_coupling_growth: parents.iter().flatten().map(|p| p.growth()).fold(0.0, f64::max),
    };
    Ok(ScatteringInverse { b, leaves, s, parents, stats })
}

pub fn load(path: impl AsRef<Path>) -> Result<(HbsFactors, Option<ScatteringInverse>)> {
    read_factors(BufReader::new(File::open(path)?))
}
