use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::discretization::UniformGrid;
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"LSF2";

/// Where exported values live.
#[derive(Debug, Clone, Copy)]
pub enum FieldPoints<'a> {
    /// Every grid point, row-major.
    Grid(&'a UniformGrid),
    /// An arbitrary list; the binary header records `n1 = len`, `n2 = 1`,
    /// `h = 0`.
    Targets(&'a [[f64; 2]]),
}

impl FieldPoints<'_> {
    fn len(&self) -> usize {
        match self {
            Self::Grid(g) => g.len(),
            Self::Targets(t) => t.len(),
        }
    }

    fn point(&self, i: usize) -> [f64; 2] {
        match self {
            Self::Grid(g) => g.point(i),
            Self::Targets(t) => t[i],
        }
    }

    fn header(&self) -> (u32, u32, f64) {
        match self {
            Self::Grid(g) => (g.n1 as u32, g.n2 as u32, g.h),
            Self::Targets(t) => (t.len() as u32, 1, 0.0),
        }
    }
}

/// Writes `<stem>.csv` (`x,y,re,im`, 17 significant digits) and `<stem>.lsf`
/// (magic `LSF2`, `u32 n1`, `u32 n2`, `f64 h`, then row-major complex128,
/// all little-endian). Returns both paths.
pub fn export_field(stem: &Path, points: FieldPoints<'_>, values: &[Complex64]) -> Result<(PathBuf, PathBuf)> {
    if values.len() != points.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: values.len() });
    }
    let csv = stem.with_extension("csv");
    let bin = stem.with_extension("lsf");
    let mut w = BufWriter::new(File::create(&csv)?);
    writeln!(w, "x,y,re,im")?;
    for (i, v) in values.iter().enumerate() {
        let [x, y] = points.point(i);
        writeln!(w, "{x:.16e},{y:.16e},{:.16e},{:.16e}", v.re, v.im)?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(&bin)?);
    let (n1, n2, h) = points.header();
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&n1.to_le_bytes())?;
    w.write_all(&n2.to_le_bytes())?;
    w.write_all(&h.to_le_bytes())?;
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok((csv, bin))
}

/// A field read back from an LSF2 file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub n1: u32,
    pub n2: u32,
    pub h: f64,
    pub values: Vec<Complex64>,
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[..4] != FIELD_MAGIC {
        return Err(Error::Format("not an LSF2 field file".into()));
    }
    let n1 = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let n2 = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let h = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let body = &bytes[20..];
    let n = n1 as usize * n2 as usize;
    if body.len() != 16 * n {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", 16 * n, body.len())));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok(FieldFile { n1, n2, h, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_grid() {
        let dir = tempfile::tempdir().unwrap();
        let g = UniformGrid::unit_square(1);
        let (csv, bin) = export_field(&dir.path().join("u"), FieldPoints::Grid(&g), &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(std::fs::metadata(&bin).unwrap().len(), 20 + 16);
        let text = std::fs::read_to_string(csv).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "0.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0");
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let g = UniformGrid::new([0.1, -0.3], 0.07, 3, 2).unwrap();
        let v: Vec<Complex64> =
            (0..6).map(|i| Complex64::new((i as f64).sin() / 3.0, -1e-300 * i as f64)).collect();
        let (csv, bin) = export_field(&dir.path().join("f"), FieldPoints::Grid(&g), &v).unwrap();
        let back = read_field(&bin).unwrap();
        assert_eq!((back.n1, back.n2, back.h), (3, 2, 0.07));
        assert_eq!(back.values, v);
        for (line, val) in std::fs::read_to_string(csv).unwrap().lines().skip(1).zip(&v) {
            let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!((cols[2], cols[3]), (val.re, val.im));
        }
    }

    #[test]
    fn targets_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let t = [[0.5, 1.0], [2.0, -1.0]];
        let v = [Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)];
        let (_, bin) = export_field(&dir.path().join("t"), FieldPoints::Targets(&t), &v).unwrap();
        let back = read_field(&bin).unwrap();
        assert_eq!((back.n1, back.n2, back.h), (2, 1, 0.0));
        assert!(export_field(&dir.path().join("t"), FieldPoints::Targets(&t), &v[..1]).is_err());
        assert!(export_field(&dir.path().join("missing/t"), FieldPoints::Targets(&t), &v).is_err());
        std::fs::write(dir.path().join("bad.lsf"), b"LSF2").unwrap();
        assert!(read_field(&dir.path().join("bad.lsf")).is_err());
    }
}
