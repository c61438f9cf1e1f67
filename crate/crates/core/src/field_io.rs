//! Flat binary and CSV layouts for [`Field`]s.
//!
//! Binary layout, all numbers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `SECTFLD1` |
//! | 4     | `u32` dimension N |
//! | 4     | `u32` anti-symmetry count m |
//! | 8     | `u64` points per axis n |
//! | 8     | `f64` box half-width L |
//! | N     | axis kinds, one byte each: 0 anti-symmetric, 1 Dirichlet, 2 periodic |
//! | 8     | `f64` gamma |
//! | 8     | `f64` alpha |
//! | 1     | `i8` sign a |
//! | 1     | `u8` 1 if a time tag follows, else 0 |
//! | 8     | `f64` time tag (0 when absent) |
//! | 8 n^N | `f64` values, row-major (last axis fastest) |
//!
//! The CSV layout has one comment header line with the same metadata, a
//! column header `x1,..,xN,value`, then one row per node in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::geometry::{AxisKind, Field, GridSpec, SectorSpec, Sign};

const MAGIC: &[u8; 8] = b"SECTFLD1";

fn axis_code(k: AxisKind) -> u8 {
    match k {
        AxisKind::AntiSymmetric => 0,
        AxisKind::Dirichlet => 1,
        AxisKind::Periodic => 2,
    }
}

fn axis_from_code(c: u8) -> Option<AxisKind> {
    match c {
        0 => Some(AxisKind::AntiSymmetric),
        1 => Some(AxisKind::Dirichlet),
        2 => Some(AxisKind::Periodic),
        _ => None,
    }
}

pub fn write_binary<W: Write>(f: &Field, mut w: W) -> Result<()> {
    let spec = f.spec();
    let grid = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(spec.dim as u32).to_le_bytes())?;
    w.write_all(&(spec.m as u32).to_le_bytes())?;
    w.write_all(&(grid.n as u64).to_le_bytes())?;
    w.write_all(&grid.half_width.to_le_bytes())?;
    for &k in &grid.axes {
        w.write_all(&[axis_code(k)])?;
    }
    w.write_all(&spec.gamma.to_le_bytes())?;
    w.write_all(&spec.alpha.to_le_bytes())?;
    w.write_all(&i8::from(spec.sign_a).to_le_bytes())?;
    w.write_all(&[u8::from(f.time().is_some())])?;
    w.write_all(&f.time().unwrap_or(0.0).to_le_bytes())?;
    for v in f.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let bad = |reason: &str| Error::Artifact { path: "<stream>".into(), reason: reason.to_string() };
    if &take::<8, _>(&mut r)? != MAGIC {
        return Err(bad("missing field magic"));
    }
    let dim = u32::from_le_bytes(take(&mut r)?) as usize;
    let m = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let half_width = f64::from_le_bytes(take(&mut r)?);
    if !(1..=3).contains(&dim) || n > 1 << 24 {
        return Err(bad("implausible header"));
    }
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let [c] = take::<1, _>(&mut r)?;
        axes.push(axis_from_code(c).ok_or_else(|| bad("unknown axis kind"))?);
    }
    let gamma = f64::from_le_bytes(take(&mut r)?);
    let alpha = f64::from_le_bytes(take(&mut r)?);
    let sign = Sign::try_from(i8::from_le_bytes(take(&mut r)?)).map_err(|e| bad(&e))?;
    let [has_time] = take::<1, _>(&mut r)?;
    let time = f64::from_le_bytes(take(&mut r)?);
    let spec = SectorSpec::new(dim, m, gamma, alpha, sign)?;
    let grid = GridSpec::new(half_width, n, axes)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(f64::from_le_bytes(take(&mut r)?));
    }
    let arr = ArrayD::from_shape_vec(IxDyn(&grid.shape()), values).map_err(|e| bad(&e.to_string()))?;
    let field = Field::new(spec, grid, arr)?;
    Ok(if has_time == 1 { field.with_time(time) } else { field })
}

pub fn save_binary(f: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary(f, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_binary(path: &Path) -> Result<Field> {
    read_binary(BufReader::new(File::open(path)?)).map_err(|e| match e {
        Error::Artifact { reason, .. } => Error::Artifact { path: path.to_path_buf(), reason },
        other => other,
    })
}

pub fn write_csv<W: Write>(f: &Field, mut w: W) -> Result<()> {
    let spec = f.spec();
    let grid = f.grid();
    let kinds: Vec<&str> = grid
        .axes
        .iter()
        .map(|k| match k {
            AxisKind::AntiSymmetric => "antisymmetric",
            AxisKind::Dirichlet => "dirichlet",
            AxisKind::Periodic => "periodic",
        })
        .collect();
    writeln!(
        w,
        "# N={} m={} n={} L={} axes={} gamma={} alpha={} a={} t={}",
        spec.dim,
        spec.m,
        grid.n,
        grid.half_width,
        kinds.join("|"),
        spec.gamma,
        spec.alpha,
        i8::from(spec.sign_a),
        f.time().map_or("none".to_string(), |t| t.to_string())
    )?;
    let cols: Vec<String> = (1..=spec.dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "{},value", cols.join(","))?;
    let nodes = grid.all_nodes();
    let mut x = vec![0.0; grid.dim()];
    for (i, v) in f.as_slice().iter().enumerate() {
        grid.point(i, &nodes, &mut x);
        for xa in &x {
            write!(w, "{xa:.17e},")?;
        }
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn save_csv(f: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(f, &mut w)?;
    w.flush()?;
    Ok(())
}
