//! Result tables and binary field dumps.
//!
//! Tables are CSV with a schema tag and the resolved run configuration
//! embedded as `#`-prefixed header lines, so every table is self-describing.
//! Field dumps are raw little-endian f64 arrays behind a fixed 32-byte
//! header and round-trip bit exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const TABLE_SCHEMA: &str = "wpf-results-v1";
pub const FIELD_MAGIC: &[u8; 4] = b"WPF1";

pub const COLUMNS: &str =
    "freq,N,b,T_s,T_a,n_p,T_p,true_residual,max_ls_residual,p_nnz,factor_nnz,peak_front,seed,status";

#[derive(Debug, Clone)]
pub struct ResultRow {
    /// ω/2π for Helmholtz rows, E for Schrödinger rows.
    pub freq: f64,
    pub n_total: usize,
    pub b: usize,
    /// Preconditioner setup seconds: stencils, assembly, factorization.
    pub t_s: f64,
    /// Median of 5 preconditioner applications, seconds.
    pub t_a: f64,
    pub n_p: usize,
    /// Total iterative solve seconds.
    pub t_p: f64,
    pub true_residual: f64,
    pub max_ls_residual: f64,
    pub p_nnz: usize,
    pub factor_nnz: usize,
    pub peak_front: usize,
    pub seed: u64,
    /// "ok" or a short failure note; failed rows keep their identifiers.
    pub status: String,
}

impl ResultRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6e},{},{:.6},{:.3e},{:.3e},{},{},{},{},{}",
            self.freq,
            self.n_total,
            self.b,
            self.t_s,
            self.t_a,
            self.n_p,
            self.t_p,
            self.true_residual,
            self.max_ls_residual,
            self.p_nnz,
            self.factor_nnz,
            self.peak_front,
            self.seed,
            self.status
        )
    }
}

pub fn write_table<W: Write>(mut w: W, config_toml: &str, rows: &[ResultRow]) -> Result<()> {
    writeln!(w, "# schema: {TABLE_SCHEMA}")?;
    for line in config_toml.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{COLUMNS}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv())?;
    }
    Ok(())
}

pub fn write_table_file(path: &Path, config_toml: &str, rows: &[ResultRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_table(std::io::BufWriter::new(file), config_toml, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum FieldKind {
    Solution = 0,
    Medium = 1,
    Rhs = 2,
}

impl FieldKind {
    fn from_u32(v: u32) -> Result<FieldKind> {
        match v {
            0 => Ok(FieldKind::Solution),
            1 => Ok(FieldKind::Medium),
            2 => Ok(FieldKind::Rhs),
            _ => Err(Error::Config(format!("unknown field kind {v}"))),
        }
    }
}

/// 32-byte header: magic, d, n, kind as little-endian u32, 16 zero bytes of
/// padding; then the field values row-major as little-endian f64.
pub fn write_field<W: Write>(mut w: W, grid: GridSpec, kind: FieldKind, data: &[f64]) -> Result<()> {
    if data.len() != grid.n_total() {
        return Err(Error::LengthMismatch { expected: grid.n_total(), got: data.len() });
    }
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(grid.d as u32).to_le_bytes())?;
    w.write_all(&(grid.n as u32).to_le_bytes())?;
    w.write_all(&(kind as u32).to_le_bytes())?;
    w.write_all(&[0u8; 16])?;
    for &x in data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<(u32, u32, FieldKind, Vec<f64>)> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[0..4] != FIELD_MAGIC {
        return Err(Error::Config("bad field dump magic".into()));
    }
    let d = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let kind = FieldKind::from_u32(u32::from_le_bytes(header[12..16].try_into().unwrap()))?;
    let total = (n as usize).pow(d);
    let mut bytes = vec![0u8; total * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((d, n, kind, data))
}

pub fn write_field_file(path: &Path, grid: GridSpec, kind: FieldKind, data: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(file), grid, kind, data)
}

/// Plain-text export: one value per line in row-major order, for external
/// plotting tools that do not read the binary dump.
pub fn write_field_text<W: Write>(mut w: W, data: &[f64]) -> Result<()> {
    for &x in data {
        writeln!(w, "{x:.17e}")?;
    }
    Ok(())
}
