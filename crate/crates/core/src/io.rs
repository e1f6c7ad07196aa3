//! Flat-file outputs: dense binary matrices and comma-separated tables.
//!
//! The binary layout is `rows: u64 LE`, `cols: u64 LE`, then row-major
//! `(re, im)` pairs of `f64 LE`.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn write_matrix<W: Write>(mut w: W, m: &DMatrix<Complex64>) -> Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DMatrix<Complex64>> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| Error::InvalidConfig(format!("matrix header {rows}x{cols} overflows")))?;
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let value = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        Complex64::new(value(k), value(k + 1))
    }))
}

pub fn save_matrix(path: &Path, m: &DMatrix<Complex64>) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix(f, m)
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<Complex64>> {
    read_matrix(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Entry-wise magnitude as a real-valued complex matrix.
pub fn magnitude(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.map(|z| Complex64::new(z.norm(), 0.0))
}

/// Comma-separated table with a `#`-prefixed metadata block.
#[derive(Clone, Debug, Default)]
pub struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Shortest round-tripping decimal; `nan`, `inf` and `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}
