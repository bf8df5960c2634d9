//! Binary persistence for matrices.
//!
//! Sparse: `b"CSSP"`, u32 version, u64 rows, u64 cols, u64 nnz, then nnz
//! little-endian `(u64 row, u64 col, f64 value)` triples.
//! Dense: `b"CSDN"`, u32 version, u64 rows, u64 cols, then rows·cols
//! little-endian f64 in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};

pub const SPARSE_MAGIC: [u8; 4] = *b"CSSP";
pub const DENSE_MAGIC: [u8; 4] = *b"CSDN";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_sparse(path: &Path, m: &SparseMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(&SPARSE_MAGIC)?;
    put(&FORMAT_VERSION.to_le_bytes())?;
    put(&(m.n_rows() as u64).to_le_bytes())?;
    put(&(m.n_cols() as u64).to_le_bytes())?;
    put(&(m.nnz() as u64).to_le_bytes())?;
    for (r, c, v) in m.triplets() {
        put(&(r as u64).to_le_bytes())?;
        put(&(c as u64).to_le_bytes())?;
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sparse(path: &Path) -> Result<SparseMatrix> {
    let mut r = open(path)?;
    read_header(&mut r, path, SPARSE_MAGIC)?;
    let n_rows = read_u64(&mut r, path)? as usize;
    let n_cols = read_u64(&mut r, path)? as usize;
    let nnz = read_u64(&mut r, path)? as usize;
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let row = read_u64(&mut r, path)? as usize;
        let col = read_u64(&mut r, path)? as usize;
        let v = f64::from_bits(read_u64(&mut r, path)?);
        triplets.push((row, col, v));
    }
    expect_eof(&mut r, path)?;
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

pub fn write_dense(path: &Path, m: &DenseMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(&DENSE_MAGIC)?;
    put(&FORMAT_VERSION.to_le_bytes())?;
    put(&(m.n_rows() as u64).to_le_bytes())?;
    put(&(m.n_cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dense(path: &Path) -> Result<DenseMatrix> {
    let mut r = open(path)?;
    read_header(&mut r, path, DENSE_MAGIC)?;
    let n_rows = read_u64(&mut r, path)? as usize;
    let n_cols = read_u64(&mut r, path)? as usize;
    let len = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Error::format(path, "dimensions overflow"))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let v = f64::from_bits(read_u64(&mut r, path)?);
        if !v.is_finite() {
            return Err(Error::NonFinite("dense matrix file"));
        }
        data.push(v);
    }
    expect_eof(&mut r, path)?;
    DenseMatrix::from_vec(n_rows, n_cols, data)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn read_header(r: &mut impl Read, path: &Path, magic: [u8; 4]) -> Result<()> {
    let mut tag = [0u8; 4];
    r.read_exact(&mut tag)
        .map_err(|_| Error::format(path, "truncated header"))?;
    if tag != magic {
        return Err(Error::format(path, format!("bad magic {tag:?}")));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)
        .map_err(|_| Error::format(path, "truncated header"))?;
    let version = u32::from_le_bytes(v);
    if version != FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    Ok(())
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format(path, "unexpected end of file"))?;
    Ok(u64::from_le_bytes(buf))
}

fn expect_eof(r: &mut impl Read, path: &Path) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::format(path, "trailing bytes")),
        Err(e) => Err(Error::io(path, e)),
    }
}
