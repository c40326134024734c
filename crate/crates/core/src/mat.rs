//! Dense row-major `f64` matrices and the `BIMX` binary container.
//!
//! Shapes are validated by the public operations that use these matrices;
//! the raw arithmetic here treats shape mismatches as caller bugs and
//! panics. Summation order is fixed (ascending inner index) so results are
//! identical regardless of how row loops are scheduled.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

const BIMX_MAGIC: [u8; 4] = *b"BIMX";

/// Row count above which matrix products fan out over a thread pool.
/// Each output row is computed independently, so the result does not
/// depend on the number of worker threads.
const PAR_ROW_THRESHOLD: usize = 192;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self (m×k) · rhs (k×n)`.
    pub fn mul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        let compute_row = |i: usize, orow: &mut [f64]| {
            let arow = self.row(i);
            for (l, &a) in arow.iter().enumerate() {
                let brow = rhs.row(l);
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        };
        if self.rows >= PAR_ROW_THRESHOLD {
            out.data
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, orow)| compute_row(i, orow));
        } else {
            for (i, orow) in out.data.chunks_mut(n).enumerate() {
                compute_row(i, orow);
            }
        }
        out
    }

    /// `selfᵀ (m×k)ᵀ · rhs`, i.e. `self` is k×m and the result is m×n.
    pub fn mul_at(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.rows, rhs.rows, "matmul(ᵀ) shape mismatch");
        let mut out = Mat::zeros(self.cols, rhs.cols);
        for l in 0..self.rows {
            let arow = self.row(l);
            let brow = rhs.row(l);
            for (i, &a) in arow.iter().enumerate() {
                let orow = out.row_mut(i);
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self (m×k) · rhsᵀ (n×k)ᵀ`.
    pub fn mul_bt(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.cols, "matmul(·ᵀ) shape mismatch");
        let mut out = Mat::zeros(self.rows, rhs.rows);
        let n = rhs.rows;
        let compute_row = |i: usize, orow: &mut [f64]| {
            let arow = self.row(i);
            for (j, o) in orow.iter_mut().enumerate() {
                let brow = rhs.row(j);
                let mut acc = 0.0;
                for (&a, &b) in arow.iter().zip(brow) {
                    acc += a * b;
                }
                *o = acc;
            }
        };
        if self.rows >= PAR_ROW_THRESHOLD {
            out.data
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, orow)| compute_row(i, orow));
        } else {
            for (i, orow) in out.data.chunks_mut(n).enumerate() {
                compute_row(i, orow);
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert!(self.same_shape(other), "add shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Mat {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert!(self.same_shape(other), "diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Writes the `BIMX` container: magic bytes, u32-le rows, u32-le cols,
    /// then row-major little-endian `f64` values.
    pub fn write_bimx(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.rows > u32::MAX as usize || self.cols > u32::MAX as usize {
            return Err(Error::invalid("matrix too large for BIMX container"));
        }
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::io(path, e);
        w.write_all(&BIMX_MAGIC).map_err(io_err)?;
        w.write_all(&(self.rows as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(self.cols as u32).to_le_bytes()).map_err(io_err)?;
        for &v in &self.data {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn read_bimx(path: impl AsRef<Path>) -> Result<Mat> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 4];
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format(path, "missing BIMX header"))?;
        if magic != BIMX_MAGIC {
            return Err(Error::format(path, "bad magic bytes, expected BIMX"));
        }
        r.read_exact(&mut u32buf)
            .map_err(|_| Error::format(path, "truncated header"))?;
        let rows = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)
            .map_err(|_| Error::format(path, "truncated header"))?;
        let cols = u32::from_le_bytes(u32buf) as usize;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::format(path, "dimension overflow"))?;
        let mut data = vec![0.0f64; count];
        let mut f64buf = [0u8; 8];
        for v in &mut data {
            r.read_exact(&mut f64buf)
                .map_err(|_| Error::format(path, "truncated payload"))?;
            *v = f64::from_le_bytes(f64buf);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
            return Err(Error::format(path, "trailing bytes after payload"));
        }
        Ok(Mat { rows, cols, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_naive_triple_loop() {
        let a = Mat::from_fn(4, 3, |r, c| (r * 3 + c) as f64 * 0.37 - 1.0);
        let b = Mat::from_fn(3, 5, |r, c| (r as f64 - c as f64) * 0.21 + 0.5);
        let got = a.mul(&b);
        for i in 0..4 {
            for j in 0..5 {
                let mut want = 0.0;
                for l in 0..3 {
                    want += a.get(i, l) * b.get(l, j);
                }
                assert!((got.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let a = Mat::from_fn(4, 3, |r, c| (r + 2 * c) as f64 * 0.1 - 0.3);
        let b = Mat::from_fn(4, 2, |r, c| (2 * r + c) as f64 * 0.05 + 0.1);
        assert!(a.mul_at(&b).max_abs_diff(&a.transpose().mul(&b)) < 1e-15);
        let c = Mat::from_fn(5, 3, |r, c| (r * c) as f64 * 0.02 - 0.1);
        assert!(a.mul_bt(&c).max_abs_diff(&a.mul(&c.transpose())) < 1e-15);
    }

    #[test]
    fn parallel_rows_match_serial() {
        let a = Mat::from_fn(PAR_ROW_THRESHOLD + 7, 6, |r, c| ((r * 31 + c * 17) % 13) as f64 - 6.0);
        let b = Mat::from_fn(6, 4, |r, c| ((r * 5 + c) % 7) as f64 * 0.25);
        let par = a.mul(&b);
        let mut serial = Mat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for l in 0..a.cols() {
                    acc += a.get(i, l) * b.get(l, j);
                }
                serial.set(i, j, acc);
            }
        }
        // Same per-row summation order, so bitwise equal.
        assert_eq!(par.data(), serial.data());
    }

    #[test]
    fn bimx_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bimx");
        let m = Mat::from_fn(3, 4, |r, c| (r as f64 + 0.1) * (c as f64 - 2.7) / 3.0);
        m.write_bimx(&path).unwrap();
        let back = Mat::read_bimx(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bimx_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bimx");
        Mat::zeros(2, 2).write_bimx(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(Mat::read_bimx(&path), Err(Error::Format { .. })));

        Mat::zeros(2, 2).write_bimx(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(Mat::read_bimx(&path), Err(Error::Format { .. })));
    }
}
