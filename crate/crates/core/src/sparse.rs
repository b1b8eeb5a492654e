//! Compressed sparse row matrices with complex entries.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds from per-row entry lists; duplicates are summed, exact zeros dropped.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(u32, Complex64)>>) -> Result<Self> {
        if rows.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rows.len() });
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                if c as usize >= dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: c as usize + 1 });
                }
                let mut v = Complex64::new(0.0, 0.0);
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                if v != Complex64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { dim, row_ptr, cols, vals })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `y = A x`, parallel over rows; each row sum is computed in a fixed order.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(r, yr)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yr = acc;
        });
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `max |A - A^dagger|` over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.dim)
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// Coordinate text format: one `row col re im` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.dim, self.dim, self.nnz())?;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:e} {:e}", r, c, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_merge_and_zeros_vanish() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, c(1.0, 0.0)), (1, c(2.0, 1.0)), (0, c(0.0, 0.0))], vec![]]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        let y = m.apply(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(y, vec![c(3.0, 1.0), c(0.0, 0.0)]);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let h = CsrMatrix::from_rows(2, vec![vec![(1, c(0.0, 1.0))], vec![(0, c(0.0, -1.0))]]).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
        let a = CsrMatrix::from_rows(2, vec![vec![(1, c(1.0, 0.0))], vec![]]).unwrap();
        assert_eq!(a.hermitian_defect(), 1.0);
        let mut out = Vec::new();
        h.write_coo(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 3);
    }
}
