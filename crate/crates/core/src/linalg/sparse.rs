//! Compressed-row sparse matrices and the coordinate text format.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicates are summed in the order they appear, so the result only
    /// depends on the triplet stream.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::IndexOutOfRange { what: "matrix", index: r.max(c), len: dim });
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c, v) = triplets[i];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix { dim, row_ptr, col_idx, values })
    }

    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        let mut t = Vec::new();
        for i in 0..a.rows {
            for j in 0..a.cols {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.rows, &t)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `row col value` lines with 17 significant digits, after a
    /// `# dim <n>` header.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# dim {}", self.dim)?;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }

    pub fn read_coordinate<R: BufRead>(r: R) -> Result<Self> {
        let mut dim = None;
        let mut t = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("dim") {
                    dim = it.next().and_then(|s| s.parse().ok());
                }
                continue;
            }
            let bad = || Error::Parse(format!("line {}: expected 'row col value'", lineno + 1));
            let mut it = line.split_whitespace();
            let i: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let j: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            t.push((i, j, v));
        }
        let dim = dim.unwrap_or_else(|| t.iter().map(|x| x.0.max(x.1) + 1).max().unwrap_or(0));
        Self::from_triplets(dim, &t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(3, &[(0, 1, 1.0), (2, 2, 4.0), (0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.asymmetry(), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0, 4.0]);
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        assert!(SparseMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn coordinate_text_roundtrip_is_exact() {
        let m = SparseMatrix::from_triplets(
            4,
            &[(0, 0, 1.0 / 3.0), (1, 3, -2.5e-17), (3, 1, std::f64::consts::PI), (2, 2, 1e300)],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let back = SparseMatrix::read_coordinate(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_coordinate_line_rejected() {
        assert!(SparseMatrix::read_coordinate("0 1\n".as_bytes()).is_err());
        assert!(SparseMatrix::read_coordinate("0 1 x\n".as_bytes()).is_err());
    }
}
