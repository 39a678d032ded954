//! Row-major dense matrices and the factorizations the studies need.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Inverse by LU with partial pivoting.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.rows;
        if n != self.cols {
            return Err(Error::DimensionMismatch(format!("inverse of {}x{} matrix", n, self.cols)));
        }
        let lu = Lu::factor(self)?;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU with partial pivoting, for small non-symmetric systems.
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Lu> {
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap();
            if lu[(p, k)].abs() <= 1e-14 * scale {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.data.swap(p * n + j, k * n + j);
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / d;
                lu[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= l * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

#[derive(Clone, Copy, Debug)]
enum Pivot {
    One,
    Two,
}

/// Symmetric indefinite `P A P^T = L D L^T` with Bunch-Kaufman pivoting
/// (1x1 and 2x2 diagonal blocks).
pub struct Ldlt {
    /// Unit lower factor below the diagonal, `D` on the diagonal and
    /// first subdiagonal of 2x2 blocks.
    f: DenseMatrix,
    perm: Vec<usize>,
    pivots: Vec<Pivot>,
}

impl Ldlt {
    /// Fails when a pivot falls below `1e-14 * max|A|`.
    pub fn factor(a: &DenseMatrix) -> Result<Ldlt> {
        let n = a.rows;
        if n != a.cols {
            return Err(Error::DimensionMismatch("LDL^T needs a square matrix".into()));
        }
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let tiny = 1e-14 * a.max_abs();
        let mut f = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::with_capacity(n);
        let mut k = 0;
        while k < n {
            let akk = f[(k, k)].abs();
            let (imax, colmax) = (k + 1..n)
                .map(|i| (i, f[(i, k)].abs()))
                .fold((k, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if akk.max(colmax) <= tiny {
                return Err(Error::Singular(format!("pivot {k} below {tiny:e}")));
            }
            let (kp, step) = if akk >= alpha * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| f[(imax, j)].abs())
                    .fold(0.0, f64::max);
                if akk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if f[(imax, imax)].abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };
            let kk = k + step - 1;
            if kp != kk {
                sym_swap(&mut f, kk, kp);
                perm.swap(kk, kp);
            }
            match step {
                1 => {
                    let d = f[(k, k)];
                    if d.abs() <= tiny {
                        return Err(Error::Singular(format!("pivot {k} below {tiny:e}")));
                    }
                    let col: Vec<f64> = (k + 1..n).map(|i| f[(i, k)]).collect();
                    for (ii, i) in (k + 1..n).enumerate() {
                        let li = col[ii] / d;
                        if li != 0.0 {
                            for (jj, j) in (k + 1..n).enumerate() {
                                f[(i, j)] -= li * col[jj];
                            }
                        }
                    }
                    for (ii, i) in (k + 1..n).enumerate() {
                        f[(i, k)] = col[ii] / d;
                    }
                    pivots.push(Pivot::One);
                }
                _ => {
                    let (d11, d21, d22) = (f[(k, k)], f[(k + 1, k)], f[(k + 1, k + 1)]);
                    let det = d11 * d22 - d21 * d21;
                    if det.abs() <= tiny * tiny {
                        return Err(Error::Singular(format!("2x2 pivot {k} is singular")));
                    }
                    let c0: Vec<f64> = (k + 2..n).map(|i| f[(i, k)]).collect();
                    let c1: Vec<f64> = (k + 2..n).map(|i| f[(i, k + 1)]).collect();
                    // rows of W D^{-1}
                    let l0: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| (a * d22 - b * d21) / det).collect();
                    let l1: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| (b * d11 - a * d21) / det).collect();
                    for (ii, i) in (k + 2..n).enumerate() {
                        for (jj, j) in (k + 2..n).enumerate() {
                            f[(i, j)] -= l0[ii] * c0[jj] + l1[ii] * c1[jj];
                        }
                    }
                    for (ii, i) in (k + 2..n).enumerate() {
                        f[(i, k)] = l0[ii];
                        f[(i, k + 1)] = l1[ii];
                    }
                    pivots.push(Pivot::Two);
                    pivots.push(Pivot::Two);
                }
            }
            k += step;
        }
        Ok(Ldlt { f, perm, pivots })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let f = &self.f;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward with unit L (2x2 blocks have no coupling inside the block)
        let mut k = 0;
        while k < n {
            let step = match self.pivots[k] {
                Pivot::One => 1,
                Pivot::Two => 2,
            };
            for i in k + step..n {
                let mut s = f[(i, k)] * y[k];
                if step == 2 {
                    s += f[(i, k + 1)] * y[k + 1];
                }
                y[i] -= s;
            }
            k += step;
        }
        k = 0;
        while k < n {
            match self.pivots[k] {
                Pivot::One => {
                    y[k] /= f[(k, k)];
                    k += 1;
                }
                Pivot::Two => {
                    let (d11, d21, d22) = (f[(k, k)], f[(k + 1, k)], f[(k + 1, k + 1)]);
                    let det = d11 * d22 - d21 * d21;
                    let (a, b) = (y[k], y[k + 1]);
                    y[k] = (d22 * a - d21 * b) / det;
                    y[k + 1] = (d11 * b - d21 * a) / det;
                    k += 2;
                }
            }
        }
        // backward with L^T
        let mut k = n;
        while k > 0 {
            let step = if k >= 2 && matches!(self.pivots[k - 1], Pivot::Two) { 2 } else { 1 };
            let start = k - step;
            for c in start..k {
                let s: f64 = (k..n).map(|i| f[(i, c)] * y[i]).sum();
                y[c] -= s;
            }
            k = start;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Swap rows and columns `i` and `j` of a full symmetric working matrix.
fn sym_swap(f: &mut DenseMatrix, i: usize, j: usize) {
    let n = f.rows;
    for c in 0..n {
        f.data.swap(i * n + c, j * n + c);
    }
    for r in 0..n {
        f.data.swap(r * n + i, r * n + j);
    }
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows;
    if n != a.cols {
        return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                s -= l.data[ri + k] * l.data[rj + k];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// `L^{-1} A L^{-T}` for lower-triangular `L` and symmetric `A`.
pub fn congruence_inverse(l: &DenseMatrix, a: &DenseMatrix) -> DenseMatrix {
    let n = l.rows;
    // X = L^{-1} A, column by column (forward substitution on rows)
    let mut x = a.clone();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik != 0.0 {
                let (head, tail) = x.data.split_at_mut(i * n);
                let rk = &head[k * n..(k + 1) * n];
                for (xi, xk) in tail[..n].iter_mut().zip(rk) {
                    *xi -= lik * xk;
                }
            }
        }
        let d = l[(i, i)];
        x.data[i * n..(i + 1) * n].iter_mut().for_each(|v| *v /= d);
    }
    // B = X L^{-T} = (L^{-1} X^T)^T; X L^{-T} is symmetric so solve on transposed rows
    let mut y = x.transpose();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik != 0.0 {
                let (head, tail) = y.data.split_at_mut(i * n);
                let rk = &head[k * n..(k + 1) * n];
                for (yi, yk) in tail[..n].iter_mut().zip(rk) {
                    *yi -= lik * yk;
                }
            }
        }
        let d = l[(i, i)];
        y.data[i * n..(i + 1) * n].iter_mut().for_each(|v| *v /= d);
    }
    // symmetrize rounding
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (y[(i, j)] + y[(j, i)]);
            y[(i, j)] = m;
            y[(j, i)] = m;
        }
    }
    y
}

/// Eigenvalues of a symmetric matrix, ascending.
///
/// Householder reduction to tridiagonal form followed by implicit QL with
/// Wilkinson shifts.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows;
    if n != a.cols {
        return Err(Error::DimensionMismatch("eigenvalues need a square matrix".into()));
    }
    let (mut d, mut e) = tridiagonalize(a);
    tql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Returns diagonal `d` and subdiagonal `e` (with `e[0] = 0`).
fn tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut m = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        // annihilate m[i][0..i-1] using a reflector on the first i entries
        let l = i - 1;
        let scale: f64 = (0..=l).map(|k| m[(i, k)].abs()).sum();
        if l == 0 || scale == 0.0 {
            e[i] = m[(i, l)];
            d[i] = 0.0;
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            v[k] = m[(i, k)] / scale;
            h += v[k] * v[k];
        }
        let f = v[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        v[l] = f - g;
        // p = A v / h, K = v.p / 2h, q = p - K v, A -= v q^T + q v^T
        for j in 0..=l {
            let mut s = 0.0;
            let row = &m.data[j * n..j * n + l + 1];
            for (r, vk) in row.iter().zip(&v[..=l]) {
                s += r * vk;
            }
            p[j] = s / h;
        }
        let kk: f64 = (0..=l).map(|j| v[j] * p[j]).sum::<f64>() / (2.0 * h);
        for j in 0..=l {
            p[j] -= kk * v[j];
        }
        for j in 0..=l {
            let (vj, pj) = (v[j], p[j]);
            let row = &mut m.data[j * n..j * n + l + 1];
            for (k, r) in row.iter_mut().enumerate() {
                *r -= vj * p[k] + pj * v[k];
            }
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = m[(i, i)];
    }
    // shift e so that e[i] couples i-1 and i; e[0] unused
    (d, e)
}

fn tql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Singular("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
