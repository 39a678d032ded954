//! Linear solves and generalized singular values for the assembled systems.

pub mod dense;
pub mod sparse;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
pub use dense::DenseMatrix;
pub use sparse::SparseMatrix;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Systems up to this size are factored densely.
pub const DENSE_SOLVE_LIMIT: usize = 1200;

/// Largest system accepted by [`min_generalized_singular_value`].
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Backward error accepted once iterative refinement stagnates.
pub const BACKWARD_ERROR_LIMIT: f64 = 1e3 * f64::EPSILON;

enum Factor {
    Dense(dense::Ldlt),
    Sparse(Box<faer::sparse::linalg::solvers::Lu<usize, f64>>),
}

impl Factor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factor::Dense(f) => f.solve(b),
            Factor::Sparse(lu) => {
                let rhs = faer::Col::<f64>::from_fn(b.len(), |i| b[i]);
                let x = lu.solve(&rhs);
                (0..b.len()).map(|i| x[i]).collect()
            }
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A x = b` for symmetric (possibly indefinite) `A`.
///
/// The matrix is symmetrically equilibrated, factored (dense Bunch-Kaufman
/// below [`DENSE_SOLVE_LIMIT`], sparse LU with partial pivoting above), and
/// the solution is polished by iterative refinement until
/// `||Ax - b|| <= tol ||b||`.
///
/// Strongly scaled systems (stabilization weights near `1e5`) have a
/// rounding floor on `||Ax - b||` of about `eps ||A|| ||x||`, which can sit
/// above `tol ||b||`. Such a solution is still accepted when refinement has
/// stopped improving and its normwise backward error
/// `||r||_inf / (||A||_inf ||x||_inf + ||b||_inf)` is below
/// [`BACKWARD_ERROR_LIMIT`].
pub fn solve_symmetric_indefinite(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = a.dim;
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("matrix is {n}x{n}, right-hand side has {}", b.len())));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let amax = a.max_abs();
    let mut scale = vec![0.0; n];
    for (i, s) in scale.iter_mut().enumerate() {
        let m = a.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if m <= 1e-14 * amax {
            return Err(Error::Singular(format!("row {i} is numerically zero")));
        }
        *s = 1.0 / m.sqrt();
    }
    let factor = if n <= DENSE_SOLVE_LIMIT {
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in a.row(i) {
                d[(i, j)] = scale[i] * v * scale[j];
            }
        }
        Factor::Dense(dense::Ldlt::factor(&d)?)
    } else {
        let mut trip = Vec::with_capacity(a.nnz());
        for i in 0..n {
            for (j, v) in a.row(i) {
                trip.push(Triplet::new(i, j, scale[i] * v * scale[j]));
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::InvalidArgument(format!("sparse matrix creation failed: {e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Singular(format!("sparse LU failed: {e:?}")))?;
        Factor::Sparse(Box::new(lu))
    };
    let scaled_solve = |r: &[f64]| -> Vec<f64> {
        let rs: Vec<f64> = r.iter().zip(&scale).map(|(v, s)| v * s).collect();
        factor.solve(&rs).iter().zip(&scale).map(|(v, s)| v * s).collect()
    };
    let mut x = scaled_solve(b);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..6 {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("factorization produced non-finite values".into()));
        }
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rel = norm2(&r) / bnorm;
        if best.as_ref().is_none_or(|(b, _)| rel < *b) {
            best = Some((rel, x.clone()));
        }
        if rel <= tol {
            return Ok(x);
        }
        let dx = scaled_solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    }
    let (rel, x) = best.unwrap();
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let a_inf = (0..n).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let backward = inf(&r) / (a_inf * inf(&x) + inf(b));
    if backward <= BACKWARD_ERROR_LIMIT {
        return Ok(x);
    }
    Err(Error::ResidualTooLarge { residual: rel, tol })
}

/// Smallest `|lambda|` over the eigenvalues of `N^{-1/2} A N^{-1/2}`.
///
/// For symmetric `A` this is the inf-sup constant of the bilinear form
/// `y^T A x` with respect to the norm `sqrt(x^T N x)`.
pub fn min_generalized_singular_value(a: &DenseMatrix, n: &DenseMatrix) -> Result<f64> {
    if a.rows != a.cols || n.rows != n.cols || a.rows != n.rows {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, N is {}x{}",
            a.rows, a.cols, n.rows, n.cols
        )));
    }
    if a.rows > DENSE_EIGEN_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense eigensolve limited to {DENSE_EIGEN_LIMIT} unknowns, got {}",
            a.rows
        )));
    }
    let l = dense::cholesky(n)?;
    let b = dense::congruence_inverse(&l, a);
    let ev = dense::symmetric_eigenvalues(&b)?;
    Ok(ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn saddle(n: usize, m: usize, rng: &mut StdRng) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let in_zero_block = i >= m && j >= m;
                if in_zero_block || rng.random::<f64>() > 0.3 {
                    continue;
                }
                let v = rng.random_range(-1.0..1.0) + if i == j { n as f64 } else { 0.0 };
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
        }
        // make sure the constraint block has full rank
        for i in m..n {
            t.push((i, i - m, 1.0));
            t.push((i - m, i, 1.0));
        }
        SparseMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn identity_and_swap() {
        let id = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(solve_symmetric_indefinite(&id, &[1.0, -2.0, 3.0], DEFAULT_TOL).unwrap(), vec![1.0, -2.0, 3.0]);
        let swap = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let x = solve_symmetric_indefinite(&swap, &[1.0, 2.0], DEFAULT_TOL).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_saddle_point_residuals() {
        let mut rng = StdRng::seed_from_u64(42);
        for (n, m) in [(50, 35), (1500, 1000)] {
            let a = saddle(n, m, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = solve_symmetric_indefinite(&a, &b, DEFAULT_TOL).unwrap();
            let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm2(&r) <= 1e-10 * norm2(&b));
        }
    }

    #[test]
    fn spd_roundtrip() {
        let mut rng = StdRng::seed_from_u64(1);
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &t).unwrap();
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_symmetric_indefinite(&a, &a.matvec(&x0), DEFAULT_TOL).unwrap();
        for (p, q) in x.iter().zip(&x0) {
            assert!((p - q).abs() <= 1e-9 * q.abs().max(1.0));
        }
    }

    #[test]
    fn singular_matrices_fail_loudly() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(solve_symmetric_indefinite(&a, &[1.0, 0.0], DEFAULT_TOL).is_err());
        let z = SparseMatrix::from_triplets(2, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(solve_symmetric_indefinite(&z, &[1.0, 1.0], DEFAULT_TOL), Err(Error::Singular(_))));
        assert!(solve_symmetric_indefinite(&z, &[1.0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn beta_of_simple_pairs() {
        let n = DenseMatrix::identity(2);
        let a = DenseMatrix::from_diag(&[3.0, -1.0]);
        assert!((min_generalized_singular_value(&a, &n).unwrap() - 1.0).abs() < 1e-15);
        let spd = DenseMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        assert!((min_generalized_singular_value(&spd, &spd).unwrap() - 1.0).abs() < 1e-14);
        let bad = DenseMatrix::from_diag(&[1.0, -1.0]);
        assert!(min_generalized_singular_value(&a, &bad).is_err());
    }
}
