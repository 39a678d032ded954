//! Identity, consistency, oracle and Gram checks run by `hdgwg check`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::assembly::{assemble, assemble_mixed_conforming, assemble_norm_gram, assemble_primal_conforming, Form};
use crate::basis::{self, BasisFamily, Family};
use crate::error::Result;
use crate::manufactured::{manufactured_case, CoefficientField, Manufactured};
use crate::mesh::{Mesh, Point};
use crate::norms::{compute_error_norm, consistency_residual, dg_identity_residual, NormKind};
use crate::oracle::dense_oracle;
use crate::solution::DiscreteSolution;
use crate::spaces::{DofMap, Method, Regime, SpaceCase, MAX_K};

pub const IDENTITY_TOL: f64 = 1e-12;
pub const CONSISTENCY_TOL: f64 = 1e-10;
pub const ORACLE_TOL: f64 = 1e-12;
pub const GRAM_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    /// Worst observed value against its bound.
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    fn push(&mut self, name: &str, worst: f64, bound: f64) {
        self.items.push(CheckItem {
            name: name.into(),
            passed: worst <= bound,
            detail: format!("worst {worst:.3e}, bound {bound:.1e}"),
        });
    }
}

/// Every default space triple for `k <= MAX_K` at `rho`.
pub fn all_cases(rho: f64) -> Result<Vec<SpaceCase>> {
    let mut v = Vec::new();
    for method in [Method::Hdg, Method::Wg] {
        for regime in [Regime::RhoH, Regime::Inv] {
            for k in 0..=MAX_K {
                v.push(SpaceCase::table1(method, regime, k, rho)?);
            }
        }
    }
    Ok(v)
}

/// Worst relative residual of both DG identities over `pairs` random
/// broken pairs on a 3x3 mesh.
pub fn identity_check(pairs: usize, rng: &mut StdRng) -> Result<f64> {
    let mesh = Mesh::structured(3)?;
    let fams = [(Family::Rt, 0), (Family::Rt, 1), (Family::VectorP, 0), (Family::VectorP, 1)];
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let (fam, deg) = fams[i % fams.len()];
        let flux = BasisFamily::new(fam, deg)?;
        let r = (i / fams.len()) % 3;
        let q: Vec<f64> = (0..flux.dim() * mesh.num_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..basis::scalar_dim(r) * mesh.num_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let id = dg_identity_residual(&mesh, flux, r, &q, &v)?;
        let point_scale = id.scale / mesh.num_edges() as f64;
        worst = worst.max(id.relative_residual()).max(id.pointwise / point_scale.max(1.0));
    }
    Ok(worst)
}

/// Worst normalized consistency residual for the polynomial solution with
/// exactly integrated data.
pub fn in_space_consistency() -> Result<f64> {
    let mesh = Mesh::structured(2)?;
    let exact = manufactured_case("poly")?;
    let mut worst: f64 = 0.0;
    for rho in [1.0, 1e-3] {
        for case in all_cases(rho)? {
            worst = worst.max(consistency_residual(&mesh, &case, &exact, Some(8))?);
        }
    }
    Ok(worst)
}

/// Smallest `log2(r_4 / r_8) - (k + 1)` over all cases for the sine
/// solution at the default quadrature degree. Nonnegative means every
/// residual decays at order `k + 1` or faster.
pub fn sine_consistency_margin() -> Result<f64> {
    let exact = manufactured_case("sine")?;
    let coarse = Mesh::structured(4)?;
    let fine = Mesh::structured(8)?;
    let mut margin = f64::INFINITY;
    for case in all_cases(0.1)? {
        let r0 = consistency_residual(&coarse, &case, &exact, None)?;
        let r1 = consistency_residual(&fine, &case, &exact, None)?;
        margin = margin.min((r0 / r1).log2() - (case.k as f64 + 1.0));
    }
    Ok(margin)
}

/// Largest entrywise gap between the assembled systems and the dense
/// oracle on the one-square mesh, relative to the largest entry.
pub fn oracle_gap() -> Result<f64> {
    let mesh = Mesh::structured(1)?;
    let coeff = CoefficientField::constant(1.5)?;
    let f = |x: Point| 1.0 + 2.0 * x[0] - x[0] * x[1];
    let mut worst: f64 = 0.0;
    let mut compare = |dofs: &DofMap, form: Form, matrix: &crate::linalg::SparseMatrix, rhs: &[f64]| -> Result<()> {
        let (a, b) = dense_oracle(&mesh, dofs, form, &coeff, &f)?;
        let scale = matrix.max_abs().max(1.0);
        for i in 0..dofs.total {
            for j in 0..dofs.total {
                worst = worst.max((matrix.get(i, j) - a[(i, j)]).abs() / scale);
            }
            worst = worst.max((rhs[i] - b[i]).abs());
        }
        Ok(())
    };
    for rho in [1.0, 1e-2] {
        for case in all_cases(rho)? {
            let dofs = DofMap::build(&mesh, &case)?;
            let form = match case.method {
                Method::Hdg => Form::Hdg(&case),
                Method::Wg => Form::Wg(&case),
            };
            let sys = assemble(&mesh, &dofs, form, &coeff, &f)?;
            compare(&dofs, form, &sys.matrix, &sys.rhs)?;
        }
    }
    for k in 0..=MAX_K {
        let (dofs, sys) = assemble_primal_conforming(&mesh, k, &coeff, &f)?;
        compare(&dofs, Form::PrimalConforming, &sys.matrix, &sys.rhs)?;
        let (dofs, sys) = assemble_mixed_conforming(&mesh, k, &coeff, &f)?;
        compare(&dofs, Form::MixedConforming, &sys.matrix, &sys.rhs)?;
    }
    Ok(worst)
}

/// Worst relative gap between `sqrt(x^T N x)` and the quadrature-path norm
/// over `samples` random vectors per norm kind and space case.
pub fn gram_gap(samples: usize, rng: &mut StdRng) -> Result<f64> {
    let mesh = Mesh::structured(2)?;
    let exact = Manufactured { coeff: CoefficientField::constant(1.0)?, ..Manufactured::zero() };
    let mut worst: f64 = 0.0;
    for case in all_cases(0.2)? {
        let dofs = DofMap::build(&mesh, &case)?;
        for kind in NormKind::ALL {
            if kind.method().is_some_and(|m| m != case.method) {
                continue;
            }
            let gram = assemble_norm_gram(&mesh, &dofs, kind, case.rho, &exact.coeff)?;
            for _ in 0..samples {
                let x: Vec<f64> = (0..dofs.total).map(|_| rng.random_range(-1.0..1.0)).collect();
                let nx = gram.matvec(&x);
                let direct = x.iter().zip(&nx).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
                let sol = DiscreteSolution::new(&mesh, &dofs, x)?;
                let path = compute_error_norm(&sol, &exact, kind, case.rho)?.combined();
                worst = worst.max((direct - path).abs() / direct.max(f64::MIN_POSITIVE));
            }
        }
    }
    Ok(worst)
}

/// Runs the whole suite with the given seed.
pub fn run_self_check(seed: u64) -> Result<CheckReport> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut report = CheckReport::default();
    report.push("dg identities (100 random pairs)", identity_check(100, &mut rng)?, IDENTITY_TOL);
    report.push("consistency, in-space solution", in_space_consistency()?, CONSISTENCY_TOL);
    // margin is a lower bound: report its negative against zero
    report.push("consistency order >= k+1, sine", -sine_consistency_margin()?, 0.0);
    report.push("assembly vs dense oracle (n=1)", oracle_gap()?, ORACLE_TOL);
    report.push("gram vs quadrature path (50 per kind)", gram_gap(50, &mut rng)?, GRAM_TOL);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = run_self_check(1).unwrap();
        for item in &report.items {
            assert!(item.passed, "{}: {}", item.name, item.detail);
        }
        assert!(report.passed());
    }
}
