//! Discrete fields `(p_h, u_h, trace)` attached to a mesh and a numbering.

use crate::basis::{self, Family};
use crate::error::{Error, Result};
use crate::linalg::dense::{DenseMatrix, Lu};
use crate::local::cell_nodes;
use crate::manufactured::Manufactured;
use crate::mesh::{Mesh, Point};
use crate::quadrature;
use crate::spaces::{DofMap, Field, Method};

#[derive(Clone, Debug)]
pub struct DiscreteSolution<'a> {
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub coeffs: Vec<f64>,
}

impl<'a> DiscreteSolution<'a> {
    pub fn new(mesh: &'a Mesh, dofs: &'a DofMap, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dofs.total {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} unknowns",
                coeffs.len(),
                dofs.total
            )));
        }
        Ok(DiscreteSolution { mesh, dofs, coeffs })
    }

    pub fn zeros(mesh: &'a Mesh, dofs: &'a DofMap) -> Self {
        DiscreteSolution { mesh, dofs, coeffs: vec![0.0; dofs.total] }
    }

    pub fn block(&self, field: Field) -> &[f64] {
        self.dofs.range(field).map_or(&[], |r| &self.coeffs[r])
    }

    pub fn flux_local(&self, cell: usize) -> Vec<f64> {
        self.dofs.flux.gather(cell, &self.coeffs)
    }

    pub fn scalar_local(&self, cell: usize) -> Vec<f64> {
        self.dofs.scalar.gather(cell, &self.coeffs)
    }

    pub fn trace_local(&self, edge: usize) -> Vec<f64> {
        self.dofs.trace_coeffs(edge, &self.coeffs)
    }

    /// `p_h` and `div p_h` at reference point `xi` of `cell`.
    pub fn eval_flux(&self, cell: usize, xi: Point) -> Result<(Point, f64)> {
        let geo = self.mesh.geometry(cell);
        let (v, d) = basis::flux_physical(self.dofs.flux.family, &geo, xi)?;
        let c = self.flux_local(cell);
        let mut p = [0.0; 2];
        let mut div = 0.0;
        for i in 0..c.len() {
            p[0] += c[i] * v[i][0];
            p[1] += c[i] * v[i][1];
            div += c[i] * d[i];
        }
        Ok((p, div))
    }

    /// `u_h` and `grad u_h` at reference point `xi` of `cell`.
    pub fn eval_scalar(&self, cell: usize, xi: Point) -> Result<(f64, Point)> {
        let geo = self.mesh.geometry(cell);
        let (v, g) = basis::scalar_physical(self.dofs.scalar.family.degree, &geo, xi)?;
        let c = self.scalar_local(cell);
        let mut u = 0.0;
        let mut grad = [0.0; 2];
        for i in 0..c.len() {
            u += c[i] * v[i];
            grad[0] += c[i] * g[i][0];
            grad[1] += c[i] * g[i][1];
        }
        Ok((u, grad))
    }

    /// Elementwise `L^2` projection of the exact fields onto broken spaces.
    ///
    /// Traces receive the edge projection of `u` (HDG) or of `p . n_e` (WG).
    /// Only defined for fully broken layouts.
    pub fn project(mesh: &'a Mesh, dofs: &'a DofMap, method: Method, exact: &Manufactured) -> Result<Self> {
        let broken = |l: &crate::spaces::CellLayout| {
            l.map.iter().enumerate().all(|(i, m)| matches!(m, Some((g, s)) if *s == 1.0 && *g == l.map[0].unwrap().0 + i))
        };
        if !broken(&dofs.flux) || !broken(&dofs.scalar) {
            return Err(Error::InvalidArgument("projection needs a broken layout".into()));
        }
        let mut x = vec![0.0; dofs.total];
        let nq = dofs.flux.family.dim();
        let nv = dofs.scalar.family.dim();
        let deg = quadrature::MAX_DEGREE;
        for c in 0..mesh.num_cells() {
            let t = cell_nodes(mesh, c, dofs.flux.family, dofs.scalar.family.degree, None, deg)?;
            let mut mq = DenseMatrix::zeros(nq, nq);
            let mut bq = vec![0.0; nq];
            let mut mv = DenseMatrix::zeros(nv, nv);
            let mut bv = vec![0.0; nv];
            for q in 0..t.points.len() {
                let w = t.weights[q];
                let p = exact.p(t.points[q]);
                let u = exact.u(t.points[q]);
                let phi = &t.flux[q];
                for i in 0..nq {
                    for j in 0..nq {
                        mq[(i, j)] += w * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]);
                    }
                    bq[i] += w * (phi[i][0] * p[0] + phi[i][1] * p[1]);
                }
                let psi = &t.scalar[q];
                for a in 0..nv {
                    for b in 0..nv {
                        mv[(a, b)] += w * psi[a] * psi[b];
                    }
                    bv[a] += w * psi[a] * u;
                }
            }
            let cq = Lu::factor(&mq)?.solve(&bq);
            let cv = Lu::factor(&mv)?.solve(&bv);
            for (m, v) in dofs.flux.local(c).iter().zip(cq) {
                x[m.unwrap().0] = v;
            }
            for (m, v) in dofs.scalar.local(c).iter().zip(cv) {
                x[m.unwrap().0] = v;
            }
        }
        if let Some(t) = &dofs.trace {
            let r = t.family.degree;
            for e in 0..mesh.num_edges() {
                let Some(range) = t.edge(e) else { continue };
                let n = mesh.edges[e].normal;
                let coeffs = match method {
                    Method::Hdg => basis::project_to_edge_basis(|s| exact.u(mesh.edge_point(e, s)), r, deg)?,
                    Method::Wg => basis::project_to_edge_basis(
                        |s| {
                            let p = exact.p(mesh.edge_point(e, s));
                            p[0] * n[0] + p[1] * n[1]
                        },
                        r,
                        deg,
                    )?,
                };
                for (g, v) in range.zip(coeffs) {
                    x[g] = v;
                }
            }
        }
        Ok(DiscreteSolution { mesh, dofs, coeffs: x })
    }

    /// Whether the flux space is the `H(div)`-conforming RT space.
    pub fn has_conforming_flux(&self) -> bool {
        self.dofs.flux.family.family == Family::Rt && self.dofs.flux.map.iter().any(|m| m.is_some_and(|(_, s)| s < 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Regime, SpaceCase};
    use std::sync::Arc;

    #[test]
    fn projection_reproduces_in_space_fields() {
        let mesh = Mesh::structured(2).unwrap();
        let case = SpaceCase::table1(Method::Hdg, Regime::Inv, 1, 1.0).unwrap();
        let dofs = DofMap::build(&mesh, &case).unwrap();
        let exact = Manufactured {
            u: Arc::new(|x| 1.0 + x[0] * x[1] - x[1] * x[1]),
            grad_u: Arc::new(|x| [x[1], x[0] - 2.0 * x[1]]),
            ..Manufactured::zero()
        };
        let sol = DiscreteSolution::project(&mesh, &dofs, Method::Hdg, &exact).unwrap();
        for c in 0..mesh.num_cells() {
            for xi in [[0.2, 0.3], [0.7, 0.1]] {
                let x = mesh.geometry(c).map(xi);
                let (u, g) = sol.eval_scalar(c, xi).unwrap();
                assert!((u - exact.u(x)).abs() < 1e-12);
                let (p, _) = sol.eval_flux(c, xi).unwrap();
                let pe = exact.p(x);
                assert!((p[0] - pe[0]).abs() < 1e-12 && (p[1] - pe[1]).abs() < 1e-12);
                assert!((g[0] + pe[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let mesh = Mesh::structured(1).unwrap();
        let case = SpaceCase::table1(Method::Wg, Regime::Inv, 0, 1.0).unwrap();
        let dofs = DofMap::build(&mesh, &case).unwrap();
        assert!(DiscreteSolution::new(&mesh, &dofs, vec![0.0; 3]).is_err());
        let conf = DofMap::mixed_conforming(&mesh, 0).unwrap();
        assert!(DiscreteSolution::project(&mesh, &conf, Method::Wg, &Manufactured::zero()).is_err());
        assert!(DiscreteSolution::zeros(&mesh, &conf).has_conforming_flux());
    }
}
