//! Brute-force reference assembly.
//!
//! Every global basis function is expanded into its field triple (flux,
//! scalar, trace) on each cell, and the bilinear form is evaluated pair by
//! pair from its definition. No local matrices, no index maps beyond the
//! expansion itself. Quadratic cost in the number of unknowns, so meant for
//! tiny meshes only.

use crate::assembly::{Form, LoadFn};
use crate::basis;
use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::manufactured::CoefficientField;
use crate::mesh::{ref_edge_point, Mesh, Point};
use crate::quadrature;
use crate::spaces::DofMap;

/// Above this the pairwise loop gets slow.
pub const ORACLE_LIMIT: usize = 400;

const ORACLE_DEGREE: usize = 8;

/// Values of every global basis function at one point.
struct Fields {
    p: Vec<Point>,
    div: Vec<f64>,
    u: Vec<f64>,
    grad: Vec<Point>,
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cell_fields(mesh: &Mesh, dofs: &DofMap, cell: usize, xi: Point) -> Result<Fields> {
    let n = dofs.total;
    let geo = mesh.geometry(cell);
    let mut out = Fields { p: vec![[0.0; 2]; n], div: vec![0.0; n], u: vec![0.0; n], grad: vec![[0.0; 2]; n] };
    let (fv, fd) = basis::flux_physical(dofs.flux.family, &geo, xi)?;
    for (i, m) in dofs.flux.local(cell).iter().enumerate() {
        if let Some((g, s)) = *m {
            out.p[g][0] += s * fv[i][0];
            out.p[g][1] += s * fv[i][1];
            out.div[g] += s * fd[i];
        }
    }
    let (sv, sg) = basis::scalar_physical(dofs.scalar.family.degree, &geo, xi)?;
    for (a, m) in dofs.scalar.local(cell).iter().enumerate() {
        if let Some((g, s)) = *m {
            out.u[g] += s * sv[a];
            out.grad[g][0] += s * sg[a][0];
            out.grad[g][1] += s * sg[a][1];
        }
    }
    Ok(out)
}

/// Trace values on edge `e` at global parameter `t`.
fn trace_fields(dofs: &DofMap, e: usize, t: f64) -> Result<Vec<f64>> {
    let mut v = vec![0.0; dofs.total];
    if let Some(layout) = &dofs.trace {
        if let Some(range) = layout.edge(e) {
            let mu = basis::eval_edge_basis(layout.family.degree, t)?;
            for (g, m) in range.zip(mu) {
                v[g] = m;
            }
        }
    }
    Ok(v)
}

/// Dense matrix and right-hand side of `form` on `dofs`.
pub fn dense_oracle(
    mesh: &Mesh,
    dofs: &DofMap,
    form: Form,
    coeff: &CoefficientField,
    f: LoadFn,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let n = dofs.total;
    if n > ORACLE_LIMIT {
        return Err(Error::InvalidArgument(format!("oracle limited to {ORACLE_LIMIT} unknowns, got {n}")));
    }
    let tri = quadrature::triangle(ORACLE_DEGREE)?;
    let line = quadrature::edge(ORACLE_DEGREE)?;
    let mut a = DenseMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    let divergence_form = matches!(form, Form::Hdg(_) | Form::MixedConforming);
    for cell in 0..mesh.num_cells() {
        let geo = mesh.geometry(cell);
        for (xi, w0) in tri.points.iter().zip(&tri.weights) {
            let x = geo.map(*xi);
            let w = w0 * geo.det;
            let c = coeff.c(x)?;
            let fx = f(x);
            let fl = cell_fields(mesh, dofs, cell, *xi)?;
            for i in 0..n {
                b[i] -= w * fx * fl.u[i];
                for j in 0..n {
                    let mut v = c * dot(fl.p[i], fl.p[j]);
                    v += if divergence_form {
                        -(fl.u[i] * fl.div[j] + fl.u[j] * fl.div[i])
                    } else {
                        dot(fl.p[i], fl.grad[j]) + dot(fl.p[j], fl.grad[i])
                    };
                    a[(i, j)] += w * v;
                }
            }
        }
        let (Form::Hdg(case) | Form::Wg(case)) = form else { continue };
        let theta = case.parameter(mesh.cell_diam[cell]);
        for local in 0..3 {
            let e = mesh.cells[cell].edges[local];
            let h_e = mesh.edges[e].length;
            let n_k = mesh.outward_normal(cell, local);
            let sigma = mesh.normal_sign(cell, local);
            for (&t, w0) in line.points.iter().zip(&line.weights) {
                let w = w0 * h_e;
                let xi = ref_edge_point(local, mesh.local_param(cell, local, t));
                let fl = cell_fields(mesh, dofs, cell, xi)?;
                let tr = trace_fields(dofs, e, t)?;
                let pn: Vec<f64> = fl.p.iter().map(|p| dot(*p, n_k)).collect();
                for i in 0..n {
                    for j in 0..n {
                        let v = match form {
                            Form::Hdg(_) => {
                                tr[j] * pn[i] + tr[i] * pn[j] - theta * (fl.u[i] - tr[i]) * (fl.u[j] - tr[j])
                            }
                            _ => {
                                // trace unknowns carry p^ . n_e, so p^ . n_K = sigma p^
                                let di = pn[i] - sigma * tr[i];
                                let dj = pn[j] - sigma * tr[j];
                                theta * di * dj - sigma * (tr[i] * fl.u[j] + tr[j] * fl.u[i])
                            }
                        };
                        a[(i, j)] += w * v;
                    }
                }
            }
        }
    }
    Ok((a, b))
}
