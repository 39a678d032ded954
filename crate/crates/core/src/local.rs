//! Local bases evaluated at a cell's quadrature nodes.
//!
//! Edge nodes are ordered by the global edge parameter, so the two cells
//! sharing an edge see the same physical points in the same order.

use crate::basis::{self, BasisFamily};
use crate::error::Result;
use crate::mesh::{ref_edge_point, Mesh, Point};
use crate::quadrature;

pub(crate) struct EdgeNodes {
    pub edge: usize,
    /// `n_K . n_e`
    pub sigma: f64,
    /// Outward normal of the cell.
    pub normal: Point,
    pub t: Vec<f64>,
    pub points: Vec<Point>,
    /// Physical weights (include `h_e`).
    pub weights: Vec<f64>,
    pub flux: Vec<Vec<Point>>,
    pub scalar: Vec<Vec<f64>>,
    /// Edge basis in the global parameter, empty without a trace space.
    pub trace: Vec<Vec<f64>>,
}

impl EdgeNodes {
    /// `phi_i . n_K` at node `q`.
    pub fn flux_normal(&self, q: usize) -> Vec<f64> {
        self.flux[q].iter().map(|v| v[0] * self.normal[0] + v[1] * self.normal[1]).collect()
    }
}

pub(crate) struct CellNodes {
    pub h_k: f64,
    pub points: Vec<Point>,
    /// Physical weights (include `det J`).
    pub weights: Vec<f64>,
    pub flux: Vec<Vec<Point>>,
    pub flux_div: Vec<Vec<f64>>,
    pub scalar: Vec<Vec<f64>>,
    pub scalar_grad: Vec<Vec<Point>>,
    pub edges: Vec<EdgeNodes>,
}

pub(crate) fn cell_nodes(
    mesh: &Mesh,
    cell: usize,
    flux: BasisFamily,
    scalar_degree: usize,
    trace_degree: Option<usize>,
    degree: usize,
) -> Result<CellNodes> {
    let geo = mesh.geometry(cell);
    let tri = quadrature::triangle(degree)?;
    let n = tri.len();
    let mut out = CellNodes {
        h_k: mesh.cell_diam[cell],
        points: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        flux: Vec::with_capacity(n),
        flux_div: Vec::with_capacity(n),
        scalar: Vec::with_capacity(n),
        scalar_grad: Vec::with_capacity(n),
        edges: Vec::with_capacity(3),
    };
    for (xi, w) in tri.points.iter().zip(&tri.weights) {
        out.points.push(geo.map(*xi));
        out.weights.push(w * geo.det);
        let (fv, fd) = basis::flux_physical(flux, &geo, *xi)?;
        out.flux.push(fv);
        out.flux_div.push(fd);
        let (sv, sg) = basis::scalar_physical(scalar_degree, &geo, *xi)?;
        out.scalar.push(sv);
        out.scalar_grad.push(sg);
    }
    let er = quadrature::edge(degree)?;
    for j in 0..3 {
        let e = mesh.cells[cell].edges[j];
        let h_e = mesh.edges[e].length;
        let mut en = EdgeNodes {
            edge: e,
            sigma: mesh.normal_sign(cell, j),
            normal: mesh.outward_normal(cell, j),
            t: er.points.clone(),
            points: Vec::with_capacity(er.len()),
            weights: er.weights.iter().map(|w| w * h_e).collect(),
            flux: Vec::with_capacity(er.len()),
            scalar: Vec::with_capacity(er.len()),
            trace: Vec::new(),
        };
        for &t in &er.points {
            let xi = ref_edge_point(j, mesh.local_param(cell, j, t));
            en.points.push(mesh.edge_point(e, t));
            en.flux.push(basis::flux_physical(flux, &geo, xi)?.0);
            en.scalar.push(basis::scalar_physical(scalar_degree, &geo, xi)?.0);
            if let Some(r) = trace_degree {
                en.trace.push(basis::eval_edge_basis(r, t)?);
            }
        }
        out.edges.push(en);
    }
    Ok(out)
}
