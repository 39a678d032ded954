//! Parameter-dependent norms, error evaluation, DG identities and the
//! consistency residual.
//!
//! Each [`NormKind`] is a pair (flux part, scalar part); squared parts add
//! up to the quadratic form of [`crate::assembly::assemble_norm_gram`].
//! With `c = 1/alpha`, `[q] = q+.n+ + q-.n-` and `[v] = v+ - v-` (`v` on
//! boundary edges), `P_e` the projection onto the trace degree and `sigma =
//! n_K . n_e`:
//!
//! | kind        | flux part squared                                              | scalar part squared                                  |
//! |-------------|----------------------------------------------------------------|------------------------------------------------------|
//! | hdg-div     | `(cq,q) + |div q|^2 + sum_int rho^-1 h_e^-1 |P_e[q]|^2`        | `|v|^2 + sum_int rho h_e |v^|^2`                     |
//! | hdg-grad    | `(cq,q)`                                                       | `|grad v|^2 + sum_K rho^-1 h_K^-1 |v - v^|^2_dK`     |
//! | wg-grad     | `(cq,q) + sum_K rho h_K |q.n_K - sigma q^|^2_dK`               | `|grad v|^2 + sum_e rho^-1 h_e^-1 |P_e[v]|^2`        |
//! | wg-div      | `(cq,q) + |div q|^2 + sum_K rho^-1 h_K^-1 |q.n_K - sigma q^|^2`| `|v|^2`                                             |
//! | broken-h1   | `|q|^2`                                                        | `|grad v|^2 + sum_e h_e^-1 |[v]|^2`                  |
//! | broken-hdiv | `|q|^2 + |div q|^2`                                            | `|v|^2`                                              |
//! | l2          | `|q|^2`                                                        | `|v|^2`                                              |
//!
//! Broken gradients and divergences are taken cellwise.

use std::fmt;
use std::str::FromStr;

use crate::assembly::{check_norm_layout, local_map, norm_quad_degree, LocalMatrix};
use crate::basis::{self, BasisFamily};
use crate::error::{Error, Result};
use crate::exec;
use crate::local::cell_nodes;
use crate::manufactured::Manufactured;
use crate::mesh::{Mesh, Point};
use crate::quadrature;
use crate::solution::DiscreteSolution;
use crate::spaces::{DofMap, Method, SpaceCase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    HdgDiv,
    HdgGrad,
    WgGrad,
    WgDiv,
    BrokenH1,
    BrokenHdiv,
    L2,
}

impl NormKind {
    pub const ALL: [NormKind; 7] = [
        NormKind::HdgDiv,
        NormKind::HdgGrad,
        NormKind::WgGrad,
        NormKind::WgDiv,
        NormKind::BrokenH1,
        NormKind::BrokenHdiv,
        NormKind::L2,
    ];

    /// Method whose trace layout the norm reads, if any.
    pub fn method(self) -> Option<Method> {
        match self {
            NormKind::HdgDiv | NormKind::HdgGrad => Some(Method::Hdg),
            NormKind::WgGrad | NormKind::WgDiv => Some(Method::Wg),
            _ => None,
        }
    }

    /// Whether the flux mass carries the weight `c`.
    pub fn flux_weighted(self) -> bool {
        self.method().is_some()
    }

    /// `(flux part has |div q|^2, scalar part uses |grad v|^2 instead of |v|^2)`.
    pub fn cell_terms(self) -> (bool, bool) {
        match self {
            NormKind::HdgDiv => (true, false),
            NormKind::HdgGrad => (false, true),
            NormKind::WgGrad => (false, true),
            NormKind::WgDiv => (true, false),
            NormKind::BrokenH1 => (false, true),
            NormKind::BrokenHdiv => (true, false),
            NormKind::L2 => (false, false),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::HdgDiv => "hdg-div",
            NormKind::HdgGrad => "hdg-grad",
            NormKind::WgGrad => "wg-grad",
            NormKind::WgDiv => "wg-div",
            NormKind::BrokenH1 => "broken-h1",
            NormKind::BrokenHdiv => "broken-hdiv",
            NormKind::L2 => "l2",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NormKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s.replace('_', "-"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown norm kind '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormPair {
    pub flux: f64,
    pub scalar: f64,
}

impl NormPair {
    pub fn sum(&self) -> f64 {
        self.flux + self.scalar
    }

    /// `sqrt(flux^2 + scalar^2)`.
    pub fn combined(&self) -> f64 {
        self.flux.hypot(self.scalar)
    }
}

/// Squared norm of the edge projection of `g` onto `P_r`, sampled at the
/// edge nodes `t` with physical weights `w`.
fn projected_sq(g: &[f64], t: &[f64], w: &[f64], h_e: f64, r: usize) -> Result<f64> {
    let mut c = vec![0.0; r + 1];
    let mu: Vec<Vec<f64>> = t.iter().map(|&s| basis::eval_edge_basis(r, s)).collect::<Result<_>>()?;
    for q in 0..g.len() {
        for m in 0..=r {
            c[m] += w[q] * g[q] * mu[q][m] / h_e;
        }
    }
    // |sum_m c_m mu_m|^2 integrated with the same nodes
    Ok((0..g.len())
        .map(|q| {
            let v: f64 = (0..=r).map(|m| c[m] * mu[q][m]).sum();
            w[q] * v * v
        })
        .sum())
}

/// Per-field norms of `exact - sol` in the pair `kind`.
///
/// Jump and trace terms in which the exact fields cancel (single-valued
/// `u` and `p.n`, `u = 0` on the boundary) are evaluated on the discrete
/// part only.
pub fn compute_error_norm(sol: &DiscreteSolution, exact: &Manufactured, kind: NormKind, rho: f64) -> Result<NormPair> {
    let mesh = sol.mesh;
    let dofs = sol.dofs;
    check_norm_layout(mesh, dofs, kind)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let degree = (norm_quad_degree(dofs) + 1).min(quadrature::MAX_DEGREE);
    let trace_deg = dofs.trace.as_ref().map(|t| t.family.degree);
    let (flux_div, scalar_grad) = kind.cell_terms();
    let per_cell = exec::map_indexed(mesh.num_cells(), |c| {
        let t = cell_nodes(mesh, c, dofs.flux.family, dofs.scalar.family.degree, trace_deg, degree)?;
        let qc = sol.flux_local(c);
        let vc = sol.scalar_local(c);
        let (mut fl, mut sc) = (0.0, 0.0);
        for q in 0..t.points.len() {
            let x = t.points[q];
            let w = t.weights[q];
            let (mut ph, mut dh, mut uh, mut gh) = ([0.0; 2], 0.0, 0.0, [0.0; 2]);
            for i in 0..qc.len() {
                ph[0] += qc[i] * t.flux[q][i][0];
                ph[1] += qc[i] * t.flux[q][i][1];
                dh += qc[i] * t.flux_div[q][i];
            }
            for a in 0..vc.len() {
                uh += vc[a] * t.scalar[q][a];
                gh[0] += vc[a] * t.scalar_grad[q][a][0];
                gh[1] += vc[a] * t.scalar_grad[q][a][1];
            }
            let p = exact.p(x);
            let ep = [p[0] - ph[0], p[1] - ph[1]];
            let cw = if kind.flux_weighted() { exact.coeff.c(x)? } else { 1.0 };
            fl += w * cw * (ep[0] * ep[0] + ep[1] * ep[1]);
            if flux_div {
                let ed = exact.div_p(x) - dh;
                fl += w * ed * ed;
            }
            if scalar_grad {
                let g = exact.grad_u(x);
                let eg = [g[0] - gh[0], g[1] - gh[1]];
                sc += w * (eg[0] * eg[0] + eg[1] * eg[1]);
            } else {
                let eu = exact.u(x) - uh;
                sc += w * eu * eu;
            }
        }
        for en in &t.edges {
            let tr = sol.trace_local(en.edge);
            let vh = |q: usize| -> f64 { (0..vc.len()).map(|a| vc[a] * en.scalar[q][a]).sum() };
            let trace_h = |q: usize| -> f64 { (0..tr.len()).map(|m| tr[m] * en.trace[q][m]).sum() };
            let pn = |q: usize| -> f64 {
                let v = en.flux_normal(q);
                (0..qc.len()).map(|i| qc[i] * v[i]).sum()
            };
            match kind {
                NormKind::HdgGrad => {
                    let s = 1.0 / (rho * t.h_k);
                    for q in 0..en.points.len() {
                        let d = trace_h(q) - vh(q);
                        sc += s * en.weights[q] * d * d;
                    }
                }
                NormKind::WgGrad | NormKind::WgDiv => {
                    let s = if kind == NormKind::WgGrad { rho * t.h_k } else { 1.0 / (rho * t.h_k) };
                    for q in 0..en.points.len() {
                        let d = en.sigma * trace_h(q) - pn(q);
                        fl += s * en.weights[q] * d * d;
                    }
                }
                _ => {}
            }
        }
        Ok((fl, sc))
    })?;
    let (mut fl, mut sc) = per_cell.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (efl, esc) = edge_error_terms(sol, exact, kind, rho, degree)?;
    fl += efl;
    sc += esc;
    Ok(NormPair { flux: fl.max(0.0).sqrt(), scalar: sc.max(0.0).sqrt() })
}

/// Edge-coupled contributions: projected jumps and trace errors.
fn edge_error_terms(sol: &DiscreteSolution, exact: &Manufactured, kind: NormKind, rho: f64, degree: usize) -> Result<(f64, f64)> {
    if !matches!(kind, NormKind::HdgDiv | NormKind::WgGrad | NormKind::BrokenH1) {
        return Ok((0.0, 0.0));
    }
    let mesh = sol.mesh;
    let dofs = sol.dofs;
    let rule = quadrature::edge(degree)?;
    let r = dofs.trace.as_ref().map_or(0, |t| t.family.degree);
    let per_edge = exec::map_indexed(mesh.num_edges(), |e| {
        let edge = &mesh.edges[e];
        let h_e = edge.length;
        let w: Vec<f64> = rule.weights.iter().map(|w| w * h_e).collect();
        let geo_side = |side: crate::mesh::EdgeSide, t: f64| {
            crate::mesh::ref_edge_point(side.local, mesh.local_param(side.cell, side.local, t))
        };
        // jump of u_h (v+ - v-, or v on the boundary) and of p_h . n_K (summed)
        let mut ujump = vec![0.0; rule.len()];
        let mut pjump = vec![0.0; rule.len()];
        for (side, sg) in edge.sides().zip([1.0, -1.0]) {
            let n = mesh.outward_normal(side.cell, side.local);
            for (q, &t) in rule.points.iter().enumerate() {
                let xi = geo_side(side, t);
                ujump[q] += sg * sol.eval_scalar(side.cell, xi)?.0;
                let p = sol.eval_flux(side.cell, xi)?.0;
                pjump[q] += p[0] * n[0] + p[1] * n[1];
            }
        }
        let (mut fl, mut sc) = (0.0, 0.0);
        match kind {
            NormKind::HdgDiv => {
                if !edge.is_boundary() {
                    fl += projected_sq(&pjump, &rule.points, &w, h_e, r)? / (rho * h_e);
                    let tr = sol.trace_local(e);
                    for (q, &t) in rule.points.iter().enumerate() {
                        let mu = basis::eval_edge_basis(r, t)?;
                        let uh: f64 = tr.iter().zip(&mu).map(|(a, b)| a * b).sum();
                        let d = exact.u(mesh.edge_point(e, t)) - uh;
                        sc += rho * h_e * w[q] * d * d;
                    }
                }
            }
            NormKind::WgGrad => {
                sc += projected_sq(&ujump, &rule.points, &w, h_e, r)? / (rho * h_e);
            }
            NormKind::BrokenH1 => {
                sc += ujump.iter().zip(&w).map(|(j, w)| w * j * j).sum::<f64>() / h_e;
            }
            _ => {}
        }
        Ok((fl, sc))
    })?;
    Ok(per_edge.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1)))
}

/// Both sides of the two DG identities for broken `v` (scalar `P_r`) and
/// broken `q` (flux family), given by cell-major local coefficients.
#[derive(Clone, Copy, Debug)]
pub struct DgIdentity {
    /// `<v, q.n>` over all cell boundaries.
    pub lhs: f64,
    /// `<{q}, [[v]]>_E + <[q], {v}>_{E_i}`.
    pub rhs: f64,
    /// Sum of the absolute values of all contributions.
    pub scale: f64,
    /// `max |{q}.[[v]] - {{q}} [v]|` over edge nodes.
    pub pointwise: f64,
}

impl DgIdentity {
    pub fn relative_residual(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn dg_identity_residual(
    mesh: &Mesh,
    flux: BasisFamily,
    scalar_degree: usize,
    q_coeffs: &[f64],
    v_coeffs: &[f64],
) -> Result<DgIdentity> {
    let nq = flux.dim();
    let nv = basis::scalar_dim(scalar_degree);
    if q_coeffs.len() != nq * mesh.num_cells() || v_coeffs.len() != nv * mesh.num_cells() {
        return Err(Error::DimensionMismatch("coefficients must be cell-major local vectors".into()));
    }
    let degree = 2 * flux.poly_degree().max(scalar_degree);
    let rule = quadrature::edge(degree)?;
    let eval = |cell: usize, local: usize, t: f64| -> Result<(Point, f64)> {
        let geo = mesh.geometry(cell);
        let xi = crate::mesh::ref_edge_point(local, mesh.local_param(cell, local, t));
        let (fv, _) = basis::flux_physical(flux, &geo, xi)?;
        let (sv, _) = basis::scalar_physical(scalar_degree, &geo, xi)?;
        let qc = &q_coeffs[cell * nq..(cell + 1) * nq];
        let vc = &v_coeffs[cell * nv..(cell + 1) * nv];
        let mut q = [0.0; 2];
        for i in 0..nq {
            q[0] += qc[i] * fv[i][0];
            q[1] += qc[i] * fv[i][1];
        }
        Ok((q, vc.iter().zip(&sv).map(|(a, b)| a * b).sum()))
    };
    let mut out = DgIdentity { lhs: 0.0, rhs: 0.0, scale: 0.0, pointwise: 0.0 };
    for (e, edge) in mesh.edges.iter().enumerate() {
        let h_e = edge.length;
        for (&t, &w0) in rule.points.iter().zip(&rule.weights) {
            let w = w0 * h_e;
            let sides: Vec<(Point, f64, Point)> = edge
                .sides()
                .map(|s| eval(s.cell, s.local, t).map(|(q, v)| (q, v, mesh.outward_normal(s.cell, s.local))))
                .collect::<Result<_>>()?;
            let dot = |a: Point, b: Point| a[0] * b[0] + a[1] * b[1];
            for &(q, v, n) in &sides {
                let c = w * v * dot(q, n);
                out.lhs += c;
                out.scale += c.abs();
            }
            let (avg_q, vjump, qjump, avg_v, avg_qn, jump_v) = match sides.as_slice() {
                [(q, v, n)] => (*q, [v * n[0], v * n[1]], 0.0, 0.0, dot(*q, *n), *v),
                [(qp, vp, np), (qm, vm, nm)] => (
                    [0.5 * (qp[0] + qm[0]), 0.5 * (qp[1] + qm[1])],
                    [vp * np[0] + vm * nm[0], vp * np[1] + vm * nm[1]],
                    dot(*qp, *np) + dot(*qm, *nm),
                    0.5 * (vp + vm),
                    0.5 * (dot(*qp, *np) - dot(*qm, *nm)),
                    vp - vm,
                ),
                _ => unreachable!("edges have one or two sides"),
            };
            let a = w * dot(avg_q, vjump);
            let b = w * qjump * avg_v;
            out.rhs += a + b;
            out.scale += a.abs() + b.abs();
            let _ = e;
            out.pointwise = out.pointwise.max((dot(avg_q, vjump) - avg_qn * jump_v).abs());
        }
    }
    Ok(out)
}

/// `max_i |A(U, phi_i) - F(phi_i)| / sqrt(N_ii)` over the basis of the
/// space triple, with `U` the exact solution and its traces (`u` on edges
/// for HDG, `p . n_e` for WG) sampled at quadrature nodes and `N` the Gram
/// matrix of the regime's norm pair. `quad_degree` defaults to one above the
/// exact degree for the discrete products.
pub fn consistency_residual(mesh: &Mesh, case: &SpaceCase, exact: &Manufactured, quad_degree: Option<usize>) -> Result<f64> {
    let dofs = DofMap::build(mesh, case)?;
    let degree = quad_degree.unwrap_or((case.quad_degree() + 1).min(quadrature::MAX_DEGREE));
    let r = residual_vector(mesh, &dofs, case, exact, degree)?;
    let gram = crate::assembly::assemble_norm_gram(mesh, &dofs, case.norm_kind(), case.rho, &exact.coeff)?;
    let mut worst: f64 = 0.0;
    for (i, ri) in r.iter().enumerate() {
        let d = gram.get(i, i);
        if d <= 0.0 {
            return Err(Error::Singular(format!("norm Gram has non-positive diagonal at {i}")));
        }
        worst = worst.max(ri.abs() / d.sqrt());
    }
    Ok(worst)
}

fn residual_vector(mesh: &Mesh, dofs: &DofMap, case: &SpaceCase, exact: &Manufactured, degree: usize) -> Result<Vec<f64>> {
    let nq = case.flux.dim();
    let nv = dofs.scalar.family.dim();
    let nt = case.trace_family().dim();
    let per_cell = exec::map_indexed(mesh.num_cells(), |c| {
        let t = cell_nodes(mesh, c, case.flux, case.scalar_degree, Some(case.trace_degree), degree)?;
        let mut b = vec![0.0; nq + nv + 3 * nt];
        let v0 = nq;
        let t0 = |j: usize| nq + nv + j * nt;
        for q in 0..t.points.len() {
            let x = t.points[q];
            let w = t.weights[q];
            let p = exact.p(x);
            let cp = exact.coeff.c(x)?;
            let u = exact.u(x);
            let g = exact.grad_u(x);
            let f = exact.f(x);
            let divp = exact.div_p(x);
            for i in 0..nq {
                let phi = t.flux[q][i];
                b[i] += w * cp * (p[0] * phi[0] + p[1] * phi[1]);
                match case.method {
                    Method::Hdg => b[i] -= w * u * t.flux_div[q][i],
                    Method::Wg => b[i] += w * (phi[0] * g[0] + phi[1] * g[1]),
                }
            }
            for a in 0..nv {
                let psi = t.scalar[q][a];
                match case.method {
                    Method::Hdg => b[v0 + a] -= w * psi * divp,
                    Method::Wg => {
                        let gp = t.scalar_grad[q][a];
                        b[v0 + a] += w * (p[0] * gp[0] + p[1] * gp[1]);
                    }
                }
                // minus the right-hand side -(f, psi)
                b[v0 + a] += w * f * psi;
            }
        }
        let theta = case.parameter(t.h_k);
        for (j, en) in t.edges.iter().enumerate() {
            for q in 0..en.points.len() {
                let x = en.points[q];
                let w = en.weights[q];
                let p = exact.p(x);
                let u = exact.u(x);
                let pn_k = p[0] * en.normal[0] + p[1] * en.normal[1];
                let pn = en.flux_normal(q);
                let mu = &en.trace[q];
                let psi = &en.scalar[q];
                match case.method {
                    Method::Hdg => {
                        // trace of U is u itself, so the tau <u - u^, .> terms vanish
                        for i in 0..nq {
                            b[i] += w * u * pn[i];
                        }
                        for m in 0..nt {
                            b[t0(j) + m] += w * mu[m] * pn_k;
                        }
                    }
                    Method::Wg => {
                        let p_hat = en.sigma * pn_k;
                        let defect = pn_k - en.sigma * p_hat;
                        for i in 0..nq {
                            b[i] += theta * w * defect * pn[i];
                        }
                        for m in 0..nt {
                            b[t0(j) + m] += -theta * en.sigma * w * defect * mu[m] - en.sigma * w * mu[m] * u;
                        }
                        for a in 0..nv {
                            b[v0 + a] -= en.sigma * w * p_hat * psi[a];
                        }
                    }
                }
            }
        }
        let map = local_map(mesh, dofs, c);
        Ok(map.into_iter().zip(b).filter_map(|(m, v)| m.map(|(g, s)| (g, s * v))).collect::<Vec<_>>())
    })?;
    let mut r = vec![0.0; dofs.total];
    for contributions in per_cell {
        for (g, v) in contributions {
            r[g] += v;
        }
    }
    Ok(r)
}

/// Squared norm `x^T N x` of a local matrix applied to local coefficients;
/// exposed for tests that compare local contributions.
#[allow(dead_code)]
pub(crate) fn local_quadratic(m: &LocalMatrix, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..m.n {
        for j in 0..m.n {
            s += x[i] * m.get(i, j) * x[j];
        }
    }
    s
}
