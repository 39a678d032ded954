//! Global systems of the four discretizations and Gram matrices of the
//! norm pairs.
//!
//! Every local matrix is built on its upper triangle and mirrored, and the
//! per-cell triplet lists are concatenated in cell order before being
//! summed, so `A = A^T` holds bit-for-bit and the result does not depend on
//! whether cells were processed in parallel.
//!
//! Sign conventions (all systems have right-hand side `[0; -F; 0]` with
//! `F_i = (f, psi_i)`):
//!
//! * HDG: `(c p, q) - (u, div q) + <u^, q.n>` in the flux rows,
//!   `-(v, div p) + <v^, p.n> - tau <u - u^, v - v^>` in the scalar and trace
//!   rows.
//! * WG: `(c p, q) + eta <(p - p^ n_e).n, (q - q^ n_e).n> + (q, grad u) -
//!   <sigma q^, u>` and `(p, grad v) - <sigma p^, v>`, with
//!   `sigma = n_K . n_e`.
//! * primal conforming: `(c p, q) + (grad u, q)` and `(p, grad v)`.
//! * mixed conforming: `(c p, q) - (u, div q)` and `-(div p, v)`.

use std::ops::Range;

use crate::basis::{self, BasisFamily, Family};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, SparseMatrix};
use crate::local::{cell_nodes, CellNodes, EdgeNodes};
use crate::manufactured::CoefficientField;
use crate::mesh::{Mesh, Point};
use crate::norms::NormKind;
use crate::quadrature;
use crate::spaces::{DofMap, Field, Method, SpaceCase};

pub type LoadFn<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub blocks: Vec<(Field, Range<usize>)>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn block(&self, field: Field) -> Option<Range<usize>> {
        self.blocks.iter().find(|(f, _)| *f == field).map(|(_, r)| r.clone())
    }

    pub fn solve(&self, tol: f64) -> Result<Vec<f64>> {
        linalg::solve_symmetric_indefinite(&self.matrix, &self.rhs, tol)
    }
}

/// Bilinear form to assemble.
#[derive(Clone, Copy, Debug)]
pub enum Form<'a> {
    Hdg(&'a SpaceCase),
    Wg(&'a SpaceCase),
    PrimalConforming,
    MixedConforming,
}

/// Local basis function -> `(global index, sign)`; order is flux, scalar,
/// then the trace functions of local edges 0, 1, 2.
pub(crate) fn local_map(mesh: &Mesh, dofs: &DofMap, cell: usize) -> Vec<Option<(usize, f64)>> {
    let mut map: Vec<Option<(usize, f64)>> = dofs.flux.local(cell).to_vec();
    map.extend_from_slice(dofs.scalar.local(cell));
    if let Some(t) = &dofs.trace {
        for &e in &mesh.cells[cell].edges {
            let nt = t.family.dim();
            match t.offsets[e] {
                Some(o) => map.extend((o..o + nt).map(|g| Some((g, 1.0)))),
                None => map.extend(std::iter::repeat_n(None, nt)),
            }
        }
    }
    map
}

/// Dense local matrix filled on `i <= j` and mirrored by [`LocalMatrix::emit`].
pub(crate) struct LocalMatrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl LocalMatrix {
    pub fn new(n: usize) -> Self {
        LocalMatrix { n, a: vec![0.0; n * n] }
    }

    /// Adds to the upper-triangle entry of the unordered pair `{i, j}`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.a[r * self.n + c] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.a[r * self.n + c]
    }

    pub fn emit(&self, map: &[Option<(usize, f64)>], out: &mut Vec<(usize, usize, f64)>) {
        for i in 0..self.n {
            let Some((gi, si)) = map[i] else { continue };
            for j in 0..self.n {
                let Some((gj, sj)) = map[j] else { continue };
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((gi, gj, (si * sj) * v));
                }
            }
        }
    }
}

fn load_degree(bilinear: usize) -> usize {
    (bilinear + 1).min(quadrature::MAX_DEGREE)
}

fn check_dofs(dofs: &DofMap, flux: BasisFamily, scalar: usize, trace: Option<usize>) -> Result<()> {
    let mismatch = |what: &str| Err(Error::DimensionMismatch(format!("dof map does not match the form: {what}")));
    if dofs.flux.family != flux {
        return mismatch("flux family");
    }
    if dofs.scalar.family.degree != scalar {
        return mismatch("scalar degree");
    }
    match (&dofs.trace, trace) {
        (None, None) => Ok(()),
        (Some(t), Some(r)) if t.family.degree == r => Ok(()),
        _ => mismatch("trace space"),
    }
}

struct FormSpaces {
    flux: BasisFamily,
    scalar: usize,
    trace: Option<usize>,
    degree: usize,
}

fn form_spaces(form: &Form, dofs: &DofMap) -> Result<FormSpaces> {
    match form {
        Form::Hdg(case) | Form::Wg(case) => {
            case.validate()?;
            let expect = if matches!(form, Form::Hdg(_)) { Method::Hdg } else { Method::Wg };
            if case.method != expect {
                return Err(Error::InvalidArgument(format!("{} space case passed to the {expect} assembler", case.method)));
            }
            Ok(FormSpaces {
                flux: case.flux,
                scalar: case.scalar_degree,
                trace: Some(case.trace_degree),
                degree: case.quad_degree(),
            })
        }
        Form::PrimalConforming | Form::MixedConforming => {
            let k = match form {
                Form::PrimalConforming => dofs.scalar.family.degree.checked_sub(1).ok_or_else(|| {
                    Error::DimensionMismatch("primal conforming scalars need degree >= 1".into())
                })?,
                _ => dofs.scalar.family.degree,
            };
            let fam = if matches!(form, Form::PrimalConforming) { Family::VectorP } else { Family::Rt };
            let flux = BasisFamily::new(fam, k)?;
            Ok(FormSpaces {
                flux,
                scalar: dofs.scalar.family.degree,
                trace: None,
                degree: 2 * flux.poly_degree().max(dofs.scalar.family.degree),
            })
        }
    }
}

fn local_system(
    form: &Form,
    t: &CellNodes,
    coeff: &CoefficientField,
    f: LoadFn,
    nq: usize,
    nv: usize,
    nt: usize,
) -> Result<(LocalMatrix, Vec<f64>)> {
    let n = nq + nv + 3 * nt;
    let mut m = LocalMatrix::new(n);
    let mut b = vec![0.0; n];
    let v0 = nq;
    let t0 = |j: usize| nq + nv + j * nt;
    for q in 0..t.points.len() {
        let w = t.weights[q];
        let c = coeff.c(t.points[q])?;
        let phi = &t.flux[q];
        let psi = &t.scalar[q];
        for i in 0..nq {
            for j in i..nq {
                m.add(i, j, w * c * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]));
            }
        }
        match form {
            Form::Hdg(_) | Form::MixedConforming => {
                let div = &t.flux_div[q];
                for i in 0..nq {
                    for a in 0..nv {
                        m.add(i, v0 + a, -w * psi[a] * div[i]);
                    }
                }
            }
            Form::Wg(_) | Form::PrimalConforming => {
                let g = &t.scalar_grad[q];
                for i in 0..nq {
                    for a in 0..nv {
                        m.add(i, v0 + a, w * (phi[i][0] * g[a][0] + phi[i][1] * g[a][1]));
                    }
                }
            }
        }
        let fw = w * f(t.points[q]);
        for a in 0..nv {
            b[v0 + a] -= fw * psi[a];
        }
    }
    match form {
        Form::Hdg(case) => {
            let tau = case.parameter(t.h_k);
            for (j, en) in t.edges.iter().enumerate() {
                for q in 0..en.points.len() {
                    let w = en.weights[q];
                    let pn = en.flux_normal(q);
                    let psi = &en.scalar[q];
                    let mu = &en.trace[q];
                    for i in 0..nq {
                        for r in 0..nt {
                            m.add(i, t0(j) + r, w * mu[r] * pn[i]);
                        }
                    }
                    for a in 0..nv {
                        for bb in a..nv {
                            m.add(v0 + a, v0 + bb, -tau * w * (psi[a] * psi[bb]));
                        }
                        for r in 0..nt {
                            m.add(v0 + a, t0(j) + r, tau * w * (psi[a] * mu[r]));
                        }
                    }
                    for r in 0..nt {
                        for s in r..nt {
                            m.add(t0(j) + r, t0(j) + s, -tau * w * (mu[r] * mu[s]));
                        }
                    }
                }
            }
        }
        Form::Wg(case) => {
            let eta = case.parameter(t.h_k);
            for (j, en) in t.edges.iter().enumerate() {
                let sigma = en.sigma;
                for q in 0..en.points.len() {
                    let w = en.weights[q];
                    let pn = en.flux_normal(q);
                    let psi = &en.scalar[q];
                    let mu = &en.trace[q];
                    for i in 0..nq {
                        for jj in i..nq {
                            m.add(i, jj, eta * w * (pn[i] * pn[jj]));
                        }
                        for r in 0..nt {
                            m.add(i, t0(j) + r, -eta * sigma * w * (pn[i] * mu[r]));
                        }
                    }
                    for r in 0..nt {
                        for s in r..nt {
                            m.add(t0(j) + r, t0(j) + s, eta * w * (mu[r] * mu[s]));
                        }
                        for a in 0..nv {
                            m.add(v0 + a, t0(j) + r, -sigma * w * (mu[r] * psi[a]));
                        }
                    }
                }
            }
        }
        Form::PrimalConforming | Form::MixedConforming => {}
    }
    Ok((m, b))
}

/// Assembles `form` on `dofs`. Used by the four public assemblers.
pub fn assemble(mesh: &Mesh, dofs: &DofMap, form: Form, coeff: &CoefficientField, f: LoadFn) -> Result<LinearSystem> {
    let sp = form_spaces(&form, dofs)?;
    check_dofs(dofs, sp.flux, sp.scalar, sp.trace)?;
    match form {
        Form::Hdg(_) => check_norm_layout(mesh, dofs, NormKind::HdgDiv)?,
        Form::Wg(_) => check_norm_layout(mesh, dofs, NormKind::WgDiv)?,
        _ => {}
    }
    let nq = sp.flux.dim();
    let nv = dofs.scalar.family.dim();
    let nt = sp.trace.map_or(0, |r| r + 1);
    let degree = load_degree(sp.degree);
    let per_cell = exec::map_indexed(mesh.num_cells(), |c| {
        let t = cell_nodes(mesh, c, sp.flux, sp.scalar, sp.trace, degree)?;
        let (m, b) = local_system(&form, &t, coeff, f, nq, nv, nt)?;
        let map = local_map(mesh, dofs, c);
        let mut trip = Vec::with_capacity(m.n * m.n);
        m.emit(&map, &mut trip);
        let rhs: Vec<(usize, f64)> =
            map.iter().zip(&b).filter_map(|(g, v)| g.map(|(g, s)| (g, s * v))).filter(|(_, v)| *v != 0.0).collect();
        Ok((trip, rhs))
    })?;
    let mut triplets = Vec::with_capacity(per_cell.iter().map(|p| p.0.len()).sum());
    let mut rhs = vec![0.0; dofs.total];
    for (trip, r) in per_cell {
        triplets.extend(trip);
        for (g, v) in r {
            rhs[g] += v;
        }
    }
    let matrix = SparseMatrix::from_triplets(dofs.total, &triplets)?;
    Ok(LinearSystem { matrix, rhs, blocks: dofs.ranges.clone() })
}

pub fn assemble_hdg(
    mesh: &Mesh,
    dofs: &DofMap,
    case: &SpaceCase,
    coeff: &CoefficientField,
    f: LoadFn,
) -> Result<LinearSystem> {
    assemble(mesh, dofs, Form::Hdg(case), coeff, f)
}

pub fn assemble_wg(
    mesh: &Mesh,
    dofs: &DofMap,
    case: &SpaceCase,
    coeff: &CoefficientField,
    f: LoadFn,
) -> Result<LinearSystem> {
    assemble(mesh, dofs, Form::Wg(case), coeff, f)
}

/// Builds its own [`DofMap::primal_conforming`] layout; returns it with
/// the system.
pub fn assemble_primal_conforming(
    mesh: &Mesh,
    k: usize,
    coeff: &CoefficientField,
    f: LoadFn,
) -> Result<(DofMap, LinearSystem)> {
    let dofs = DofMap::primal_conforming(mesh, k)?;
    let sys = assemble(mesh, &dofs, Form::PrimalConforming, coeff, f)?;
    Ok((dofs, sys))
}

pub fn assemble_mixed_conforming(
    mesh: &Mesh,
    k: usize,
    coeff: &CoefficientField,
    f: LoadFn,
) -> Result<(DofMap, LinearSystem)> {
    let dofs = DofMap::mixed_conforming(mesh, k)?;
    let sys = assemble(mesh, &dofs, Form::MixedConforming, coeff, f)?;
    Ok((dofs, sys))
}

/// Builds the `(dofs, system)` pair for a space case.
pub fn assemble_case(
    mesh: &Mesh,
    case: &SpaceCase,
    coeff: &CoefficientField,
    f: LoadFn,
) -> Result<(DofMap, LinearSystem)> {
    let dofs = DofMap::build(mesh, case)?;
    let sys = match case.method {
        Method::Hdg => assemble_hdg(mesh, &dofs, case, coeff, f)?,
        Method::Wg => assemble_wg(mesh, &dofs, case, coeff, f)?,
    };
    Ok((dofs, sys))
}

fn cell_tables(mesh: &Mesh, dofs: &DofMap, degree: usize) -> Result<Vec<CellNodes>> {
    let trace = dofs.trace.as_ref().map(|t| t.family.degree);
    exec::map_indexed(mesh.num_cells(), |c| {
        cell_nodes(mesh, c, dofs.flux.family, dofs.scalar.family.degree, trace, degree)
    })
}

pub(crate) fn norm_quad_degree(dofs: &DofMap) -> usize {
    let tr = dofs.trace.as_ref().map_or(0, |t| t.family.degree);
    2 * dofs.flux.family.poly_degree().max(dofs.scalar.family.degree).max(tr)
}

/// Checks that `kind` can be evaluated on `dofs`.
pub(crate) fn check_norm_layout(mesh: &Mesh, dofs: &DofMap, kind: NormKind) -> Result<()> {
    let bad = |msg: &str| Err(Error::InvalidArgument(format!("norm {kind} does not apply: {msg}")));
    let Some(method) = kind.method() else { return Ok(()) };
    let Some(t) = &dofs.trace else { return bad("the space has no trace unknowns") };
    let hdg_layout = mesh.edges.iter().zip(&t.offsets).all(|(e, o)| e.is_boundary() == o.is_none());
    let wg_layout = t.offsets.iter().all(Option::is_some);
    match method {
        Method::Hdg if !hdg_layout => bad("HDG norms need traces on interior edges only"),
        Method::Wg if !wg_layout => bad("WG norms need traces on every edge"),
        _ => Ok(()),
    }
}

/// Gram matrix `N` with `x^T N x = |flux part|^2 + |scalar part|^2` of the
/// norm pair `kind` (see [`NormKind`]) for the discrete function with
/// coefficients `x`.
pub fn assemble_norm_gram(
    mesh: &Mesh,
    dofs: &DofMap,
    kind: NormKind,
    rho: f64,
    coeff: &CoefficientField,
) -> Result<SparseMatrix> {
    check_norm_layout(mesh, dofs, kind)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let degree = norm_quad_degree(dofs);
    let tables = cell_tables(mesh, dofs, degree)?;
    let nq = dofs.flux.family.dim();
    let nv = dofs.scalar.family.dim();
    let nt = dofs.trace.as_ref().map_or(0, |t| t.family.dim());
    let per_cell = exec::map_indexed(mesh.num_cells(), |c| {
        let t = &tables[c];
        let mut m = LocalMatrix::new(nq + nv + 3 * nt);
        cell_gram(kind, rho, t, coeff, nq, nv, nt, &mut m)?;
        let mut trip = Vec::new();
        m.emit(&local_map(mesh, dofs, c), &mut trip);
        Ok(trip)
    })?;
    let per_edge = exec::map_indexed(mesh.num_edges(), |e| edge_gram(mesh, dofs, &tables, kind, rho, e))?;
    let triplets: Vec<_> = per_cell.into_iter().chain(per_edge).flatten().collect();
    SparseMatrix::from_triplets(dofs.total, &triplets)
}

#[allow(clippy::too_many_arguments)]
fn cell_gram(
    kind: NormKind,
    rho: f64,
    t: &CellNodes,
    coeff: &CoefficientField,
    nq: usize,
    nv: usize,
    nt: usize,
    m: &mut LocalMatrix,
) -> Result<()> {
    let v0 = nq;
    let t0 = |j: usize| nq + nv + j * nt;
    let weighted = kind.flux_weighted();
    let (flux_div, scalar_grad) = kind.cell_terms();
    for q in 0..t.points.len() {
        let w = t.weights[q];
        let c = if weighted { coeff.c(t.points[q])? } else { 1.0 };
        let phi = &t.flux[q];
        let div = &t.flux_div[q];
        for i in 0..nq {
            for j in i..nq {
                let mut v = c * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]);
                if flux_div {
                    v += div[i] * div[j];
                }
                m.add(i, j, w * v);
            }
        }
        let psi = &t.scalar[q];
        let g = &t.scalar_grad[q];
        for a in 0..nv {
            for b in a..nv {
                let v = if scalar_grad { g[a][0] * g[b][0] + g[a][1] * g[b][1] } else { psi[a] * psi[b] };
                m.add(v0 + a, v0 + b, w * v);
            }
        }
    }
    match kind {
        NormKind::HdgGrad => {
            // rho^-1 h_K^-1 |v - v^|^2 on the cell boundary
            let s = 1.0 / (rho * t.h_k);
            for (j, en) in t.edges.iter().enumerate() {
                let has_trace = !en.trace.is_empty() && nt > 0;
                for q in 0..en.points.len() {
                    let w = s * en.weights[q];
                    let psi = &en.scalar[q];
                    for a in 0..nv {
                        for b in a..nv {
                            m.add(v0 + a, v0 + b, w * (psi[a] * psi[b]));
                        }
                    }
                    if has_trace {
                        let mu = &en.trace[q];
                        for r in 0..nt {
                            for a in 0..nv {
                                m.add(v0 + a, t0(j) + r, -w * (psi[a] * mu[r]));
                            }
                            for u in r..nt {
                                m.add(t0(j) + r, t0(j) + u, w * (mu[r] * mu[u]));
                            }
                        }
                    }
                }
            }
        }
        NormKind::WgGrad | NormKind::WgDiv => {
            // s |q.n_K - sigma q^|^2 on the cell boundary
            let s = if kind == NormKind::WgGrad { rho * t.h_k } else { 1.0 / (rho * t.h_k) };
            for (j, en) in t.edges.iter().enumerate() {
                for q in 0..en.points.len() {
                    let w = s * en.weights[q];
                    let pn = en.flux_normal(q);
                    let mu = &en.trace[q];
                    for i in 0..nq {
                        for jj in i..nq {
                            m.add(i, jj, w * (pn[i] * pn[jj]));
                        }
                        for r in 0..nt {
                            m.add(i, t0(j) + r, -en.sigma * w * (pn[i] * mu[r]));
                        }
                    }
                    for r in 0..nt {
                        for u in r..nt {
                            m.add(t0(j) + r, t0(j) + u, w * (mu[r] * mu[u]));
                        }
                    }
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Moments `int w_i mu_m ds`, `m = 0..=r`, of the basis functions of every
/// side of an edge, concatenated side by side and scaled by `signs`.
fn edge_moments(
    tables: &[CellNodes],
    sides: &[(usize, usize)],
    signs: [f64; 2],
    r: usize,
    values: impl Fn(&EdgeNodes, usize) -> Vec<f64>,
) -> Result<Vec<Vec<f64>>> {
    let mut rows = vec![Vec::new(); r + 1];
    for (&(cell, local), sg) in sides.iter().zip(signs) {
        let en = &tables[cell].edges[local];
        let mut mom: Vec<Vec<f64>> = Vec::new();
        for q in 0..en.points.len() {
            let mu = basis::eval_edge_basis(r, en.t[q])?;
            let vals = values(en, q);
            if mom.is_empty() {
                mom = vec![vec![0.0; vals.len()]; r + 1];
            }
            for (mm, mu_m) in mu.iter().enumerate() {
                for (acc, v) in mom[mm].iter_mut().zip(&vals) {
                    *acc += en.weights[q] * (mu_m * v);
                }
            }
        }
        for (row, m) in rows.iter_mut().zip(mom) {
            row.extend(m.into_iter().map(|v| sg * v));
        }
    }
    Ok(rows)
}

/// `scale * sum_m row_m row_m^T`, emitted through `map`.
fn emit_rank_sum(map: &[Option<(usize, f64)>], rows: &[Vec<f64>], scale: f64, out: &mut Vec<(usize, usize, f64)>) {
    let n = map.len();
    let mut m = LocalMatrix::new(n);
    for row in rows {
        for i in 0..n {
            for j in i..n {
                m.add(i, j, scale * (row[i] * row[j]));
            }
        }
    }
    m.emit(map, out);
}

/// Edge-coupled Gram terms: projected jumps and trace masses.
///
/// With the edge basis orthonormal on `[0,1]`, `int mu_m mu_n ds = h_e
/// delta_mn`, so `|P_e g|^2 = sum_m (int g mu_m ds)^2 / h_e`.
fn edge_gram(
    mesh: &Mesh,
    dofs: &DofMap,
    tables: &[CellNodes],
    kind: NormKind,
    rho: f64,
    e: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    let edge = &mesh.edges[e];
    let h_e = edge.length;
    let sides: Vec<(usize, usize)> = edge.sides().map(|s| (s.cell, s.local)).collect();
    let mut out = Vec::new();
    match kind {
        NormKind::HdgDiv => {
            let t = dofs.trace.as_ref().expect("layout checked");
            if let Some(range) = t.edge(e) {
                // rho h_e |v^|^2_e
                out.extend(range.map(|g| (g, g, rho * h_e * h_e)));
            }
            if !edge.is_boundary() {
                // [q] = q+.n+ + q-.n-
                let rows = edge_moments(tables, &sides, [1.0, 1.0], t.family.degree, |en, q| en.flux_normal(q))?;
                let map: Vec<_> = sides.iter().flat_map(|&(c, _)| dofs.flux.local(c).to_vec()).collect();
                emit_rank_sum(&map, &rows, 1.0 / (rho * h_e * h_e), &mut out);
            }
        }
        NormKind::WgGrad => {
            // [v] = v+ - v-, or v on the boundary
            let r = dofs.trace.as_ref().expect("layout checked").family.degree;
            let rows = edge_moments(tables, &sides, [1.0, -1.0], r, |en, q| en.scalar[q].clone())?;
            let map: Vec<_> = sides.iter().flat_map(|&(c, _)| dofs.scalar.local(c).to_vec()).collect();
            emit_rank_sum(&map, &rows, 1.0 / (rho * h_e * h_e), &mut out);
        }
        NormKind::BrokenH1 => {
            // h_e^-1 |[v]|^2_e, unprojected
            let map: Vec<_> = sides.iter().flat_map(|&(c, _)| dofs.scalar.local(c).to_vec()).collect();
            let first = &tables[sides[0].0].edges[sides[0].1];
            let n = map.len();
            let mut m = LocalMatrix::new(n);
            for q in 0..first.points.len() {
                let vals: Vec<f64> = sides
                    .iter()
                    .zip([1.0, -1.0])
                    .flat_map(|(&(c, l), sg)| tables[c].edges[l].scalar[q].iter().map(move |v| sg * v))
                    .collect();
                let w = first.weights[q] / h_e;
                for i in 0..n {
                    for j in i..n {
                        m.add(i, j, w * (vals[i] * vals[j]));
                    }
                }
            }
            m.emit(&map, &mut out);
        }
        _ => {}
    }
    Ok(out)
}
