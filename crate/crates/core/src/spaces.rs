//! Space triples for each method regime and their global numbering.
//!
//! Global unknowns are ordered flux, then scalar, then trace. Each cell
//! stores, for every local basis function, the global index it couples to
//! and the sign relating the two (conforming RT functions change sign with
//! edge orientation); `None` marks a function removed by a boundary
//! condition.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::basis::{self, BasisFamily, Family};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::norms::NormKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Hdg,
    Wg,
}

/// Scaling of the stabilization parameter (`tau` for HDG, `eta` for WG).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `rho h_K`
    RhoH,
    /// `1 / (rho h_K)`
    Inv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Hdg => "hdg",
            Method::Wg => "wg",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hdg" => Ok(Method::Hdg),
            "wg" => Ok(Method::Wg),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}' (expected hdg or wg)"))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::RhoH => "rho-h",
            Regime::Inv => "inv",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rho-h" | "rho_h" | "rhoh" => Ok(Regime::RhoH),
            "inv" => Ok(Regime::Inv),
            _ => Err(Error::InvalidArgument(format!("unknown regime '{s}' (expected rho-h or inv)"))),
        }
    }
}

/// Highest `k` for which every default triple is available.
pub const MAX_K: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceCase {
    pub method: Method,
    pub regime: Regime,
    pub k: usize,
    pub rho: f64,
    pub flux: BasisFamily,
    pub scalar_degree: usize,
    pub trace_degree: usize,
}

impl SpaceCase {
    /// Default triple of each regime:
    ///
    /// | method / regime | scalar | flux       | trace            |
    /// |-----------------|--------|------------|------------------|
    /// | HDG `rho h`     | `P_k`  | `RT_k`     | `P_k`, interior  |
    /// | HDG `1/(rho h)` | `P_k+1`| `P_k`      | `P_k+1`, interior|
    /// | WG `rho h`      | `P_k+1`| `P_k`      | `P_k`, all edges |
    /// | WG `1/(rho h)`  | `P_k`  | `RT_k`     | `P_k`, all edges |
    pub fn table1(method: Method, regime: Regime, k: usize, rho: f64) -> Result<Self> {
        if k > MAX_K {
            return Err(Error::UnsupportedDegree { what: "polynomial degree k", degree: k, max: MAX_K });
        }
        let rt = BasisFamily::new(Family::Rt, k)?;
        let vp = BasisFamily::new(Family::VectorP, k)?;
        let (flux, scalar_degree, trace_degree) = match (method, regime) {
            (Method::Hdg, Regime::RhoH) => (rt, k, k),
            (Method::Hdg, Regime::Inv) => (vp, k + 1, k + 1),
            (Method::Wg, Regime::RhoH) => (vp, k + 1, k),
            (Method::Wg, Regime::Inv) => (rt, k, k),
        };
        let case = SpaceCase { method, regime, k, rho, flux, scalar_degree, trace_degree };
        case.validate()?;
        Ok(case)
    }

    pub fn with_trace_degree(mut self, r: usize) -> Result<Self> {
        self.trace_degree = r;
        self.validate()?;
        Ok(self)
    }

    pub fn with_flux(mut self, flux: BasisFamily) -> Result<Self> {
        self.flux = flux;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        self.rho = rho;
        self.validate()?;
        Ok(self)
    }

    /// Checks the inclusions each stability result depends on.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        BasisFamily::new(Family::ScalarP, self.scalar_degree)?;
        BasisFamily::new(Family::EdgeP, self.trace_degree)?;
        BasisFamily::new(self.flux.family, self.flux.degree)?;
        if !matches!(self.flux.family, Family::Rt | Family::VectorP) {
            return Err(Error::InconsistentSpaces(format!("{:?} is not a flux family", self.flux.family)));
        }
        let fail = |msg: String| Err(Error::InconsistentSpaces(msg));
        let (fd, sd, r) = (self.flux.degree, self.scalar_degree, self.trace_degree);
        let is_rt = self.flux.family == Family::Rt;
        // RT_d contains vector P_d, so grad P_{d+1} lies in the flux space for both families
        let grad_in_flux = sd <= fd + 1;
        // div RT_d = P_d and div P_{d+1} = P_d
        let div_onto_scalar = if is_rt { sd == fd } else { fd >= 1 && sd == fd - 1 };
        match (self.method, self.regime) {
            (Method::Hdg, Regime::RhoH) => {
                if !div_onto_scalar {
                    return fail(format!("HDG rho-h needs scalar degree {} for this flux space, got {sd}", if is_rt { fd } else { fd.saturating_sub(1) }));
                }
                let max_r = if is_rt { sd } else { sd + 1 };
                if r > max_r {
                    return fail(format!("HDG rho-h allows trace degree at most {max_r}, got {r}"));
                }
            }
            (Method::Hdg, Regime::Inv) | (Method::Wg, Regime::RhoH) => {
                if !grad_in_flux {
                    return fail(format!("broken gradients of P_{sd} do not lie in the flux space of degree {fd}"));
                }
            }
            (Method::Wg, Regime::Inv) => {
                if !div_onto_scalar {
                    return fail(format!("WG inv needs div Q_h = V_h; scalar degree {sd} does not match flux degree {fd}"));
                }
                if r < sd {
                    return fail(format!("WG inv needs RT normal traces of degree {sd} in the trace space, got {r}"));
                }
            }
        }
        Ok(())
    }

    /// Stabilization parameter on a cell of diameter `h`.
    pub fn parameter(&self, h: f64) -> f64 {
        match self.regime {
            Regime::RhoH => self.rho * h,
            Regime::Inv => 1.0 / (self.rho * h),
        }
    }

    /// Norm pair of the stability and error estimates for this regime.
    pub fn norm_kind(&self) -> NormKind {
        match (self.method, self.regime) {
            (Method::Hdg, Regime::RhoH) => NormKind::HdgDiv,
            (Method::Hdg, Regime::Inv) => NormKind::HdgGrad,
            (Method::Wg, Regime::RhoH) => NormKind::WgGrad,
            (Method::Wg, Regime::Inv) => NormKind::WgDiv,
        }
    }

    pub fn scalar_family(&self) -> BasisFamily {
        BasisFamily { family: Family::ScalarP, degree: self.scalar_degree }
    }

    pub fn trace_family(&self) -> BasisFamily {
        BasisFamily { family: Family::EdgeP, degree: self.trace_degree }
    }

    /// Quadrature degree that integrates every assembled product exactly.
    pub fn quad_degree(&self) -> usize {
        2 * self.flux.poly_degree().max(self.scalar_degree).max(self.trace_degree)
    }
}

impl fmt::Display for SpaceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flux = match self.flux.family {
            Family::Rt => format!("RT_{}", self.flux.degree),
            _ => format!("P_{}^2", self.flux.degree),
        };
        write!(
            f,
            "{} {} k={} rho={:e}: V=P_{} Q={} trace=P_{}",
            self.method, self.regime, self.k, self.rho, self.scalar_degree, flux, self.trace_degree
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Flux,
    Scalar,
    Trace,
}

/// Local-to-global map of a cell-based field.
#[derive(Clone, Debug)]
pub struct CellLayout {
    pub family: BasisFamily,
    /// `num_cells * family.dim()` entries.
    pub map: Vec<Option<(usize, f64)>>,
}

impl CellLayout {
    pub fn local(&self, cell: usize) -> &[Option<(usize, f64)>] {
        let d = self.family.dim();
        &self.map[cell * d..(cell + 1) * d]
    }

    /// Local coefficients of `cell` from a global vector.
    pub fn gather(&self, cell: usize, x: &[f64]) -> Vec<f64> {
        self.local(cell).iter().map(|m| m.map_or(0.0, |(g, s)| s * x[g])).collect()
    }
}

/// Edge trace unknowns: `degree + 1` consecutive indices per carrying edge.
#[derive(Clone, Debug)]
pub struct TraceLayout {
    pub family: BasisFamily,
    pub offsets: Vec<Option<usize>>,
}

impl TraceLayout {
    pub fn edge(&self, e: usize) -> Option<Range<usize>> {
        self.offsets[e].map(|o| o..o + self.family.dim())
    }

    pub fn gather(&self, e: usize, x: &[f64]) -> Vec<f64> {
        match self.edge(e) {
            Some(r) => x[r].to_vec(),
            None => vec![0.0; self.family.dim()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub flux: CellLayout,
    pub scalar: CellLayout,
    pub trace: Option<TraceLayout>,
    pub ranges: Vec<(Field, Range<usize>)>,
    pub total: usize,
}

fn broken_layout(mesh: &Mesh, family: BasisFamily, offset: usize) -> CellLayout {
    let d = family.dim();
    let map = (0..mesh.num_cells() * d).map(|i| Some((offset + i, 1.0))).collect();
    CellLayout { family, map }
}

impl DofMap {
    /// Broken flux and scalar spaces plus an edge trace space.
    pub fn build(mesh: &Mesh, case: &SpaceCase) -> Result<DofMap> {
        case.validate()?;
        let flux = broken_layout(mesh, case.flux, 0);
        let nf = flux.map.len();
        let scalar = broken_layout(mesh, case.scalar_family(), nf);
        let ns = scalar.map.len();
        let tf = case.trace_family();
        let mut next = nf + ns;
        let mut offsets = Vec::with_capacity(mesh.num_edges());
        for e in &mesh.edges {
            // HDG traces vanish on the boundary, WG normal fluxes live everywhere
            if case.method == Method::Hdg && e.is_boundary() {
                offsets.push(None);
            } else {
                offsets.push(Some(next));
                next += tf.dim();
            }
        }
        Ok(DofMap {
            flux,
            scalar,
            trace: Some(TraceLayout { family: tf, offsets }),
            ranges: vec![(Field::Flux, 0..nf), (Field::Scalar, nf..nf + ns), (Field::Trace, nf + ns..next)],
            total: next,
        })
    }

    /// Broken vector `P_k` fluxes and continuous `P_{k+1}` scalars vanishing
    /// on the boundary.
    pub fn primal_conforming(mesh: &Mesh, k: usize) -> Result<DofMap> {
        let flux_fam = BasisFamily::new(Family::VectorP, k)?;
        let sfam = BasisFamily::new(Family::ScalarP, k + 1)?;
        let d = k + 1;
        let flux = broken_layout(mesh, flux_fam, 0);
        let nf = flux.map.len();
        let mut on_boundary = vec![false; mesh.vertices.len()];
        for e in mesh.edges.iter().filter(|e| e.is_boundary()) {
            on_boundary[e.vertices[0]] = true;
            on_boundary[e.vertices[1]] = true;
        }
        let mut next = nf;
        let vertex_dof: Vec<Option<usize>> = on_boundary
            .iter()
            .map(|&b| {
                (!b).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let per_edge = d - 1;
        let edge_dof: Vec<Option<usize>> = mesh
            .edges
            .iter()
            .map(|e| {
                (!e.is_boundary() && per_edge > 0).then(|| {
                    next += per_edge;
                    next - per_edge
                })
            })
            .collect();
        let per_cell = sfam.dim() - 3 - 3 * per_edge;
        let mut map = Vec::with_capacity(mesh.num_cells() * sfam.dim());
        for (c, cell) in mesh.cells.iter().enumerate() {
            for v in cell.vertices {
                map.push(vertex_dof[v].map(|g| (g, 1.0)));
            }
            for j in 0..3 {
                let aligned = mesh.edge_aligned(c, j);
                for m in 0..per_edge {
                    let along = if aligned { m } else { per_edge - 1 - m };
                    map.push(edge_dof[cell.edges[j]].map(|g| (g + along, 1.0)));
                }
            }
            for _ in 0..per_cell {
                map.push(Some((next, 1.0)));
                next += 1;
            }
        }
        Ok(DofMap {
            flux,
            scalar: CellLayout { family: sfam, map },
            trace: None,
            ranges: vec![(Field::Flux, 0..nf), (Field::Scalar, nf..next)],
            total: next,
        })
    }

    /// `H(div)`-conforming `RT_k` fluxes and broken `P_k` scalars.
    pub fn mixed_conforming(mesh: &Mesh, k: usize) -> Result<DofMap> {
        let ffam = BasisFamily::new(Family::Rt, k)?;
        let sfam = BasisFamily::new(Family::ScalarP, k)?;
        let per_edge = k + 1;
        let per_cell = ffam.dim() - 3 * per_edge;
        let ne = mesh.num_edges();
        let mut next = ne * per_edge;
        let mut map = Vec::with_capacity(mesh.num_cells() * ffam.dim());
        for c in 0..mesh.num_cells() {
            for j in 0..3 {
                let e = mesh.cells[c].edges[j];
                let sigma = mesh.normal_sign(c, j);
                let aligned = mesh.edge_aligned(c, j);
                for m in 0..per_edge {
                    // Legendre parity under s -> 1 - s
                    let parity = if aligned || m % 2 == 0 { 1.0 } else { -1.0 };
                    map.push(Some((e * per_edge + m, sigma * parity)));
                }
            }
            for _ in 0..per_cell {
                map.push(Some((next, 1.0)));
                next += 1;
            }
        }
        let nf = next;
        let scalar = broken_layout(mesh, sfam, nf);
        let total = nf + scalar.map.len();
        Ok(DofMap {
            flux: CellLayout { family: ffam, map },
            scalar,
            trace: None,
            ranges: vec![(Field::Flux, 0..nf), (Field::Scalar, nf..total)],
            total,
        })
    }

    pub fn range(&self, field: Field) -> Option<Range<usize>> {
        self.ranges.iter().find(|(f, _)| *f == field).map(|(_, r)| r.clone())
    }

    /// Trace coefficients of edge `e` (zeros where the trace is absent).
    pub fn trace_coeffs(&self, e: usize, x: &[f64]) -> Vec<f64> {
        self.trace.as_ref().map_or_else(Vec::new, |t| t.gather(e, x))
    }
}

/// Coefficients of the `L^2(e)` projection of `f(t)`, `t in [0,1]` the edge
/// parameter, onto `P_r(e)` in the orthonormal edge basis.
pub fn project_to_edge_space(f: impl Fn(f64) -> f64, r: usize) -> Result<Vec<f64>> {
    basis::project_to_edge_basis(f, r, crate::quadrature::MAX_DEGREE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(m: Method, r: Regime, k: usize) -> SpaceCase {
        SpaceCase::table1(m, r, k, 1.0).unwrap()
    }

    #[test]
    fn counts_on_two_triangles() {
        let mesh = Mesh::structured(1).unwrap();
        assert_eq!(DofMap::build(&mesh, &case(Method::Hdg, Regime::RhoH, 0)).unwrap().total, 9);
        assert_eq!(DofMap::build(&mesh, &case(Method::Wg, Regime::Inv, 0)).unwrap().total, 13);
        assert_eq!(DofMap::build(&mesh, &case(Method::Hdg, Regime::Inv, 0)).unwrap().total, 12);
        assert_eq!(DofMap::build(&mesh, &case(Method::Wg, Regime::RhoH, 0)).unwrap().total, 4 + 6 + 5);
    }

    #[test]
    fn ranges_partition_the_unknowns() {
        let mesh = Mesh::structured(3).unwrap();
        for m in [Method::Hdg, Method::Wg] {
            for r in [Regime::RhoH, Regime::Inv] {
                for k in 0..=1 {
                    let d = DofMap::build(&mesh, &case(m, r, k)).unwrap();
                    let mut next = 0;
                    for (_, range) in &d.ranges {
                        assert_eq!(range.start, next);
                        next = range.end;
                    }
                    assert_eq!(next, d.total);
                    let mut seen = vec![false; d.total];
                    for entry in d.flux.map.iter().chain(&d.scalar.map).flatten() {
                        assert!(!std::mem::replace(&mut seen[entry.0], true));
                    }
                    let t = d.trace.as_ref().unwrap();
                    for e in 0..mesh.num_edges() {
                        match t.edge(e) {
                            Some(rg) => rg.for_each(|i| assert!(!std::mem::replace(&mut seen[i], true))),
                            None => assert!(m == Method::Hdg && mesh.edges[e].is_boundary()),
                        }
                    }
                    assert!(seen.iter().all(|&s| s));
                }
            }
        }
    }

    #[test]
    fn default_trace_degree_and_overrides() {
        let c = case(Method::Hdg, Regime::Inv, 0);
        assert_eq!(c.trace_degree, 1);
        assert!(c.with_trace_degree(0).is_ok());
        assert!(case(Method::Hdg, Regime::RhoH, 0).with_trace_degree(1).is_err());
        assert!(case(Method::Wg, Regime::Inv, 1).with_trace_degree(0).is_err());
        let vp1 = BasisFamily::new(Family::VectorP, 1).unwrap();
        let hdg = case(Method::Hdg, Regime::RhoH, 0).with_flux(vp1).unwrap();
        assert!(hdg.with_trace_degree(1).is_ok());
        let vp0 = BasisFamily::new(Family::VectorP, 0).unwrap();
        assert!(case(Method::Wg, Regime::RhoH, 1).with_flux(vp0).is_err());
    }

    #[test]
    fn invalid_cases_rejected() {
        assert!(matches!(
            SpaceCase::table1(Method::Hdg, Regime::RhoH, 7, 1.0),
            Err(Error::UnsupportedDegree { degree: 7, .. })
        ));
        assert!(SpaceCase::table1(Method::Wg, Regime::RhoH, 0, 0.0).is_err());
        assert!(SpaceCase::table1(Method::Wg, Regime::RhoH, 0, 2.0).is_err());
        assert!(SpaceCase::table1(Method::Wg, Regime::RhoH, 0, f64::NAN).is_err());
        assert!("fem".parse::<Method>().is_err());
        assert_eq!("rho-h".parse::<Regime>().unwrap(), Regime::RhoH);
    }

    #[test]
    fn conforming_counts() {
        let mesh = Mesh::structured(2).unwrap();
        // one interior vertex for P1; P2 adds the 8 interior edges
        assert_eq!(DofMap::primal_conforming(&mesh, 0).unwrap().total, 8 * 2 + 1);
        assert_eq!(DofMap::primal_conforming(&mesh, 1).unwrap().total, 8 * 6 + 1 + 8);
        assert_eq!(DofMap::mixed_conforming(&mesh, 0).unwrap().total, 16 + 8);
        assert_eq!(DofMap::mixed_conforming(&mesh, 1).unwrap().total, 32 + 16 + 24);
    }

    #[test]
    fn parameter_scalings() {
        let c = SpaceCase::table1(Method::Hdg, Regime::RhoH, 0, 0.5).unwrap();
        assert_eq!(c.parameter(0.25), 0.125);
        let c = SpaceCase::table1(Method::Wg, Regime::Inv, 0, 0.5).unwrap();
        assert_eq!(c.parameter(0.25), 8.0);
    }

    #[test]
    fn projection_of_identity_onto_constants() {
        let c = project_to_edge_space(|t| t, 0).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15);
    }
}
