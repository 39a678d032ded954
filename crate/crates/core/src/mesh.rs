//! Conforming triangulations of the unit square.
//!
//! Cells are stored counterclockwise. Local edge `j` of a cell is the edge
//! opposite local vertex `j`, running from vertex `(j+1)%3` to `(j+2)%3`.
//! Global edges store their endpoints with `vertices[0] < vertices[1]`; the
//! edge parameter `t in [0,1]` runs from `vertices[0]` to `vertices[1]`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// One incident cell of an edge, with the edge's local index in that cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSide {
    pub cell: usize,
    pub local: usize,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// Fixed unit normal `n_e`: outward for the first incident cell.
    pub normal: Point,
    pub length: f64,
    pub first: EdgeSide,
    pub second: Option<EdgeSide>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    pub fn sides(&self) -> impl Iterator<Item = EdgeSide> + '_ {
        std::iter::once(self.first).chain(self.second)
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub vertices: [usize; 3],
    /// Global edge index of local edge `j` (opposite local vertex `j`).
    pub edges: [usize; 3],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    /// `h_K = diam(K)` per cell.
    pub cell_diam: Vec<f64>,
}

/// Affine map from the reference triangle `(0,0),(1,0),(0,1)` onto a cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub inv_jac: [[f64; 2]; 2],
    pub diam: f64,
}

impl CellGeometry {
    pub fn new(v: [Point; 3]) -> Self {
        let jac = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jac = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let diam = (0..3)
            .map(|i| dist(v[i], v[(i + 1) % 3]))
            .fold(0.0, f64::max);
        CellGeometry { origin: v[0], jac, det, inv_jac, diam }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, xi: Point) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    /// Physical gradient from a reference gradient: `J^{-T} g`.
    pub fn grad(&self, g: Point) -> Point {
        [
            self.inv_jac[0][0] * g[0] + self.inv_jac[1][0] * g[1],
            self.inv_jac[0][1] * g[0] + self.inv_jac[1][1] * g[1],
        ]
    }

    /// Contravariant Piola transform `J v / det J`.
    pub fn piola(&self, v: Point) -> Point {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }
}

/// Reference-triangle vertices.
pub const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Point on local edge `j` of the reference triangle at local parameter `s`.
pub fn ref_edge_point(local: usize, s: f64) -> Point {
    let a = REF_VERTICES[(local + 1) % 3];
    let b = REF_VERTICES[(local + 2) % 3];
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Outward unit normal and length of local edge `j` of the reference triangle.
pub fn ref_edge_normal(local: usize) -> (Point, f64) {
    let a = REF_VERTICES[(local + 1) % 3];
    let b = REF_VERTICES[(local + 2) % 3];
    let len = dist(a, b);
    // counterclockwise boundary: outward normal is the tangent rotated clockwise
    ([(b[1] - a[1]) / len, -(b[0] - a[0]) / len], len)
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    /// `n x n` subsquares, each cut by its lower-left to upper-right diagonal.
    pub fn structured(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh subdivisions must be at least 1".into()));
        }
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        Ok(Mesh::from_cells(vertices, cells))
    }

    /// Red refinement: each triangle is split into four via edge midpoints.
    pub fn refine(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for e in &self.edges {
            let a = self.vertices[e.vertices[0]];
            let b = self.vertices[e.vertices[1]];
            vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for c in &self.cells {
            let [a, b, cc] = c.vertices;
            // midpoint opposite each vertex
            let ma = nv + c.edges[0];
            let mb = nv + c.edges[1];
            let mc = nv + c.edges[2];
            cells.push([a, mc, mb]);
            cells.push([mc, b, ma]);
            cells.push([mb, ma, cc]);
            cells.push([ma, mb, mc]);
        }
        Mesh::from_cells(vertices, cells)
    }

    /// Builds edge connectivity for counterclockwise cells.
    pub fn from_cells(vertices: Vec<Point>, cell_vertices: Vec<[usize; 3]>) -> Mesh {
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cells = Vec::with_capacity(cell_vertices.len());
        let mut cell_diam = Vec::with_capacity(cell_vertices.len());
        for (k, cv) in cell_vertices.iter().enumerate() {
            let mut local_edges = [0usize; 3];
            for (j, slot) in local_edges.iter_mut().enumerate() {
                let a = cv[(j + 1) % 3];
                let b = cv[(j + 2) % 3];
                let key = (a.min(b), a.max(b));
                let side = EdgeSide { cell: k, local: j };
                *slot = match lookup.get(&key) {
                    Some(&e) => {
                        edges[e].second = Some(side);
                        e
                    }
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let len = dist(pa, pb);
                        let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            normal,
                            length: len,
                            first: side,
                            second: None,
                        });
                        lookup.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
            }
            cell_diam.push(CellGeometry::new([vertices[cv[0]], vertices[cv[1]], vertices[cv[2]]]).diam);
            cells.push(Cell { vertices: *cv, edges: local_edges });
        }
        Mesh { vertices, cells, edges, cell_diam }
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        let v = self.cells[cell].vertices;
        CellGeometry::new([self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]])
    }

    pub fn edge_normal(&self, edge: usize) -> Result<Point> {
        self.edges.get(edge).map(|e| e.normal).ok_or(Error::IndexOutOfRange {
            what: "edges",
            index: edge,
            len: self.edges.len(),
        })
    }

    /// Outward normal of `cell` on its local edge `local`.
    pub fn outward_normal(&self, cell: usize, local: usize) -> Point {
        let e = &self.edges[self.cells[cell].edges[local]];
        let s = self.normal_sign(cell, local);
        [s * e.normal[0], s * e.normal[1]]
    }

    /// `n_K . n_e` on local edge `local` of `cell`: +1 or -1.
    pub fn normal_sign(&self, cell: usize, local: usize) -> f64 {
        let e = &self.edges[self.cells[cell].edges[local]];
        if e.first.cell == cell && e.first.local == local {
            1.0
        } else {
            -1.0
        }
    }

    /// Whether the local edge runs in the same direction as the global edge.
    pub fn edge_aligned(&self, cell: usize, local: usize) -> bool {
        let c = &self.cells[cell];
        c.vertices[(local + 1) % 3] == self.edges[c.edges[local]].vertices[0]
    }

    /// Local edge parameter `s` for the global edge parameter `t`.
    pub fn local_param(&self, cell: usize, local: usize, t: f64) -> f64 {
        if self.edge_aligned(cell, local) {
            t
        } else {
            1.0 - t
        }
    }

    pub fn edge_point(&self, edge: usize, t: f64) -> Point {
        let e = &self.edges[edge];
        let a = self.vertices[e.vertices[0]];
        let b = self.vertices[e.vertices[1]];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    pub fn max_diam(&self) -> f64 {
        self.cell_diam.iter().copied().fold(0.0, f64::max)
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Plain-text dump: `v x y`, `c i j k` and `e i j` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {}", v[0], v[1]);
        }
        for c in &self.cells {
            let _ = writeln!(out, "c {} {} {}", c.vertices[0], c.vertices[1], c.vertices[2]);
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {}", e.vertices[0], e.vertices[1]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inradius(m: &Mesh, k: usize) -> f64 {
        let g = m.geometry(k);
        let perim: f64 = m.cells[k].edges.iter().map(|&e| m.edges[e].length).sum();
        2.0 * g.area() / perim
    }

    #[test]
    fn small_meshes_have_expected_counts() {
        let m = Mesh::structured(1).unwrap();
        assert_eq!((m.vertices.len(), m.num_edges(), m.num_cells()), (4, 5, 2));
        assert_eq!(m.num_boundary_edges(), 4);
        let m = Mesh::structured(2).unwrap();
        assert_eq!((m.vertices.len(), m.num_cells(), m.num_edges()), (9, 8, 16));
        let m = Mesh::structured(4).unwrap();
        assert_eq!(m.num_cells(), 32);
        for &h in &m.cell_diam {
            assert!((h - 2f64.sqrt() / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(Mesh::structured(0).is_err());
    }

    #[test]
    fn bottom_edge_normal_points_down() {
        let m = Mesh::structured(1).unwrap();
        let bottom = m
            .edges
            .iter()
            .position(|e| {
                let a = m.vertices[e.vertices[0]];
                let b = m.vertices[e.vertices[1]];
                a[1] == 0.0 && b[1] == 0.0
            })
            .unwrap();
        assert_eq!(m.edge_normal(bottom).unwrap(), [0.0, -1.0]);
        assert!(m.edge_normal(99).is_err());
    }

    #[test]
    fn invariants_hold_on_structured_and_refined() {
        for m in [Mesh::structured(3).unwrap(), Mesh::structured(2).unwrap().refine()] {
            let v = m.vertices.len() as i64;
            let e = m.num_edges() as i64;
            let t = m.num_cells() as i64;
            assert_eq!(v - e + t, 1);
            let area: f64 = (0..m.num_cells()).map(|k| m.geometry(k).area()).sum();
            assert!((area - 1.0).abs() < 1e-13);
            for k in 0..m.num_cells() {
                assert!(m.geometry(k).det > 0.0);
                let ratio = m.cell_diam[k] / inradius(&m, k);
                assert!(ratio <= 2.0 * (1.0 + 2f64.sqrt()) + 1e-12);
            }
            for (i, edge) in m.edges.iter().enumerate() {
                let n = edge.normal;
                assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-14);
                let first = m.outward_normal(edge.first.cell, edge.first.local);
                assert!((first[0] * n[0] + first[1] * n[1] - 1.0).abs() < 1e-14);
                if let Some(s) = edge.second {
                    assert!(s.cell > edge.first.cell);
                    let other = m.outward_normal(s.cell, s.local);
                    assert!((other[0] + first[0]).abs() < 1e-14 && (other[1] + first[1]).abs() < 1e-14);
                    assert_eq!(m.cells[s.cell].edges[s.local], i);
                }
                let hmax = edge.sides().map(|s| m.cell_diam[s.cell]).fold(0.0, f64::max);
                assert!(edge.length <= hmax + 1e-15);
                // boundary normals point out of the square
                if edge.is_boundary() {
                    let mid = m.edge_point(i, 0.5);
                    let out = [mid[0] + 1e-3 * n[0], mid[1] + 1e-3 * n[1]];
                    assert!(out[0] < 0.0 || out[0] > 1.0 || out[1] < 0.0 || out[1] > 1.0);
                }
            }
        }
    }

    #[test]
    fn refine_matches_structured_up_to_renumbering() {
        let canon = |m: &Mesh| {
            let mut cells: Vec<Vec<(i64, i64)>> = m
                .cells
                .iter()
                .map(|c| {
                    let mut pts: Vec<(i64, i64)> = c
                        .vertices
                        .iter()
                        .map(|&v| ((m.vertices[v][0] * 64.0) as i64, (m.vertices[v][1] * 64.0) as i64))
                        .collect();
                    pts.sort();
                    pts
                })
                .collect();
            cells.sort();
            cells
        };
        let r = Mesh::structured(1).unwrap().refine();
        let s = Mesh::structured(2).unwrap();
        assert_eq!((r.num_cells(), r.num_edges()), (8, 16));
        assert_eq!(canon(&r), canon(&s));
        let r4 = Mesh::structured(2).unwrap().refine().refine();
        assert_eq!(canon(&r4), canon(&Mesh::structured(8).unwrap()));
        assert_eq!(r4.max_diam(), Mesh::structured(2).unwrap().max_diam() / 4.0);
    }

    #[test]
    fn reference_edge_normals_are_outward() {
        let (n0, l0) = ref_edge_normal(0);
        assert!((n0[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15 && (n0[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((l0 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ref_edge_normal(1).0, [-1.0, 0.0]);
        assert_eq!(ref_edge_normal(2).0, [0.0, -1.0]);
    }

    #[test]
    fn dump_has_one_line_per_entity() {
        let m = Mesh::structured(1).unwrap();
        let d = m.dump();
        assert_eq!(d.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(d.lines().filter(|l| l.starts_with("c ")).count(), 2);
        assert_eq!(d.lines().filter(|l| l.starts_with("e ")).count(), 5);
    }
}
