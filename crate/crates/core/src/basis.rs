//! Polynomial bases on the reference triangle `(0,0),(1,0),(0,1)` and on the
//! unit edge parameter interval, plus their physical counterparts.
//!
//! * scalar `P_r`: Lagrange basis on the equispaced lattice. Node order is
//!   vertices, then interior nodes of local edges 0, 1, 2 (each walked along
//!   the local edge direction), then cell-interior nodes.
//! * vector `P_r`: x-components of every scalar function, then y-components.
//!   Mapped to cells by composition.
//! * `RT_k`: dual to the edge moments `int phi.n q_m ds` (with `q_m` the
//!   orthonormal edge basis in the local edge parameter) and, for `k >= 1`,
//!   the interior moments `int phi_d x^a y^b`. Mapped by the contravariant
//!   Piola transform, which preserves the edge moments.
//! * edge `P_r`: shifted Legendre polynomials, orthonormal on `[0, 1]`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::{ref_edge_normal, ref_edge_point, CellGeometry, Point, REF_VERTICES};
use crate::quadrature;

pub const MAX_SCALAR_DEGREE: usize = 3;
pub const MAX_RT_DEGREE: usize = 1;
pub const MAX_EDGE_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    ScalarP,
    VectorP,
    Rt,
    EdgeP,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisFamily {
    pub family: Family,
    pub degree: usize,
}

impl BasisFamily {
    pub fn new(family: Family, degree: usize) -> Result<Self> {
        let (what, max) = match family {
            Family::ScalarP => ("scalar P", MAX_SCALAR_DEGREE),
            Family::VectorP => ("vector P", MAX_SCALAR_DEGREE),
            Family::Rt => ("Raviart-Thomas", MAX_RT_DEGREE),
            Family::EdgeP => ("edge P", MAX_EDGE_DEGREE),
        };
        if degree > max {
            return Err(Error::UnsupportedDegree { what, degree, max });
        }
        Ok(BasisFamily { family, degree })
    }

    pub fn dim(&self) -> usize {
        let k = self.degree;
        match self.family {
            Family::ScalarP => scalar_dim(k),
            Family::VectorP => 2 * scalar_dim(k),
            Family::Rt => (k + 1) * (k + 3),
            Family::EdgeP => k + 1,
        }
    }

    /// Highest total polynomial degree of any basis function.
    pub fn poly_degree(&self) -> usize {
        match self.family {
            Family::Rt => self.degree + 1,
            _ => self.degree,
        }
    }
}

pub fn scalar_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponents `(a, b)` of the monomials `x^a y^b` with `a + b <= k`.
fn monomials(k: usize) -> Vec<(i32, i32)> {
    let mut m = Vec::with_capacity(scalar_dim(k));
    for d in 0..=k as i32 {
        for b in 0..=d {
            m.push((d - b, b));
        }
    }
    m
}

fn powi(x: f64, a: i32) -> f64 {
    if a <= 0 {
        1.0
    } else {
        x.powi(a)
    }
}

/// Value and gradient of `x^a y^b`.
fn monomial(p: Point, (a, b): (i32, i32)) -> (f64, Point) {
    let (x, y) = (p[0], p[1]);
    let v = powi(x, a) * powi(y, b);
    let dx = if a > 0 { a as f64 * powi(x, a - 1) * powi(y, b) } else { 0.0 };
    let dy = if b > 0 { b as f64 * powi(x, a) * powi(y, b - 1) } else { 0.0 };
    (v, [dx, dy])
}

/// Lagrange nodes of `P_k` in the documented order.
pub fn lagrange_nodes(k: usize) -> Vec<Point> {
    if k == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let mut nodes: Vec<Point> = REF_VERTICES.to_vec();
    for j in 0..3 {
        for m in 1..k {
            nodes.push(ref_edge_point(j, m as f64 / k as f64));
        }
    }
    for b in 1..k {
        for a in 1..k - b {
            nodes.push([a as f64 / k as f64, b as f64 / k as f64]);
        }
    }
    nodes
}

/// Monomial coefficients of a basis: column `i` holds basis function `i`.
struct Expansion {
    monomials: Vec<(i32, i32)>,
    coeffs: DenseMatrix,
}

fn lagrange_expansion(k: usize) -> &'static Expansion {
    static CACHE: OnceLock<Vec<Expansion>> = OnceLock::new();
    &CACHE.get_or_init(|| {
        (0..=MAX_SCALAR_DEGREE)
            .map(|k| {
                let mons = monomials(k);
                let nodes = lagrange_nodes(k);
                let mut v = DenseMatrix::zeros(nodes.len(), mons.len());
                for (i, &p) in nodes.iter().enumerate() {
                    for (j, &m) in mons.iter().enumerate() {
                        v[(i, j)] = monomial(p, m).0;
                    }
                }
                let coeffs = v.inverse().expect("Lagrange lattice is unisolvent");
                Expansion { monomials: mons, coeffs }
            })
            .collect::<Vec<_>>()
    })[k]
}

/// Values and reference gradients of the Lagrange basis of `P_k`.
pub fn eval_scalar_basis(k: usize, p: Point) -> Result<(Vec<f64>, Vec<Point>)> {
    BasisFamily::new(Family::ScalarP, k)?;
    let e = lagrange_expansion(k);
    let n = e.monomials.len();
    let mut vals = vec![0.0; n];
    let mut grads = vec![[0.0; 2]; n];
    for (j, &m) in e.monomials.iter().enumerate() {
        let (mv, mg) = monomial(p, m);
        for i in 0..n {
            let c = e.coeffs[(j, i)];
            vals[i] += c * mv;
            grads[i][0] += c * mg[0];
            grads[i][1] += c * mg[1];
        }
    }
    Ok((vals, grads))
}

/// Orthonormal basis of `P_k` on `[0, 1]`: `sqrt(2m+1) P_m(2s-1)`.
pub fn eval_edge_basis(k: usize, s: f64) -> Result<Vec<f64>> {
    BasisFamily::new(Family::EdgeP, k)?;
    let z = 2.0 * s - 1.0;
    let mut p = Vec::with_capacity(k + 1);
    p.push(1.0);
    if k >= 1 {
        p.push(z);
    }
    for m in 2..=k {
        let mf = m as f64;
        p.push(((2.0 * mf - 1.0) * z * p[m - 1] - (mf - 1.0) * p[m - 2]) / mf);
    }
    Ok(p.iter().enumerate().map(|(m, v)| ((2 * m + 1) as f64).sqrt() * v).collect())
}

/// Spanning set of `RT_k`: vector monomials of degree `<= k`, then `x m` for
/// homogeneous monomials `m` of degree `k`. Returns values and divergences.
fn rt_spanning(k: usize, p: Point) -> (Vec<Point>, Vec<f64>) {
    let mons = monomials(k);
    let mut vals = Vec::with_capacity((k + 1) * (k + 3));
    let mut divs = Vec::with_capacity((k + 1) * (k + 3));
    for &m in &mons {
        let (v, g) = monomial(p, m);
        vals.push([v, 0.0]);
        divs.push(g[0]);
        vals.push([0.0, v]);
        divs.push(g[1]);
    }
    for &m in mons.iter().filter(|m| (m.0 + m.1) as usize == k) {
        let (v, g) = monomial(p, m);
        vals.push([p[0] * v, p[1] * v]);
        divs.push(2.0 * v + p[0] * g[0] + p[1] * g[1]);
    }
    (vals, divs)
}

fn rt_expansion(k: usize) -> &'static DenseMatrix {
    static CACHE: OnceLock<Vec<DenseMatrix>> = OnceLock::new();
    &CACHE.get_or_init(|| {
        (0..=MAX_RT_DEGREE)
            .map(|k| {
                let dim = (k + 1) * (k + 3);
                let mut dofs = DenseMatrix::zeros(dim, dim);
                let er = quadrature::edge(2 * k + 2).unwrap();
                let mut row = 0;
                for j in 0..3 {
                    let (n, len) = ref_edge_normal(j);
                    for m in 0..=k {
                        for (s, w) in er.points.iter().zip(&er.weights) {
                            let q = eval_edge_basis(k, *s).unwrap()[m];
                            let (vals, _) = rt_spanning(k, ref_edge_point(j, *s));
                            for (c, v) in vals.iter().enumerate() {
                                dofs[(row, c)] += w * len * q * (v[0] * n[0] + v[1] * n[1]);
                            }
                        }
                        row += 1;
                    }
                }
                if k >= 1 {
                    let tr = quadrature::triangle(2 * k + 1).unwrap();
                    for m in monomials(k - 1) {
                        for d in 0..2 {
                            for (p, w) in tr.points.iter().zip(&tr.weights) {
                                let (mv, _) = monomial(*p, m);
                                let (vals, _) = rt_spanning(k, *p);
                                for (c, v) in vals.iter().enumerate() {
                                    dofs[(row, c)] += w * mv * v[d];
                                }
                            }
                            row += 1;
                        }
                    }
                }
                debug_assert_eq!(row, dim);
                dofs.inverse().expect("RT degrees of freedom are unisolvent")
            })
            .collect::<Vec<_>>()
    })[k]
}

/// Values and divergences of the reference `RT_k` basis, `k <= 1`.
///
/// The first `3(k+1)` functions are dual to the edge moments, ordered by
/// local edge and then by moment degree.
pub fn eval_rt_basis(k: usize, p: Point) -> Result<(Vec<Point>, Vec<f64>)> {
    BasisFamily::new(Family::Rt, k)?;
    let c = rt_expansion(k);
    let (sv, sd) = rt_spanning(k, p);
    let n = sv.len();
    let mut vals = vec![[0.0; 2]; n];
    let mut divs = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            let cij = c[(j, i)];
            if cij != 0.0 {
                vals[i][0] += cij * sv[j][0];
                vals[i][1] += cij * sv[j][1];
                divs[i] += cij * sd[j];
            }
        }
    }
    Ok((vals, divs))
}

/// Scalar basis on a physical cell: values and physical gradients.
pub fn scalar_physical(k: usize, geo: &CellGeometry, xi: Point) -> Result<(Vec<f64>, Vec<Point>)> {
    let (v, g) = eval_scalar_basis(k, xi)?;
    Ok((v, g.into_iter().map(|g| geo.grad(g)).collect()))
}

/// Flux basis on a physical cell: values and divergences.
pub fn flux_physical(fam: BasisFamily, geo: &CellGeometry, xi: Point) -> Result<(Vec<Point>, Vec<f64>)> {
    match fam.family {
        Family::Rt => {
            let (v, d) = eval_rt_basis(fam.degree, xi)?;
            Ok((v.into_iter().map(|v| geo.piola(v)).collect(), d.into_iter().map(|d| d / geo.det).collect()))
        }
        Family::VectorP => {
            let (v, g) = scalar_physical(fam.degree, geo, xi)?;
            let n = v.len();
            let mut vals = Vec::with_capacity(2 * n);
            let mut divs = Vec::with_capacity(2 * n);
            for d in 0..2 {
                for i in 0..n {
                    let mut val = [0.0; 2];
                    val[d] = v[i];
                    vals.push(val);
                    divs.push(g[i][d]);
                }
            }
            Ok((vals, divs))
        }
        _ => Err(Error::InvalidArgument(format!("{:?} is not a flux family", fam.family))),
    }
}

/// Coefficients of the `L^2(0,1)` projection of `f` onto `P_r`, in the
/// orthonormal edge basis.
pub fn project_to_edge_basis(f: impl Fn(f64) -> f64, r: usize, quad_degree: usize) -> Result<Vec<f64>> {
    let rule = quadrature::edge(quad_degree)?;
    let mut c = vec![0.0; r + 1];
    for (s, w) in rule.points.iter().zip(&rule.weights) {
        let fv = f(*s);
        for (cm, q) in c.iter_mut().zip(eval_edge_basis(r, *s)?) {
            *cm += w * fv * q;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior_points() -> Vec<Point> {
        vec![[0.2, 0.3], [0.6, 0.1], [0.1, 0.7], [1.0 / 3.0, 1.0 / 3.0], [0.45, 0.45]]
    }

    #[test]
    fn dims() {
        for k in 0..=3 {
            assert_eq!(eval_scalar_basis(k, [0.1, 0.2]).unwrap().0.len(), (k + 1) * (k + 2) / 2);
            assert_eq!(lagrange_nodes(k).len(), scalar_dim(k));
        }
        assert_eq!(eval_rt_basis(0, [0.1, 0.2]).unwrap().0.len(), 3);
        assert_eq!(eval_rt_basis(1, [0.1, 0.2]).unwrap().0.len(), 8);
        assert_eq!(BasisFamily::new(Family::Rt, 1).unwrap().dim(), 8);
        assert_eq!(BasisFamily::new(Family::VectorP, 1).unwrap().dim(), 6);
        assert_eq!(BasisFamily::new(Family::EdgeP, 3).unwrap().dim(), 4);
        assert!(matches!(eval_rt_basis(2, [0.1, 0.1]), Err(Error::UnsupportedDegree { .. })));
        assert!(eval_edge_basis(5, 0.5).is_err());
        assert!(eval_scalar_basis(4, [0.1, 0.1]).is_err());
    }

    #[test]
    fn p1_is_barycentric() {
        for (j, v) in REF_VERTICES.iter().enumerate() {
            let (vals, _) = eval_scalar_basis(1, *v).unwrap();
            for (i, val) in vals.iter().enumerate() {
                assert!((val - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let r = quadrature::triangle(6).unwrap();
        for p in &r.points {
            let (vals, _) = eval_scalar_basis(1, *p).unwrap();
            assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn p2_vertex_function_vanishes_at_opposite_midpoint() {
        // lambda_0 (2 lambda_0 - 1) at the midpoint of edge 0, where lambda_0 = 0
        let (vals, _) = eval_scalar_basis(2, [0.5, 0.5]).unwrap();
        assert!(vals[0].abs() < 1e-14);
        // and at (1/4, 1/4) it equals (1/2)(2*(1/2) - 1) = 0; at the centroid -1/9
        let (vals, _) = eval_scalar_basis(2, [1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((vals[0] + 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn lagrange_is_nodal() {
        for k in 0..=3 {
            for (j, node) in lagrange_nodes(k).iter().enumerate() {
                let (vals, _) = eval_scalar_basis(k, *node).unwrap();
                for (i, v) in vals.iter().enumerate() {
                    assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12, "k={k}");
                }
            }
        }
    }

    #[test]
    fn scalar_gradients_match_finite_differences() {
        let h = 1e-6;
        for k in 0..=3 {
            for p in interior_points() {
                let (_, g) = eval_scalar_basis(k, p).unwrap();
                let (xp, _) = eval_scalar_basis(k, [p[0] + h, p[1]]).unwrap();
                let (xm, _) = eval_scalar_basis(k, [p[0] - h, p[1]]).unwrap();
                let (yp, _) = eval_scalar_basis(k, [p[0], p[1] + h]).unwrap();
                let (ym, _) = eval_scalar_basis(k, [p[0], p[1] - h]).unwrap();
                for i in 0..g.len() {
                    assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-6);
                    assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn rt_divergence_matches_finite_differences() {
        let h = 1e-6;
        for k in 0..=1 {
            for p in interior_points() {
                let (_, d) = eval_rt_basis(k, p).unwrap();
                let (xp, _) = eval_rt_basis(k, [p[0] + h, p[1]]).unwrap();
                let (xm, _) = eval_rt_basis(k, [p[0] - h, p[1]]).unwrap();
                let (yp, _) = eval_rt_basis(k, [p[0], p[1] + h]).unwrap();
                let (ym, _) = eval_rt_basis(k, [p[0], p[1] - h]).unwrap();
                for i in 0..d.len() {
                    let fd = (xp[i][0] - xm[i][0] + yp[i][1] - ym[i][1]) / (2.0 * h);
                    assert!((d[i] - fd).abs() < 1e-6);
                }
            }
        }
    }

    fn edge_moment(k: usize, geo: &CellGeometry, local: usize, m: usize, i: usize) -> f64 {
        // physical edge from the mapped reference endpoints
        let a = geo.map(ref_edge_point(local, 0.0));
        let b = geo.map(ref_edge_point(local, 1.0));
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        let r = quadrature::edge(6).unwrap();
        let mut s = 0.0;
        for (t, w) in r.points.iter().zip(&r.weights) {
            let (v, _) = flux_physical(BasisFamily { family: Family::Rt, degree: k }, geo, ref_edge_point(local, *t))
                .unwrap();
            s += w * len * (v[i][0] * n[0] + v[i][1] * n[1]) * eval_edge_basis(k, *t).unwrap()[m];
        }
        s
    }

    #[test]
    fn rt_edge_moments_are_dual_on_reference_and_physical_cells() {
        let cells = [
            CellGeometry::new(REF_VERTICES),
            CellGeometry::new([[0.25, 0.0], [0.5, 0.25], [0.25, 0.25]]),
            CellGeometry::new([[0.1, 0.2], [0.9, 0.35], [0.3, 0.8]]),
        ];
        for k in 0..=1 {
            let dim = (k + 1) * (k + 3);
            for geo in &cells {
                for j in 0..3 {
                    for m in 0..=k {
                        let row = j * (k + 1) + m;
                        for i in 0..dim {
                            let expected = if i == row { 1.0 } else { 0.0 };
                            assert!((edge_moment(k, geo, j, m, i) - expected).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rt0_divergence_is_inverse_area() {
        let geo = CellGeometry::new([[0.1, 0.2], [0.9, 0.35], [0.3, 0.8]]);
        let fam = BasisFamily::new(Family::Rt, 0).unwrap();
        for p in interior_points() {
            let (_, d) = flux_physical(fam, &geo, p).unwrap();
            for di in d {
                assert!((di - 1.0 / geo.area()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rt_contains_vector_polynomials() {
        // (1,0), (0,1) and for k=1 also (x,0), (y,0), ... lie in the span:
        // reconstruct them from their degrees of freedom and compare pointwise
        for k in 0..=1 {
            let er = quadrature::edge(4).unwrap();
            let tr = quadrature::triangle(4).unwrap();
            let targets: Vec<Box<dyn Fn(Point) -> Point>> = if k == 0 {
                vec![Box::new(|_| [1.0, 0.0]), Box::new(|_| [0.0, 1.0])]
            } else {
                vec![Box::new(|p| [p[1], 0.0]), Box::new(|p| [p[0] - p[1], 2.0 * p[0]]), Box::new(|_| [0.0, 1.0])]
            };
            for f in targets {
                let mut dofs = Vec::new();
                for j in 0..3 {
                    let (n, len) = ref_edge_normal(j);
                    for m in 0..=k {
                        let mut s = 0.0;
                        for (t, w) in er.points.iter().zip(&er.weights) {
                            let v = f(ref_edge_point(j, *t));
                            s += w * len * (v[0] * n[0] + v[1] * n[1]) * eval_edge_basis(k, *t).unwrap()[m];
                        }
                        dofs.push(s);
                    }
                }
                if k == 1 {
                    for d in 0..2 {
                        dofs.push(tr.points.iter().zip(&tr.weights).map(|(p, w)| w * f(*p)[d]).sum());
                    }
                }
                for p in interior_points() {
                    let (vals, _) = eval_rt_basis(k, p).unwrap();
                    let mut r = [0.0; 2];
                    for (c, v) in dofs.iter().zip(&vals) {
                        r[0] += c * v[0];
                        r[1] += c * v[1];
                    }
                    let e = f(p);
                    assert!((r[0] - e[0]).abs() < 1e-12 && (r[1] - e[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn edge_basis_is_orthonormal() {
        let r = quadrature::edge(10).unwrap();
        for k in 0..=MAX_EDGE_DEGREE {
            for a in 0..=k {
                for b in 0..=k {
                    let g: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(s, w)| {
                            let q = eval_edge_basis(k, *s).unwrap();
                            w * q[a] * q[b]
                        })
                        .sum();
                    assert!((g - if a == b { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
            }
        }
        assert_eq!(eval_edge_basis(0, 0.3).unwrap(), vec![1.0]);
    }

    #[test]
    fn edge_projection_examples() {
        // f(s) = s onto constants is 1/2
        let c = project_to_edge_basis(|s| s, 0, 4).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15);
        // constants are reproduced for every degree
        for r in 0..=4 {
            let c = project_to_edge_basis(|_| 3.0, r, 8).unwrap();
            assert!((c[0] - 3.0).abs() < 1e-14);
            assert!(c[1..].iter().all(|x| x.abs() < 1e-14));
        }
        // degree-r polynomials are reproduced
        let f = |s: f64| 1.0 - 2.0 * s + 5.0 * s * s * s;
        let c = project_to_edge_basis(f, 3, 8).unwrap();
        for s in [0.0, 0.3, 0.77, 1.0] {
            let q = eval_edge_basis(3, s).unwrap();
            let v: f64 = c.iter().zip(&q).map(|(a, b)| a * b).sum();
            assert!((v - f(s)).abs() < 1e-13);
        }
    }

    #[test]
    fn vector_p_physical_divergence() {
        let geo = CellGeometry::new([[0.1, 0.2], [0.9, 0.35], [0.3, 0.8]]);
        let fam = BasisFamily::new(Family::VectorP, 1).unwrap();
        let (v, d) = flux_physical(fam, &geo, [0.2, 0.3]).unwrap();
        assert_eq!(v.len(), 6);
        let (_, g) = scalar_physical(1, &geo, [0.2, 0.3]).unwrap();
        for i in 0..3 {
            assert_eq!(v[i][1], 0.0);
            assert_eq!(v[3 + i][0], 0.0);
            assert!((d[i] - g[i][0]).abs() < 1e-15 && (d[3 + i] - g[i][1]).abs() < 1e-15);
        }
    }
}
