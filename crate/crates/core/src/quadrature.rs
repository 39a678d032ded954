//! Gauss rules on the unit interval and the reference triangle.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules, so every point lies strictly inside the triangle.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_DEGREE: usize = 10;

#[derive(Clone, Debug)]
pub struct TriangleRule {
    /// Reference coordinates `(x, y)`.
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl TriangleRule {
    pub fn barycentric(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [1.0 - p[0] - p[1], p[0], p[1]]).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct EdgeRule {
    /// Parameters in `[0, 1]`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree { what: "quadrature", degree, max: MAX_DEGREE });
    }
    Ok(())
}

fn build_edge(degree: usize) -> EdgeRule {
    let n = degree / 2 + 1;
    let (points, weights) = gauss_legendre(n);
    EdgeRule { points, weights, exactness: degree }
}

fn build_triangle(degree: usize) -> TriangleRule {
    let nu = degree / 2 + 1;
    let nv = degree.div_ceil(2) + 1;
    let (u, wu) = gauss_legendre(nu);
    let (v, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (vj, wvj) in v.iter().zip(&wv) {
        for (ui, wui) in u.iter().zip(&wu) {
            points.push([ui * (1.0 - vj), *vj]);
            weights.push(wui * wvj * (1.0 - vj));
        }
    }
    TriangleRule { points, weights, exactness: degree }
}

/// Rule on the reference triangle exact for polynomials up to `degree`.
pub fn triangle(degree: usize) -> Result<&'static TriangleRule> {
    static RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    check_degree(degree)?;
    Ok(&RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_triangle).collect())[degree])
}

/// Rule on `[0, 1]` exact for polynomials up to `degree`.
pub fn edge(degree: usize) -> Result<&'static EdgeRule> {
    static RULES: OnceLock<Vec<EdgeRule>> = OnceLock::new();
    check_degree(degree)?;
    Ok(&RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_edge).collect())[degree])
}
