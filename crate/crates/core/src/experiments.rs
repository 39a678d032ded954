//! Convergence, rho-limit and inf-sup studies.
//!
//! Level `L` is the structured mesh with `2^L` subdivisions per side.
//! Independent (level, rho) instances run through [`exec::map_indexed`], so
//! tables come back in input order whichever execution mode is active.

use std::fmt::Write as _;

use crate::assembly::{assemble_case, assemble_mixed_conforming, assemble_norm_gram, assemble_primal_conforming};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, DENSE_EIGEN_LIMIT};
use crate::manufactured::{CoefficientField, Manufactured};
use crate::mesh::Mesh;
use crate::norms::{compute_error_norm, NormKind, NormPair};
use crate::quadrature;
use crate::solution::DiscreteSolution;
use crate::spaces::{DofMap, Method, Regime, SpaceCase};

/// Coarsest level of every convergence study.
pub const FIRST_LEVEL: usize = 2;

/// Errors below this are at solver tolerance; their orders carry no
/// information.
pub const SATURATION: f64 = 1e-9;

/// Decades `1e-1 .. 1e-5`.
pub const DEFAULT_LIMIT_RHOS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

pub fn mesh_at_level(level: usize) -> Result<Mesh> {
    if level > 10 {
        return Err(Error::InvalidArgument(format!("level {level} is too fine (at most 10)")));
    }
    Mesh::structured(1 << level)
}

/// Formats with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Solves the scheme of `case` for `exact`'s data on `mesh`.
pub fn solve_case(mesh: &Mesh, case: &SpaceCase, coeff: &CoefficientField, exact: &Manufactured) -> Result<(DofMap, Vec<f64>)> {
    let (dofs, sys) = assemble_case(mesh, case, coeff, &|x| exact.f(x))?;
    let x = sys.solve(linalg::DEFAULT_TOL)?;
    Ok((dofs, x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_flux: f64,
    pub err_scalar: f64,
    /// `log2(e_{L-1} / e_L)` of `err_flux + err_scalar`; `None` on the
    /// first row or when both errors are saturated.
    pub order: Option<f64>,
}

impl ConvergenceRow {
    pub fn error(&self) -> f64 {
        self.err_flux + self.err_scalar
    }

    pub fn saturated(&self) -> bool {
        self.error() < SATURATION
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub case: SpaceCase,
    pub manufactured: String,
    pub norm: NormKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Order between the last two levels.
    pub fn observed_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dofs,err_flux,err_scalar,order\n");
        for r in &self.rows {
            let order = match r.order {
                Some(o) => fmt_float(o),
                None if r.level > self.rows[0].level => "saturated".into(),
                None => String::new(),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.level,
                fmt_float(r.h),
                r.dofs,
                fmt_float(r.err_flux),
                fmt_float(r.err_scalar),
                order
            );
        }
        s
    }
}

/// Error of `case` on one level in the regime's norm pair.
pub fn error_at_level(case: &SpaceCase, level: usize, exact: &Manufactured) -> Result<(Mesh, usize, NormPair)> {
    let mesh = mesh_at_level(level)?;
    let (dofs, x) = solve_case(&mesh, case, &exact.coeff, exact)?;
    let sol = DiscreteSolution::new(&mesh, &dofs, x)?;
    let e = compute_error_norm(&sol, exact, case.norm_kind(), case.rho)?;
    let n = dofs.total;
    Ok((mesh, n, e))
}

/// Levels `FIRST_LEVEL..=last_level`.
pub fn run_convergence_study(case: &SpaceCase, last_level: usize, exact: &Manufactured) -> Result<ConvergenceTable> {
    case.validate()?;
    if last_level < FIRST_LEVEL + 1 {
        return Err(Error::InvalidArgument(format!(
            "convergence studies need levels >= {}, got {last_level}",
            FIRST_LEVEL + 1
        )));
    }
    let levels: Vec<usize> = (FIRST_LEVEL..=last_level).collect();
    let results = exec::map_indexed(levels.len(), |i| {
        let (mesh, dofs, e) = error_at_level(case, levels[i], exact)?;
        Ok((mesh.max_diam(), dofs, e))
    })?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (&level, (h, dofs, e)) in levels.iter().zip(results) {
        let mut row = ConvergenceRow { level, h, dofs, err_flux: e.flux, err_scalar: e.scalar, order: None };
        if let Some(prev) = rows.last() {
            if !(prev.saturated() && row.saturated()) {
                row.order = Some((prev.error() / row.error()).log2());
            }
        }
        rows.push(row);
    }
    Ok(ConvergenceTable { case: *case, manufactured: exact.name.clone(), norm: case.norm_kind(), rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitRow {
    pub rho: f64,
    pub dist_flux: f64,
    pub dist_scalar: f64,
}

impl LimitRow {
    pub fn distance(&self) -> f64 {
        self.dist_flux + self.dist_scalar
    }
}

#[derive(Clone, Debug)]
pub struct LimitTable {
    pub method: Method,
    pub k: usize,
    pub level: usize,
    /// `|f|` on the mesh, the scale of the stability bound.
    pub load_norm: f64,
    pub rows: Vec<LimitRow>,
    /// Least-squares slope of `log(distance)` against `log(rho)`.
    pub slope: f64,
}

impl LimitTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,dist_flux,dist_scalar,slope\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_float(r.rho),
                fmt_float(r.dist_flux),
                fmt_float(r.dist_scalar),
                fmt_float(self.slope)
            );
        }
        s
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// `a - b` written on `a`'s broken layout; `b` must use the same local
/// bases. Traces are left at zero.
fn broken_difference(a: &DiscreteSolution, b: &DiscreteSolution) -> Result<Vec<f64>> {
    if a.dofs.flux.family != b.dofs.flux.family || a.dofs.scalar.family != b.dofs.scalar.family {
        return Err(Error::InconsistentSpaces("difference of fields from different local spaces".into()));
    }
    let mut out = vec![0.0; a.dofs.total];
    for c in 0..a.mesh.num_cells() {
        for (layout, fa, fb) in [
            (&a.dofs.flux, a.flux_local(c), b.flux_local(c)),
            (&a.dofs.scalar, a.scalar_local(c), b.scalar_local(c)),
        ] {
            for ((m, x), y) in layout.local(c).iter().zip(fa).zip(fb) {
                match m {
                    Some((g, s)) if *s == 1.0 => out[*g] = x - y,
                    _ => return Err(Error::InconsistentSpaces("target layout is not broken".into())),
                }
            }
        }
    }
    Ok(out)
}

/// Distance between the parameter method at `rho` and its conforming
/// limit: HDG `1/(rho h)` against the primal method in
/// `|p - p^c| + |u - u^c|_{1,h}`, WG `1/(rho h)` with `RT_k` fluxes against
/// the mixed method in `|p - p^c|_{H_h(div)} + |u - u^c|`.
pub fn limit_distance(mesh: &Mesh, method: Method, k: usize, rho: f64, exact: &Manufactured) -> Result<LimitRow> {
    let case = SpaceCase::table1(method, Regime::Inv, k, rho)?;
    let f = |x: crate::mesh::Point| exact.f(x);
    let (dofs, x) = solve_case(mesh, &case, &exact.coeff, exact)?;
    let (cdofs, csys, kind) = match method {
        Method::Hdg => {
            let (d, s) = assemble_primal_conforming(mesh, k, &exact.coeff, &f)?;
            (d, s, NormKind::BrokenH1)
        }
        Method::Wg => {
            let (d, s) = assemble_mixed_conforming(mesh, k, &exact.coeff, &f)?;
            (d, s, NormKind::BrokenHdiv)
        }
    };
    let cx = csys.solve(linalg::DEFAULT_TOL)?;
    let sol = DiscreteSolution::new(mesh, &dofs, x)?;
    let conf = DiscreteSolution::new(mesh, &cdofs, cx)?;
    let diff = DiscreteSolution::new(mesh, &dofs, broken_difference(&sol, &conf)?)?;
    let d = compute_error_norm(&diff, &Manufactured::zero(), kind, 1.0)?;
    Ok(LimitRow { rho, dist_flux: d.flux, dist_scalar: d.scalar })
}

/// `|f|_{L^2}` by quadrature on `mesh`.
pub fn load_norm(mesh: &Mesh, exact: &Manufactured) -> Result<f64> {
    let rule = quadrature::triangle(quadrature::MAX_DEGREE)?;
    let mut s = 0.0;
    for c in 0..mesh.num_cells() {
        let geo = mesh.geometry(c);
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let v = exact.f(geo.map(*xi));
            s += w * geo.det * v * v;
        }
    }
    Ok(s.sqrt())
}

pub fn run_rho_limit_study(method: Method, k: usize, level: usize, rhos: &[f64], exact: &Manufactured) -> Result<LimitTable> {
    if rhos.len() < 2 {
        return Err(Error::InvalidArgument("limit studies need at least two rho values".into()));
    }
    for &rho in rhos {
        SpaceCase::table1(method, Regime::Inv, k, rho)?;
    }
    let mesh = mesh_at_level(level)?;
    let rows = exec::map_indexed(rhos.len(), |i| limit_distance(&mesh, method, k, rhos[i], exact))?;
    if let Some(r) = rows.iter().find(|r| !(r.distance() > 0.0 && r.distance().is_finite())) {
        return Err(Error::Singular(format!("distance {} at rho = {} cannot be fitted", r.distance(), r.rho)));
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.rho.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.distance().ln()).collect();
    let slope = fit_slope(&lx, &ly)?;
    Ok(LimitTable { method, k, level, load_norm: load_norm(&mesh, exact)?, rows, slope })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfSupRow {
    pub level: usize,
    pub h: f64,
    pub rho: f64,
    pub dofs: usize,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct InfSupTable {
    pub method: Method,
    pub regime: Regime,
    pub k: usize,
    pub rows: Vec<InfSupRow>,
}

impl InfSupTable {
    pub fn min_beta(&self) -> f64 {
        self.rows.iter().map(|r| r.beta).fold(f64::INFINITY, f64::min)
    }

    pub fn max_beta(&self) -> f64 {
        self.rows.iter().map(|r| r.beta).fold(0.0, f64::max)
    }

    pub fn spread(&self) -> f64 {
        self.max_beta() / self.min_beta()
    }

    /// Largest swept `rho` such that on every level, `beta` at every swept
    /// value up to it stays within a factor 2 of `beta` at the smallest
    /// `rho`. `None` if only the smallest value qualifies everywhere.
    pub fn empirical_rho0(&self) -> Option<f64> {
        let mut rhos: Vec<f64> = self.rows.iter().map(|r| r.rho).collect();
        rhos.sort_by(f64::total_cmp);
        rhos.dedup();
        let mut levels: Vec<usize> = self.rows.iter().map(|r| r.level).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut best = rhos.len() - 1;
        for level in levels {
            let beta = |rho: f64| self.rows.iter().find(|r| r.level == level && r.rho == rho).map(|r| r.beta);
            let Some(plateau) = beta(rhos[0]) else { continue };
            let mut ok = 0;
            for (i, &rho) in rhos.iter().enumerate() {
                match beta(rho) {
                    Some(b) if b >= 0.5 * plateau && b <= 2.0 * plateau => ok = i,
                    Some(_) => break,
                    None => {}
                }
            }
            best = best.min(ok);
        }
        (best > 0).then(|| rhos[best])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,rho,beta\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", fmt_float(r.h), fmt_float(r.rho), fmt_float(r.beta));
        }
        s
    }
}

/// `beta(h, rho) = min |A x| / |x|` measured in the regime's norm pair:
/// the smallest `|lambda|` of `N^{-1/2} A N^{-1/2}`.
pub fn infsup_constant(mesh: &Mesh, case: &SpaceCase, coeff: &CoefficientField) -> Result<(usize, f64)> {
    let (dofs, sys) = assemble_case(mesh, case, coeff, &|_| 0.0)?;
    if dofs.total > DENSE_EIGEN_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "{} unknowns exceed the dense eigensolver limit of {DENSE_EIGEN_LIMIT}",
            dofs.total
        )));
    }
    let gram = assemble_norm_gram(mesh, &dofs, case.norm_kind(), case.rho, coeff)?;
    let beta = linalg::min_generalized_singular_value(&sys.matrix.to_dense(), &gram.to_dense())?;
    Ok((dofs.total, beta))
}

pub fn run_infsup_study(
    method: Method,
    regime: Regime,
    k: usize,
    levels: &[usize],
    rhos: &[f64],
) -> Result<InfSupTable> {
    if levels.is_empty() || rhos.is_empty() {
        return Err(Error::InvalidArgument("inf-sup studies need levels and rho values".into()));
    }
    let cases: Vec<SpaceCase> = rhos.iter().map(|&r| SpaceCase::table1(method, regime, k, r)).collect::<Result<_>>()?;
    let meshes: Vec<Mesh> = levels.iter().map(|&l| mesh_at_level(l)).collect::<Result<_>>()?;
    let coeff = CoefficientField::constant(1.0)?;
    let n = levels.len() * rhos.len();
    let rows = exec::map_indexed(n, |i| {
        let (li, ri) = (i / rhos.len(), i % rhos.len());
        let (dofs, beta) = infsup_constant(&meshes[li], &cases[ri], &coeff)?;
        Ok(InfSupRow { level: levels[li], h: meshes[li].max_diam(), rho: rhos[ri], dofs, beta })
    })?;
    Ok(InfSupTable { method, regime, k, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::manufactured_case;

    #[test]
    fn slope_of_exact_power_law() {
        let x: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|r: &f64| r.ln()).collect();
        let y: Vec<f64> = [1e-1f64, 1e-2, 1e-3].iter().map(|r| (3.0 * r.sqrt()).ln()).collect();
        assert!((fit_slope(&x, &y).unwrap() - 0.5).abs() < 1e-14);
        assert!(fit_slope(&[1.0], &[2.0]).is_err());
        assert!(fit_slope(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn csv_headers_and_precision() {
        let exact = manufactured_case("sine").unwrap();
        let case = SpaceCase::table1(Method::Hdg, Regime::RhoH, 0, 1.0).unwrap();
        let t = run_convergence_study(&case, 3, &exact).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("level,h,dofs,err_flux,err_scalar,order"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[5], "");
        assert_eq!(first[1].parse::<f64>().unwrap(), 0.25f64.hypot(0.25));
        assert_eq!(t.rows.len(), 2);
        assert!(run_convergence_study(&case, 2, &exact).is_err());
    }

    #[test]
    fn polynomial_case_saturates() {
        // no nonzero polynomial of degree <= 2 vanishes on the whole boundary,
        // so the zero solution is the in-space case here
        let exact = Manufactured::zero();
        let case = SpaceCase::table1(Method::Hdg, Regime::Inv, 1, 1e-2).unwrap();
        let t = run_convergence_study(&case, 3, &exact).unwrap();
        assert!(t.rows.iter().all(|r| r.saturated()), "{:?}", t.rows);
        assert_eq!(t.observed_order(), None);
        assert!(t.to_csv().ends_with("saturated\n"));
    }

    #[test]
    fn broken_difference_of_a_field_with_itself_vanishes() {
        let mesh = mesh_at_level(1).unwrap();
        let case = SpaceCase::table1(Method::Wg, Regime::Inv, 0, 1e-2).unwrap();
        let exact = manufactured_case("sine").unwrap();
        let (dofs, x) = solve_case(&mesh, &case, &exact.coeff, &exact).unwrap();
        let a = DiscreteSolution::new(&mesh, &dofs, x).unwrap();
        let d = broken_difference(&a, &a).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
        let conf = DofMap::mixed_conforming(&mesh, 0).unwrap();
        let c = DiscreteSolution::zeros(&mesh, &conf);
        assert!(broken_difference(&c, &a).is_err());
    }

    #[test]
    fn rho0_detection() {
        let row = |rho: f64, beta: f64| InfSupRow { level: 1, h: 0.5, rho, dofs: 1, beta };
        let t = InfSupTable {
            method: Method::Hdg,
            regime: Regime::Inv,
            k: 0,
            rows: vec![row(1.0, 0.05), row(1e-1, 0.3), row(1e-2, 0.5), row(1e-3, 0.5)],
        };
        assert_eq!(t.empirical_rho0(), Some(1e-1));
        assert!((t.spread() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_eigenproblem_is_rejected() {
        let mesh = mesh_at_level(4).unwrap();
        let case = SpaceCase::table1(Method::Wg, Regime::RhoH, 1, 1.0).unwrap();
        let coeff = CoefficientField::constant(1.0).unwrap();
        assert!(matches!(infsup_constant(&mesh, &case, &coeff), Err(Error::InvalidArgument(_))));
    }
}
