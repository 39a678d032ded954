//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion outside `UNATTAINABLE` fails.

use std::process::ExitCode;
use std::time::Instant;

use hdgwg::experiments::{
    error_at_level, run_convergence_study, run_infsup_study, run_rho_limit_study, DEFAULT_LIMIT_RHOS,
};
use hdgwg::manufactured::manufactured_case;
use hdgwg::mesh::Mesh;
use hdgwg::selfcheck;
use hdgwg::spaces::{Method, Regime, SpaceCase};
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Criteria that cannot hold on the structured mesh family; the line still
/// prints FAIL.
///
/// 8: for WG with `eta = 1/(rho h_K)` a broken RT_0 flux whose divergence is
/// balanced by its normal defect `(q - q^).n` gives
/// `beta <= C / (rho + C) + O(h^2)`, `C = |K| / (h_K |dK|) = 1 / (2 sqrt 2 (2 + sqrt 2))`
/// for the right triangles here. At `rho = 1` that is 0.0939, while
/// `rho = 1e-4` approaches the mixed method's `beta = 0.95`: the spread is
/// at least 10.1 on every level.
const UNATTAINABLE: &[usize] = &[8];

struct Outcome {
    id: usize,
    passed: bool,
    detail: String,
}

fn convergence(id: usize, method: Method, regime: Regime, rhos: &[f64]) -> Outcome {
    let start = Instant::now();
    let sine = manufactured_case("sine").unwrap();
    let mut orders = Vec::new();
    for &rho in rhos {
        let case = SpaceCase::table1(method, regime, 0, rho).unwrap();
        let t = run_convergence_study(&case, 5, &sine).unwrap();
        orders.push((rho, t.observed_order().unwrap_or(f64::NAN)));
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = orders.iter().all(|(_, o)| (0.9..=1.2).contains(o)) && secs <= 60.0;
    let list: Vec<String> = orders.iter().map(|(r, o)| format!("rho={r:e}: {o:.4}")).collect();
    Outcome { id, passed, detail: format!("{method} {regime} k=0 orders [{}] in {secs:.1}s", list.join(", ")) }
}

fn uniformity() -> Outcome {
    let sine = manufactured_case("sine").unwrap();
    let small = [1.0, 1e-2, 1e-4, 1e-6];
    let inv = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (method, regime, rhos) in [
        (Method::Hdg, Regime::RhoH, small),
        (Method::Hdg, Regime::Inv, inv),
        (Method::Wg, Regime::RhoH, small),
        (Method::Wg, Regime::Inv, inv),
    ] {
        let errs: Vec<f64> = rhos
            .iter()
            .map(|&rho| error_at_level(&SpaceCase::table1(method, regime, 0, rho).unwrap(), 4, &sine).unwrap().2.sum())
            .collect();
        let ratio = errs.iter().cloned().fold(0.0, f64::max) / errs.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(ratio);
        parts.push(format!("{method} {regime}: {ratio:.3}"));
    }
    Outcome { id: 5, passed: worst <= 5.0, detail: format!("max/min error at level 4: {}", parts.join(", ")) }
}

fn limit(id: usize, method: Method) -> Outcome {
    let sine = manufactured_case("sine").unwrap();
    let t = run_rho_limit_study(method, 0, 3, &DEFAULT_LIMIT_RHOS, &sine).unwrap();
    let d: Vec<f64> = t.rows.iter().map(|r| r.distance()).collect();
    let positive = d.iter().all(|v| *v > 0.0 && v.is_finite());
    let decreasing = d.first() > d.last();
    let bounded = d[0] <= 10.0 * t.load_norm;
    Outcome {
        id,
        passed: t.slope >= 0.45 && positive && decreasing && bounded,
        detail: format!("{method} slope {:.4}, distance {:.3e} -> {:.3e}", t.slope, d[0], d[d.len() - 1]),
    }
}

fn infsup() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (method, regime, rhos) in [
        (Method::Hdg, Regime::RhoH, [1.0, 1e-2, 1e-4]),
        (Method::Hdg, Regime::Inv, [1e-2, 1e-3, 1e-4]),
        (Method::Wg, Regime::RhoH, [1.0, 1e-2, 1e-4]),
        (Method::Wg, Regime::Inv, [1.0, 1e-2, 1e-4]),
    ] {
        let t = run_infsup_study(method, regime, 0, &[1, 2, 3], &rhos).unwrap();
        let ok = t.min_beta() > 0.0 && t.spread() <= 10.0;
        passed &= ok;
        parts.push(format!(
            "{method} {regime}: beta in [{:.4}, {:.4}] spread {:.2}{}",
            t.min_beta(),
            t.max_beta(),
            t.spread(),
            if ok { "" } else { " (over 10)" }
        ));
    }
    Outcome { id: 8, passed, detail: parts.join("; ") }
}

fn identities_and_consistency() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let id = selfcheck::identity_check(100, &mut rng).unwrap();
    let cons = selfcheck::in_space_consistency().unwrap();
    let margin = selfcheck::sine_consistency_margin().unwrap();
    let oracle = selfcheck::oracle_gap().unwrap();
    let passed = id <= selfcheck::IDENTITY_TOL
        && cons <= selfcheck::CONSISTENCY_TOL
        && margin >= 0.0
        && oracle <= selfcheck::ORACLE_TOL;
    Outcome {
        id: 9,
        passed,
        detail: format!(
            "identities {id:.2e}, in-space consistency {cons:.2e}, sine order margin {margin:.2}, oracle gap {oracle:.2e}"
        ),
    }
}

fn gram() -> Outcome {
    let mut rng = StdRng::seed_from_u64(77);
    let gap = selfcheck::gram_gap(50, &mut rng).unwrap();
    Outcome { id: 10, passed: gap <= selfcheck::GRAM_TOL, detail: format!("worst relative gap {gap:.2e}") }
}

/// Pins the explanation behind criterion 8: the smallest WG `1/(rho h)`
/// constant at `rho = 1` sits at `C / (1 + C)`.
fn wg_inv_bound_holds() -> bool {
    let c = 1.0 / (2.0 * 2f64.sqrt() * (2.0 + 2f64.sqrt()));
    let mesh = Mesh::structured(8).unwrap();
    let k = mesh.geometry(0);
    let perimeter: f64 = mesh.cells[0].edges.iter().map(|&e| mesh.edges[e].length).sum();
    let measured_c = k.area() / (mesh.cell_diam[0] * perimeter);
    let t = run_infsup_study(Method::Wg, Regime::Inv, 0, &[3], &[1.0]).unwrap();
    let bound = c / (1.0 + c);
    (measured_c - c).abs() < 1e-12 && t.min_beta() <= bound * 1.01 && t.min_beta() >= bound * 0.9
}

fn main() -> ExitCode {
    let start = Instant::now();
    let outcomes = vec![
        convergence(1, Method::Hdg, Regime::RhoH, &[1.0, 1e-3]),
        convergence(2, Method::Hdg, Regime::Inv, &[1e-1, 1e-3]),
        convergence(3, Method::Wg, Regime::RhoH, &[1.0, 1e-4]),
        convergence(4, Method::Wg, Regime::Inv, &[1.0, 1e-4]),
        uniformity(),
        limit(6, Method::Hdg),
        limit(7, Method::Wg),
        infsup(),
        identities_and_consistency(),
        gram(),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        println!("criterion {:>2}: {} {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed && !UNATTAINABLE.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    let pinned = wg_inv_bound_holds();
    println!("criterion  8 bound C/(1+C) for wg inv at rho=1 reproduced: {pinned}");
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria pass in {:.1}s", outcomes.len(), start.elapsed().as_secs_f64());
    if unexpected.is_empty() && pinned {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
