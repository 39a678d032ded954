//! Sequential against rayon execution of the per-cell loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdgwg::assembly::{assemble_case, assemble_norm_gram};
use hdgwg::exec;
use hdgwg::experiments::{mesh_at_level, run_convergence_study};
use hdgwg::manufactured::manufactured_case;
use hdgwg::spaces::{Method, Regime, SpaceCase};

fn modes() -> [(&'static str, bool); 2] {
    [("sequential", false), ("parallel", true)]
}

fn assembly(c: &mut Criterion) {
    let exact = manufactured_case("sine").unwrap();
    let mut group = c.benchmark_group("assemble");
    for (method, regime) in [(Method::Hdg, Regime::RhoH), (Method::Wg, Regime::Inv)] {
        let case = SpaceCase::table1(method, regime, 1, 1e-2).unwrap();
        let mesh = mesh_at_level(6).unwrap();
        for (name, on) in modes() {
            group.bench_with_input(BenchmarkId::new(name, format!("{method}-{regime}")), &case, |b, case| {
                let prev = exec::set_parallel(on);
                b.iter(|| assemble_case(&mesh, case, &exact.coeff, &|x| exact.f(x)).unwrap());
                exec::set_parallel(prev);
            });
        }
    }
    group.finish();
}

fn gram(c: &mut Criterion) {
    let exact = manufactured_case("sine").unwrap();
    let case = SpaceCase::table1(Method::Wg, Regime::RhoH, 1, 1e-2).unwrap();
    let mesh = mesh_at_level(6).unwrap();
    let (dofs, _) = assemble_case(&mesh, &case, &exact.coeff, &|x| exact.f(x)).unwrap();
    let mut group = c.benchmark_group("norm_gram");
    for (name, on) in modes() {
        group.bench_function(name, |b| {
            let prev = exec::set_parallel(on);
            b.iter(|| assemble_norm_gram(&mesh, &dofs, case.norm_kind(), case.rho, &exact.coeff).unwrap());
            exec::set_parallel(prev);
        });
    }
    group.finish();
}

fn study(c: &mut Criterion) {
    let exact = manufactured_case("sine").unwrap();
    let case = SpaceCase::table1(Method::Hdg, Regime::RhoH, 0, 1.0).unwrap();
    let mut group = c.benchmark_group("convergence_study");
    group.sample_size(10);
    for (name, on) in modes() {
        group.bench_function(name, |b| {
            let prev = exec::set_parallel(on);
            b.iter(|| run_convergence_study(&case, 5, &exact).unwrap());
            exec::set_parallel(prev);
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, gram, study);
criterion_main!(benches);
