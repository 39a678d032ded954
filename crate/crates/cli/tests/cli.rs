use std::path::Path;
use std::process::{Command, Output};

fn hdgwg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdgwg")).args(args).output().expect("binary runs")
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn converge_writes_four_rows_with_order_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = hdgwg(&[
        "converge", "--method", "hdg", "--regime", "rho-h", "--k", "0", "--rho", "1", "--levels", "5", "--case", "sine",
        "--out", out_dir(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,h,dofs,err_flux,err_scalar,order");
    assert_eq!(lines.len(), 5);
    let order: f64 = lines[4].rsplit(',').next().unwrap().parse().unwrap();
    assert!((0.9..=1.2).contains(&order), "{order}");
}

#[test]
fn unsupported_degree_exits_2() {
    let o = hdgwg(&["converge", "--method", "hdg", "--regime", "rho-h", "--k", "7"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("degree 7"), "{err}");
}

#[test]
fn bad_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "method = hdg\nflavour = strawberry\n").unwrap();
    let o = hdgwg(&["converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("flavour"));
    let o = hdgwg(&["converge", "--rho", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hdgwg(&["converge", "--method", "dg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_passes() {
    let o = hdgwg(&["check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn identical_config_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("study.cfg");
    std::fs::write(&cfg, "# wg limit\nmethod = wg\nlevels = 2\nrhos = 0.1, 0.01, 0.001\n").unwrap();
    for dir in [a.path(), b.path()] {
        let o = hdgwg(&["limit", "--config", cfg.to_str().unwrap(), "--out", out_dir(dir)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let x = std::fs::read(a.path().join("limit.csv")).unwrap();
    let y = std::fs::read(b.path().join("limit.csv")).unwrap();
    assert_eq!(x, y);
    assert!(String::from_utf8_lossy(&x).starts_with("rho,dist_flux,dist_scalar,slope\n"));
}

#[test]
fn infsup_with_plot_and_matrix_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = hdgwg(&[
        "infsup", "--method", "hdg", "--regime", "inv", "--levels", "2", "--rhos", "0.01,0.001", "--svg", "--out",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("infsup.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("h,rho,beta"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(dir.path().join("infsup.svg").exists());

    let o = hdgwg(&["converge", "--levels", "3", "--dump-matrix", "--out", out_dir(dir.path())]);
    assert!(o.status.success());
    let coo = std::fs::read_to_string(dir.path().join("matrix_level3.coo")).unwrap();
    assert!(!coo.is_empty());
}
