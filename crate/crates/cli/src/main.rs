//! `hdgwg`: convergence, rho-limit and inf-sup studies, and the self-check
//! suite.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid configuration.

mod config;
mod svg;

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdgwg::assembly::assemble_case;
use hdgwg::experiments::{mesh_at_level, run_convergence_study, run_infsup_study, run_rho_limit_study};
use hdgwg::manufactured::manufactured_case;
use hdgwg::selfcheck::run_self_check;
use hdgwg::{Error, Result};

use config::{Study, StudyArgs, StudyConfig};
use svg::Series;

#[derive(Parser, Debug)]
#[command(name = "hdgwg", version, about = "HDG and WG studies for mixed Poisson on the unit square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error table over levels 2..=levels; writes convergence.csv
    Converge(StudyArgs),
    /// Distance to the conforming limit over a rho sweep at one level; writes limit.csv
    Limit(StudyArgs),
    /// Discrete inf-sup constants over levels 1..=levels and a rho sweep; writes infsup.csv
    Infsup(StudyArgs),
    /// Identity, consistency, oracle and Gram checks
    Check(StudyArgs),
}

enum Failure {
    Config(Error),
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::Io(_)) {
            Failure::Numerical(e)
        } else {
            Failure::Config(e)
        }
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), contents)?;
    Ok(())
}

fn converge(cfg: &StudyConfig) -> Result<()> {
    let case = cfg.case()?;
    let exact = manufactured_case(&cfg.case)?;
    let table = run_convergence_study(&case, cfg.levels, &exact)?;
    write(&cfg.out, "convergence.csv", &table.to_csv())?;
    if cfg.svg {
        let err = |f: fn(&hdgwg::experiments::ConvergenceRow) -> f64| table.rows.iter().map(|r| (r.h, f(r))).collect();
        let plot = svg::loglog(
            &format!("{case}, {}", cfg.case),
            "h",
            "error",
            &[
                Series { label: "flux".into(), points: err(|r| r.err_flux) },
                Series { label: "scalar".into(), points: err(|r| r.err_scalar) },
            ],
        );
        write(&cfg.out, "convergence.svg", &plot)?;
    }
    if cfg.dump_matrix {
        let mesh = mesh_at_level(cfg.levels)?;
        let (_, sys) = assemble_case(&mesh, &case, &exact.coeff, &|x| exact.f(x))?;
        fs::create_dir_all(&cfg.out)?;
        let file = fs::File::create(cfg.out.join(format!("matrix_level{}.coo", cfg.levels)))?;
        sys.matrix.write_coordinate(BufWriter::new(file))?;
    }
    if let Some(order) = table.observed_order() {
        eprintln!("{case}: observed order {order:.4}");
    }
    Ok(())
}

fn limit(cfg: &StudyConfig) -> Result<()> {
    let exact = manufactured_case(&cfg.case)?;
    let table = run_rho_limit_study(cfg.method, cfg.k, cfg.levels, &cfg.rhos, &exact)?;
    write(&cfg.out, "limit.csv", &table.to_csv())?;
    if cfg.svg {
        let points = table.rows.iter().map(|r| (r.rho, r.distance())).collect();
        let plot = svg::loglog(
            &format!("{} k={} limit, slope {:.3}", cfg.method, cfg.k, table.slope),
            "rho",
            "distance",
            &[Series { label: "distance".into(), points }],
        );
        write(&cfg.out, "limit.svg", &plot)?;
    }
    eprintln!("{} k={}: slope {:.4}", cfg.method, cfg.k, table.slope);
    Ok(())
}

fn infsup(cfg: &StudyConfig) -> Result<()> {
    let levels: Vec<usize> = (1..=cfg.levels).collect();
    let table = run_infsup_study(cfg.method, cfg.regime, cfg.k, &levels, &cfg.rhos)?;
    write(&cfg.out, "infsup.csv", &table.to_csv())?;
    if cfg.svg {
        let series: Vec<Series> = levels
            .iter()
            .map(|&l| Series {
                label: format!("level {l}"),
                points: table.rows.iter().filter(|r| r.level == l).map(|r| (r.rho, r.beta)).collect(),
            })
            .collect();
        let plot = svg::loglog(&format!("{} {} k={}", cfg.method, cfg.regime, cfg.k), "rho", "beta", &series);
        write(&cfg.out, "infsup.svg", &plot)?;
    }
    eprintln!(
        "{} {} k={}: beta in [{:.4}, {:.4}], spread {:.3}",
        cfg.method,
        cfg.regime,
        cfg.k,
        table.min_beta(),
        table.max_beta(),
        table.spread()
    );
    if let Some(rho0) = table.empirical_rho0() {
        eprintln!("empirical rho_0: {rho0:e}");
    }
    Ok(())
}

fn check(cfg: &StudyConfig) -> std::result::Result<(), Failure> {
    let report = run_self_check(cfg.seed)?;
    for item in &report.items {
        println!("{} {}: {}", if item.passed { "ok  " } else { "FAIL" }, item.name, item.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Numerical(Error::InvalidArgument("self-check failed".into())))
    }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let (args, study) = match &cli.command {
        Command::Converge(a) => (a, Study::Converge),
        Command::Limit(a) => (a, Study::Limit),
        Command::Infsup(a) => (a, Study::Infsup),
        Command::Check(a) => (a, Study::Check),
    };
    let cfg = StudyConfig::resolve(args, study).map_err(Failure::Config)?;
    match study {
        Study::Converge => converge(&cfg)?,
        Study::Limit => limit(&cfg)?,
        Study::Infsup => infsup(&cfg)?,
        Study::Check => check(&cfg)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("hdgwg: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("hdgwg: {e}");
            ExitCode::from(1)
        }
    }
}
