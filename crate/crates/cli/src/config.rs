//! Study configuration from flags and `key = value` files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use hdgwg::experiments::DEFAULT_LIMIT_RHOS;
use hdgwg::manufactured::manufactured_case;
use hdgwg::spaces::{Method, Regime, SpaceCase};
use hdgwg::{Error, Result};

const KEYS: [&str; 11] = ["method", "regime", "k", "rho", "rhos", "levels", "case", "out", "seed", "svg", "dump-matrix"];

/// Options shared by every subcommand. Unset values fall back to the
/// config file, then to the subcommand's defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct StudyArgs {
    /// `key = value` file; flags win on conflict
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// hdg or wg
    #[arg(long)]
    pub method: Option<String>,
    /// rho-h or inv
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Comma-separated rho sweep
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rhos: Option<Vec<f64>>,
    /// Finest mesh level (`2^L` squares per side)
    #[arg(long)]
    pub levels: Option<usize>,
    /// Manufactured solution: sine, poly or varcoef
    #[arg(long)]
    pub case: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write log-log SVG plots
    #[arg(long)]
    pub svg: bool,
    /// Write the finest system matrix in coordinate format
    #[arg(long)]
    pub dump_matrix: bool,
}

/// Validated study configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub method: Method,
    pub regime: Regime,
    pub k: usize,
    pub rho: f64,
    pub rhos: Vec<f64>,
    pub levels: usize,
    pub case: String,
    pub out: PathBuf,
    pub seed: u64,
    pub svg: bool,
    pub dump_matrix: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Converge,
    Limit,
    Infsup,
    Check,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected 'key = value', got '{line}'", no + 1)));
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!("line {}: unknown key '{key}'", no + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key '{key}'", no + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("invalid value '{v}' for '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("invalid value '{v}' for '{key}' (expected true or false)"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}

impl StudyConfig {
    /// Merges flags over the config file and validates the result for
    /// `study`.
    pub fn resolve(args: &StudyArgs, study: Study) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let get = |k: &str| file.get(k).map(String::as_str);

        let method: Method = match (&args.method, get("method")) {
            (Some(m), _) => m.parse()?,
            (None, Some(m)) => m.parse()?,
            (None, None) => Method::Hdg,
        };
        let regime: Regime = match (&args.regime, get("regime")) {
            (Some(r), _) => r.parse()?,
            (None, Some(r)) => r.parse()?,
            (None, None) => match study {
                Study::Limit => Regime::Inv,
                _ => Regime::RhoH,
            },
        };
        let k = match (args.k, get("k")) {
            (Some(k), _) => k,
            (None, Some(v)) => parse_value("k", v)?,
            (None, None) => 0,
        };
        let rho = match (args.rho, get("rho")) {
            (Some(r), _) => r,
            (None, Some(v)) => parse_value("rho", v)?,
            // safely below the empirical rho_0 for the inverse regime
            (None, None) if regime == Regime::Inv => 1e-2,
            (None, None) => 1.0,
        };
        let rhos = match (&args.rhos, get("rhos")) {
            (Some(r), _) => r.clone(),
            (None, Some(v)) => parse_list("rhos", v)?,
            (None, None) => match study {
                Study::Infsup if regime == Regime::RhoH => vec![1.0, 1e-2, 1e-4],
                Study::Infsup => vec![1e-2, 1e-3, 1e-4],
                _ => DEFAULT_LIMIT_RHOS.to_vec(),
            },
        };
        let levels = match (args.levels, get("levels")) {
            (Some(l), _) => l,
            (None, Some(v)) => parse_value("levels", v)?,
            (None, None) => match study {
                Study::Converge => 5,
                _ => 3,
            },
        };
        let case = args.case.clone().or_else(|| get("case").map(String::from)).unwrap_or_else(|| "sine".into());
        let out = args.out.clone().or_else(|| get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
        let seed = match (args.seed, get("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => parse_value("seed", v)?,
            (None, None) => 1,
        };
        let svg = args.svg || get("svg").map(|v| parse_bool("svg", v)).transpose()?.unwrap_or(false);
        let dump_matrix =
            args.dump_matrix || get("dump-matrix").map(|v| parse_bool("dump-matrix", v)).transpose()?.unwrap_or(false);

        let cfg = StudyConfig { method, regime, k, rho, rhos, levels, case, out, seed, svg, dump_matrix };
        cfg.validate(study)?;
        Ok(cfg)
    }

    fn validate(&self, study: Study) -> Result<()> {
        if study == Study::Check {
            return Ok(());
        }
        manufactured_case(&self.case)?;
        match study {
            Study::Converge => {
                SpaceCase::table1(self.method, self.regime, self.k, self.rho)?;
                if !(3..=10).contains(&self.levels) {
                    return Err(Error::InvalidArgument(format!("levels must be in 3..=10, got {}", self.levels)));
                }
            }
            Study::Limit => {
                if self.regime != Regime::Inv {
                    return Err(Error::InvalidArgument("limit studies use the inv regime".into()));
                }
                if self.rhos.len() < 2 {
                    return Err(Error::InvalidArgument("limit studies need at least two rho values".into()));
                }
                for &rho in &self.rhos {
                    SpaceCase::table1(self.method, self.regime, self.k, rho)?;
                }
            }
            Study::Infsup => {
                if self.levels == 0 {
                    return Err(Error::InvalidArgument("levels must be at least 1".into()));
                }
                for &rho in &self.rhos {
                    SpaceCase::table1(self.method, self.regime, self.k, rho)?;
                }
            }
            Study::Check => {}
        }
        Ok(())
    }

    pub fn case(&self) -> Result<SpaceCase> {
        SpaceCase::table1(self.method, self.regime, self.k, self.rho)
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}
