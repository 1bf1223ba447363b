//! Job configuration files.
//!
//! ```toml
//! [operator]
//! n = 2
//! a = 0.0
//! b = 1.0
//! p = ["1", "1 + x"]
//! q = [0, "table:q2.dat"]
//! v = [4]            # upper triangle, row by row
//!
//! [numerics]
//! N = 1000
//! substeps = 1
//! route = "compact"
//!
//! [task]
//! command = "sample"
//! lattice = "21,21"
//! rhs = ["sin(pi*x)", 0]
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use greens_core::green::{GreenOptions, Route};
use greens_core::odeint::IntegratorOptions;
use greens_core::operator::{coupling_count, parse_coefficient_in, CoefficientFn, OperatorSpec};
use greens_core::verify::Tolerances;
use serde::Deserialize;

use crate::error::CliError;

/// A coefficient given either as a bare number or as an expression /
/// `table:PATH` string.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Text(String),
}

impl Coefficient {
    fn resolve(&self, base: &Path) -> Result<CoefficientFn<f64>, CliError> {
        match self {
            Coefficient::Number(v) => Ok(CoefficientFn::constant(*v)),
            Coefficient::Text(s) => Ok(parse_coefficient_in(s, base)?),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub p: Vec<Coefficient>,
    pub q: Vec<Coefficient>,
    #[serde(default)]
    pub v: Vec<Coefficient>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    #[serde(rename = "N", alias = "cells")]
    pub cells: usize,
    pub substeps: usize,
    pub route: String,
    pub cond_limit: f64,
    pub growth_cap: f64,
    pub singular_tol: f64,
    pub tol_symmetry: f64,
    pub tol_continuity: f64,
    pub tol_jump: f64,
    pub tol_delta: f64,
    pub tol_c_constancy: f64,
    pub tol_wronskian: f64,
    pub tol_boundary: f64,
    pub tol_route: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let tol = Tolerances::default();
        let green = GreenOptions::<f64>::default();
        let int = IntegratorOptions::<f64>::default();
        Self {
            cells: 1000,
            substeps: int.substeps,
            route: "compact".into(),
            cond_limit: green.cond_limit,
            growth_cap: int.growth_cap,
            singular_tol: green.singular_tol,
            tol_symmetry: tol.symmetry,
            tol_continuity: tol.continuity,
            tol_jump: tol.jump,
            tol_delta: tol.delta,
            tol_c_constancy: tol.c_constancy,
            tol_wronskian: tol.wronskian,
            tol_boundary: tol.boundary,
            tol_route: tol.route,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub command: Option<String>,
    pub lattice: Option<String>,
    #[serde(default)]
    pub rhs: Vec<Coefficient>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub operator: OperatorSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub task: TaskSection,
    /// Directory that relative table paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Route selection including the all-routes option.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    One(Route),
    All,
}

impl RouteChoice {
    pub fn routes(self) -> Vec<Route> {
        match self {
            RouteChoice::One(r) => vec![r],
            RouteChoice::All => Route::ALL.to_vec(),
        }
    }
}

impl FromStr for RouteChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(RouteChoice::All);
        }
        s.parse::<Route>()
            .map(RouteChoice::One)
            .map_err(|_| CliError::Config(format!("unknown route '{s}' (expected general, compact, guess or all)")))
    }
}

/// Parse `NX,NT`.
pub fn parse_lattice(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("lattice '{s}' must be NX,NT with positive integers"));
    let (nx, nt) = s.split_once(',').ok_or_else(bad)?;
    let nx: usize = nx.trim().parse().map_err(|_| bad())?;
    let nt: usize = nt.trim().parse().map_err(|_| bad())?;
    if nx == 0 || nt == 0 {
        return Err(bad());
    }
    Ok((nx, nt))
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| match e {
            CliError::Toml { message, .. } => CliError::Toml {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: JobConfig = toml::from_str(text).map_err(|e| CliError::Toml {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check_counts()?;
        Ok(cfg)
    }

    fn check_counts(&self) -> Result<(), CliError> {
        let op = &self.operator;
        let n = op.n;
        if n == 0 {
            return Err(CliError::Config("operator.n must be at least 1".into()));
        }
        for (name, got, want) in [("p", op.p.len(), n), ("q", op.q.len(), n), ("v", op.v.len(), coupling_count(n))] {
            if got != want {
                return Err(CliError::Config(format!(
                    "operator.{name} has {got} entries, expected {want} for n = {n}"
                )));
            }
        }
        if !self.task.rhs.is_empty() && self.task.rhs.len() != n {
            return Err(CliError::Config(format!(
                "task.rhs has {} entries, expected {n}",
                self.task.rhs.len()
            )));
        }
        if self.numerics.substeps == 0 {
            return Err(CliError::Config("numerics.substeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn operator_spec(&self) -> Result<OperatorSpec<f64>, CliError> {
        let resolve = |list: &[Coefficient]| -> Result<Vec<_>, CliError> {
            list.iter().map(|c| c.resolve(&self.base_dir)).collect()
        };
        let op = &self.operator;
        Ok(OperatorSpec::new(op.a, op.b, resolve(&op.p)?, resolve(&op.q)?, resolve(&op.v)?)?)
    }

    pub fn rhs(&self) -> Result<Vec<CoefficientFn<f64>>, CliError> {
        if self.task.rhs.is_empty() {
            return Err(CliError::Config("solve needs task.rhs".into()));
        }
        self.task.rhs.iter().map(|c| c.resolve(&self.base_dir)).collect()
    }

    pub fn route(&self) -> Result<RouteChoice, CliError> {
        self.numerics.route.parse()
    }

    pub fn integrator_options(&self) -> IntegratorOptions<f64> {
        IntegratorOptions {
            substeps: self.numerics.substeps,
            growth_cap: self.numerics.growth_cap,
        }
    }

    pub fn green_options(&self) -> GreenOptions<f64> {
        GreenOptions {
            cond_limit: self.numerics.cond_limit,
            singular_tol: self.numerics.singular_tol,
            c_constancy_tol: self.numerics.tol_c_constancy,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let n = &self.numerics;
        Tolerances {
            symmetry: n.tol_symmetry,
            continuity: n.tol_continuity,
            jump: n.tol_jump,
            delta: n.tol_delta,
            c_constancy: n.tol_c_constancy,
            wronskian: n.tol_wronskian,
            boundary: n.tol_boundary,
            route: n.tol_route,
        }
    }
}
