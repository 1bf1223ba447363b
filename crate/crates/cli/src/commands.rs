use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use greens_core::green::{build, GreensMatrix, Route};
use greens_core::odeint::{integrate_fundamental, SolutionBundle};
use greens_core::operator::{Grid, OperatorSpec};
use greens_core::solve::solve_bvp;
use greens_core::verify::{check_route_equivalence, full_report, Lattice, VerificationReport};
use greens_core::Matrix;

use crate::config::{parse_lattice, JobConfig, RouteChoice};
use crate::error::{CliError, EXIT_OK, EXIT_VERIFY_FAILED};
use crate::format::g17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Build,
    Verify,
    Sample,
    Solve,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "build" => Ok(Command::Build),
            "verify" => Ok(Command::Verify),
            "sample" => Ok(Command::Sample),
            "solve" => Ok(Command::Solve),
            _ => Err(CliError::Config(format!(
                "unknown command '{s}' (expected build, verify, sample or solve)"
            ))),
        }
    }
}

/// Command-line settings; each overrides the matching config entry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub route: Option<String>,
    pub lattice: Option<String>,
}

/// What a command produced. `stdout` is empty when the main output went to
/// a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run_file(config: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let cfg = JobConfig::load(config)?;
    run(&cfg, overrides)
}

pub fn run(cfg: &JobConfig, overrides: &Overrides) -> Result<Outcome, CliError> {
    let command = match (overrides.command, &cfg.task.command) {
        (Some(c), _) => c,
        (None, Some(s)) => Command::parse(s)?,
        (None, None) => return Err(CliError::Config("no command given on the command line or in task.command".into())),
    };
    let route: RouteChoice = match &overrides.route {
        Some(r) => r.parse()?,
        None => cfg.route()?,
    };
    let lattice = match overrides.lattice.as_deref().or(cfg.task.lattice.as_deref()) {
        Some(s) => parse_lattice(s)?,
        None => (21, 21),
    };
    let out = overrides.out.clone().or_else(|| cfg.task.out.as_ref().map(|p| cfg.base_dir.join(p)));
    let job = Job::prepare(cfg)?;
    match command {
        Command::Build => job.build(route, out.as_deref()),
        Command::Verify => job.verify(route, lattice).and_then(|o| emit(o, out.as_deref())),
        Command::Sample => job.sample(single(route, "sample")?, lattice).and_then(|o| emit(o, out.as_deref())),
        Command::Solve => job.solve(single(route, "solve")?).and_then(|o| emit(o, out.as_deref())),
    }
}

fn single(route: RouteChoice, command: &str) -> Result<Route, CliError> {
    match route {
        RouteChoice::One(r) => Ok(r),
        RouteChoice::All => Err(CliError::Config(format!("{command} needs a single route, not 'all'"))),
    }
}

fn emit(mut outcome: Outcome, out: Option<&Path>) -> Result<Outcome, CliError> {
    if let Some(path) = out {
        write_file(path, &outcome.stdout)?;
        outcome.stdout.clear();
    }
    Ok(outcome)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Job<'a> {
    cfg: &'a JobConfig,
    spec: Arc<OperatorSpec<f64>>,
    bundle: Arc<SolutionBundle<f64>>,
}

impl<'a> Job<'a> {
    fn prepare(cfg: &'a JobConfig) -> Result<Self, CliError> {
        let spec = cfg.operator_spec()?;
        let grid = Grid::uniform(spec.a(), spec.b(), cfg.numerics.cells)?;
        spec.validate_on(&grid)?;
        let bundle = integrate_fundamental(&spec, &grid, cfg.integrator_options())?;
        Ok(Self { cfg, spec: Arc::new(spec), bundle: Arc::new(bundle) })
    }

    fn green(&self, route: Route) -> Result<GreensMatrix<f64>, CliError> {
        Ok(build(route, self.spec.clone(), self.bundle.clone(), &self.cfg.green_options())?)
    }

    fn build(&self, route: RouteChoice, out: Option<&Path>) -> Result<Outcome, CliError> {
        let greens: Vec<GreensMatrix<f64>> =
            route.routes().into_iter().map(|r| self.green(r)).collect::<Result<_, _>>()?;
        let c = greens[0].constant();
        let mut s = String::new();
        let names: Vec<&str> = greens.iter().map(|g| g.route().name()).collect();
        writeln!(s, "routes = {}", names.join(",")).unwrap();
        writeln!(s, "N = {}", self.bundle.grid().cells()).unwrap();
        writeln!(s, "C = {}", matrix_literal(c.matrix())).unwrap();
        let m = c.matrix();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                writeln!(s, "C[{},{}] = {}", i + 1, j + 1, g17(m[(i, j)])).unwrap();
            }
        }
        writeln!(s, "condition = {}", g17(c.condition())).unwrap();
        writeln!(s, "relative_condition = {}", g17(c.relative_condition())).unwrap();
        writeln!(s, "max_variation = {}", g17(c.max_variation())).unwrap();
        writeln!(s, "max_wronskian_condition = {}", g17(self.bundle.max_wronskian_condition())).unwrap();
        let mut stderr = String::new();
        if let Some(path) = out {
            write_file(path, &bundle_csv(&self.bundle))?;
            writeln!(stderr, "bundle written to {}", path.display()).unwrap();
        }
        Ok(Outcome { stdout: s, stderr, code: EXIT_OK })
    }

    fn verify(&self, route: RouteChoice, (nx, nt): (usize, usize)) -> Result<Outcome, CliError> {
        let lattice = Lattice::interior(self.spec.a(), self.spec.b(), nx, nt);
        let tol = self.cfg.tolerances();
        let routes = route.routes();
        let greens: Vec<GreensMatrix<f64>> = routes.iter().map(|&r| self.green(r)).collect::<Result<_, _>>()?;
        let mut report = VerificationReport::default();
        for g in &greens {
            let single = full_report(g, &lattice, &tol)?;
            report.extend(if greens.len() > 1 { single.prefixed(g.route().name()) } else { single });
        }
        if greens.len() > 1 {
            let reference = greens.iter().position(|g| g.route() == Route::Compact).unwrap_or(0);
            let others: Vec<&GreensMatrix<f64>> =
                greens.iter().enumerate().filter(|(k, _)| *k != reference).map(|(_, g)| g).collect();
            report.push(check_route_equivalence(&greens[reference], &others, &lattice, tol.route)?);
        }
        let failed = report.records.iter().filter(|r| !r.pass).count();
        let stderr = format!("{} of {} checks passed\n", report.records.len() - failed, report.records.len());
        let code = if failed == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED };
        Ok(Outcome { stdout: report.to_string(), stderr, code })
    }

    fn sample(&self, route: Route, (nx, nt): (usize, usize)) -> Result<Outcome, CliError> {
        let g = self.green(route)?;
        let lattice = Lattice::closed(self.spec.a(), self.spec.b(), nx, nt);
        let n = g.dim();
        let mut s = String::from("x,t,i,j,G\n");
        for &x in &lattice.xs {
            for &t in &lattice.ts {
                let m = g.evaluate(x, t)?;
                for i in 0..n {
                    for j in 0..n {
                        writeln!(s, "{},{},{},{},{}", g17(x), g17(t), i + 1, j + 1, g17(m[(i, j)])).unwrap();
                    }
                }
            }
        }
        Ok(Outcome { stdout: s, stderr: String::new(), code: EXIT_OK })
    }

    fn solve(&self, route: Route) -> Result<Outcome, CliError> {
        let g = self.green(route)?;
        let h = self.cfg.rhs()?;
        let grid = self.bundle.grid();
        let sol = solve_bvp(&g, &h, grid)?;
        let n = g.dim();
        let mut s = String::from("x");
        for i in 1..=n {
            write!(s, ",y{i}").unwrap();
        }
        s.push('\n');
        for (k, &x) in grid.nodes().iter().enumerate() {
            s.push_str(&g17(x));
            for v in &sol.y[k] {
                write!(s, ",{}", g17(*v)).unwrap();
            }
            s.push('\n');
        }
        let stderr = format!("residual = {}\nboundary = {}\n", g17(sol.residual), g17(sol.boundary));
        Ok(Outcome { stdout: s, stderr, code: EXIT_OK })
    }
}

fn matrix_literal(m: &Matrix<f64>) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let entries: Vec<String> = m.row(i).iter().map(|&v| g17(v)).collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Node values of `U, V, U′, V′`, one row per grid node.
fn bundle_csv(bundle: &SolutionBundle<f64>) -> String {
    let n = bundle.dim();
    let mut s = String::from("x");
    for block in ["U", "V", "dU", "dV"] {
        for i in 1..=n {
            for j in 1..=n {
                write!(s, ",{block}{i}_{j}").unwrap();
            }
        }
    }
    s.push('\n');
    for (k, &x) in bundle.grid().nodes().iter().enumerate() {
        let b = bundle.at_node(k);
        s.push_str(&g17(x));
        for m in [&b.u, &b.v, &b.du, &b.dv] {
            for v in m.as_slice() {
                write!(s, ",{}", g17(*v)).unwrap();
            }
        }
        s.push('\n');
    }
    s
}
