use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use greens_cli::{run_file, Command, Overrides};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Build,
    Verify,
    Sample,
    Solve,
}

/// Build, verify, sample and apply Green's matrices of self-adjoint
/// second-order matrix operators with Dirichlet ends.
#[derive(Parser)]
#[command(name = "greenmat", version)]
struct Args {
    /// Command to run; defaults to task.command in the config.
    command: Option<Cmd>,
    /// Job configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file (for build: the serialized solution bundle).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// general | compact | guess | all
    #[arg(long)]
    route: Option<String>,
    /// Lattice size as NX,NT.
    #[arg(long, value_name = "NX,NT")]
    lattice: Option<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let overrides = Overrides {
        command: args.command.map(|c| match c {
            Cmd::Build => Command::Build,
            Cmd::Verify => Command::Verify,
            Cmd::Sample => Command::Sample,
            Cmd::Solve => Command::Solve,
        }),
        out: args.out,
        route: args.route,
        lattice: args.lattice,
    };
    match run_file(&args.config, &overrides) {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
            let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("greenmat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
