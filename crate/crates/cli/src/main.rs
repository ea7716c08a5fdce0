use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use gmol_shape::config::{read_config, Mode, Overrides};
use gmol_shape::output::{emit_outputs, to_json};
use gmol_shape::run::run;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Forward,
    Inverse,
    Validate,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Forward => Mode::Forward,
            Command::Inverse => Mode::Inverse,
            Command::Validate => Mode::Validate,
        }
    }
}

/// Recover the internal boundary of an annular domain from Cauchy data.
#[derive(Debug, Parser)]
#[command(name = "gmol-shape", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving shape.csv, field.csv, summary.json and shape.svg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of line intervals N.
    #[arg(long)]
    lines: Option<usize>,
    /// Number of angular nodes M.
    #[arg(long)]
    angles: Option<usize>,
    /// Neumann penalty weight K.
    #[arg(long)]
    penalty: Option<f64>,
    /// Fixed-point tolerance of the sweep.
    #[arg(long)]
    tol: Option<f64>,
    /// Optimizer iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let err = json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{err}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        mode: Some(cli.command.into()),
        lines: cli.lines,
        angles: cli.angles,
        penalty: cli.penalty,
        tol: cli.tol,
        max_iters: cli.max_iters,
        out: cli.out,
    };
    let config = match read_config(&cli.config).and_then(|c| c.with_overrides(&overrides)) {
        Ok(c) => c,
        Err(e) => return fail("configuration", e.to_string(), 2),
    };
    let artifacts = match run(&config) {
        Ok(a) => a,
        Err(e) => return fail(e.kind(), e.to_string(), e.exit_code() as u8),
    };
    if let Some(dir) = &config.out {
        if let Err(e) = emit_outputs(&artifacts, dir) {
            return fail("io", e.to_string(), 3);
        }
    }
    print!("{}", to_json(&artifacts.summary));
    if config.mode == Mode::Validate {
        for c in &artifacts.summary.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            eprintln!("{status} {}: {:.3e} {} {:.3e}", c.name, c.value, c.relation, c.bound);
        }
        if !artifacts.summary.all_checks_passed() {
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
