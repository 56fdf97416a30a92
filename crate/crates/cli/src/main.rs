use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rockland_cli::commands::{run_command, Command, Flags, Suite};
use rockland_cli::report::write_atomic;

#[derive(Parser)]
#[command(name = "rockland", version, about = "Homogeneous vector-field systems: lifting, fundamental solutions and control metrics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Model file in the rockland DSL.
    #[arg(long, global = true)]
    model: Option<PathBuf>,

    /// Relative tolerance of the command's main procedure
    /// (Γ quadrature: 1e-10; distance bisection: 1e-3).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for every random draw [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo samples per ball volume [default: 400].
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Write the JSON report here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,

    /// Write the CSV table here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Point list "x;y" (or "x" for ballvol), coordinates comma separated.
    /// Repeatable.
    #[arg(long, global = true, allow_hyphen_values = true)]
    at: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Degrees, dimensions, step and the Hörmander rank table.
    Analyze,
    /// Build the lifted group and run the structural checks.
    Lift,
    /// Evaluate Γ or X_I Γ at point pairs.
    Gamma {
        /// Comma-separated field names applied in x, e.g. "X1,X2".
        #[arg(long)]
        word: Option<String>,
    },
    /// Run selected check suites [default: fundsol,derivative].
    Verify {
        #[arg(long, value_delimiter = ',')]
        suite: Vec<Suite>,
    },
    /// Control distance between point pairs.
    Distance,
    /// Monte Carlo ball volumes.
    Ballvol {
        /// Radii [default: 1].
        #[arg(long, value_delimiter = ',')]
        radius: Vec<f64>,
    },
    /// Heat extension L + sign·∂_t.
    Heat {
        /// +1 or -1 [default: 1].
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<i32>,
    },
    /// Every applicable suite in one report.
    Report {
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<i32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut flags = Flags {
        tol: cli.tol,
        seed: cli.seed,
        samples: cli.samples,
        at: cli.at,
        ..Default::default()
    };
    let cmd = match cli.command {
        Cmd::Analyze => Command::Analyze,
        Cmd::Lift => Command::Lift,
        Cmd::Gamma { word } => {
            flags.word = word;
            Command::Gamma
        }
        Cmd::Verify { suite } => {
            flags.suites = suite;
            Command::Verify
        }
        Cmd::Distance => Command::Distance,
        Cmd::Ballvol { radius } => {
            flags.radius = radius;
            Command::Ballvol
        }
        Cmd::Heat { sign } => {
            flags.sign = sign;
            Command::Heat
        }
        Cmd::Report { sign } => {
            flags.sign = sign;
            Command::Report
        }
    };
    let path = cli.model.ok_or_else(|| anyhow::anyhow!("--model FILE is required"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut outcome = run_command(cmd, &text, &flags).map_err(|e| anyhow::anyhow!("{}: {e:#}", path.display()))?;
    if let Some(p) = &cli.csv {
        write_atomic(p, &outcome.csv)?;
        outcome.report.artifacts.push(p.display().to_string());
    }
    let json = outcome.report.to_json();
    match &cli.json {
        Some(p) => write_atomic(p, &json)?,
        None => println!("{json}"),
    }
    for c in &outcome.report.checks {
        if !c.passed() {
            eprintln!("FAIL {} residual={:?} tolerance={:e}", c.name, c.residual, c.tolerance);
        }
    }
    Ok(outcome.success())
}
