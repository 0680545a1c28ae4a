mod commands;
mod inputs;
mod report;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{BoundaryArgs, Settings};
use report::{CliError, Exit, Outcome, Report, Timing};

/// Plurisubharmonicity and convexity checks for calibrations on flat space.
#[derive(Parser)]
#[command(name = "calgeom", version)]
struct Cli {
    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Verdict tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Multistart budget per search.
    #[arg(long, global = true, default_value_t = 64)]
    starts: usize,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Expected verdict; a mismatch exits with code 1.
    #[arg(long, global = true)]
    assert: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Catalog inspection.
    Calibrations {
        #[command(subcommand)]
        action: ListAction,
    },
    /// Comass of a calibration by multistart ascent.
    Comass {
        #[arg(long)]
        calibration: String,
    },
    /// φ-plurisubharmonicity of a scalar expression.
    Psh {
        #[command(subcommand)]
        action: PshAction,
    },
    /// Free dimension by sampling and targeted constructions.
    Freedim {
        #[arg(long)]
        calibration: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Free-subspace test.
    Free {
        #[command(subcommand)]
        action: FreeAction,
    },
    /// Boundary φ-convexity of a domain `{ρ < 0}`.
    Boundary {
        #[command(subcommand)]
        action: BoundaryAction,
    },
    /// Ellipticity of a calibration.
    Elliptic {
        #[command(subcommand)]
        action: EllipticAction,
    },
    /// Mollifying Laplacian from φ-plane projectors.
    Mollify {
        #[arg(long)]
        calibration: String,
    },
    /// Cross-module identities on every catalog calibration.
    IdentitySuite {
        /// Random cases per identity and calibration.
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

#[derive(Subcommand)]
enum ListAction {
    List,
}

#[derive(Subcommand)]
enum PshAction {
    Check {
        #[arg(long)]
        calibration: String,
        #[arg(long)]
        expr: String,
        #[arg(long, conflicts_with = "grid")]
        points: Option<PathBuf>,
        /// `min1,..,minN:max1,..,maxN:steps`
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
}

#[derive(Subcommand)]
enum FreeAction {
    Subspace {
        #[arg(long)]
        calibration: String,
        #[arg(long)]
        basis: PathBuf,
    },
}

#[derive(Subcommand)]
enum BoundaryAction {
    Check {
        #[arg(long)]
        calibration: Option<String>,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, conflicts_with = "grid")]
        points: Option<PathBuf>,
        /// Grid projected onto `{ρ = 0}` by Newton steps.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Job file with calibration, rho_expr, points or grid, tol, seed, budget.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EllipticAction {
    Check {
        #[arg(long)]
        calibration: String,
    },
}

fn dispatch(cli: &Cli, settings: &mut Settings) -> Result<Outcome, CliError> {
    let expect = cli.assert.as_deref();
    let load = |spec: &str| inputs::calibration(spec, &settings.search());
    match &cli.command {
        Command::Calibrations { action: ListAction::List } => commands::calibrations_list(),
        Command::Comass { calibration } => commands::comass_cmd(&load(calibration)?, settings, expect),
        Command::Psh { action: PshAction::Check { calibration, expr, points, grid } } => {
            commands::psh_check(&load(calibration)?, expr, points.as_deref(), grid.as_deref(), settings, expect)
        }
        Command::Freedim { calibration, trials } => commands::freedim(&load(calibration)?, *trials, settings, expect),
        Command::Free { action: FreeAction::Subspace { calibration, basis } } => commands::free_subspace(&load(calibration)?, basis, settings, expect),
        Command::Boundary { action: BoundaryAction::Check { calibration, rho, points, grid, config } } => {
            let args = BoundaryArgs {
                calibration: calibration.as_deref(),
                rho: rho.as_deref(),
                points: points.as_deref(),
                grid: grid.as_deref(),
                config: config.as_deref(),
            };
            let (out, used) = commands::boundary(args, settings, expect)?;
            *settings = used;
            Ok(out)
        }
        Command::Elliptic { action: EllipticAction::Check { calibration } } => commands::elliptic(&load(calibration)?, settings, expect),
        Command::Mollify { calibration } => commands::mollify(&load(calibration)?, settings),
        Command::IdentitySuite { cases } => Ok(suite::outcome(settings.seed, *cases)?),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("calgeom: cannot size the worker pool: {e}");
            return ExitCode::from(Exit::Usage as u8);
        }
    }
    let mut settings = Settings { seed: cli.seed, tol: cli.tol, starts: cli.starts.max(1) };
    let (outcome, error) = match dispatch(&cli, &mut settings) {
        Ok(o) => (o, None),
        Err(e) => (Outcome { calibration: None, rows: Vec::new(), exit: e.exit }, Some(e.message)),
    };
    if let Some(msg) = &error {
        eprintln!("calgeom: {msg}");
    }
    let exit = outcome.exit;
    let report = Report {
        command: argv,
        calibration: outcome.calibration,
        results: outcome.rows.into_iter().map(|r| r.into_value()).collect(),
        error,
        exit_code: exit as i32,
        seed: settings.seed,
        version: env!("CARGO_PKG_VERSION"),
        timing: Timing { elapsed_ms: start.elapsed().as_secs_f64() * 1e3 },
    };
    match serde_json::to_string_pretty(&report) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("calgeom: cannot serialize report: {e}");
            return ExitCode::from(Exit::CheckFailed as u8);
        }
    }
    eprintln!("calgeom: {} result rows, exit {} after {:.1} ms", report.results.len(), exit as i32, report.timing.elapsed_ms);
    ExitCode::from(exit as u8)
}
