use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use unicov::tower::SolveMode;
use unicov_cli::commands::{self, CommandError, CoverArgs, Outcome};
use unicov_cli::io::{canonical_json, Loader};
use unicov_cli::report::{Budgets, Report, INPUT_ERROR, SCHEMA};

/// Uniform covers, quotients, towers and group actions on finite filtered spaces.
#[derive(Parser, Debug)]
#[command(name = "unicov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add wall-clock time to the report (makes reports non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(flatten)]
    budgets: BudgetArgs,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Breadth-first rounds when building a cover.
    #[arg(long, global = true, env = "UNICOV_RADIUS", default_value_t = 8)]
    radius: usize,
    /// Tietze simplification passes per homotopy decision.
    #[arg(long, global = true, env = "UNICOV_IDENT_BUDGET", default_value_t = 64)]
    ident_budget: usize,
    /// Coset table rows per homotopy decision.
    #[arg(long, global = true, env = "UNICOV_COSET_ROWS", default_value_t = 100_000)]
    coset_rows: usize,
    /// Largest thread enumeration for tower limits.
    #[arg(long, global = true, env = "UNICOV_PRODUCT_BOUND", default_value_t = 1_000_000)]
    product_bound: usize,
    /// Largest group materialized from generators.
    #[arg(long, global = true, env = "UNICOV_GROUP_BOUND", default_value_t = 10_000)]
    group_bound: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Forward,
    Backward,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chain components, H1 per scale, bonding maps and critical scales.
    Analyze {
        space: PathBuf,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Write the H1 barcode as CSV.
        #[arg(long)]
        barcode: Option<PathBuf>,
    },
    /// Build the cover at one scale and check its endpoint map.
    Cover {
        space: PathBuf,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long)]
        scale: usize,
        #[arg(long)]
        basepoint: Option<String>,
        /// Write the cover graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Generation, chain lifting and approximate uniqueness of a map.
    Map { map: PathBuf },
    /// Fiber quotient and factorization of a map at one scale.
    Quotient {
        map: PathBuf,
        #[arg(long, default_value_t = 1)]
        scale: usize,
        /// Also rebuild the map as a limit of its fiber quotients.
        #[arg(long)]
        reconstruct: bool,
    },
    /// Limits of space towers, or lim1 and telescoping for abelian towers.
    Tower {
        tower: PathBuf,
        #[arg(long)]
        lim1: bool,
        #[arg(long, value_enum)]
        solve: Option<Mode>,
    },
    /// Diagnose a group action, quotient it and rebuild it as a limit.
    Action {
        action: PathBuf,
        #[arg(long, default_value_t = 1)]
        scale: usize,
    },
    /// Re-check the counterexamples recorded in a report.
    Verify {
        #[arg(long)]
        replay: PathBuf,
    },
}

fn run(cli: &Cli, loader: &mut Loader, budgets: &Budgets) -> Result<Outcome, CommandError> {
    match &cli.command {
        Command::Analyze { space, radii, barcode } => {
            commands::analyze(loader, space, radii.as_deref(), barcode.as_deref())
        }
        Command::Cover {
            space,
            radii,
            scale,
            basepoint,
            dot,
        } => commands::cover(
            loader,
            &CoverArgs {
                input: space,
                radii: radii.as_deref(),
                scale: *scale,
                basepoint: basepoint.as_deref(),
                dot: dot.as_deref(),
            },
            budgets,
        ),
        Command::Map { map } => commands::map(loader, map),
        Command::Quotient {
            map,
            scale,
            reconstruct,
        } => commands::quotient(loader, map, *scale, *reconstruct, budgets),
        Command::Tower { tower, lim1, solve } => {
            let solve = solve.map(|m| match m {
                Mode::Forward => SolveMode::Forward,
                Mode::Backward => SolveMode::Backward,
            });
            commands::tower(loader, tower, *lim1, solve, budgets)
        }
        Command::Action { action, scale } => commands::action(loader, action, *scale, budgets),
        Command::Verify { replay } => commands::replay(loader, replay, budgets),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let b = &cli.budgets;
    let budgets = Budgets {
        radius: b.radius,
        ident_budget: b.ident_budget,
        coset_rows: b.coset_rows,
        product_bound: b.product_bound,
        group_bound: b.group_bound,
    };
    let started = Instant::now();
    let mut loader = Loader::default();
    let outcome = match run(&cli, &mut loader, &budgets) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("unicov: {e}");
            return ExitCode::from(INPUT_ERROR as u8);
        }
    };
    let exit_code = outcome.status.exit_code();
    let report = Report {
        schema: SCHEMA.to_owned(),
        command: outcome.command,
        inputs: loader.digests,
        budgets,
        status: outcome.status,
        exit_code,
        result: outcome.result,
        replay: outcome.replay,
        timing_ms: cli.timing.then(|| started.elapsed().as_millis()),
    };
    for (path, text) in &outcome.exports {
        if let Err(e) = fs::write(path, text) {
            eprintln!("unicov: {}: {e}", path.display());
            return ExitCode::from(INPUT_ERROR as u8);
        }
    }
    let text = canonical_json(&report);
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("unicov: {}: {e}", path.display());
                return ExitCode::from(INPUT_ERROR as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(exit_code as u8)
}
