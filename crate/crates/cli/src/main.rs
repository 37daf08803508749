use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latticeflux_cli::config::Recipe;
use latticeflux_cli::{run, validate, RunOptions, EXIT_CHECKS_FAILED, EXIT_CONFIG};

/// Energy transport experiments on boundary-driven lattices.
///
/// Exit status: 0 when every check of the recipe passes, 1 when a check
/// fails, 2 for configuration errors, 3 when the computation itself fails.
#[derive(Parser)]
#[command(name = "latticeflux", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output.dir, else out/<recipe>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized inputs; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Stamp CSV headers with the current time.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Flux versus hot-bath temperature, fermions and bosons.
    Figure2(RunArgs),
    /// Steady flux against transport length.
    SizeScan(RunArgs),
    /// Per-channel fluxes of a uniform lattice.
    ModeTable(RunArgs),
    /// Spin ladder against its Jordan-Wigner fermionization.
    JwVerify(RunArgs),
    /// MSD curvature of a ladder initial state.
    LadderCtplot(RunArgs),
    /// Alternating, insertion and jump-image states of the ladder.
    SubspaceCheck(RunArgs),
    /// Correlation-matrix fluxes against the dense Liouvillian.
    OracleCompare(RunArgs),
    /// Check a config and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Recipe to validate for, if the file has no `recipe` key.
        #[arg(long)]
        recipe: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (recipe, args) = match cli.command {
        Command::Figure2(a) => (Recipe::Figure2, a),
        Command::SizeScan(a) => (Recipe::SizeScan, a),
        Command::ModeTable(a) => (Recipe::ModeTable, a),
        Command::JwVerify(a) => (Recipe::JwVerify, a),
        Command::LadderCtplot(a) => (Recipe::LadderCtplot, a),
        Command::SubspaceCheck(a) => (Recipe::SubspaceCheck, a),
        Command::OracleCompare(a) => (Recipe::OracleCompare, a),
        Command::Validate { config, recipe } => {
            let recipe = match recipe.map(|r| r.parse::<Recipe>()).transpose() {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
            };
            return match validate(&config, recipe) {
                Ok(cfg) => {
                    print!("{}", toml::to_string(&cfg).expect("config serializes"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    for p in &e.problems {
                        eprintln!("error: {p}");
                    }
                    ExitCode::from(EXIT_CONFIG as u8)
                }
            };
        }
    };
    let opts = RunOptions {
        recipe,
        config: args.config,
        out: args.out,
        seed: args.seed,
        timestamp: args.timestamp,
    };
    match run(&opts) {
        Ok(report) => {
            for c in &report.output.checks {
                println!("{}", c.describe());
            }
            for w in &report.output.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.output.passed() {
                println!("{recipe}: PASS");
                ExitCode::SUCCESS
            } else {
                println!("{recipe}: FAIL");
                ExitCode::from(EXIT_CHECKS_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
