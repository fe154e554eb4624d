use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gfl_sim::cli;
use gfl_sim::config::load_config;

#[derive(Parser)]
#[command(
    name = "gfl-sim",
    version,
    about = "Design and simulation toolkit for a grid-following inverter serving fast-transient loads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (flat dotted keys, unit-suffixed).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for seed studies and sweep grids.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sequential gain-selection procedure (exit 2 when infeasible).
    Design(Common),
    /// Integrate the closed loop over the configured load scenario.
    Simulate(Common),
    /// Sweep the gain bounds over a load ramp-rate grid.
    Feasibility {
        #[command(flatten)]
        common: Common,
        /// Second config whose curves are exported alongside the primary.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Generate a stochastic load trace and its certified bounds.
    Loadgen(Common),
    /// Run the built-in validation suite (exit 0 only if everything passes).
    Validate(Common),
}

fn run() -> Result<i32, (String, i32)> {
    let parsed = Cli::try_parse().map_err(|e| (e.to_string(), cli::EXIT_USAGE))?;
    let common = match &parsed.command {
        Command::Design(c)
        | Command::Simulate(c)
        | Command::Loadgen(c)
        | Command::Validate(c) => c,
        Command::Feasibility { common, .. } => common,
    };
    let mut cfg = load_config(&common.config)
        .map_err(|e| (format!("{}: {e}", common.config.display()), cli::EXIT_USAGE))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.load.seed = seed;
    }
    let out_dir = common.output.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let jobs = common.jobs.max(1);

    let outcome = match &parsed.command {
        Command::Design(_) => cli::cmd_design(&cfg, &out_dir),
        Command::Simulate(_) => cli::cmd_simulate(&cfg, &out_dir),
        Command::Feasibility { overlay, .. } => {
            let overlay_cfg = match overlay {
                Some(path) => Some(
                    load_config(path)
                        .map_err(|e| (format!("{}: {e}", path.display()), cli::EXIT_USAGE))?,
                ),
                None => None,
            };
            cli::cmd_feasibility(&cfg, overlay_cfg.as_ref(), &out_dir)
        }
        Command::Loadgen(_) => cli::cmd_loadgen(&cfg, &out_dir),
        Command::Validate(_) => cli::cmd_validate(&cfg, jobs, &out_dir),
    };
    outcome.map_err(|e| (e.to_string(), cli::exit_code_for(&e)))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err((message, code)) => {
            eprintln!("{message}");
            ExitCode::from(code as u8)
        }
    }
}
