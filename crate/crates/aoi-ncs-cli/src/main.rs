use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aoi_ncs::solver::CostKind;
use aoi_ncs_cli::runner::{self, CliError};
use aoi_ncs_cli::{config, Experiment};

/// Scheduler synthesis and Monte Carlo evaluation for multi-loop networked
/// control over a shared lossy channel.
#[derive(Parser)]
#[command(name = "aoi-ncs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for solving and simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one policy and write it as a binary policy file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Policy file to write.
        #[arg(long)]
        out: PathBuf,
        /// Stage cost to minimize (error -> DES, aoi -> AoIS).
        #[arg(long, value_enum, default_value_t = CostArg::Error)]
        cost: CostArg,
    },
    /// Evaluate schedulers (or explicit policy files) and emit CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pre-solved policy file; may repeat. When given, only these
        /// policies are simulated.
        #[arg(long)]
        policy: Vec<PathBuf>,
    },
    /// Solve and simulate the full (scheduler x M x gamma) grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate every scheduler kind side by side.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Error,
    Aoi,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }

    let load_experiment = |path: &PathBuf| -> Result<Experiment, CliError> {
        let mut exp = config::load(path)?;
        if let Some(seed) = cli.seed {
            exp.sim.seed = seed;
        }
        Ok(exp)
    };

    match &cli.command {
        Command::Solve { config, out, cost } => {
            let exp = load_experiment(config)?;
            let cost = match cost {
                CostArg::Error => CostKind::Error,
                CostArg::Aoi => CostKind::Aoi,
            };
            let outcome = runner::cmd_solve(&exp, cost, out)?;
            println!(
                "solved {} states in {} sweeps, final residual {:.6e}, {:.2}s -> {}",
                outcome.states,
                outcome.sweeps,
                outcome.final_residual,
                outcome.elapsed.as_secs_f64(),
                outcome.out.display()
            );
            Ok(())
        }
        Command::Simulate {
            config,
            out,
            policy,
        } => {
            let exp = load_experiment(config)?;
            let rows = runner::cmd_simulate(&exp, policy)?;
            let out = out.clone().or_else(|| exp.output.clone());
            runner::emit_csv(&rows, exp.loop_count(), out.as_deref())
        }
        Command::Sweep { config, out } => {
            let exp = load_experiment(config)?;
            let rows = runner::cmd_sweep(&exp)?;
            let out = out.clone().or_else(|| exp.output.clone());
            runner::emit_csv(&rows, exp.loop_count(), out.as_deref())
        }
        Command::Compare { config, out } => {
            let exp = load_experiment(config)?;
            let rows = runner::cmd_compare(&exp)?;
            let out = out.clone().or_else(|| exp.output.clone());
            runner::emit_csv(&rows, exp.loop_count(), out.as_deref())
        }
    }
}
