//! `sta-cost`: batch driver for the shortcut-cost library.
//!
//! Exit codes: 0 success, 1 configuration error, 2 Ω² validity violation,
//! 3 accuracy or integration failure.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{Format, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "sta-cost", version, about = "Intrinsic quantum cost of shortcuts to adiabaticity")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides the oracle seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "STA_COST_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Tabulate ω, Ω² and dΩ²/dt over the window.
    Protocol,
    /// Solve the mode equation and report Bogoliubov coefficients.
    Modes,
    /// Evaluate F[x, y] on a list of x.
    Fcurve,
    /// F[x, 1/2] with the exponential law alongside.
    Fig1,
    /// ν, μ, Δn and transition weights.
    Cost,
    /// Monte Carlo check with c-number driving fluctuations.
    Oracle,
    /// Wigner eigenfunction checks and the final-state decomposition.
    Wigner,
}

impl Command {
    fn default_format(self) -> Format {
        match self {
            Command::Protocol | Command::Modes | Command::Fcurve | Command::Fig1 => Format::Csv,
            Command::Cost | Command::Oracle | Command::Wigner => Format::Json,
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<sta_cost::Error>() {
        Some(sta_cost::Error::Validity { .. }) => 2,
        Some(
            sta_cost::Error::Accuracy { .. }
            | sta_cost::Error::Integration { .. }
            | sta_cost::Error::Decomposition { .. },
        ) => 3,
        _ => 1,
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(sta_cost::Error::Config("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::empty(),
    };
    let format = cli.format.or(cfg.output.format).unwrap_or(cli.command.default_format());
    let out = cli.out.clone().or_else(|| cfg.output.path.clone());
    let result = match cli.command {
        Command::Protocol => commands::cmd_protocol(&cfg, format),
        Command::Modes => commands::cmd_modes(&cfg, format),
        Command::Fcurve => commands::cmd_fcurve(&cfg, format),
        Command::Fig1 => commands::cmd_fig1(&cfg, format),
        Command::Cost => commands::cmd_cost(&cfg, format),
        Command::Oracle => commands::cmd_oracle(&cfg, format, cli.seed),
        Command::Wigner => commands::cmd_wigner(&cfg, format),
    }?;
    output::emit(&result.text, out.as_deref())?;
    Ok(result.code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
