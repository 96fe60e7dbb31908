use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sr_cli::{run_analyze, run_classify, run_flag, run_normal_form, DEFAULT_MAX_STEP};
use sr_core::batch::Execution;

/// Type map, flag and groupoid-case analysis of corank-one sub-Riemannian
/// structures.
#[derive(Parser)]
#[command(name = "srtool", version)]
struct Cli {
    /// Evaluate samples on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-sample type, stratum and isotropy as CSV, with a summary.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify the assumptions and decide the groupoid case (dimension 5).
    Classify { config: PathBuf },
    /// Flag ranks, step and equiregularity over the samples.
    Flag {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_STEP)]
        max_step: usize,
    },
    /// Orthogonal block normal form of a skew matrix read from CSV.
    NormalForm {
        matrix: PathBuf,
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match &cli.command {
        Command::Analyze { config, out } => run_analyze(config, out, exec),
        Command::Classify { config } => run_classify(config, exec),
        Command::Flag { config, max_step } => run_flag(config, *max_step, exec),
        Command::NormalForm { matrix, out_prefix } => run_normal_form(matrix, out_prefix),
    };
    match result {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
