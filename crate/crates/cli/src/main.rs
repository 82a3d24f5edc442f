//! `qpvkex`: QPV and key-exchange simulations, security bounds and figure
//! data from one binary.

mod bounds;
mod output;
mod parse;
mod schema;
mod simulate;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::{invalid, Format, Report, Result, Sink};

#[derive(Parser)]
#[command(name = "qpvkex", version, about = "Position-verified quantum key exchange: simulator and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write results here instead of standard output; relative paths land in --out-dir.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Directory for results; without --output a file named after the command is written there.
    #[arg(long, global = true, env = "QPVKEX_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads for independent trials and sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulations.
    #[command(subcommand)]
    Simulate(simulate::SimulateCmd),
    /// Evaluate security bounds.
    #[command(subcommand)]
    Bounds(bounds::BoundsCmd),
    /// Constant-weight key codec.
    #[command(subcommand)]
    Codec(tools::CodecCmd),
    /// Polynomial hash family.
    #[command(subcommand)]
    Hash(tools::HashCmd),
    /// Check a config or δ̃ table and print it with defaults filled in.
    Validate(tools::ValidateArgs),
    /// Published JSON schemas.
    Schema(schema::SchemaArgs),
}

pub struct Ctx {
    pub parallel: bool,
}

fn dispatch(cli: Cli) -> Result<()> {
    if cli.parallel == 0 {
        return Err(invalid("--parallel must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(cli.parallel).build_global().map_err(output::runtime)?;
    let ctx = Ctx { parallel: cli.parallel > 1 };
    let report: Report = match cli.command {
        Command::Simulate(c) => simulate::run(c, &ctx)?,
        Command::Bounds(c) => bounds::run(c, &ctx)?,
        Command::Codec(c) => tools::codec(c)?,
        Command::Hash(c) => tools::hash(c)?,
        Command::Validate(a) => tools::validate(a)?,
        Command::Schema(a) => schema::run(a)?,
    };
    Sink { format: cli.format, output: cli.output, out_dir: cli.out_dir }.emit(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qpvkex: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
