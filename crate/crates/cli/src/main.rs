mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::{Failure, Finished};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qsim", version, about = "Simulate measurement-switched CZ gates on always-on Ising devices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for reports and CSV files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol and check its output state.
    Verify(Io),
    /// Evaluate the fidelity budget on a (λ, g) grid.
    Sweep(Io),
    /// Find the optimal coupling for each Rabi frequency.
    Optimal(Io),
    /// Reduced-state error of the measurement-failure model.
    DemoFailure(Io),
}

fn run(cmd: &Command) -> Result<Finished, Failure> {
    match cmd {
        Command::Verify(io) => commands::verify(&config::load(&io.config)?, &io.out),
        Command::Sweep(io) => commands::sweep_cmd(&config::load(&io.config)?, &io.out),
        Command::Optimal(io) => commands::optimal_cmd(&config::load(&io.config)?, &io.out),
        Command::DemoFailure(io) => commands::demo_failure(&config::load(&io.config)?, &io.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(Finished { pass: true, summary }) => {
            println!("PASS {summary}");
            ExitCode::SUCCESS
        }
        Ok(Finished { pass: false, summary }) => {
            println!("FAIL {summary}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg) | Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
