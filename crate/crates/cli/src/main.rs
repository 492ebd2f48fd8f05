mod config;
mod error;
mod figure;
mod output;
mod scenario;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Init, Method, RunConfig, Scenario};
use error::CliError;

/// Dynamics of a lossy Jaynes-Cummings system at zero temperature.
#[derive(Parser)]
#[command(name = "lossyjc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start from the Fock state |g,n>.
    Fock {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Start from |g> times a coherent field of real amplitude alpha.
    Coherent {
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Start from a state of the one-excitation manifold.
    Single {
        #[arg(long, value_enum, default_value = "plus")]
        init: Init,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the microscopic master equation against the phenomenological one.
    Compare {
        #[arg(long, value_enum, default_value = "g1")]
        init: Init,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate the data behind one of the preset figures.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Args)]
struct Common {
    /// Decay rate in units of the coupling.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    gamma: f64,
    /// Detuning in units of the coupling.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    delta: f64,
    /// Final time, as λt.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    tmax: f64,
    /// Number of grid points including both ends.
    #[arg(long, default_value_t = 2001)]
    steps: usize,
    #[arg(long, value_enum, default_value = "analytic")]
    method: Method,
    /// Highest excitation kept (defaults to what the initial state needs).
    #[arg(long)]
    cutoff: Option<u32>,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Common {
    fn config(&self, scenario: Scenario) -> RunConfig {
        RunConfig {
            scenario,
            n: None,
            alpha: None,
            init: None,
            gamma: self.gamma,
            delta: self.delta,
            tmax: self.tmax,
            steps: self.steps,
            method: self.method,
            cutoff: 0,
            format: self.format,
            note: None,
        }
    }
}

fn run_one(config: RunConfig, common: &Common) -> Result<(), CliError> {
    let config = config.resolve(common.cutoff)?;
    if let Some(note) = &config.note {
        eprintln!("note: {note}");
    }
    let table = scenario::run(&config)?;
    let text = output::render(&config, &table);
    match &common.output {
        Some(path) => output::write_atomic(path, &text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fock { n, common } => {
            run_one(RunConfig { n: Some(n), ..common.config(Scenario::Fock) }, &common)
        }
        Command::Coherent { alpha, common } => {
            run_one(RunConfig { alpha: Some(alpha), ..common.config(Scenario::Coherent) }, &common)
        }
        Command::Single { init, common } => run_one(
            RunConfig { init: Some(init), ..common.config(Scenario::SingleExcitation) },
            &common,
        ),
        Command::Compare { init, common } => {
            if !matches!(init, Init::G1 | Init::E0) {
                return Err(CliError::Config("compare takes --init g1 or e0".into()));
            }
            run_one(RunConfig { init: Some(init), ..common.config(Scenario::Compare) }, &common)
        }
        Command::Figure { id, output_dir, format } => {
            for path in figure::generate(id, &output_dir, format)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lossyjc: {e}");
            e.exit_code()
        }
    }
}
