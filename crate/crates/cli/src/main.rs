use clap::{Parser, Subcommand};
use nonlocal_fredholm::probes::CANONICAL_SEED;
use nonlocal_fredholm_cli::commands::{self, Options, Outcome};
use nonlocal_fredholm_cli::verify::Suite;
use nonlocal_fredholm_cli::{Result, THREADS_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "nonlocal-fredholm", version, about = "Mixed-order nonlocal operators: constants, spectra and solves")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Omit the timestamp line so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// c_{s,n}, γ_{1−s,n} and their cross relation.
    Constants {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
    },
    /// Spectral D^s of the configured right-hand-side profile.
    Gradient {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        s: f64,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = CANONICAL_SEED)]
        seed: u64,
    },
    /// Check the structural hypotheses on the coefficients.
    Hypotheses {
        #[arg(long)]
        config: PathBuf,
    },
    /// Resonance values below σ₀.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve at the configured shift or sweep.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Spectrum plus unique, compatible and incompatible solves.
    FredholmDemo {
        #[arg(long)]
        config: PathBuf,
    },
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("{THREADS_ENV}={raw} is not a positive integer"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let opts = Options { out: cli.out, timestamp: !cli.no_timestamp };
    match cli.command {
        Command::Constants { n, s } => commands::constants(n, s, &opts),
        Command::Gradient { config, s } => commands::gradient(&config, s, &opts),
        Command::Verify { suite, seed } => commands::verify(suite, seed, &opts),
        Command::Hypotheses { config } => commands::hypotheses(&config, &opts),
        Command::Spectrum { config } => commands::spectrum_cmd(&config, &opts),
        Command::Solve { config } => commands::solve_cmd(&config, &opts),
        Command::FredholmDemo { config } => commands::fredholm_demo(&config, &opts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match dispatch(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
