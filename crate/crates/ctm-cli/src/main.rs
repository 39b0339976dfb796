mod cache;
mod commands;
mod fields;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ctm_core::CtmError;

#[derive(Parser, Debug)]
#[command(name = "ctm", about = "Charge-transfer model toolkit: scattering, evolution, decomposition, verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 20240607)]
    seed: u64,
    /// Worker threads for experiment suites.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scattering coefficients, discrete spectrum and threshold-resonance report per center.
    Scatter {
        /// Configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created when everything has been computed.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Integrates the time-dependent equation from t = 0.
    Evolve {
        /// Configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created when everything has been computed.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// gaussian:X0,K0,WIDTH | mode:J | path to a field CSV.
        #[arg(long, default_value = "gaussian:0,0,1")]
        psi0: String,
        #[arg(long, default_value_t = 10.0)]
        t_final: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Number of recorded samples after t = 0.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Splits a field into moving modes plus S(φ) for a scalar configuration.
    Decompose {
        /// Configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created when everything has been computed.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Field CSV with columns x, re_psi1, im_psi1.
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 60)]
        max_iter: usize,
    },
    /// Runs an experiment suite and writes one verdict per experiment; exits with the failure count.
    Verify {
        /// Configuration JSON for the config suite.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Root of the results/<experiment>/ tree.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// acceptance, quick, config, or a single experiment name.
        #[arg(long, default_value = "acceptance")]
        suite: String,
    },
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<CtmError> for Failure {
    fn from(e: CtmError) -> Self {
        if e.is_config() {
            Self::config(e.to_string())
        } else {
            Self::numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::numerical(format!("i/o: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scatter { config, out } => commands::scatter(&config, &out),
        Command::Evolve { config, out, psi0, t_final, dt, samples } => {
            commands::evolve(&config, &out, &psi0, t_final, dt, samples)
        }
        Command::Decompose { config, out, field, t, tol, max_iter } => {
            commands::decompose(&config, &out, &field, t, tol, max_iter)
        }
        Command::Verify { config, out, suite } => commands::verify(config.as_deref(), &out, &suite, cli.seed, cli.threads),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
