use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssfm_cli::commands::require_pass;
use ssfm_cli::{cmd_bound, cmd_mi, cmd_propagate, cmd_sweep, cmd_verify, CliError, ExperimentConfig};

/// Split-step Fourier channel simulator and capacity-bound laboratory.
#[derive(Parser)]
#[command(name = "ssfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate an ensemble; write the field dump and a run summary.
    Propagate(Common),
    /// Run the invariant checks; exit 1 if any fails.
    Verify(Common),
    /// Evaluate the capacity bound and spectral efficiencies.
    Bound(Common),
    /// Bound, bandwidth and rate floor over a list of SNRs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated SNRs in dB; overrides `run.snr_db`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr_db: Option<Vec<f64>>,
    },
    /// Rate floor from the Gaussian auxiliary channel.
    Mi(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok((cfg, out))
    }
}

// Console output is informational (artifacts are already written), so a
// closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Propagate(c) => {
            let (cfg, out) = c.load()?;
            let s = cmd_propagate(&cfg, &out)?;
            say!(
                "mean output energy {:.6e} +- {:.2e} over {} realizations -> {}",
                s.mean_output_energy,
                s.output_energy_std_error,
                s.realizations,
                out.display()
            );
        }
        Command::Verify(c) => {
            let (cfg, out) = c.load()?;
            let records = cmd_verify(&cfg, &out)?;
            for r in &records {
                say!("{r}");
            }
            require_pass(&records)?;
        }
        Command::Bound(c) => {
            let (cfg, out) = c.load()?;
            match cmd_bound(&cfg, &out) {
                Ok(b) => say!("{}", serde_json::to_string_pretty(&b).unwrap_or_default()),
                Err(e @ CliError::ChecksFailed(_)) => {
                    eprintln!("report invariants violated; see {}", out.join("report.json").display());
                    return Err(e);
                }
                Err(e) => return Err(e),
            }
        }
        Command::Sweep { common, snr_db } => {
            let (cfg, out) = common.load()?;
            let list = snr_db.unwrap_or_else(|| cfg.run.snr_db.clone());
            let rows = cmd_sweep(&cfg, &list, &out)?;
            say!("{} points -> {}", rows.len(), out.join("sweep.csv").display());
        }
        Command::Mi(c) => {
            let (cfg, out) = c.load()?;
            for r in cmd_mi(&cfg, &out)? {
                say!(
                    "snr_db {:.3} mi {:.6} +- {:.1e} bound {:.6} bits/sample",
                    r.snr_db, r.mi_bits_per_sample, r.mi_std_error, r.bound_bits_per_sample
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ssfm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
