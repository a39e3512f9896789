use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_qbc::commands::{cmd_report, cmd_run, cmd_synth, SynthOptions, TRAJECTORIES_FILE};
use robust_qbc::config::RunManifest;
use robust_qbc::{CliError, Result};

/// Robust query-by-committee active learning experiments.
#[derive(Debug, Parser)]
#[command(name = "robust-qbc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the two-Gaussian benchmark in LIBSVM format (labels +1/-1).
    ///
    /// The file at --out holds init + pool rows per class; the test rows go
    /// to the sibling `<stem>.test.libsvm`.
    Synth {
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        pool_per_class: usize,
        #[arg(long, default_value_t = 50_000)]
        test_per_class: usize,
        #[arg(long, default_value_t = 50)]
        init_per_class: usize,
    },
    /// Run every method of a manifest and write <out>/trajectories.csv.
    Run {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Training data (LIBSVM, or a reduced `.csv` cache); overrides `data`.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `n_repetitions`.
        #[arg(long)]
        reps: Option<u64>,
        /// Worker threads (default: one per core). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Aggregate trajectories into <out>/summary.csv and <out>/plot_data.csv.
    Report {
        /// Trajectories file; defaults to <out>/trajectories.csv.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { out, seed, pool_per_class, test_per_class, init_per_class } => {
            let opts = SynthOptions { pool_per_class, test_per_class, init_per_class, seed };
            let (train, test) = cmd_synth(&opts, &out)?;
            println!("wrote {} and {}", train.display(), test.display());
        }
        Command::Run { config, data, out, seed, reps, threads } => {
            let mut manifest = match &config {
                Some(p) => RunManifest::load(p)?,
                None => RunManifest::default(),
            };
            if let Some(d) = data {
                manifest.data = Some(d);
            }
            if let Some(s) = seed {
                manifest.experiment.seed = s;
            }
            if let Some(r) = reps {
                manifest.n_repetitions = r;
            }
            if threads == Some(0) {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            let path = cmd_run(&manifest, &out, threads)?;
            println!("wrote {}", path.display());
        }
        Command::Report { data, out } => {
            let input = data.unwrap_or_else(|| out.join(TRAJECTORIES_FILE));
            let (s, p) = cmd_report(&input, &out)?;
            println!("wrote {} and {}", s.display(), p.display());
        }
    }
    Ok(())
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
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
