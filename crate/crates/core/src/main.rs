use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cobeam::harness::{self, Algorithm, ExperimentSpec, Fixture, OutputFormat};
use cobeam::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cobeam",
    version,
    about = "Coordinated multi-cell downlink beamforming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write the aggregated results.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output file; defaults to the spec's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Check a config file without running it.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Dump the per-iteration trace of one trial as JSON.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        algorithm: TraceAlgorithm,
        /// Defaults to the first SNR of the grid.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Write or check a regression snapshot.
    Fixtures {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "verify", required_unless_present = "verify")]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long, env = "COBEAM_SEED")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceAlgorithm {
    Ssca,
    Sbf,
    Icbf,
}

impl Common {
    fn load(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        Ok(spec)
    }
}

fn write_or_print(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            common,
            out,
            format,
            trials,
            parallel,
        } => {
            let mut spec = common.load()?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            let format = match format {
                Some(Format::Csv) => OutputFormat::Csv,
                Some(Format::Json) => OutputFormat::Json,
                None => spec.format,
            };
            let rows = harness::run_experiment(&spec, parallel)?;
            let text = harness::render(&rows, format)?;
            write_or_print(&text, out.as_deref().or(spec.output.as_deref()))
        }
        Command::Validate { common } => {
            let spec = common.load()?;
            let summary = json!({
                "valid": true,
                "scenario": spec.scenario,
                "algorithms": spec.algorithms,
                "snr_points": spec.snr_grid_db.len(),
                "trials": spec.trials,
            });
            write_or_print(&format!("{summary}\n"), None)
        }
        Command::Trace {
            common,
            algorithm,
            snr,
            trial,
        } => {
            let spec = common.load()?;
            let algorithm = match algorithm {
                TraceAlgorithm::Ssca => Algorithm::Ssca,
                TraceAlgorithm::Sbf => Algorithm::Sbf,
                TraceAlgorithm::Icbf => Algorithm::Icbf,
            };
            let snr = snr.unwrap_or(spec.snr_grid_db[0]);
            let trace = harness::trace_trial(&spec, algorithm, snr, trial)?;
            let dump = json!({
                "algorithm": algorithm.name(),
                "snr_db": snr,
                "trial": trial,
                "initial_sum_rate": trace.initial_sum_rate,
                "final_sum_rate": trace.final_sum_rate(),
                "converged": trace.converged,
                "info_units": trace.info_units(),
                "kkt_residual": trace.kkt_residual,
                "records": trace.records,
            });
            let text = serde_json::to_string_pretty(&dump).expect("trace serializes");
            write_or_print(&format!("{text}\n"), None)
        }
        Command::Fixtures {
            common,
            out,
            verify,
            trial,
        } => {
            if let Some(path) = verify {
                let text = std::fs::read_to_string(&path)?;
                let fixture: Fixture = serde_json::from_str(&text).map_err(|e| Error::Config {
                    location: path.display().to_string(),
                    message: e.to_string(),
                })?;
                harness::verify_fixture(&fixture, 1e-9)?;
                write_or_print("{\"verified\":true}\n", None)
            } else {
                let spec = common.load()?;
                let fixture = harness::make_fixture(&spec, trial)?;
                let text = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
                write_or_print(&format!("{text}\n"), out.as_deref())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
