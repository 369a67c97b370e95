mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use run::{CliError, Overrides};

/// Twisted Floquet Ising simulator.
///
/// Every command reads a JSON run config. Flags given on the command line
/// take precedence over the corresponding config values; the resolved
/// config is written to `manifest.json` next to the artifacts, and passing
/// that manifest back as `--config` reproduces the run exactly.
#[derive(Debug, Parser)]
#[command(name = "majorana-twist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Autocorrelations by full or sampled trace.
    Simulate(Common),
    /// Free-fermion spectrum and zero modes, as JSON.
    ZeroMode(Common),
    /// Autocorrelations with the defect moved by at least one bond.
    Translate {
        #[command(flatten)]
        common: Common,
        /// Number of translation unitaries (default: config value, at least 1).
        #[arg(long)]
        translations: Option<usize>,
    },
    /// Emulated noisy run with readout inversion and zero-noise extrapolation.
    Noisy(Common),
    /// Write one Floquet period as OpenQASM 3.0.
    ExportQasm(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Run config (or a manifest from an earlier run).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of Floquet periods (overrides `steps`).
    #[arg(long)]
    steps: Option<usize>,
    /// Switch to a sampled trace with this many basis states.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for basis-state sampling and noise (overrides both config seeds).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "MAJORANA_TWIST_WORKERS")]
    workers: Option<usize>,
    /// Also write an SVG line plot of the series.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Also write the Floquet period as OpenQASM 3.0.
    #[arg(long)]
    export_qasm: Option<PathBuf>,
    /// Threshold on |λ - 1| for counting zero modes [default: 1e-9].
    #[arg(long)]
    zero_mode_tol: Option<f64>,
    /// Permit a full trace beyond L = 14.
    #[arg(long)]
    allow_large: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            steps: self.steps,
            samples: self.samples,
            seed: self.seed,
            plot: self.plot.clone(),
            export_qasm: self.export_qasm.clone(),
            zero_mode_tol: self.zero_mode_tol,
            allow_large: self.allow_large,
            translations: None,
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (common, kind, translations) = match &cli.command {
        Command::Simulate(c) => (c, run::Kind::Simulate, None),
        Command::ZeroMode(c) => (c, run::Kind::ZeroMode, None),
        Command::Translate { common, translations } => (common, run::Kind::Translate, *translations),
        Command::Noisy(c) => (c, run::Kind::Noisy, None),
        Command::ExportQasm(c) => (c, run::Kind::ExportQasm, None),
    };
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Run(e.to_string()))?;
    }
    let mut overrides = common.overrides();
    overrides.translations = translations;
    run::execute(kind, &common.config, overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
