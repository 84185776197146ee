#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::ExperimentConfig;
use error::CliError;
use output::{OutputSet, RunMetadata};

#[derive(Parser)]
#[command(name = "fluoro", version, about = "Resonance-fluorescence photon-pair simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic g²(τ); with --simulate also a histogram from simulated detections
    G2(Common),
    /// Single-photon interference visibility against saturation
    Visibility(Common),
    /// Simulated Franson CHSH measurement
    Chsh(Common),
    /// S against coincidence-window half width
    ScanWindow(Common),
    /// Maximum-likelihood two-photon state reconstruction
    Tomography(Common),
    /// Pair rate inside the antibunching window against saturation
    PairRate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to every missing key
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Run the Monte Carlo pipeline where the command supports it
    #[arg(long)]
    simulate: bool,
    #[arg(long, env = "FLUORO_THREADS")]
    threads: Option<usize>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::G2(c) => ("g2", c),
            Command::Visibility(c) => ("visibility", c),
            Command::Chsh(c) => ("chsh", c),
            Command::ScanWindow(c) => ("scan-window", c),
            Command::Tomography(c) => ("tomography", c),
            Command::PairRate(c) => ("pair-rate", c),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = cli.command.parts();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (text, base) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (text, base)
        }
        None => (String::new(), PathBuf::from(".")),
    };
    let cfg = ExperimentConfig::parse(&text)?.resolve(common.seed, &base)?;
    let ctx = Context { cfg: &cfg, simulate: common.simulate };
    let mut out = OutputSet::default();
    match &cli.command {
        Command::G2(_) => commands::g2(&ctx, &mut out)?,
        Command::Visibility(_) => commands::visibility_curve(&ctx, &mut out)?,
        Command::Chsh(_) => commands::chsh(&ctx, &mut out)?,
        Command::ScanWindow(_) => commands::scan_window(&ctx, &mut out)?,
        Command::Tomography(_) => commands::tomography(&ctx, &mut out)?,
        Command::PairRate(_) => commands::pair_rate_curve(&ctx, &mut out)?,
    }
    let meta = RunMetadata::new(name, &text, cfg.trajectory.seed, common.simulate);
    for path in out.commit(&common.out, &meta)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fluoro: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
