use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spinnoon_cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "spinnoon",
    version,
    about = "Star-topology spin NOON magnetometry simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides out_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (overrides seed)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also write SVG plots
    #[arg(long, global = true)]
    svg: bool,

    /// Cross-check against the full state-vector simulation
    #[arg(long, global = true)]
    oracle: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Line spectrum before and after the protocol
    Spectrum,
    /// t_wait sweep, FFT peaks and detuning estimates
    Sweep,
    /// Sensitivity against particle number under noise
    Fig3,
    /// Equivalence, Monte Carlo and optimizer checks
    Validate,
}

fn load(cli: &Cli) -> spinnoon_cli::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.svg |= cli.svg;
    cfg.oracle |= cli.oracle;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let command = match cli.command {
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Sweep => Command::Sweep,
        Cmd::Fig3 => Command::Fig3,
        Cmd::Validate => Command::Validate,
    };
    let print = |out: &spinnoon_cli::Outcome| {
        for line in &out.report {
            println!("{line}");
        }
        for file in &out.files {
            println!("wrote {}", file.display());
        }
    };
    match run(command, &cfg) {
        Ok(out) => {
            print(&out);
            ExitCode::SUCCESS
        }
        Err((e, out)) => {
            if let Some(out) = &out {
                print(out);
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
