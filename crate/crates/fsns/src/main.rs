use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fsns::commands::{self, Suite};
use fsns::{RunConfig, RunError};

#[derive(Parser, Debug)]
#[command(name = "fsns", version, about = "Fractional stochastic Navier-Stokes solver and LDP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo, certification and gradients.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Velocity trajectory with energy log and snapshots.
    Simulate,
    /// Vorticity trajectory from the curl of the initial velocity.
    Vorticity,
    /// Controlled (skeleton) trajectory.
    Skeleton,
    /// Minimal control energy for the target set.
    Rate,
    /// Monte Carlo LDP curve and sanity report against the rate.
    Ldp,
    /// Randomised verification suites.
    Check { suite: SuiteArg },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Identities,
    Estimates,
    Noise,
}

fn load(cli: &Cli) -> Result<Option<RunConfig>, RunError> {
    let Some(path) = &cli.config else { return Ok(None) };
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.directory = Some(out.clone());
    }
    Ok(Some(cfg))
}

fn run(cli: &Cli) -> Result<String, RunError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(format!("--threads: {e}")))?;
    }
    let cfg = load(cli)?;
    if let Command::Check { suite } = cli.command {
        let suite = match suite {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Estimates => Suite::Estimates,
            SuiteArg::Noise => Suite::Noise,
        };
        let seed = cfg.as_ref().map(|c| c.seed).or(cli.seed).unwrap_or(0);
        let out = cli.out.clone().or_else(|| cfg.as_ref().and_then(|c| c.outputs.directory.clone()));
        return commands::check(suite, cfg.as_ref(), seed, out.as_deref());
    }
    let cfg = cfg.ok_or_else(|| RunError::Config("--config is required for this command".into()))?;
    let out = cfg
        .outputs
        .directory
        .clone()
        .ok_or_else(|| RunError::Config("no output directory: pass --out or set outputs.directory".into()))?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Vorticity => commands::vorticity(&cfg, &out),
        Command::Skeleton => commands::skeleton(&cfg, &out),
        Command::Rate => commands::rate(&cfg, &out),
        Command::Ldp => commands::ldp(&cfg, &out),
        Command::Check { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fsns: {e}");
            ExitCode::from(&e)
        }
    }
}
