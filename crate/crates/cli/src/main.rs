use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expertstream_cli::commands::{self, Options};
use expertstream_cli::config::parse_seeds;
use expertstream_cli::{plot, CliError, ExperimentConfig, EXIT_CONFIG};

/// Memory-bounded experts simulator.
///
/// Settings come from built-in defaults, then `--config FILE` (flat
/// `key = value` lines), then `--set key=value`, then the named flags.
#[derive(Debug, Parser)]
#[command(name = "expertstream", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Seed list: `7`, `1,2,5` or the half-open range `0..20`.
    #[arg(long, global = true)]
    seeds: Option<String>,

    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Main output file (stdout when absent, except simulate traces).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for multi-seed runs and sweeps.
    #[arg(long, global = true, env = "EXPERTSTREAM_JOBS")]
    jobs: Option<usize>,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,

    /// Run even if the parameter checks fail, printing warnings.
    #[arg(long, global = true)]
    warn_params: bool,

    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one algorithm on one stream per seed; trace to --out, summary to stdout.
    Simulate,
    /// Run every grid.<key> combination for every seed.
    Sweep,
    /// Play adaptive games (agreement tracker unless `adversary` says otherwise).
    Attack,
    /// Classify BiasDetect instances by the algorithm's correct-day count.
    Distinguish,
    /// Draw a trace or sweep CSV as an SVG line chart.
    Plot {
        /// Trace or sweep CSV.
        input: PathBuf,
        /// Sweep column for the horizontal axis (default: first grid axis).
        #[arg(long)]
        x: Option<String>,
    },
    /// Quick internal consistency checks.
    Selftest,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for kv in &cli.set {
        cfg.apply_override(kv)?;
    }
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(s) = &cli.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let opts = Options { force: cli.force, warn_params: cli.warn_params, jobs: cli.jobs.filter(|&j| j > 0) };
    match &cli.command {
        Command::Plot { input, x } => {
            let text = std::fs::read_to_string(input).map_err(|e| CliError::config(format!("{}: {e}", input.display())))?;
            let svg = plot::render(&text, x.as_deref())?;
            let out = cli.out.clone().unwrap_or_else(|| input.with_extension("svg"));
            commands::guard_output(&out, opts.force)?;
            std::fs::write(&out, svg).map_err(|e| CliError::config(format!("{}: {e}", out.display())))?;
            Ok(0)
        }
        Command::Selftest => commands::selftest(),
        command => {
            let cfg = load(&cli)?;
            match command {
                Command::Simulate => commands::simulate(&cfg, &opts),
                Command::Sweep => commands::sweep(&cfg, &opts),
                Command::Attack => commands::attack(&cfg, &opts),
                Command::Distinguish => commands::distinguish(&cfg, &opts),
                Command::Plot { .. } | Command::Selftest => unreachable!("handled above"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
