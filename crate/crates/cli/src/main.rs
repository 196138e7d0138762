//! `helium-jc`: feasibility figures, Rabi traces, state preparation and
//! approximation checks for an electron on liquid helium in a THz cavity.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{Run, Which};
use crate::config::{Measure, RunConfig, Target, Truncation};
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutDir};

/// Worker-pool size for sweeps. Defaults to the number of CPUs.
const WORKERS_ENV: &str = "HELIUM_JC_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "helium-jc", version, about = "Electron-on-helium cavity QED simulator")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Fock truncation `N_c` or `N_c,N_v`.
    #[arg(long, global = true)]
    truncation: Option<Truncation>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,

    /// Use the field-free hydrogen spectrum instead of the Stark solver.
    #[arg(long, global = true)]
    no_stark: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Figures of merit for the configured parameters.
    Feasibility,
    /// Vacuum Rabi oscillation, closed form next to numerical propagation.
    Rabi,
    /// Prepare a coherent or cat state and analyse it.
    Prepare {
        #[arg(long, value_enum)]
        target: Option<Target>,
        /// Preparation time in units of `1/Ω_c`.
        #[arg(long)]
        t_rabi: Option<f64>,
        #[arg(long, value_enum)]
        measure: Option<Measure>,
        /// Also write the Wigner function of the cavity state.
        #[arg(long)]
        wigner: bool,
    },
    /// Sweep one of the model approximations.
    Validate {
        #[arg(value_enum)]
        which: ValidateKind,
    },
    /// Feasibility figures over a list of values of one parameter.
    Sweep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ValidateKind {
    Ld,
    Rwa,
    StrongDrive,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Feasibility => "feasibility".into(),
            Command::Rabi => "rabi".into(),
            Command::Prepare { .. } => "prepare".into(),
            Command::Validate { which } => format!("validate {}", which.to_possible_value().unwrap().get_name()),
            Command::Sweep => "sweep".into(),
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        config.output_dir = dir.clone();
    }
    if let Some(t) = cli.truncation {
        config.truncation = t;
    }
    if let Command::Prepare { target, t_rabi, measure, wigner } = &cli.command {
        if let Some(t) = target {
            config.prepare.target = *t;
        }
        if let Some(t) = t_rabi {
            config.prepare.t_rabi = *t;
        }
        if let Some(m) = measure {
            config.prepare.measure = *m;
        }
        config.prepare.wigner |= *wigner;
    }
    config.validate()?;
    Ok(config)
}

fn init_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))
}

fn execute(cli: &Cli, config: &RunConfig) -> CliResult<()> {
    let start = Instant::now();
    let mut run = Run {
        config,
        no_stark: cli.no_stark,
        quiet: cli.quiet,
        out: OutDir::create(&config.output_dir)?,
        checks: Vec::new(),
        notes: Vec::new(),
    };
    let result = match &cli.command {
        Command::Feasibility => run.feasibility(),
        Command::Rabi => run.rabi(),
        Command::Prepare { .. } => run.prepare(),
        Command::Validate { which } => run.validate(match which {
            ValidateKind::Ld => Which::Ld,
            ValidateKind::Rwa => Which::Rwa,
            ValidateKind::StrongDrive => Which::StrongDrive,
        }),
        Command::Sweep => run.sweep(),
    };
    let failed = run.checks.iter().filter(|c| !c.passed).count();
    let outputs = run.out.written.clone();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: &cli.command.name(),
        config,
        transition_source: run.transition_source(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: &outputs,
        checks: &run.checks,
        notes: &run.notes,
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    run.out.write_json("manifest.json", &manifest)?;
    result?;
    if failed > 0 {
        return Err(CliError::Checks(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load_config(&cli).and_then(|config| {
        init_workers()?;
        execute(&cli, &config)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("helium-jc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
