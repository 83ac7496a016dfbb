use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qfridge::experiments::{self, config::parse_zeta_list, ExperimentConfig, RunKind};
use qfridge::observables::ThermoReadout;
use qfridge::Error;

#[derive(Parser)]
#[command(name = "qfridge", version, about = "Three-qubit absorption refrigerator with Kerr baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time evolution of temperatures, currents and COP
    Evolve(Opts),
    /// Null-space steady state
    Steady(Opts),
    /// Steady-state cooling over the ζ grid
    SweepZeta(Opts),
    /// Global minimum temperature over the ζ grid
    MinTemp(Opts),
    /// Heat-current traces for the ζ grid
    Currents(Opts),
    /// COP traces and crossing times for the ζ grid
    Cop(Opts),
}

#[derive(Args)]
struct Opts {
    /// transient-regime or steady-regime
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single ζ (evolve, steady) or comma-separated grid; `inf` is harmonic
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<String>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (RunKind, Opts) {
        match self {
            Command::Evolve(o) => (RunKind::Evolve, o),
            Command::Steady(o) => (RunKind::Steady, o),
            Command::SweepZeta(o) => (RunKind::SweepZeta, o),
            Command::MinTemp(o) => (RunKind::MinTemp, o),
            Command::Currents(o) => (RunKind::Currents, o),
            Command::Cop(o) => (RunKind::Cop, o),
        }
    }
}

fn load(kind: RunKind, opts: &Opts) -> qfridge::Result<ExperimentConfig> {
    let mut config = match (&opts.config, &opts.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::preset("steady-regime")?,
    };
    config.run = kind;
    if let Some(z) = &opts.zeta {
        let zetas = parse_zeta_list(z)?;
        match kind {
            RunKind::Evolve | RunKind::Steady => {
                if zetas.len() != 1 {
                    return Err(Error::Config(format!("{kind} takes a single zeta, got {}", zetas.len())));
                }
                config.baths.zeta = zetas[0];
            }
            _ => config.sweep.zeta = zetas,
        }
    }
    if let Some(t) = opts.t_final {
        config.time.t_final = Some(t);
    }
    if let Some(n) = opts.grid_points {
        config.time.grid_points = n;
    }
    if let Some(out) = &opts.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn open(path: Option<&Path>) -> qfridge::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// `out.csv` → `out.<suffix>.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn check_readouts(readouts: &[ThermoReadout<f64>], tolerance: f64, what: &str) -> qfridge::Result<()> {
    if let Some(r) = readouts.iter().find(|r| !(r.first_law_defect() <= tolerance)) {
        return Err(Error::Invariant(format!(
            "{what}: steady currents do not sum to zero (relative defect {:e})",
            r.first_law_defect()
        )));
    }
    Ok(())
}

fn run(config: &ExperimentConfig) -> qfridge::Result<()> {
    let out = config.output.as_deref();
    match config.run {
        RunKind::Evolve => {
            let run = experiments::run_evolution(config)?;
            experiments::write_thermo_csv(open(out)?, &run.trajectory.times, &run.readouts)?;
            if let Some(path) = out {
                let states = File::create(sibling(path, "states"))?;
                experiments::write_states_csv(BufWriter::new(states), &run.trajectory.times, &run.trajectory.states)?;
            }
            let s = run.trajectory.stats;
            eprintln!(
                "{} steps ({} rejected), max trace drift {:e}, max hermiticity drift {:e}",
                s.accepted, s.rejected, s.max_trace_drift, s.max_hermiticity_drift
            );
        }
        RunKind::Steady => {
            let run = experiments::run_steady(config)?;
            experiments::write_steady_csv(open(out)?, &run)?;
            eprintln!("residual {:e}", run.residual);
            check_readouts(std::slice::from_ref(&run.readout), 1e-10, "steady state")?;
        }
        RunKind::SweepZeta | RunKind::MinTemp => {
            let result = if config.run == RunKind::SweepZeta {
                experiments::run_zeta_sweep(config)?
            } else {
                experiments::run_min_temp_sweep(config)?
            };
            experiments::write_sweep_csv(open(out)?, &result)?;
            for f in result.failures() {
                eprintln!("zeta = {} failed: {}", experiments::config::format_zeta(f.zeta), f.message);
            }
            result.check()?;
            if result.failures().next().is_some() {
                return Err(Error::Invariant("some sweep points failed".into()));
            }
        }
        RunKind::Currents | RunKind::Cop => {
            let run = experiments::run_currents_and_cop(config)?;
            if config.run == RunKind::Currents {
                experiments::write_currents_csv(open(out)?, &run)?;
            } else {
                experiments::write_cop_csv(open(out)?, &run)?;
                match out {
                    Some(path) => {
                        let f = File::create(sibling(path, "crossings"))?;
                        experiments::write_crossings_csv(BufWriter::new(f), &run)?;
                    }
                    None => experiments::write_crossings_csv(io::stderr().lock(), &run)?,
                }
            }
            let steady: Vec<_> = run.steady.iter().map(|s| s.readout).collect();
            check_readouts(&steady, 1e-10, "currents")?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidRefrigerator(_)
        | Error::InvalidBath(_)
        | Error::Io(_)
        | Error::Csv(_) => 2,
        Error::Invariant(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (kind, opts) = Cli::parse().command.split();
    let result = load(kind, &opts).and_then(|config| run(&config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
