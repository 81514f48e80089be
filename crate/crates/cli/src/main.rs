use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use uscqed::model::{build_space, ModelParams};
use uscqed::par::Execution;
use uscqed::scenario::{
    find_preset, list_presets, metadata_path, parse_and_validate, perturbation_table, run_scenario,
    RunOptions, ScenarioConfig,
};
use uscqed::spectrum::{convergence_check, default_convergence_observables, solve};
use uscqed::{Error, Result};

/// Ultrastrong-coupling cavity QED: dressed spectra, perturbative
/// conversion elements and pulse-driven master-equation runs.
#[derive(Parser, Debug)]
#[command(name = "uscqed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory (spectrum and perturb print to stdout without it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the photon-number cutoff.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Rerun evolutions at half the step and fail if any observable moves
    /// by more than 1e-6.
    #[arg(long, global = true)]
    halve_step: bool,
    /// Run sweeps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump the dressed eigensystem as CSV.
    Spectrum {
        #[arg(long, default_value_t = 0.15)]
        coupling: f64,
        /// Atomic levels: 2 (Rabi model) or 3 (with the decoupled level s).
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        omega_s: f64,
        /// Also compare the lowest energies against a larger cutoff.
        #[arg(long)]
        check_convergence: Option<usize>,
    },
    /// Perturbative corrections against exact diagonalisation over a coupling grid.
    Perturb {
        #[arg(long, default_value_t = 0.01)]
        from: f64,
        #[arg(long, default_value_t = 0.5)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Run a scenario file.
    Evolve { config: PathBuf },
    /// Run one or more shipped presets; several run side by side.
    Preset {
        #[arg(required = true)]
        names: Vec<String>,
    },
    /// Check a scenario file without running it.
    Validate { config: PathBuf },
    /// List shipped presets.
    ListPresets,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Spectrum {
            coupling,
            levels,
            omega_s,
            check_convergence,
        } => {
            let params = ModelParams {
                rabi_coupling: *coupling,
                omega_s: *omega_s,
                ..ModelParams::default()
            };
            params.validate()?;
            let cutoff = common.cutoff.unwrap_or(20);
            let eig = solve(&params, &build_space(cutoff, *levels)?)?;
            emit(common.out.as_deref(), "spectrum.csv", |w| eig.write_csv(w))?;
            if let Some(high) = check_convergence {
                let report =
                    convergence_check(&params, &default_convergence_observables(), (cutoff, *high))?;
                eprintln!(
                    "convergence {cutoff} -> {high}: max change {:.3e}{}",
                    report.max_change,
                    if report.flagged { " (above 1e-6)" } else { "" }
                );
            }
            Ok(())
        }
        Command::Perturb { from, to, points } => {
            if !(*from >= 0.0 && to >= from && *points >= 1) {
                return Err(Error::InvalidArgument(format!(
                    "need 0 <= from <= to and points >= 1, got {from}..{to} with {points} points"
                )));
            }
            let couplings: Vec<f64> = (0..*points)
                .map(|k| {
                    if *points == 1 {
                        *from
                    } else {
                        from + (to - from) * k as f64 / (*points - 1) as f64
                    }
                })
                .collect();
            let table = perturbation_table(
                &ModelParams::default(),
                common.cutoff.unwrap_or(20),
                &couplings,
                exec,
            )?;
            emit(common.out.as_deref(), "perturbation.csv", |w| table.write_csv(w))
        }
        Command::Evolve { config } => run_config(load(config)?, common, exec),
        Command::Preset { names } => {
            let configs = names
                .iter()
                .map(|name| find_preset(name).and_then(|p| p.config()))
                .collect::<Result<Vec<_>>>()
                .inspect_err(|_| print_catalog(&mut io::stderr()))?;
            let results = uscqed::par::map(exec, &configs, |c| run_config(c.clone(), common, exec));
            let mut failures = results.into_iter().filter_map(|r| r.err());
            let first = failures.next();
            for e in failures {
                eprintln!("error: {e}");
            }
            first.map_or(Ok(()), Err)
        }
        Command::Validate { config } => {
            let cfg = load(config)?;
            println!("{}: ok ({:?} scenario `{}`)", config.display(), cfg.scenario.kind, cfg.scenario.name);
            Ok(())
        }
        Command::ListPresets => {
            print_catalog(&mut io::stdout());
            Ok(())
        }
    }
}

fn print_catalog(w: &mut dyn Write) {
    let _ = writeln!(w, "available presets:");
    for p in list_presets() {
        let _ = writeln!(w, "  {:<22} {}", p.name, p.description);
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("reading {}: {e}", path.display())))?;
    parse_and_validate(&text).map_err(|e| e.context(path.display().to_string()))
}

fn run_config(mut config: ScenarioConfig, common: &Common, exec: Execution) -> Result<()> {
    if let Some(cutoff) = common.cutoff {
        config.space.photon_cutoff = cutoff;
        let problems = config.violations();
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let options = RunOptions {
        verify_halving: common.halve_step,
        execution: exec,
    };
    let artifacts = run_scenario(&config, &out, &options)?;
    info!("metadata: {}", metadata_path(&artifacts.csv).display());
    println!("{}", artifacts.csv.display());
    println!("{}", artifacts.metadata.display());
    Ok(())
}

/// Write to `dir/name` when an output directory is given, else to stdout.
fn emit(dir: Option<&Path>, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            let mut file = io::BufWriter::new(fs::File::create(&path)?);
            write(&mut file)?;
            file.flush()?;
            println!("{}", path.display());
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}
