//! Scenario files, shipped presets and CSV artifacts.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! [scenario]
//! kind = "evolve"            # evolve | perturbation_sweep | spectrum_sweep
//! name = "one_photon"
//!
//! [model]                    # any omitted field keeps its default
//! rabi_coupling = 0.15
//!
//! [space]
//! photon_cutoff = 10
//! atom_levels = 3
//!
//! [initial]
//! state = "E0"               # E<k>, or a bare state such as s2, g1, e0
//!
//! [[pulses]]
//! carrier = { transition = "se_E0_s1" }   # or a number
//! area_target = { transition = "se_E0_s1", multiple = 1.0 }   # or amplitude = ...
//! center = 750.0
//! width = 150.0
//! channel = "se"             # sg | se | both
//!
//! [[dissipation]]            # omit to use the model's gamma_* rates
//! channel = "cavity"         # cavity | atom_eg | atom_gs
//! rate = 2e-5
//!
//! [time]
//! start = 0.0
//! end = 1500.0
//! sample_step = 5.0
//! max_step = 0.01
//!
//! [output]
//! path = "one_photon.csv"
//! observables = ["photon_number", "g2", "pop_s1"]
//! ```
//!
//! Sweep scenarios replace `[initial]`, `[[pulses]]` and `[time]` with a
//! `[sweep]` table (`coupling_start`, `coupling_end`, `points`, `levels`).
//! Every run writes its CSV plus a `.meta.toml` sidecar holding the full
//! configuration, which reproduces the run exactly when fed back in.

mod config;
mod presets;
mod sweeps;

use std::path::{Path, PathBuf};

use log::info;

pub use config::{
    parse_and_validate, InitialConfig, OutputConfig, ScenarioConfig, ScenarioKind, ScenarioMeta,
    SpaceConfig, SweepConfig, TimeConfig,
};
pub use presets::{find_preset, list_presets, Preset};
pub use sweeps::{perturbation_table, spectrum_table, Table};

use crate::dynamics::{evolve, prepare_state, DrivenSystem, EvolveOptions, TimeSeries};
use crate::model::HilbertSpace;
use crate::par::Execution;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Check evolve runs against a half-step rerun (see [`EvolveOptions`]).
    pub verify_halving: bool,
    pub execution: Execution,
}

/// Files written by a run, plus the computed data.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub output: RunOutput,
}

#[derive(Clone, Debug)]
pub enum RunOutput {
    Series(TimeSeries),
    Table(Table),
}

/// Sidecar path for a CSV artifact: `name.csv` -> `name.meta.toml`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.toml")
}

/// Compute a scenario without touching the file system. Returns the data
/// and the `[derived]` table for the sidecar.
pub fn compute(config: &ScenarioConfig, options: &RunOptions) -> Result<(RunOutput, toml::Table)> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut derived = toml::Table::new();
    derived.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let output = match config.scenario.kind {
        config::ScenarioKind::Evolve => {
            let space = HilbertSpace::new(config.space.photon_cutoff, config.space.atom_levels)?;
            let system = DrivenSystem::new(&config.model, &space, &config.dissipation_specs())?;
            let pulses = config
                .pulses
                .iter()
                .enumerate()
                .map(|(i, p)| system.resolve(p).map_err(|e| e.context(format!("pulses[{i}]"))))
                .collect::<Result<Vec<_>>>()?;
            let initial = config.initial.as_ref().expect("validated").state;
            let state = prepare_state(system.eigensystem(), initial)?;
            let time = config.time.as_ref().expect("validated");
            let series = evolve(
                &system,
                &state,
                &pulses,
                &time.grid(),
                &config.observables(),
                &EvolveOptions {
                    max_step: time.max_step,
                    verify_halving: options.verify_halving,
                },
            )?;
            let resolved: Vec<toml::Value> = pulses
                .iter()
                .map(|p| {
                    let mut t = toml::Table::new();
                    t.insert("carrier".into(), p.carrier.into());
                    t.insert("amplitude".into(), p.amplitude.into());
                    toml::Value::Table(t)
                })
                .collect();
            derived.insert("pulses".into(), resolved.into());
            let d = &series.diagnostics;
            let mut diag = toml::Table::new();
            diag.insert("rk_steps".into(), (d.rk_steps as i64).into());
            diag.insert("max_trace_drift".into(), d.max_trace_drift.into());
            diag.insert("min_eigenvalue".into(), d.min_eigenvalue.into());
            diag.insert("max_hermiticity_defect".into(), d.max_hermiticity_defect.into());
            if let Some(h) = d.halving_change {
                diag.insert("halving_change".into(), h.into());
            }
            derived.insert("diagnostics".into(), diag.into());
            RunOutput::Series(series)
        }
        config::ScenarioKind::PerturbationSweep => {
            let sweep = config.sweep.as_ref().expect("validated");
            RunOutput::Table(perturbation_table(
                &config.model,
                config.space.photon_cutoff,
                &sweep.couplings(),
                options.execution,
            )?)
        }
        config::ScenarioKind::SpectrumSweep => {
            let sweep = config.sweep.as_ref().expect("validated");
            RunOutput::Table(spectrum_table(
                &config.model,
                config.space.photon_cutoff,
                &sweep.couplings(),
                sweep.levels,
                options.execution,
            )?)
        }
    };
    Ok((output, derived))
}

/// Run a validated scenario and write its CSV and metadata sidecar under
/// `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, options: &RunOptions) -> Result<Artifacts> {
    let name = config.scenario.name.clone();
    let (output, derived) =
        compute(config, options).map_err(|e| e.context(format!("scenario `{name}`")))?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::from(e).context(format!("creating {}", out_dir.display())))?;
    let csv = out_dir.join(&config.output.path);
    if let Some(parent) = csv.parent() {
        std::fs::create_dir_all(parent)?;
    }
    match &output {
        RunOutput::Series(s) => s.save_csv(&csv)?,
        RunOutput::Table(t) => {
            let file = std::fs::File::create(&csv)
                .map_err(|e| Error::from(e).context(format!("creating {}", csv.display())))?;
            t.write_csv(std::io::BufWriter::new(file))?
        }
    }
    let metadata = metadata_path(&csv);
    let sidecar = ScenarioConfig {
        derived: Some(derived),
        ..config.clone()
    };
    std::fs::write(&metadata, sidecar.to_toml()?)?;
    info!("scenario `{name}`: wrote {} and {}", csv.display(), metadata.display());
    Ok(Artifacts {
        csv,
        metadata,
        output,
    })
}
