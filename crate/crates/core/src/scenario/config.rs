use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DissipationChannel, DissipationSpec, Observable, PulseSpec, StateLabel};
use crate::model::{AtomState, ModelParams, DEFAULT_DETUNING_MARGIN, MIN_PHOTON_CUTOFF};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Master-equation run producing a time series.
    Evolve,
    /// Closed-form corrections against exact diagonalisation over a
    /// coupling grid.
    PerturbationSweep,
    /// Lowest dressed energies over a coupling grid.
    SpectrumSweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub kind: ScenarioKind,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    pub photon_cutoff: usize,
    pub atom_levels: usize,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            photon_cutoff: 20,
            atom_levels: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub state: StateLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub start: f64,
    pub end: f64,
    pub sample_step: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

fn default_max_step() -> f64 {
    0.01
}

impl TimeConfig {
    /// Sampling grid `start, start + step, ..., end`.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.sample_step).round() as usize;
        (0..=n)
            .map(|k| if k == n { self.end } else { self.start + k as f64 * self.sample_step })
            .collect()
    }
}

/// Evenly spaced coupling grid, both ends included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub coupling_start: f64,
    pub coupling_end: f64,
    pub points: usize,
    /// Number of dressed levels reported by a spectrum sweep.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    8
}

impl SweepConfig {
    pub fn couplings(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.coupling_start];
        }
        let step = (self.coupling_end - self.coupling_start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.coupling_end
                } else {
                    self.coupling_start + k as f64 * step
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV file name, relative to the output directory.
    pub path: PathBuf,
    /// Time-series columns; empty means the default set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<Observable>,
}

/// A complete, self-describing run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioMeta,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<PulseSpec>,
    /// Loss channels; when absent, one channel per nonzero model rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<Vec<DissipationSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
    /// Values computed by a run (resolved pulses, diagnostics). Written to
    /// metadata sidecars for reference and ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<toml::Table>,
}

impl ScenarioConfig {
    pub fn dissipation_specs(&self) -> Vec<DissipationSpec> {
        match &self.dissipation {
            Some(list) => list.clone(),
            None => [
                (DissipationChannel::Cavity, self.model.gamma_c),
                (DissipationChannel::AtomEg, self.model.gamma_eg),
                (DissipationChannel::AtomGs, self.model.gamma_gs),
            ]
            .into_iter()
            .filter(|&(_, rate)| rate != 0.0)
            .map(|(channel, rate)| DissipationSpec::new(channel, rate))
            .collect(),
        }
    }

    pub fn observables(&self) -> Vec<Observable> {
        if self.output.observables.is_empty() {
            Observable::defaults()
        } else {
            self.output.observables.clone()
        }
    }

    /// Same scenario without the informational `[derived]` table.
    pub fn without_derived(&self) -> ScenarioConfig {
        ScenarioConfig {
            derived: None,
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("serialising scenario: {e}")))
    }

    /// Every invariant violation, each prefixed with the path of the field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.scenario.name.trim().is_empty() {
            out.push("scenario.name: must not be empty".to_string());
        }
        let margin = if self.space.atom_levels == 3 {
            DEFAULT_DETUNING_MARGIN
        } else {
            f64::NEG_INFINITY
        };
        out.extend(self.model.violations(margin).into_iter().map(|v| format!("model.{v}")));

        let SpaceConfig {
            photon_cutoff,
            atom_levels,
        } = self.space;
        if photon_cutoff < MIN_PHOTON_CUTOFF {
            out.push(format!(
                "space.photon_cutoff: must be >= {MIN_PHOTON_CUTOFF}, got {photon_cutoff}"
            ));
        }
        if !(2..=3).contains(&atom_levels) {
            out.push(format!("space.atom_levels: must be 2 or 3, got {atom_levels}"));
        }
        if self.output.path.as_os_str().is_empty() {
            out.push("output.path: must not be empty".to_string());
        }
        if self.output.path.is_absolute()
            || self.output.path.components().any(|c| matches!(c, std::path::Component::ParentDir))
        {
            out.push("output.path: must be a relative path inside the output directory".to_string());
        }

        match self.scenario.kind {
            ScenarioKind::Evolve => self.evolve_violations(&mut out),
            ScenarioKind::PerturbationSweep | ScenarioKind::SpectrumSweep => {
                self.sweep_violations(&mut out)
            }
        }
        out
    }

    fn label_violation(&self, path: &str, label: StateLabel) -> Option<String> {
        let SpaceConfig {
            photon_cutoff,
            atom_levels,
        } = self.space;
        match label {
            StateLabel::Dressed(k) if k >= 2 * (photon_cutoff + 1) => Some(format!(
                "{path}: E{k} does not exist with photon_cutoff {photon_cutoff}"
            )),
            StateLabel::Bare(q, n) if n > photon_cutoff => Some(format!(
                "{path}: {q}{n} exceeds photon_cutoff {photon_cutoff}"
            )),
            StateLabel::Bare(AtomState::S, _) if atom_levels != 3 => {
                Some(format!("{path}: |s> states need atom_levels = 3"))
            }
            _ => None,
        }
    }

    fn evolve_violations(&self, out: &mut Vec<String>) {
        if self.space.atom_levels != 3 {
            out.push("space.atom_levels: evolve scenarios need a three-level atom".to_string());
        }
        match &self.initial {
            None => out.push("initial: required for evolve scenarios".to_string()),
            Some(init) => out.extend(self.label_violation("initial.state", init.state)),
        }
        for (i, p) in self.pulses.iter().enumerate() {
            out.extend(p.violations(&format!("pulses[{i}]")));
        }
        if let Some(list) = &self.dissipation {
            for (i, d) in list.iter().enumerate() {
                if !(d.rate >= 0.0 && d.rate.is_finite()) {
                    out.push(format!("dissipation[{i}].rate: must be >= 0, got {}", d.rate));
                }
            }
        }
        match &self.time {
            None => out.push("time: required for evolve scenarios".to_string()),
            Some(t) => {
                if !(t.start.is_finite() && t.end.is_finite() && t.end > t.start) {
                    out.push(format!(
                        "time: need finite start < end, got [{}, {}]",
                        t.start, t.end
                    ));
                } else if !(t.sample_step > 0.0 && t.sample_step <= t.end - t.start) {
                    out.push(format!(
                        "time.sample_step: must be in (0, end - start], got {}",
                        t.sample_step
                    ));
                } else {
                    let n = (t.end - t.start) / t.sample_step;
                    if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
                        out.push(format!(
                            "time.sample_step: {} does not divide the window [{}, {}]",
                            t.sample_step, t.start, t.end
                        ));
                    }
                }
                if !(t.max_step > 0.0 && t.max_step.is_finite()) {
                    out.push(format!("time.max_step: must be > 0, got {}", t.max_step));
                }
            }
        }
        for (i, obs) in self.output.observables.iter().enumerate() {
            if let Observable::Population(label) = obs {
                out.extend(self.label_violation(&format!("output.observables[{i}]"), *label));
            }
        }
        if self.sweep.is_some() {
            out.push("sweep: only valid for sweep scenarios".to_string());
        }
    }

    fn sweep_violations(&self, out: &mut Vec<String>) {
        match &self.sweep {
            None => out.push("sweep: required for sweep scenarios".to_string()),
            Some(s) => {
                if !(s.coupling_start >= 0.0 && s.coupling_start.is_finite()) {
                    out.push(format!(
                        "sweep.coupling_start: must be >= 0, got {}",
                        s.coupling_start
                    ));
                }
                if !(s.coupling_end >= s.coupling_start && s.coupling_end.is_finite()) {
                    out.push(format!(
                        "sweep.coupling_end: must be >= coupling_start, got {}",
                        s.coupling_end
                    ));
                }
                if s.points == 0 {
                    out.push("sweep.points: must be >= 1".to_string());
                }
                if s.levels == 0 || s.levels > 2 * (self.space.photon_cutoff + 1) {
                    out.push(format!(
                        "sweep.levels: must be in 1..={}, got {}",
                        2 * (self.space.photon_cutoff + 1),
                        s.levels
                    ));
                }
            }
        }
        for (field, present) in [
            ("initial", self.initial.is_some()),
            ("pulses", !self.pulses.is_empty()),
            ("time", self.time.is_some()),
        ] {
            if present {
                out.push(format!("{field}: only valid for evolve scenarios"));
            }
        }
    }
}

/// Parse a TOML scenario and check every invariant, reporting all problems
/// at once.
pub fn parse_and_validate(document: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig =
        toml::from_str(document).map_err(|e| Error::Config(vec![e.to_string().trim_end().to_string()]))?;
    let problems = config.violations();
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(problems))
    }
}
