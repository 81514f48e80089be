use super::config::{parse_and_validate, ScenarioConfig};
use crate::{Error, Result};

/// A scenario file shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

impl Preset {
    pub fn config(&self) -> Result<ScenarioConfig> {
        parse_and_validate(self.source).map_err(|e| e.context(format!("preset `{}`", self.name)))
    }
}

const PRESETS: [Preset; 6] = [
    Preset {
        name: "fig4c",
        description: "E0 -> |s,2>: two virtual ground-state photons made real by a pi pulse on s<->g, then reabsorbed",
        source: include_str!("../../presets/fig4c.toml"),
    },
    Preset {
        name: "fig4d",
        description: "E1 -> |s,3>: three-photon conversion from the first excited state through s<->g",
        source: include_str!("../../presets/fig4d.toml"),
    },
    Preset {
        name: "fig5c",
        description: "E0 -> |s,1>: one-photon conversion of the ground state through s<->e",
        source: include_str!("../../presets/fig5c.toml"),
    },
    Preset {
        name: "fig5d",
        description: "E1 -> |s,2>: two-photon emission from the first excited state through s<->e",
        source: include_str!("../../presets/fig5d.toml"),
    },
    Preset {
        name: "perturbation_sweep",
        description: "second-order energy shifts and conversion elements against exact diagonalisation, coupling 0.01..0.5",
        source: include_str!("../../presets/perturbation_sweep.toml"),
    },
    Preset {
        name: "spectrum_vs_coupling",
        description: "lowest dressed energy levels of the Rabi model, coupling 0..1",
        source: include_str!("../../presets/spectrum_vs_coupling.toml"),
    },
];

pub fn list_presets() -> &'static [Preset] {
    &PRESETS
}

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::invalid(format!(
            "unknown preset `{name}`; available: {}",
            names.join(", ")
        ))
    })
}
