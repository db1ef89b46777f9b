use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Angular frequency of one wavenumber, `2πc · 1 cm⁻¹`, in rad/ps.
pub const CM1_TO_RAD_PS: f64 = 0.188365;

/// Unit tag for energy-like inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyUnit {
    #[default]
    #[serde(rename = "rad/ps")]
    RadPerPs,
    #[serde(rename = "cm-1")]
    Wavenumber,
}

impl EnergyUnit {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag.trim() {
            "rad/ps" => Ok(EnergyUnit::RadPerPs),
            "cm-1" | "cm^-1" => Ok(EnergyUnit::Wavenumber),
            other => Err(Error::Config(format!(
                "unknown energy unit `{other}` (expected \"cm-1\" or \"rad/ps\")"
            ))),
        }
    }

    /// Factor taking a value in this unit to rad/ps.
    pub fn to_rad_ps(self) -> f64 {
        match self {
            EnergyUnit::RadPerPs => 1.0,
            EnergyUnit::Wavenumber => CM1_TO_RAD_PS,
        }
    }
}

pub fn cm1_to_rad_ps(x: f64) -> f64 {
    x * CM1_TO_RAD_PS
}

pub fn fs_to_ps(x: f64) -> f64 {
    x * 1e-3
}
