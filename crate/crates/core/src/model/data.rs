use serde::Deserialize;

use super::spec::{NetworkSpec, Truncation};
use super::units::EnergyUnit;
use crate::{Error, Result};

/// Text of the shipped FMO network file.
pub const FMO_DATA: &str = include_str!("../../data/fmo_adolphs_renger.toml");

/// Network description as written in data and configuration files.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNetwork {
    #[serde(default)]
    pub units: Option<String>,
    #[serde(default)]
    pub reference_energy: Option<f64>,
    pub site_energies: Vec<f64>,
    pub couplings: Vec<Vec<f64>>,
    #[serde(default)]
    pub dipoles: Option<RawDipoles>,
    #[serde(default)]
    pub truncation: Option<Truncation>,
}

/// Dipoles either as full vectors or as directions with a common magnitude.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDipoles {
    #[serde(default)]
    pub magnitude: Option<f64>,
    #[serde(default)]
    pub directions: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub vectors: Option<Vec<[f64; 3]>>,
}

impl RawDipoles {
    fn resolve(&self) -> Result<Vec<[f64; 3]>> {
        match (&self.vectors, &self.directions) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(dirs)) => {
                let m = self
                    .magnitude
                    .ok_or_else(|| Error::Config("dipole directions need a magnitude".into()))?;
                dirs.iter()
                    .map(|d| {
                        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        if n == 0.0 {
                            return Err(Error::Config("zero dipole direction".into()));
                        }
                        Ok([m * d[0] / n, m * d[1] / n, m * d[2] / n])
                    })
                    .collect()
            }
            _ => Err(Error::Config(
                "dipoles need exactly one of `vectors` or `directions`".into(),
            )),
        }
    }
}

impl RawNetwork {
    /// Converts to internal units and validates.
    pub fn into_spec(self) -> Result<NetworkSpec> {
        let unit = match &self.units {
            Some(tag) => EnergyUnit::parse(tag)?,
            None => EnergyUnit::RadPerPs,
        };
        let s = unit.to_rad_ps();
        let net = NetworkSpec {
            site_energies: self.site_energies.iter().map(|x| x * s).collect(),
            couplings: self
                .couplings
                .iter()
                .map(|r| r.iter().map(|x| x * s).collect())
                .collect(),
            reference_energy: self.reference_energy.unwrap_or(0.0) * s,
            dipoles: self.dipoles.as_ref().map(RawDipoles::resolve).transpose()?,
            truncation: self.truncation.unwrap_or_default(),
        };
        net.validate()?;
        Ok(net)
    }
}

/// Parses a network file in the shipped format.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let raw: RawNetwork = toml::from_str(text)
        .map_err(|e| Error::Config(format!("network file: {}", e.message())))?;
    raw.into_spec()
}

pub(crate) fn fmo_default() -> NetworkSpec {
    parse_network(FMO_DATA).expect("shipped FMO data file is valid")
}
