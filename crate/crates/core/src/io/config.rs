use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dynamics::{IntegratorConfig, Method};
use crate::model::units::EnergyUnit;
use crate::model::{
    fmo_base_rates, BathModel, BathSpec, CorrelatedDephasing, Frame, Injection, LaserPulse,
    LocalModes, ModelSpec, NetworkSpec, NoiseSpec, NonLocalMode, RawNetwork, Truncation,
};
use crate::scenarios::{find, log_space, InitialState, Scenario, SplitSpec, Sweep, SweepParameter};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
struct RawConfig {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    initial_state: Option<String>,
    #[serde(default)]
    bipartitions: Vec<String>,
    #[serde(default)]
    exciton_populations: bool,
    /// ps.
    #[serde(default)]
    snapshots: Vec<f64>,
    #[serde(default)]
    integrator: RawIntegrator,
    network: RawNetworkSection,
    #[serde(default)]
    noise: Option<RawNoise>,
    #[serde(default)]
    injection: Option<Injection>,
    #[serde(default)]
    bath: Option<RawBath>,
    #[serde(default)]
    laser: Option<RawLaser>,
    #[serde(default)]
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
struct RawIntegrator {
    method: Option<Method>,
    dt: Option<f64>,
    adaptive_tol: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<usize>,
    positivity_every: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct RawNetworkSection {
    /// `"fmo"` selects the shipped network.
    preset: Option<String>,
    /// Network file in the shipped format, relative to the configuration.
    file: Option<PathBuf>,
    units: Option<String>,
    reference_energy: Option<f64>,
    site_energies: Option<Vec<f64>>,
    couplings: Option<Vec<Vec<f64>>>,
    dipoles: Option<crate::model::RawDipoles>,
    truncation: Option<Truncation>,
}

#[derive(Debug, Deserialize)]
struct RawNoise {
    dissipation: Vec<f64>,
    dephasing: Vec<f64>,
    sink_rate: f64,
    sink_source_site: usize,
    correlated_dephasing: Option<RawCorrelation>,
}

#[derive(Debug, Deserialize)]
struct RawCorrelation {
    strength: Option<f64>,
    matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
struct RawBath {
    model: String,
    #[serde(default = "one")]
    f: f64,
    base_couplings: Option<Vec<f64>>,
    base_dampings: Option<Vec<f64>>,
    // local modes
    mode_frequencies: Option<Vec<f64>>,
    levels_per_mode: Option<usize>,
    max_total_mode_excitations: Option<usize>,
    max_layout_dim: Option<usize>,
    // non-local mode
    levels: Option<usize>,
    tail_tolerance: Option<f64>,
    max_levels: Option<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct RawLaser {
    /// 1-based site the defaults are derived from.
    resonant_site: Option<usize>,
    field_strength: Option<f64>,
    width_fs: Option<f64>,
    center_fs: Option<f64>,
    polarization: Option<[f64; 3]>,
    /// Absolute carrier frequency, in the network's energy units.
    carrier: Option<f64>,
    frame: Option<Frame>,
}

#[derive(Debug, Deserialize)]
struct RawSweep {
    parameter: SweepParameter,
    values: Option<Vec<f64>>,
    log: Option<RawLogSpace>,
}

#[derive(Debug, Deserialize)]
struct RawLogSpace {
    from: f64,
    to: f64,
    count: usize,
}

/// Reads a scenario configuration file.
///
/// In strict mode unknown keys are rejected; otherwise they are reported
/// through `warn` and skipped.
pub fn parse_config(path: &Path, strict: bool) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path, strict, &mut |w| {
        eprintln!("warning: {}: {w}", path.display())
    })
}

/// As [`parse_config`] on text already in memory; `path` locates errors and relative files.
pub fn parse_config_str(
    text: &str,
    path: &Path,
    strict: bool,
    warn: &mut dyn FnMut(&str),
) -> Result<Scenario> {
    let fail = |line: Option<usize>, message: String| Error::ConfigFile {
        path: path.to_path_buf(),
        message: match line {
            Some(l) => format!("line {l}: {message}"),
            None => message,
        },
    };
    let mut ignored = Vec::new();
    let de = toml::Deserializer::new(text);
    let raw: RawConfig = serde_ignored::deserialize(de, |p| {
        let key: Vec<String> = p
            .to_string()
            .split('.')
            .filter(|s| *s != "?")
            .map(String::from)
            .collect();
        ignored.push(key.join("."))
    })
    .map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        fail(line, e.message().to_string())
    })?;
    for key in &ignored {
        let line = locate_key(text, key);
        if strict {
            return Err(fail(line, format!("unknown key `{key}`")));
        }
        warn(&format!("ignoring unknown key `{key}`"));
    }
    let in_section = |section: &'static str| {
        let line = locate_section(text, section);
        move |e: Error| fail(line, format!("[{section}] {e}"))
    };
    build(raw, path, &in_section)
}

fn build<F, G>(raw: RawConfig, path: &Path, in_section: &F) -> Result<Scenario>
where
    F: Fn(&'static str) -> G,
    G: FnOnce(Error) -> Error,
{
    let network = network_spec(&raw.network, path).map_err(in_section("network"))?;
    let n = network.n_sites();
    let unit = match &raw.network.units {
        Some(tag) => EnergyUnit::parse(tag).map_err(in_section("network"))?,
        None => EnergyUnit::RadPerPs,
    };

    let mut noise = match raw.noise {
        Some(rn) => {
            let correlated_dephasing = match rn.correlated_dephasing {
                None => None,
                Some(RawCorrelation {
                    strength: Some(c),
                    matrix: None,
                }) => Some(CorrelatedDephasing::Strength(c)),
                Some(RawCorrelation {
                    strength: None,
                    matrix: Some(m),
                }) => Some(CorrelatedDephasing::Matrix(m)),
                Some(_) => {
                    return Err(in_section("noise")(Error::Config(
                        "correlated_dephasing needs exactly one of `strength` or `matrix`".into(),
                    )))
                }
            };
            NoiseSpec {
                dissipation: rn.dissipation,
                dephasing: rn.dephasing,
                sink_rate: rn.sink_rate,
                sink_source_site: rn.sink_source_site,
                correlated_dephasing,
                injection: None,
            }
        }
        None if n == 7 => NoiseSpec::fmo(),
        None => {
            return Err(in_section("noise")(Error::Config(
                "[noise] is required unless the network has the seven FMO sites".into(),
            )))
        }
    };
    noise.injection = raw.injection;
    noise.validate(n).map_err(in_section("noise"))?;

    let bath = match raw.bath {
        None => BathSpec::none(),
        Some(rb) => bath_spec(rb, n, unit).map_err(in_section("bath"))?,
    };
    bath.validate(n).map_err(in_section("bath"))?;

    let laser = match raw.laser {
        None => None,
        Some(rl) => Some(laser_pulse(rl, &network, unit).map_err(in_section("laser"))?),
    };

    let model = ModelSpec {
        network,
        noise,
        bath,
        laser,
    };
    model.validate().map_err(in_section("network"))?;

    let defaults = IntegratorConfig::default();
    let ri = raw.integrator;
    let integrator = IntegratorConfig {
        method: ri.method.unwrap_or(defaults.method),
        dt: ri.dt.unwrap_or(defaults.dt),
        adaptive_tol: ri.adaptive_tol.unwrap_or(defaults.adaptive_tol),
        t_end: ri.t_end.unwrap_or(defaults.t_end),
        record_every: ri.record_every.unwrap_or(defaults.record_every),
        positivity_every: ri.positivity_every.unwrap_or(defaults.positivity_every),
        tolerances: defaults.tolerances,
    };
    integrator.validate().map_err(in_section("integrator"))?;

    let sweep = match raw.sweep {
        None => None,
        Some(rs) => {
            let values = match (rs.values, rs.log) {
                (Some(v), None) => v,
                (None, Some(l)) if l.count > 0 && l.from > 0.0 && l.to > 0.0 => {
                    log_space(l.from, l.to, l.count)
                }
                _ => {
                    return Err(in_section("sweep")(Error::Config(
                        "sweep needs either `values` or a positive `log = { from, to, count }`"
                            .into(),
                    )))
                }
            };
            Some(Sweep {
                parameter: rs.parameter,
                values,
            })
        }
    };

    let initial_state = match &raw.initial_state {
        Some(s) => s.parse::<InitialState>(),
        None => Ok(InitialState::Site(1)),
    }
    .map_err(in_section("scenario"))?;
    let bipartitions = raw
        .bipartitions
        .iter()
        .map(|s| s.parse::<SplitSpec>())
        .collect::<Result<Vec<_>>>()
        .map_err(in_section("scenario"))?;

    let scenario = Scenario {
        name: raw.name,
        description: raw.description,
        initial_state,
        bipartitions,
        exciton_populations: raw.exciton_populations,
        snapshots: raw.snapshots,
        sweep,
        integrator,
        model,
    };
    scenario.validate().map_err(in_section("scenario"))?;
    Ok(scenario)
}

fn network_spec(raw: &RawNetworkSection, path: &Path) -> Result<NetworkSpec> {
    let inline = raw.site_energies.is_some() || raw.couplings.is_some();
    let sources =
        usize::from(raw.preset.is_some()) + usize::from(raw.file.is_some()) + usize::from(inline);
    if sources != 1 {
        return Err(Error::Config(
            "give exactly one of `preset`, `file` or inline `site_energies` and `couplings`".into(),
        ));
    }
    let net = if let Some(p) = &raw.preset {
        if p != "fmo" {
            return Err(Error::Config(format!(
                "unknown network preset `{p}` (known: fmo)"
            )));
        }
        if raw.units.is_some() || raw.reference_energy.is_some() || raw.dipoles.is_some() {
            return Err(Error::Config(
                "a preset network takes no energies or dipoles".into(),
            ));
        }
        NetworkSpec::fmo()
    } else if let Some(f) = &raw.file {
        let full = path.parent().unwrap_or(Path::new(".")).join(f);
        let text = std::fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
        crate::model::parse_network(&text)?
    } else {
        RawNetwork {
            units: raw.units.clone(),
            reference_energy: raw.reference_energy,
            site_energies: raw.site_energies.clone().unwrap_or_default(),
            couplings: raw
                .couplings
                .clone()
                .ok_or_else(|| Error::Config("missing field `couplings`".into()))?,
            dipoles: raw.dipoles.clone(),
            truncation: None,
        }
        .into_spec()?
    };
    Ok(match raw.truncation {
        Some(t) => net.with_truncation(t),
        None => net,
    })
}

fn bath_spec(rb: RawBath, n: usize, unit: EnergyUnit) -> Result<BathSpec> {
    let local_keys = rb.mode_frequencies.is_some()
        || rb.levels_per_mode.is_some()
        || rb.max_total_mode_excitations.is_some()
        || rb.max_layout_dim.is_some();
    let nonlocal_keys =
        rb.levels.is_some() || rb.tail_tolerance.is_some() || rb.max_levels.is_some();
    let model = match rb.model.as_str() {
        "none" => BathModel::None,
        "local-modes" => {
            if nonlocal_keys {
                return Err(Error::Config(
                    "levels/tail_tolerance/max_levels belong to the non-local mode".into(),
                ));
            }
            let d = LocalModes::default();
            BathModel::LocalModes(LocalModes {
                mode_frequencies: rb
                    .mode_frequencies
                    .map(|w| w.iter().map(|x| x * unit.to_rad_ps()).collect()),
                levels_per_mode: rb.levels_per_mode.unwrap_or(d.levels_per_mode),
                max_total_mode_excitations: rb
                    .max_total_mode_excitations
                    .or(d.max_total_mode_excitations),
                max_layout_dim: rb.max_layout_dim.unwrap_or(d.max_layout_dim),
            })
        }
        "non-local-mode" => {
            if local_keys {
                return Err(Error::Config(
                    "local-mode keys given for the non-local mode".into(),
                ));
            }
            let d = NonLocalMode::default();
            BathModel::NonLocalMode(NonLocalMode {
                levels: rb.levels,
                tail_tolerance: rb.tail_tolerance.unwrap_or(d.tail_tolerance),
                max_levels: rb.max_levels.unwrap_or(d.max_levels),
            })
        }
        other => {
            return Err(Error::Config(format!(
                "unknown bath model `{other}` (expected none, local-modes or non-local-mode)"
            )))
        }
    };
    let base = |v: Option<Vec<f64>>, what: &str| -> Result<Vec<f64>> {
        match v {
            Some(v) => Ok(v),
            None if n == 7 => Ok(fmo_base_rates()),
            None => Err(Error::Config(format!(
                "{what} are required for a network of {n} sites"
            ))),
        }
    };
    let active = model != BathModel::None;
    Ok(BathSpec {
        model,
        f: rb.f,
        base_couplings: if active {
            base(rb.base_couplings, "base_couplings")?
        } else {
            Vec::new()
        },
        base_dampings: if active {
            base(rb.base_dampings, "base_dampings")?
        } else {
            Vec::new()
        },
    })
}

fn laser_pulse(rl: RawLaser, net: &NetworkSpec, unit: EnergyUnit) -> Result<LaserPulse> {
    let mut p = match rl.resonant_site {
        Some(site) => LaserPulse::resonant_with_site(net, site)?,
        None => {
            let (Some(polarization), Some(carrier)) = (rl.polarization, rl.carrier) else {
                return Err(Error::Config(
                    "laser needs `resonant_site` or both `polarization` and `carrier`".into(),
                ));
            };
            let mut p = LaserPulse::resonant_with_site(net, 1).unwrap_or(LaserPulse {
                field_strength: crate::model::FMO_FIELD_STRENGTH,
                width_fs: 60.0,
                center_fs: 120.0,
                polarization,
                carrier: 0.0,
                frame: Frame::Rotating,
            });
            p.polarization = polarization;
            p.carrier = carrier * unit.to_rad_ps();
            p
        }
    };
    if rl.resonant_site.is_some() {
        if let Some(e) = rl.polarization {
            p.polarization = e;
        }
        if let Some(c) = rl.carrier {
            p.carrier = c * unit.to_rad_ps();
        }
    }
    if let Some(e) = rl.field_strength {
        p.field_strength = e;
    }
    if let Some(w) = rl.width_fs {
        p.width_fs = w;
    }
    if let Some(c) = rl.center_fs {
        p.center_fs = c;
    }
    if let Some(fr) = rl.frame {
        p.frame = fr;
    }
    p.validate()?;
    Ok(p)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the `[section]` header or `section = …` key.
fn locate_section(text: &str, section: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim();
            l == format!("[{section}]")
                || l.starts_with(&format!("[{section}."))
                || l.strip_prefix(section)
                    .is_some_and(|r| r.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

/// Line of the last path segment of `key` (`a.b.c`) under its table.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop()?;
    let start = parts
        .first()
        .and_then(|s| locate_section(text, s))
        .map(|l| l - 1)
        .unwrap_or(0);
    text.lines()
        .enumerate()
        .skip(start)
        .find(|(_, l)| {
            let l = l.trim();
            l.strip_prefix(leaf)
                .is_some_and(|r| r.trim_start().starts_with('='))
                || l == format!("[{key}]")
        })
        .map(|(i, _)| i + 1)
}

/// A catalog name, or otherwise a configuration file path.
pub fn resolve_scenario(arg: &str, strict: bool) -> Result<Scenario> {
    if let Some(s) = find(arg) {
        return Ok(s);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Error::Config(format!(
            "`{arg}` is neither a catalog scenario nor an existing configuration file"
        )));
    }
    parse_config(path, strict)
}
