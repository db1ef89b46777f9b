//! Named, reproducible experiment configurations and the sweep runner.

mod catalog;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use catalog::{catalog, find, CATALOG_NAMES};

use crate::dynamics::{evolve, IntegratorConfig, Observer, Trajectory};
use crate::entanglement::{ancilla_setup, AncillaProtocol};
use crate::model::{scale_bath, CorrelatedDephasing, Generator, ModelSpec};
use crate::quantum::{Bipartition, QuantumState};
use crate::{Error, Result};

/// Threshold and hold time of the entanglement-lifetime metric.
pub const LIFETIME_THRESHOLD: f64 = 0.05;
pub const LIFETIME_HOLD: f64 = 0.1;

/// Initial state; written `site-N`, `ground` or `max-entangled-ancilla`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialState {
    /// One excitation on site N (1-based), everything else empty.
    Site(usize),
    Ground,
    /// `(1/√N) Σ_i |site_i⟩|anc_i⟩` with an idle ancilla.
    MaxEntangledAncilla,
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Site(j) => write!(f, "site-{j}"),
            InitialState::Ground => f.write_str("ground"),
            InitialState::MaxEntangledAncilla => f.write_str("max-entangled-ancilla"),
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(InitialState::Ground),
            "max-entangled-ancilla" => Ok(InitialState::MaxEntangledAncilla),
            _ => s
                .strip_prefix("site-")
                .and_then(|j| j.parse().ok())
                .filter(|&j| j > 0)
                .map(InitialState::Site)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown initial state `{s}` (expected site-N, ground or max-entangled-ancilla)"
                    ))
                }),
        }
    }
}

impl TryFrom<String> for InitialState {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InitialState> for String {
    fn from(s: InitialState) -> String {
        s.to_string()
    }
}

/// A bipartition to record; written `sites:k`, `excitons:k`, `ancilla` or `a,b|c,d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SplitSpec {
    /// Sites `(1…k)|(k+1…N)`.
    Sites(usize),
    /// Excitons `(1…k)|(k+1…N)` in energy order.
    Excitons(usize),
    /// `{site1, anc1}|rest` of the ancilla protocol.
    Ancilla,
    Custom {
        side_a: Vec<String>,
        side_b: Vec<String>,
    },
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::Sites(k) => write!(f, "sites:{k}"),
            SplitSpec::Excitons(k) => write!(f, "excitons:{k}"),
            SplitSpec::Ancilla => f.write_str("ancilla"),
            SplitSpec::Custom { side_a, side_b } => {
                write!(f, "{}|{}", side_a.join(","), side_b.join(","))
            }
        }
    }
}

impl FromStr for SplitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot read bipartition `{s}`"));
        if s == "ancilla" {
            return Ok(SplitSpec::Ancilla);
        }
        if let Some(k) = s.strip_prefix("sites:") {
            return k.trim().parse().map(SplitSpec::Sites).map_err(|_| bad());
        }
        if let Some(k) = s.strip_prefix("excitons:") {
            return k.trim().parse().map(SplitSpec::Excitons).map_err(|_| bad());
        }
        let (a, b) = s.split_once('|').ok_or_else(bad)?;
        let side = |x: &str| -> Vec<String> {
            x.split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        };
        let (side_a, side_b) = (side(a), side(b));
        if side_a.is_empty() || side_b.is_empty() {
            return Err(bad());
        }
        Ok(SplitSpec::Custom { side_a, side_b })
    }
}

impl TryFrom<String> for SplitSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SplitSpec> for String {
    fn from(s: SplitSpec) -> String {
        s.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Bath Markovianity dial.
    F,
    /// Strength c of correlated dephasing.
    Correlation,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::F => "f",
            SweepParameter::Correlation => "correlation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// `n` logarithmically spaced values in `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// A named experiment: model, initial state, recorded observables and sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub initial_state: InitialState,
    #[serde(default)]
    pub bipartitions: Vec<SplitSpec>,
    #[serde(default)]
    pub exciton_populations: bool,
    /// Times (ps) at which the full state is kept.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    pub integrator: IntegratorConfig,
    pub model: ModelSpec,
}

/// Command-line adjustments to a scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    /// Single bath f; replaces an f sweep.
    pub f: Option<f64>,
    /// New f axis.
    pub f_sweep: Option<Vec<f64>>,
}

/// Generator, initial state and observers of one scenario point.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub generator: Generator,
    pub initial: QuantumState,
    pub observers: Vec<Observer>,
}

impl Scenario {
    /// The scenario with the sweep parameter set to `value` and the sweep removed.
    pub fn at(&self, value: f64) -> Result<Scenario> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config(format!("scenario `{}` has no sweep", self.name)))?;
        let mut s = self.clone();
        s.sweep = None;
        match sweep.parameter {
            SweepParameter::F => {
                if !self.model.bath.is_active() {
                    return Err(Error::Config("an f sweep needs an active bath".into()));
                }
                s.model.bath = scale_bath(&self.model.bath, value)?;
            }
            SweepParameter::Correlation => {
                s.model.noise.correlated_dephasing = if value == 0.0 {
                    None
                } else {
                    Some(CorrelatedDephasing::Strength(value))
                };
            }
        }
        Ok(s)
    }

    /// The scenario with `o` applied and re-validated.
    pub fn with_overrides(&self, o: &Overrides) -> Result<Scenario> {
        let mut s = self.clone();
        if let Some(dt) = o.dt {
            s.integrator.dt = dt;
            // keep the recording interval in ps
            let interval = self.integrator.record_interval();
            s.integrator.record_every = ((interval / dt).round() as usize).max(1);
        }
        if let Some(t) = o.t_end {
            s.integrator.t_end = t;
            s.snapshots.retain(|&x| x <= t);
        }
        if o.f.is_some() && o.f_sweep.is_some() {
            return Err(Error::Argument(
                "give either a single f or an f sweep, not both".into(),
            ));
        }
        if o.f.is_some() || o.f_sweep.is_some() {
            if !s.model.bath.is_active() {
                return Err(Error::Config(format!(
                    "scenario `{}` has no bath to scale with f",
                    s.name
                )));
            }
            if matches!(&s.sweep, Some(sw) if sw.parameter != SweepParameter::F) {
                return Err(Error::Config(format!(
                    "scenario `{}` already sweeps another parameter",
                    s.name
                )));
            }
        }
        if let Some(f) = o.f {
            s.sweep = None;
            s.model.bath = scale_bath(&s.model.bath, f)?;
        }
        if let Some(values) = &o.f_sweep {
            s.sweep = Some(Sweep {
                parameter: SweepParameter::F,
                values: values.clone(),
            });
        }
        s.validate()?;
        Ok(s)
    }

    /// Axis values, or `None` for a single run.
    pub fn sweep_values(&self) -> Option<&[f64]> {
        self.sweep.as_ref().map(|s| s.values.as_slice())
    }

    /// Checks the model, the sweep and every bipartition against the layout.
    pub fn validate(&self) -> Result<()> {
        self.validate_inner().map_err(|e| e.in_scenario(&self.name))
    }

    fn validate_inner(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("scenario name is empty".into()));
        }
        self.integrator.validate()?;
        match &self.sweep {
            Some(sw) => {
                if sw.values.is_empty() {
                    return Err(Error::Config("sweep has no values".into()));
                }
                for &v in &sw.values {
                    self.at(v)?.validate_point()?;
                }
            }
            None => self.validate_point()?,
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        self.model.validate()?;
        for &t in &self.snapshots {
            if !(0.0..=self.integrator.t_end).contains(&t) {
                return Err(Error::Config(format!(
                    "snapshot at {t} ps outside [0, {}]",
                    self.integrator.t_end
                )));
            }
        }
        self.prepare().map(|_| ())
    }

    /// Builds the generator, initial state and observers of a non-swept scenario.
    pub fn prepare(&self) -> Result<PreparedRun> {
        if self.sweep.is_some() {
            return Err(Error::Config(format!(
                "scenario `{}` sweeps a parameter; prepare a point with `at`",
                self.name
            )));
        }
        let base = Generator::build(&self.model)?;
        let n = self.model.network.n_sites();
        let (generator, initial, ancilla_split) = match self.initial_state {
            InitialState::MaxEntangledAncilla => {
                let setup = ancilla_setup(&base, AncillaProtocol::SingleExcitation)?;
                (setup.generator, setup.initial, Some(setup.split))
            }
            InitialState::Site(j) => {
                if j > n {
                    return Err(Error::Config(format!("initial site {j} outside 1..={n}")));
                }
                let st =
                    excitation_state(&base, Some(&crate::model::NetworkSpec::site_label(j - 1)))?;
                (base, st, None)
            }
            InitialState::Ground => {
                let st = excitation_state(&base, None)?;
                (base, st, None)
            }
        };
        let mut observers = Vec::new();
        for sp in &self.bipartitions {
            observers.push(match sp {
                SplitSpec::Sites(k) => {
                    Observer::Negativity(Bipartition::prefix_split("site", *k, n)?)
                }
                SplitSpec::Excitons(k) => Observer::ExcitonNegativity(*k),
                SplitSpec::Ancilla => {
                    Observer::Negativity(ancilla_split.clone().ok_or_else(|| {
                        Error::Config(
                            "the ancilla split needs initial_state = \"max-entangled-ancilla\""
                                .into(),
                        )
                    })?)
                }
                SplitSpec::Custom { side_a, side_b } => {
                    let p = Bipartition::new(side_a, side_b)?.named(sp.to_string());
                    generator.layout().expand_labels(p.side_a())?;
                    generator.layout().expand_labels(p.side_b())?;
                    Observer::Negativity(p)
                }
            });
        }
        if self.exciton_populations {
            observers.push(Observer::ExcitonPopulations);
        }
        observers.extend(self.snapshots.iter().map(|&t| Observer::Snapshot(t)));
        // Resolve exciton observers eagerly so degeneracies surface here.
        if observers.iter().any(|o| {
            matches!(
                o,
                Observer::ExcitonNegativity(_) | Observer::ExcitonPopulations
            )
        }) {
            let sys = generator
                .system()
                .filter(|s| s.truncation == crate::model::Truncation::Single)
                .ok_or_else(|| {
                    Error::Config(
                        "exciton observables need the single-excitation truncation".into(),
                    )
                })?;
            crate::entanglement::ExcitonBasis::new(&sys.site_block)?;
            for o in &observers {
                if let Observer::ExcitonNegativity(k) = o {
                    Bipartition::prefix_split("exciton", *k, n)?;
                }
            }
        }
        Ok(PreparedRun {
            generator,
            initial,
            observers,
        })
    }

    /// SHA-256 of the canonical TOML form; independent of key order in the source file.
    pub fn digest(&self) -> String {
        let text = toml::to_string(self).expect("scenario serializes to TOML");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Pure state with one excitation on `site` (or none), every other mode empty.
fn excitation_state(gen: &Generator, site: Option<&str>) -> Result<QuantumState> {
    let layout = gen.layout();
    let tables = layout
        .modes()
        .into_iter()
        .map(|m| Ok((layout.occupation_table(&m)?, Some(m.as_str()) == site)))
        .collect::<Result<Vec<_>>>()?;
    let x = (0..layout.total_dim())
        .find(|&x| tables.iter().all(|(t, on)| t[x] == u8::from(*on)))
        .ok_or_else(|| {
            Error::Layout(format!(
                "layout {layout} has no basis state for this excitation"
            ))
        })?;
    QuantumState::basis(layout.clone(), x)
}

/// Trajectories of a sweep, in axis order.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

impl SweepResult {
    pub fn times(&self) -> &[f64] {
        self.trajectories
            .first()
            .map(|t| t.times.as_slice())
            .unwrap_or(&[])
    }

    /// `grid[i][k]`: observable at axis value `i` and time index `k`.
    /// Names are `p_sink` or a recorded negativity series.
    pub fn grid(&self, observable: &str) -> Option<Vec<Vec<f64>>> {
        self.trajectories
            .iter()
            .map(|tr| {
                if observable == "p_sink" {
                    Some(tr.sink_population.clone())
                } else {
                    tr.negativity(observable).map(<[f64]>::to_vec)
                }
            })
            .collect()
    }

    /// Every grid available on all points.
    pub fn grid_names(&self) -> Vec<String> {
        let mut names = vec!["p_sink".to_string()];
        if let Some(tr) = self.trajectories.first() {
            names.extend(tr.negativities.iter().map(|s| s.name.clone()));
        }
        names
    }

    pub fn trajectory_at(&self, value: f64) -> Option<&Trajectory> {
        self.values
            .iter()
            .position(|&v| (v - value).abs() <= 1e-12 * value.abs().max(1.0))
            .map(|i| &self.trajectories[i])
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum RunOutput {
    Single(Trajectory),
    Sweep(SweepResult),
}

impl RunOutput {
    /// All trajectories, in axis order for a sweep.
    pub fn trajectories(&self) -> Vec<&Trajectory> {
        match self {
            RunOutput::Single(t) => vec![t],
            RunOutput::Sweep(s) => s.trajectories.iter().collect(),
        }
    }
}

/// One propagation of a non-swept scenario.
pub fn run_point(s: &Scenario) -> Result<Trajectory> {
    let inner = || -> Result<Trajectory> {
        let run = s.prepare()?;
        evolve(&run.generator, &run.initial, &s.integrator, &run.observers)
    };
    inner().map_err(|e| e.in_scenario(&s.name))
}

/// Runs a scenario; sweep points run in parallel and are merged in axis order.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput> {
    let Some(sweep) = &s.sweep else {
        return run_point(s).map(RunOutput::Single);
    };
    let points = sweep
        .values
        .iter()
        .map(|&v| s.at(v))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_scenario(&s.name))?;
    let trajectories = points
        .par_iter()
        .map(run_point)
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput::Sweep(SweepResult {
        parameter: sweep.parameter,
        values: sweep.values.clone(),
        trajectories,
    }))
}

/// First time the series drops below `threshold` after having reached it and
/// stays below for `hold` ps (or until the end of the record).
///
/// Returns 0 when the series never reaches the threshold and the last
/// recorded time when it never drops.
pub fn entanglement_lifetime(times: &[f64], values: &[f64], threshold: f64, hold: f64) -> f64 {
    let Some(first_above) = values.iter().position(|&v| v >= threshold) else {
        return 0.0;
    };
    let mut k = first_above;
    while k < values.len() {
        if values[k] < threshold {
            let t0 = times[k];
            let stays = times
                .iter()
                .zip(values)
                .skip(k)
                .take_while(|(&t, _)| t <= t0 + hold + 1e-12)
                .all(|(_, &v)| v < threshold);
            if stays {
                return t0;
            }
        }
        k += 1;
    }
    times.last().copied().unwrap_or(0.0)
}
