use crate::entanglement::NegativityMethod;
use crate::quantum::{QuantumState, StateReport};
use crate::{CMatrix, Error, Result};

/// Negativity recorded for one bipartition.
#[derive(Clone, Debug, PartialEq)]
pub struct NegativitySeries {
    pub name: String,
    pub method: NegativityMethod,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: QuantumState,
}

/// Observables recorded by [`super::evolve`]; every series is indexed like `times`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// ps.
    pub times: Vec<f64>,
    pub site_labels: Vec<String>,
    /// `site_populations[t][j]`.
    pub site_populations: Vec<Vec<f64>>,
    pub ground_population: Vec<f64>,
    /// Population of the sink level.
    pub sink_population: Vec<f64>,
    /// Index into `site_labels` of the site feeding the sink.
    pub sink_source: Option<usize>,
    /// Γ_sink in 1/ps.
    pub sink_rate: f64,
    /// `(t, p_source(t))` at every internal step, for the sink integral.
    pub source_trace: Vec<(f64, f64)>,
    pub mode_labels: Vec<String>,
    pub mode_populations: Vec<Vec<f64>>,
    pub exciton_populations: Option<Vec<Vec<f64>>>,
    pub negativities: Vec<NegativitySeries>,
    pub validity: Vec<StateReport>,
    pub snapshots: Vec<Snapshot>,
    /// Full states at every record, when requested.
    pub states: Vec<CMatrix>,
    pub final_state: QuantumState,
    pub steps: usize,
}

/// Worst validity figures over a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValiditySummary {
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    /// Smallest eigenvalue over the checked records.
    pub min_eigenvalue: f64,
    pub eigen_checks: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn site_series(&self, j: usize) -> Vec<f64> {
        self.site_populations.iter().map(|p| p[j]).collect()
    }

    pub fn negativity(&self, name: &str) -> Option<&[f64]> {
        self.negativities
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    pub fn validity_summary(&self) -> ValiditySummary {
        let mut s = ValiditySummary {
            max_trace_deviation: 0.0,
            max_hermiticity_deviation: 0.0,
            min_eigenvalue: f64::INFINITY,
            eigen_checks: 0,
        };
        for r in &self.validity {
            s.max_trace_deviation = s.max_trace_deviation.max(r.trace_deviation);
            s.max_hermiticity_deviation = s.max_hermiticity_deviation.max(r.hermiticity_deviation);
            if let Some(e) = r.min_eigenvalue {
                s.min_eigenvalue = s.min_eigenvalue.min(e);
                s.eigen_checks += 1;
            }
        }
        s
    }

    /// Value of a series at the record closest to `t`.
    pub fn index_near(&self, t: f64) -> Option<usize> {
        (0..self.times.len()).min_by(|&a, &b| {
            (self.times[a] - t)
                .abs()
                .total_cmp(&(self.times[b] - t).abs())
        })
    }
}

/// `p_sink(t) = 2Γ_sink ∫₀ᵗ p_source(t′) dt′` by the trapezoidal rule,
/// sampled at the recorded times.
///
/// Uses the per-step source trace when present, otherwise the recorded
/// site populations.
pub fn compute_p_sink(traj: &Trajectory, rate: f64) -> Result<Vec<f64>> {
    let src = traj
        .sink_source
        .ok_or_else(|| Error::Config("trajectory has no sink source population".into()))?;
    let samples: Vec<(f64, f64)> = if traj.source_trace.is_empty() {
        if traj.site_populations.iter().any(|p| p.len() <= src) {
            return Err(Error::Config(
                "trajectory does not record the sink source site".into(),
            ));
        }
        traj.times
            .iter()
            .zip(&traj.site_populations)
            .map(|(&t, p)| (t, p[src]))
            .collect()
    } else {
        traj.source_trace.clone()
    };
    let mut out = Vec::with_capacity(traj.times.len());
    let mut acc = 0.0;
    let mut k = 0;
    for &t in &traj.times {
        while k + 1 < samples.len() && samples[k + 1].0 <= t + 1e-12 {
            let (t0, p0) = samples[k];
            let (t1, p1) = samples[k + 1];
            acc += 0.5 * (t1 - t0) * (p0 + p1);
            k += 1;
        }
        out.push(2.0 * rate * acc);
    }
    Ok(out)
}
