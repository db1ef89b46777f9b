use serde::{Deserialize, Serialize};

use super::trajectory::{NegativitySeries, Snapshot, Trajectory};
use crate::entanglement::{
    bipartite_log_negativity, ExcitonBasis, NegativityMethod, SingleExcitationAmplitudes,
};
use crate::model::{CompiledRhs, Generator, Truncation};
use crate::quantum::{
    bipartite_reduction, validity_report, BipartiteState, Bipartition, QuantumState, StateReport,
    Tolerances,
};
use crate::{CMatrix, Error, Result, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with fixed step.
    #[default]
    Rk4,
    /// Dormand–Prince 5(4) with step-size control.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step (RK4) or initial step (adaptive), ps.
    pub dt: f64,
    pub adaptive_tol: f64,
    pub t_end: f64,
    /// Observables are recorded every `record_every · dt`.
    pub record_every: usize,
    pub tolerances: Tolerances,
    /// Full eigenvalue check every this many records; 0 checks only the final state.
    pub positivity_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            dt: 1e-3,
            adaptive_tol: 1e-8,
            t_end: 5.0,
            record_every: 10,
            tolerances: run_tolerances(),
            positivity_every: 10,
        }
    }
}

/// Run tolerances: aborting at ten times these bounds the most negative
/// eigenvalue at −1e-7.
fn run_tolerances() -> Tolerances {
    Tolerances {
        positivity: 1e-8,
        ..Tolerances::default()
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Validation(format!(
                "step dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Validation(format!(
                "t_end = {} must be positive",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Validation("record_every must be at least 1".into()));
        }
        if self.adaptive_tol.is_nan() || self.adaptive_tol <= 0.0 {
            return Err(Error::Validation("adaptive_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn record_interval(&self) -> f64 {
        self.dt * self.record_every as f64
    }
}

/// Quantities recorded alongside the populations.
#[derive(Clone, Debug, PartialEq)]
pub enum Observer {
    /// General partial-transpose negativity; modes outside the split are traced out.
    Negativity(Bipartition),
    ExcitonPopulations,
    /// Exciton split `(1…k)|(k+1…N)`.
    ExcitonNegativity(usize),
    /// Full state at this time (ps), which becomes an extra stop of the integrator.
    Snapshot(f64),
    /// Full state at every record.
    States,
}

struct Recorder {
    sites: Vec<(String, Vec<f64>)>,
    sink: Option<Vec<f64>>,
    ground: Option<Vec<bool>>,
    source: Option<usize>,
    modes: Vec<(String, Vec<f64>)>,
    excitons: Option<ExcitonBasis>,
    exciton_pops: bool,
    exciton_splits: Vec<usize>,
    splits: Vec<Bipartition>,
    keep_states: bool,
}

impl Recorder {
    fn new(gen: &Generator, observers: &[Observer]) -> Result<Self> {
        let layout = gen.layout();
        let table = |m: &str| -> Result<Vec<f64>> {
            Ok(layout
                .occupation_table(m)?
                .into_iter()
                .map(f64::from)
                .collect())
        };
        let mut rec = Recorder {
            sites: Vec::new(),
            sink: None,
            ground: None,
            source: None,
            modes: Vec::new(),
            excitons: None,
            exciton_pops: false,
            exciton_splits: Vec::new(),
            splits: Vec::new(),
            keep_states: false,
        };
        if let Some(sys) = gen.system() {
            for s in &sys.sites {
                rec.sites.push((s.clone(), table(s)?));
            }
            rec.sink = Some(table(&sys.sink)?);
            let empty: Vec<bool> = (0..gen.dim())
                .map(|x| {
                    rec.sites.iter().all(|(_, t)| t[x] == 0.0)
                        && rec.sink.as_ref().unwrap()[x] == 0.0
                })
                .collect();
            rec.ground = Some(empty);
            rec.source = sys.sites.iter().position(|s| *s == sys.sink_source);
            for m in &sys.bath_modes {
                rec.modes.push((m.clone(), table(m)?));
            }
        }
        for o in observers {
            match o {
                Observer::Negativity(p) => {
                    layout.expand_labels(p.side_a())?;
                    layout.expand_labels(p.side_b())?;
                    rec.splits.push(p.clone());
                }
                Observer::ExcitonPopulations | Observer::ExcitonNegativity(_) => {
                    let sys = gen
                        .system()
                        .filter(|s| s.truncation == Truncation::Single)
                        .ok_or_else(|| {
                            Error::Config(
                                "exciton observables need a single-excitation network".into(),
                            )
                        })?;
                    if rec.excitons.is_none() {
                        rec.excitons = Some(ExcitonBasis::new(&sys.site_block)?);
                    }
                    match o {
                        Observer::ExcitonPopulations => rec.exciton_pops = true,
                        Observer::ExcitonNegativity(k) => {
                            if *k == 0 || *k >= sys.sites.len() {
                                return Err(Error::Argument(format!(
                                    "exciton split {k} outside 1..{}",
                                    sys.sites.len() - 1
                                )));
                            }
                            rec.exciton_splits.push(*k);
                        }
                        _ => unreachable!(),
                    }
                }
                Observer::Snapshot(_) => {}
                Observer::States => rec.keep_states = true,
            }
        }
        Ok(rec)
    }

    fn source_population(&self, rho: &CMatrix) -> Option<f64> {
        self.source.map(|j| occupation(&self.sites[j].1, rho))
    }

    fn record(
        &self,
        traj: &mut Trajectory,
        t: f64,
        state: &QuantumState,
        report: StateReport,
    ) -> Result<()> {
        let rho = state.matrix();
        traj.times.push(t);
        traj.validity.push(report);
        if !self.sites.is_empty() {
            traj.site_populations.push(
                self.sites
                    .iter()
                    .map(|(_, tab)| occupation(tab, rho))
                    .collect(),
            );
        }
        if let Some(s) = &self.sink {
            traj.sink_population.push(occupation(s, rho));
        }
        if let Some(g) = &self.ground {
            traj.ground_population.push(
                (0..rho.nrows())
                    .filter(|&x| g[x])
                    .map(|x| rho[(x, x)].re)
                    .sum(),
            );
        }
        if !self.modes.is_empty() {
            traj.mode_populations.push(
                self.modes
                    .iter()
                    .map(|(_, tab)| occupation(tab, rho))
                    .collect(),
            );
        }
        if let Some(basis) = &self.excitons {
            let labels: Vec<String> = self.sites.iter().map(|(s, _)| s.clone()).collect();
            let amp = SingleExcitationAmplitudes::from_state(state, &labels)?;
            if self.exciton_pops {
                traj.exciton_populations
                    .get_or_insert_with(Vec::new)
                    .push(basis.populations(&amp));
            }
            for (col, &k) in self.exciton_splits.iter().enumerate() {
                let v = basis.log_negativity(&amp, k)?.value;
                traj.negativities[self.splits.len() + col].values.push(v);
            }
        }
        for (i, p) in self.splits.iter().enumerate() {
            let bi: BipartiteState = bipartite_reduction(state, p)?;
            traj.negativities[i]
                .values
                .push(bipartite_log_negativity(&bi));
        }
        if self.keep_states {
            traj.states.push(rho.clone());
        }
        Ok(())
    }
}

fn occupation(table: &[f64], rho: &CMatrix) -> f64 {
    table
        .iter()
        .enumerate()
        .filter(|(_, &o)| o != 0.0)
        .map(|(x, &o)| o * rho[(x, x)].re)
        .sum()
}

/// Propagates `rho0` under `gen` on `[0, t_end]`.
pub fn evolve(
    gen: &Generator,
    rho0: &QuantumState,
    cfg: &IntegratorConfig,
    observers: &[Observer],
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.layout() != gen.layout() {
        return Err(Error::Layout(format!(
            "initial state lives on {} but the generator on {}",
            rho0.layout(),
            gen.layout()
        )));
    }
    let tol = cfg.tolerances;
    let abort = tol.scaled(10.0);
    let mut rho = rho0.matrix().clone();
    rho = (&rho + rho.adjoint()).scale(0.5);
    let initial = validity_report(&rho, &tol, true);
    if !initial.passed() {
        return Err(Error::State {
            time: 0.0,
            report: initial,
        });
    }

    let rec = Recorder::new(gen, observers)?;
    let mut negativities: Vec<NegativitySeries> = rec
        .splits
        .iter()
        .map(|p| NegativitySeries {
            name: p.name().to_string(),
            method: NegativityMethod::GeneralPt,
            values: Vec::new(),
        })
        .collect();
    for &k in &rec.exciton_splits {
        negativities.push(NegativitySeries {
            name: Bipartition::prefix_split("exciton", k, rec.sites.len())?
                .name()
                .to_string(),
            method: NegativityMethod::ClosedForm1ex,
            values: Vec::new(),
        });
    }

    // Stops: the record grid, the snapshot times and t_end.
    let interval = cfg.record_interval();
    let n_records = (cfg.t_end / interval + 1e-9).floor() as usize;
    let mut stops: Vec<(f64, bool)> = (0..=n_records)
        .map(|k| (k as f64 * interval, true))
        .collect();
    if (cfg.t_end - stops.last().unwrap().0).abs() > 1e-12 {
        stops.push((cfg.t_end, true));
    }
    let mut snapshot_times: Vec<f64> = observers
        .iter()
        .filter_map(|o| match o {
            Observer::Snapshot(t) => Some(*t),
            _ => None,
        })
        .collect();
    for &t in &snapshot_times {
        if !(0.0..=cfg.t_end).contains(&t) {
            return Err(Error::Argument(format!(
                "snapshot time {t} outside [0, {}]",
                cfg.t_end
            )));
        }
        if !stops.iter().any(|(s, _)| (s - t).abs() < 1e-12) {
            stops.push((t, false));
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    snapshot_times.sort_by(f64::total_cmp);

    let layout = gen.layout().clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        site_labels: rec.sites.iter().map(|(s, _)| s.clone()).collect(),
        site_populations: Vec::new(),
        ground_population: Vec::new(),
        sink_population: Vec::new(),
        sink_source: rec.source,
        sink_rate: gen.system().map_or(0.0, |s| s.sink_rate),
        source_trace: Vec::new(),
        mode_labels: rec.modes.iter().map(|(m, _)| m.clone()).collect(),
        mode_populations: Vec::new(),
        exciton_populations: None,
        negativities,
        validity: Vec::new(),
        snapshots: Vec::new(),
        states: Vec::new(),
        final_state: rho0.clone(),
        steps: 0,
    };

    let rhs = gen.compile();
    let mut stepper = Stepper::new(&rhs, cfg);
    let mut t = 0.0;
    let mut records = 0usize;
    let last = stops.len() - 1;
    for (i, &(stop, is_record)) in stops.iter().enumerate() {
        if stop > t {
            let before = stepper.steps;
            stepper.advance(&mut rho, t, stop, |tt, r| {
                if let Some(p) = rec.source_population(r) {
                    traj.source_trace.push((tt, p));
                }
            })?;
            t = stop;
            let _ = before;
        } else if let Some(p) = rec.source_population(&rho) {
            if traj.source_trace.is_empty() {
                traj.source_trace.push((t, p));
            }
        }
        let is_snapshot = snapshot_times.iter().any(|s| (s - stop).abs() < 1e-12);
        if !(is_record || is_snapshot) {
            continue;
        }
        let eigen =
            i == last || (cfg.positivity_every > 0 && records.is_multiple_of(cfg.positivity_every));
        let report = validity_report(&rho, &tol, eigen && is_record);
        if !validity_report_ok(&report, &abort) {
            return Err(Error::State { time: t, report });
        }
        let state = QuantumState::new(layout.clone(), rho.clone())?;
        if is_snapshot {
            traj.snapshots.push(Snapshot {
                time: stop,
                state: state.clone(),
            });
        }
        if is_record {
            rec.record(&mut traj, t, &state, report)?;
            records += 1;
        }
    }
    if let Some(r) = traj.validity.last() {
        if !r.passed() {
            return Err(Error::State {
                time: t,
                report: r.clone(),
            });
        }
    }
    traj.steps = stepper.steps;
    traj.final_state = QuantumState::new(layout, rho)?;
    Ok(traj)
}

fn validity_report_ok(r: &StateReport, abort: &Tolerances) -> bool {
    StateReport {
        tolerances: *abort,
        ..r.clone()
    }
    .passed()
}

struct Stepper<'a> {
    rhs: &'a CompiledRhs,
    method: Method,
    dt: f64,
    tol: f64,
    h: f64,
    k: Vec<CMatrix>,
    tmp: CMatrix,
    fsal: bool,
    steps: usize,
}

impl<'a> Stepper<'a> {
    fn new(rhs: &'a CompiledRhs, cfg: &IntegratorConfig) -> Self {
        let n = rhs.dim();
        let stages = match cfg.method {
            Method::Rk4 => 4,
            Method::Adaptive => 7,
        };
        Stepper {
            rhs,
            method: cfg.method,
            dt: cfg.dt,
            tol: cfg.adaptive_tol,
            h: cfg.dt,
            k: vec![CMatrix::zeros(n, n); stages],
            tmp: CMatrix::zeros(n, n),
            fsal: false,
            steps: 0,
        }
    }

    fn advance(
        &mut self,
        rho: &mut CMatrix,
        t0: f64,
        t1: f64,
        mut on_step: impl FnMut(f64, &CMatrix),
    ) -> Result<()> {
        if self.steps == 0 {
            on_step(t0, rho);
        }
        match self.method {
            Method::Rk4 => {
                let n = ((t1 - t0) / self.dt - 1e-9).ceil().max(1.0) as usize;
                let h = (t1 - t0) / n as f64;
                for s in 0..n {
                    let t = t0 + s as f64 * h;
                    self.rk4_step(rho, t, h);
                    self.steps += 1;
                    on_step(if s + 1 == n { t1 } else { t + h }, rho);
                }
            }
            Method::Adaptive => {
                let mut t = t0;
                while t1 - t > 1e-14 * t1.abs().max(1.0) {
                    let h = self.h.min(t1 - t);
                    let clipped = h < self.h;
                    let (accepted, next_h) = self.dp_step(rho, t, h)?;
                    if accepted {
                        t = if clipped { t1 } else { t + h };
                        self.steps += 1;
                        on_step(t, rho);
                        // keep the controller's proposal unless the step was only clipped
                        self.h = if clipped { self.h.max(next_h) } else { next_h };
                    } else {
                        self.h = next_h;
                    }
                    if self.h < 1e-14 {
                        return Err(Error::Validation(format!(
                            "adaptive step size underflow at t = {t}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn rk4_step(&mut self, rho: &mut CMatrix, t: f64, h: f64) {
        let (k, tmp) = (&mut self.k, &mut self.tmp);
        self.rhs.eval(t, rho, &mut k[0]);
        lin(tmp, rho, &[(0.5 * h, &k[0])]);
        self.rhs.eval(t + 0.5 * h, tmp, &mut k[1]);
        lin(tmp, rho, &[(0.5 * h, &k[1])]);
        self.rhs.eval(t + 0.5 * h, tmp, &mut k[2]);
        lin(tmp, rho, &[(h, &k[2])]);
        self.rhs.eval(t + h, tmp, &mut k[3]);
        let s = h / 6.0;
        let (a, b, c, d) = (
            k[0].as_slice(),
            k[1].as_slice(),
            k[2].as_slice(),
            k[3].as_slice(),
        );
        for (i, r) in rho.as_mut_slice().iter_mut().enumerate() {
            *r += (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * s;
        }
    }

    /// One Dormand–Prince attempt; returns (accepted, proposed next step).
    fn dp_step(&mut self, rho: &mut CMatrix, t: f64, h: f64) -> Result<(bool, f64)> {
        const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
        const A: [&[f64]; 7] = [
            &[],
            &[0.2],
            &[3.0 / 40.0, 9.0 / 40.0],
            &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
            &[
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
            ],
            &[
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
            ],
            &[
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        if !self.fsal {
            self.rhs.eval(t, rho, &mut self.k[0]);
        }
        for s in 1..7 {
            let terms: Vec<(f64, &CMatrix)> = A[s]
                .iter()
                .enumerate()
                .map(|(j, &a)| (h * a, &self.k[j]))
                .collect();
            lin(&mut self.tmp, rho, &terms);
            let (head, tail) = self.k.split_at_mut(s);
            let _ = head;
            self.rhs.eval(t + C[s] * h, &self.tmp, &mut tail[0]);
        }
        // tmp holds the fifth-order solution (stage 7 argument).
        let y = rho.as_slice();
        let ynew = self.tmp.as_slice();
        let ks: Vec<&[C64]> = self.k.iter().map(|m| m.as_slice()).collect();
        let mut acc = 0.0;
        for i in 0..y.len() {
            let mut e = C64::new(0.0, 0.0);
            for (s, &w) in E.iter().enumerate() {
                if w != 0.0 {
                    e += ks[s][i] * w;
                }
            }
            let scale = self.tol * (1.0 + y[i].norm().max(ynew[i].norm()));
            acc = f64::max(acc, e.norm() * h / scale);
        }
        let err = acc;
        if !err.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite error estimate at t = {t}"
            )));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            rho.copy_from(&self.tmp);
            self.k.swap(0, 6);
            self.fsal = true;
            Ok((true, h * factor))
        } else {
            self.fsal = true;
            Ok((false, h * factor.min(1.0)))
        }
    }
}

/// `out = base + Σ w_i m_i`.
fn lin(out: &mut CMatrix, base: &CMatrix, terms: &[(f64, &CMatrix)]) {
    let o = out.as_mut_slice();
    o.copy_from_slice(base.as_slice());
    for (w, m) in terms {
        if *w == 0.0 {
            continue;
        }
        for (x, y) in o.iter_mut().zip(m.as_slice()) {
            *x += y * *w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, NetworkSpec, NoiseSpec};
    use crate::quantum::BasisLayout;

    fn dimer(v: f64) -> Generator {
        let mut m = ModelSpec::fmo_markovian();
        m.network = NetworkSpec::dimer(0.0, v);
        m.noise = NoiseSpec::silent(2, 1);
        Generator::build(&m).unwrap()
    }

    #[test]
    fn frozen_without_dynamics() {
        let g = Generator::from_hamiltonian(BasisLayout::qubits(1), &CMatrix::zeros(2, 2)).unwrap();
        let rho = QuantumState::maximally_mixed(BasisLayout::qubits(1));
        let cfg = IntegratorConfig {
            t_end: 0.1,
            ..IntegratorConfig::default()
        };
        let tr = evolve(&g, &rho, &cfg, &[]).unwrap();
        assert_eq!(tr.final_state.matrix(), rho.matrix());
        assert_eq!(tr.len(), 11);
    }

    #[test]
    fn dimer_rabi() {
        let v = 2.0;
        let g = dimer(v);
        let rho = QuantumState::basis(g.layout().clone(), 1).unwrap();
        let t_end = std::f64::consts::FRAC_PI_2 / v;
        for method in [Method::Rk4, Method::Adaptive] {
            let cfg = IntegratorConfig {
                method,
                t_end,
                record_every: 50,
                adaptive_tol: 1e-10,
                ..IntegratorConfig::default()
            };
            let tr = evolve(&g, &rho, &cfg, &[]).unwrap();
            let p1 = tr.site_populations.last().unwrap()[0];
            assert!(p1.abs() < 1e-7, "{method:?}: {p1}");
            assert_eq!(*tr.times.last().unwrap(), t_end);
        }
    }

    #[test]
    fn snapshot_is_an_exact_stop() {
        let g = dimer(1.0);
        let rho = QuantumState::basis(g.layout().clone(), 1).unwrap();
        let cfg = IntegratorConfig {
            t_end: 0.2,
            record_every: 7,
            ..IntegratorConfig::default()
        };
        let tr = evolve(&g, &rho, &cfg, &[Observer::Snapshot(0.075)]).unwrap();
        assert_eq!(tr.snapshots.len(), 1);
        let p = tr.snapshots[0].state.matrix()[(1, 1)].re;
        assert!((p - (0.075f64).cos().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn layout_mismatch() {
        let g = dimer(1.0);
        let rho = QuantumState::maximally_mixed(BasisLayout::qubits(2));
        assert!(matches!(
            evolve(&g, &rho, &IntegratorConfig::default(), &[]),
            Err(Error::Layout(_))
        ));
    }

    #[test]
    fn invalid_initial_state_aborts() {
        let g = dimer(1.0);
        let mut m = CMatrix::zeros(4, 4);
        m[(1, 1)] = C64::new(1.5, 0.0);
        m[(2, 2)] = C64::new(-0.5, 0.0);
        let rho = QuantumState::new(g.layout().clone(), m).unwrap();
        assert!(matches!(
            evolve(&g, &rho, &IntegratorConfig::default(), &[]),
            Err(Error::State { .. })
        ));
    }
}
