use super::{log_space, InitialState, Scenario, SplitSpec, Sweep, SweepParameter};
use crate::dynamics::{IntegratorConfig, Method};
use crate::model::{
    BathSpec, Injection, LaserPulse, ModelSpec, NetworkSpec, NoiseSpec, Truncation,
};

/// Names of the shipped scenarios, in catalog order.
pub const CATALOG_NAMES: [&str; 8] = [
    "markovian-baseline",
    "local-bath-sweep",
    "nonlocal-bath-sweep",
    "transfer-contour",
    "entangling-power-contour",
    "thermal-injection",
    "laser-excitation",
    "mode-entanglement",
];

const FIGURE_F: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

fn rk4() -> IntegratorConfig {
    IntegratorConfig::default()
}

/// Bath modes at large f are stiff, so bath runs use step-size control.
fn adaptive() -> IntegratorConfig {
    IntegratorConfig {
        method: Method::Adaptive,
        adaptive_tol: 1e-10,
        ..IntegratorConfig::default()
    }
}

fn site_splits() -> Vec<SplitSpec> {
    (1..7).map(SplitSpec::Sites).collect()
}

fn bath_model(bath: BathSpec) -> ModelSpec {
    ModelSpec {
        bath,
        noise: NoiseSpec::fmo().without_dephasing(),
        ..ModelSpec::fmo_markovian()
    }
}

fn full_fmo() -> ModelSpec {
    ModelSpec {
        network: NetworkSpec::fmo().with_truncation(Truncation::Full),
        ..ModelSpec::fmo_markovian()
    }
}

fn scenario(
    name: &str,
    description: &str,
    model: ModelSpec,
    initial_state: InitialState,
) -> Scenario {
    Scenario {
        name: name.into(),
        description: description.into(),
        initial_state,
        bipartitions: Vec::new(),
        exciton_populations: false,
        snapshots: Vec::new(),
        sweep: None,
        integrator: rk4(),
        model,
    }
}

/// The shipped experiments.
pub fn catalog() -> Vec<Scenario> {
    let mut out = Vec::new();

    let mut s = scenario(
        "markovian-baseline",
        "site-1 start, optimal local dephasing, sink at site 3; negativity across the six site splits",
        ModelSpec::fmo_markovian(),
        InitialState::Site(1),
    );
    s.bipartitions = site_splits();
    out.push(s);

    let mut s = scenario(
        "local-bath-sweep",
        "one damped mode per site in place of Markovian dephasing, swept over f",
        bath_model(BathSpec::fmo_local(1.0)),
        InitialState::Site(1),
    );
    s.bipartitions = vec![SplitSpec::Sites(1), SplitSpec::Sites(2)];
    s.sweep = Some(Sweep {
        parameter: SweepParameter::F,
        values: FIGURE_F.to_vec(),
    });
    s.integrator = adaptive();
    out.push(s);

    let mut s = scenario(
        "nonlocal-bath-sweep",
        "one common mode with site-dependent coupling and damping, swept over f",
        bath_model(BathSpec::fmo_nonlocal(1.0)),
        InitialState::Site(1),
    );
    s.bipartitions = vec![SplitSpec::Sites(1), SplitSpec::Sites(2)];
    s.sweep = Some(Sweep {
        parameter: SweepParameter::F,
        values: FIGURE_F.to_vec(),
    });
    s.integrator = adaptive();
    out.push(s);

    let mut s = scenario(
        "transfer-contour",
        "sink population over time and f for the common-mode bath",
        bath_model(BathSpec::fmo_nonlocal(1.0)),
        InitialState::Site(1),
    );
    s.sweep = Some(Sweep {
        parameter: SweepParameter::F,
        values: log_space(0.1, 100.0, 12),
    });
    s.integrator = adaptive();
    out.push(s);

    let mut s = scenario(
        "entangling-power-contour",
        "negativity of {site1, anc1}|rest after evolving half of a system-ancilla maximally entangled state",
        bath_model(BathSpec::fmo_nonlocal(1.0)),
        InitialState::MaxEntangledAncilla,
    );
    s.bipartitions = vec![SplitSpec::Ancilla];
    s.sweep = Some(Sweep {
        parameter: SweepParameter::F,
        values: log_space(0.1, 100.0, 12),
    });
    s.integrator = IntegratorConfig {
        record_every: 50,
        ..adaptive()
    };
    out.push(s);

    let mut model = full_fmo();
    model.noise.injection = Some(Injection {
        site: 1,
        rate: 1.0,
        n_th: 100.0,
    });
    let mut s = scenario(
        "thermal-injection",
        "ground start with thermal excitation through site 1; local against correlated dephasing",
        model,
        InitialState::Ground,
    );
    s.bipartitions = site_splits();
    s.sweep = Some(Sweep {
        parameter: SweepParameter::Correlation,
        values: vec![0.0, 0.5],
    });
    out.push(s);

    let mut model = full_fmo();
    model.laser =
        Some(LaserPulse::resonant_with_site(&model.network, 1).expect("FMO data carries dipoles"));
    let mut s = scenario(
        "laser-excitation",
        "Gaussian pulse resonant with site 1 acting on the ground state",
        model,
        InitialState::Ground,
    );
    s.bipartitions = vec![
        SplitSpec::Sites(1),
        SplitSpec::Sites(2),
        SplitSpec::Sites(5),
    ];
    s.snapshots = vec![0.075];
    out.push(s);

    let mut s = scenario(
        "mode-entanglement",
        "site-1 start analysed in the exciton basis",
        ModelSpec::fmo_markovian(),
        InitialState::Site(1),
    );
    s.bipartitions = (1..7).map(SplitSpec::Excitons).collect();
    s.exciton_populations = true;
    out.push(s);

    out
}

/// Catalog entry by name.
pub fn find(name: &str) -> Option<Scenario> {
    catalog().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn exactly_the_named_scenarios() {
        let names: Vec<String> = catalog().into_iter().map(|s| s.name).collect();
        assert_eq!(names, CATALOG_NAMES.map(String::from).to_vec());
        assert_eq!(names.iter().collect::<HashSet<_>>().len(), names.len());
    }

    #[test]
    fn every_scenario_validates() {
        for s in catalog() {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn laser_snapshot_at_75_fs() {
        let s = find("laser-excitation").unwrap();
        assert_eq!(s.snapshots, vec![0.075]);
        assert_eq!(s.model.network.truncation, Truncation::Full);
    }

    #[test]
    fn entangling_power_split_name() {
        let s = find("entangling-power-contour").unwrap();
        let run = s.at(1.0).unwrap().prepare().unwrap();
        match &run.observers[0] {
            crate::dynamics::Observer::Negativity(p) => assert_eq!(p.name(), "{site1, anc1}|rest"),
            o => panic!("unexpected observer {o:?}"),
        }
    }
}
