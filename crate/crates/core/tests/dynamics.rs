use fmo_core::dynamics::{compute_p_sink, evolve, IntegratorConfig, Method, Trajectory};
use fmo_core::model::{Generator, Injection, ModelSpec, NetworkSpec, NoiseSpec, FMO_SINK_RATE};
use fmo_core::quantum::QuantumState;

fn dimer_model(v: f64, noise: NoiseSpec) -> Generator {
    let mut m = ModelSpec::fmo_markovian();
    m.network = NetworkSpec::dimer(0.0, v);
    m.noise = noise;
    Generator::build(&m).unwrap()
}

fn run(gen: &Generator, level: usize, cfg: &IntegratorConfig) -> Trajectory {
    let rho = QuantumState::basis(gen.layout().clone(), level).unwrap();
    evolve(gen, &rho, cfg, &[]).unwrap()
}

fn cfg(t_end: f64) -> IntegratorConfig {
    IntegratorConfig {
        t_end,
        ..IntegratorConfig::default()
    }
}

#[test]
fn dissipation_decays_at_twice_the_rate() {
    let mut noise = NoiseSpec::silent(2, 1);
    noise.dissipation = vec![0.7, 0.7];
    let gen = dimer_model(1.3, noise);
    let tr = run(&gen, 1, &cfg(2.0));
    // log of the total excitation is linear with slope −2Γ
    for (i, &t) in tr.times.iter().enumerate().skip(1) {
        let total: f64 = tr.site_populations[i].iter().sum();
        let slope = total.ln() / t;
        assert!((slope + 1.4).abs() < 1e-6, "t = {t}: slope {slope}");
    }
}

#[test]
fn sink_fills_exponentially() {
    let mut noise = NoiseSpec::silent(2, 1);
    noise.sink_rate = 0.9;
    let gen = dimer_model(0.0, noise);
    let tr = run(&gen, 1, &cfg(1.5));
    for (i, &t) in tr.times.iter().enumerate() {
        let expect = 1.0 - (-1.8 * t).exp();
        assert!((tr.sink_population[i] - expect).abs() < 1e-9);
    }
    let integral = compute_p_sink(&tr, 0.9).unwrap();
    for (a, b) in integral.iter().zip(&tr.sink_population) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn injection_reaches_thermal_occupation() {
    let mut noise = NoiseSpec::silent(2, 1);
    noise.injection = Some(Injection {
        site: 1,
        rate: 1.0,
        n_th: 3.0,
    });
    let gen = dimer_model(0.0, noise);
    let tr = run(&gen, 0, &cfg(6.0));
    let p1 = tr.site_populations.last().unwrap()[0];
    assert!((p1 - 3.0 / 7.0).abs() < 1e-8, "{p1}");
}

#[test]
fn dephasing_damps_coherence() {
    let mut noise = NoiseSpec::silent(2, 1);
    noise.dephasing = vec![0.4, 0.4];
    let gen = dimer_model(0.0, noise);
    let layout = gen.layout().clone();
    let mut psi = vec![fmo_core::C64::new(0.0, 0.0); gen.dim()];
    psi[1] = fmo_core::C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[2] = psi[1];
    let rho = QuantumState::pure(layout, &psi).unwrap();
    let t_end = 1.2;
    let tr = evolve(&gen, &rho, &cfg(t_end), &[]).unwrap();
    let coh = tr.final_state.matrix()[(1, 2)].re;
    assert!((coh - 0.5 * (-0.8 * t_end).exp()).abs() < 1e-9);
}

fn baseline(dt: f64) -> Trajectory {
    let gen = Generator::build(&ModelSpec::fmo_markovian()).unwrap();
    let rho = QuantumState::basis(gen.layout().clone(), 1).unwrap();
    let cfg = IntegratorConfig {
        dt,
        t_end: 5.0,
        record_every: (0.01 / dt).round() as usize,
        ..IntegratorConfig::default()
    };
    evolve(&gen, &rho, &cfg, &[]).unwrap()
}

#[test]
fn markovian_baseline_invariants() {
    let tr = baseline(1e-3);
    let p = compute_p_sink(&tr, FMO_SINK_RATE).unwrap();
    for (i, &pi) in p.iter().enumerate() {
        assert!((pi - tr.sink_population[i]).abs() < 1e-4);
        let total: f64 = tr.site_populations[i].iter().sum::<f64>()
            + tr.ground_population[i]
            + tr.sink_population[i];
        assert!((total - 1.0).abs() < 1e-8);
        if i > 0 {
            assert!(tr.sink_population[i] >= tr.sink_population[i - 1] - 1e-9);
        }
    }
    assert!(*tr.sink_population.last().unwrap() <= 1.0);
    let v = tr.validity_summary();
    assert!(
        v.max_trace_deviation < 1e-9
            && v.max_hermiticity_deviation < 1e-9
            && v.min_eigenvalue > -1e-7
    );
}

#[test]
fn step_halving_converges() {
    let a = baseline(1e-3);
    let b = baseline(5e-4);
    assert_eq!(a.times.len(), b.times.len());
    for i in 0..a.len() {
        for j in 0..7 {
            assert!((a.site_populations[i][j] - b.site_populations[i][j]).abs() < 1e-6);
        }
        assert!((a.sink_population[i] - b.sink_population[i]).abs() < 1e-6);
    }
}

#[test]
fn adaptive_agrees_with_rk4() {
    let gen = Generator::build(&ModelSpec::fmo_markovian()).unwrap();
    let rho = QuantumState::basis(gen.layout().clone(), 1).unwrap();
    let base = IntegratorConfig {
        t_end: 1.0,
        record_every: 50,
        ..IntegratorConfig::default()
    };
    let rk = evolve(&gen, &rho, &base, &[]).unwrap();
    let ad = evolve(
        &gen,
        &rho,
        &IntegratorConfig {
            method: Method::Adaptive,
            adaptive_tol: 1e-10,
            ..base
        },
        &[],
    )
    .unwrap();
    assert_eq!(rk.times, ad.times);
    for (x, y) in rk.site_populations.iter().zip(&ad.site_populations) {
        for (a, b) in x.iter().zip(y) {
            assert!((a - b).abs() < 1e-7);
        }
    }
}
