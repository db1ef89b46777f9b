//! Randomized invariants of the state algebra, the dissipators and the
//! negativity measures.

use fmo_core::dynamics::{evolve, IntegratorConfig, Observer};
use fmo_core::entanglement::{
    entangling_power, log_negativity, mode_log_negativity, AncillaProtocol, ExcitonBasis,
    SingleExcitationAmplitudes,
};
use fmo_core::model::{
    correlated_dephasing_term, dephasing_term, dissipation_term, network_layout, scale_bath,
    BathModel, BathSpec, CorrelatedDephasing, Generator, Injection, LocalModes, ModeAlgebra,
    ModelSpec, NetworkSpec, NoiseSpec, NonLocalMode, Truncation,
};
use fmo_core::quantum::{
    hermitian_eigen, hermiticity_deviation, partial_trace, partial_transpose, trace_norm,
    BasisLayout, Bipartition, QuantumState,
};
use fmo_core::scenarios::{find, run_point};
use fmo_core::{CMatrix, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

/// Random density matrix of random rank.
fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let rank = rng.gen_range(1..=n);
    let g = gaussian_matrix(rng, n, rank);
    let r = &g * g.adjoint();
    let tr = r.trace();
    r / tr
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let h = (&g + g.adjoint()).scale(2.0);
    let (w, v) = hermitian_eigen(&h);
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        n,
        w.iter().map(|&x| C64::from_polar(1.0, x)),
    ));
    &v * phases * v.adjoint()
}

fn state(layout: BasisLayout, rng: &mut ChaCha8Rng) -> QuantumState {
    let n = layout.total_dim();
    QuantumState::new(layout, random_density(rng, n)).unwrap()
}

/// Random single-excitation block plus ground and sink weights on the FMO layout.
fn single_excitation_state(rng: &mut ChaCha8Rng) -> QuantumState {
    let net = NetworkSpec::fmo();
    let layout = network_layout(&net).unwrap();
    let sites = net.site_labels();
    let block = random_density(rng, sites.len()).scale(rng.gen_range(0.1..1.0));
    let rest = 1.0 - block.trace().re;
    let split = rng.gen_range(0.0..=1.0);
    let tables: Vec<Vec<u8>> = sites
        .iter()
        .map(|s| layout.occupation_table(s).unwrap())
        .collect();
    let sink = layout.occupation_table("sink").unwrap();
    let n = layout.total_dim();
    let site_index: Vec<usize> = (0..sites.len())
        .map(|j| (0..n).find(|&x| tables[j][x] == 1).unwrap())
        .collect();
    let ground = (0..n)
        .find(|&x| tables.iter().all(|t| t[x] == 0) && sink[x] == 0)
        .unwrap();
    let sink_index = (0..n).find(|&x| sink[x] == 1).unwrap();
    let mut rho = CMatrix::zeros(n, n);
    for (i, &x) in site_index.iter().enumerate() {
        for (j, &y) in site_index.iter().enumerate() {
            rho[(x, y)] = block[(i, j)];
        }
    }
    rho[(ground, ground)] = c(rest * split);
    rho[(sink_index, sink_index)] = c(rest * (1.0 - split));
    QuantumState::new(layout, rho).unwrap()
}

/// Small models that together use every kind of dissipator.
fn small_generators() -> Vec<Generator> {
    let mut dimer = ModelSpec::fmo_markovian();
    dimer.network = NetworkSpec::dimer(1.0, 0.7).with_truncation(Truncation::Full);
    dimer.noise = NoiseSpec {
        dissipation: vec![0.3, 0.1],
        dephasing: vec![0.5, 0.2],
        sink_rate: 1.2,
        sink_source_site: 2,
        correlated_dephasing: Some(CorrelatedDephasing::Strength(0.4)),
        injection: Some(Injection {
            site: 1,
            rate: 0.8,
            n_th: 2.0,
        }),
    };
    let mut local = dimer.clone();
    local.network = local.network.with_truncation(Truncation::Single);
    local.noise.injection = None;
    local.bath = BathSpec {
        model: BathModel::LocalModes(LocalModes::default()),
        f: 2.0,
        base_couplings: vec![1.0, 0.5],
        base_dampings: vec![2.0, 1.0],
    };
    let mut nonlocal = local.clone();
    nonlocal.bath.model = BathModel::NonLocalMode(NonLocalMode {
        levels: Some(3),
        ..NonLocalMode::default()
    });
    [dimer, local, nonlocal]
        .iter()
        .map(|m| Generator::build(m).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dissipators_are_traceless_and_hermitian(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for gen in small_generators() {
            let rho = random_density(&mut rng, gen.dim());
            for term in gen.terms() {
                let out = term.apply(&rho);
                prop_assert!(out.trace().norm() < 1e-10, "{}: trace {}", term.tag, out.trace());
                prop_assert!(hermiticity_deviation(&out) < 1e-10, "{}", term.tag);
            }
            let mut fused = CMatrix::zeros(gen.dim(), gen.dim());
            gen.compile().eval(0.0, &rho, &mut fused);
            prop_assert!(fused.trace().norm() < 1e-10);
            prop_assert!((fused - gen.apply(0.0, &rho)).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_correlation_is_local_dephasing(
        gammas in prop::collection::vec(0.0f64..5.0, 7),
        seed in any::<u64>(),
    ) {
        let net = NetworkSpec::fmo();
        let alg = ModeAlgebra::new(&network_layout(&net).unwrap()).unwrap();
        let sites = net.site_labels();
        let local = dephasing_term(&alg, &sites, &gammas).unwrap();
        let corr = correlated_dephasing_term(&alg, &sites, &DMatrix::from_diagonal(&DVector::from_vec(gammas))).unwrap();
        let rho = random_density(&mut ChaCha8Rng::seed_from_u64(seed), alg.dim());
        let diff = (local.apply(&rho) - corr.apply(&rho)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn scale_bath_keeps_coupling_ratio(f in 1e-3f64..1e3) {
        let base = BathSpec::fmo_local(1.0);
        let scaled = scale_bath(&base, f).unwrap();
        for ((g, k), (g0, k0)) in scaled.couplings().iter().zip(scaled.dampings()).zip(base.couplings().iter().zip(base.dampings())) {
            let (r, r0) = (g * g / k, g0 * g0 / k0);
            prop_assert!(((r - r0) / r0).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn partial_transpose_is_a_trace_preserving_involution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = state(BasisLayout::qubits(3), &mut rng);
        for part in [Bipartition::new(["q1"], ["q2", "q3"]).unwrap(), Bipartition::new(["q2", "q3"], ["q1"]).unwrap()] {
            let once = partial_transpose(&st, &part).unwrap();
            prop_assert!((once.trace() - st.trace()).norm() < 1e-12);
            let raw = QuantumState::new(st.layout().clone(), once.clone()).unwrap();
            let back = partial_transpose(&raw, &part).unwrap();
            prop_assert!((back - st.matrix()).norm() < 1e-12);
            prop_assert!(trace_norm(&once).unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn partial_trace_commutes_with_mixing(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = BasisLayout::qubits(3);
        let (a, b) = (state(layout.clone(), &mut rng), state(layout.clone(), &mut rng));
        let mix = QuantumState::new(layout, a.matrix().scale(p) + b.matrix().scale(1.0 - p)).unwrap();
        let keep = ["q1", "q3"];
        let lhs = partial_trace(&mix, &keep).unwrap();
        let rhs = partial_trace(&a, &keep).unwrap().matrix().scale(p) + partial_trace(&b, &keep).unwrap().matrix().scale(1.0 - p);
        prop_assert!((lhs.matrix() - rhs).norm() < 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_matrix(&mut rng, n, n);
        let h = &g + g.adjoint();
        let (w, v) = hermitian_eigen(&h);
        let d = CMatrix::from_diagonal(&DVector::from_iterator(n, w.iter().map(|&x| c(x))));
        let rebuilt = &v * d * v.adjoint();
        let err = (rebuilt - &h).norm() / h.norm();
        prop_assert!(err < 1e-10, "n = {n}: {err:.3e}");
    }

    #[test]
    fn negativity_invariant_under_local_unitaries(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = BasisLayout::qubits(3);
        let st = state(layout.clone(), &mut rng);
        let part = Bipartition::new(["q1"], ["q2", "q3"]).unwrap();
        let before = log_negativity(&st, &part).unwrap().value;
        let u1 = random_unitary(&mut rng, 2).kronecker(&CMatrix::identity(4, 4));
        let u23 = CMatrix::identity(2, 2).kronecker(&random_unitary(&mut rng, 4));
        for u in [u1, u23] {
            let rotated = QuantumState::new(layout.clone(), &u * st.matrix() * u.adjoint()).unwrap();
            let after = log_negativity(&rotated, &part).unwrap().value;
            prop_assert!((after - before).abs() < 1e-10, "{before} vs {after}");
        }
    }

    #[test]
    fn mode_negativity_is_closed_form_on_rotated_block(seed in any::<u64>(), k in 1usize..7) {
        let st = single_excitation_state(&mut ChaCha8Rng::seed_from_u64(seed));
        let net = NetworkSpec::fmo();
        let block = net.site_block();
        let amp = SingleExcitationAmplitudes::from_state(&st, &net.site_labels()).unwrap();
        let direct = ExcitonBasis::new(&block).unwrap().log_negativity(&amp, k).unwrap().value;
        let via_state = mode_log_negativity(&st, &block, k).unwrap().value;
        prop_assert!((direct - via_state).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn one_sided_noise_never_increases_negativity(seed in any::<u64>(), rate in 0.1f64..2.0, side in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = BasisLayout::qubits(2);
        // pure states carry the most entanglement, so start from one
        let psi: Vec<C64> = (0..4).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        let start = QuantumState::pure(layout.clone(), &psi).unwrap();
        let mut gen = Generator::from_hamiltonian(layout.clone(), &CMatrix::zeros(4, 4)).unwrap();
        let alg = ModeAlgebra::new(&layout).unwrap();
        let label = ["q1", "q2"][side].to_string();
        gen.push_term(dissipation_term(&alg, std::slice::from_ref(&label), &[rate]).unwrap()).unwrap();
        gen.push_term(dephasing_term(&alg, &[label], &[0.5 * rate]).unwrap()).unwrap();
        let cfg = IntegratorConfig { t_end: 2.0, record_every: 20, ..IntegratorConfig::default() };
        let part = Bipartition::new(["q1"], ["q2"]).unwrap();
        let tr = evolve(&gen, &start, &cfg, &[Observer::Negativity(part)]).unwrap();
        for w in tr.negativities[0].values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn entangling_power_is_continuous_in_time() {
    let gen = Generator::build(&ModelSpec::fmo_markovian()).unwrap();
    let cfg = IntegratorConfig::default();
    let ep =
        |t: f64| entangling_power(&gen, t, None, AncillaProtocol::SingleExcitation, &cfg).unwrap();
    for t in [0.2, 1.0] {
        let base = ep(t);
        let jumps: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|dt| (ep(t + dt) - base).abs())
            .collect();
        assert!(
            jumps[2] < jumps[1] && jumps[1] < jumps[0],
            "t = {t}: {jumps:?}"
        );
        assert!(jumps[2] < 1e-2, "t = {t}: {jumps:?}");
    }
}

#[test]
fn uncoupled_bath_leaves_the_system_unchanged() {
    let plain = ModelSpec::fmo_markovian();
    let mut with_bath = plain.clone();
    with_bath.bath = BathSpec {
        base_couplings: vec![0.0; 7],
        ..BathSpec::fmo_nonlocal(3.0)
    };
    let cfg = IntegratorConfig {
        t_end: 1.0,
        ..IntegratorConfig::default()
    };
    let run = |m: &ModelSpec| {
        let mut s = find("markovian-baseline").unwrap();
        s.model = m.clone();
        s.integrator = cfg.clone();
        run_point(&s).unwrap()
    };
    let (a, b) = (run(&plain), run(&with_bath));
    for (x, y) in a.site_populations.iter().zip(&b.site_populations) {
        for (p, q) in x.iter().zip(y) {
            assert!((p - q).abs() < 1e-10);
        }
    }
    for (x, y) in a.negativities.iter().zip(&b.negativities) {
        for (p, q) in x.values.iter().zip(&y.values) {
            assert!((p - q).abs() < 1e-10, "{}", x.name);
        }
    }
}
