use super::log_negativity;
use crate::dynamics::{evolve, IntegratorConfig};
use crate::model::{Generator, ModeAlgebra, Truncation};
use crate::quantum::{Bipartition, Encoding, Factor, QuantumState};
use crate::{Error, Result, C64};

/// Label of the ancilla factor in the single-excitation protocol.
pub const ANCILLA_FACTOR: &str = "ancilla";

/// How the system is entangled with its ancilla before the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AncillaProtocol {
    /// `(1/√N) Σ_i |site_i⟩|anc_i⟩` inside the one-excitation sector,
    /// with an `N`-level ancilla factor.
    SingleExcitation,
    /// A maximally entangled pair `Σ_i |i⟩|i⟩/√d` for every factor of the
    /// system, with ancilla factors `anc_<label>`.
    BellPairs,
}

/// Extended generator, initial state and default split of the protocol.
#[derive(Clone, Debug)]
pub struct AncillaSetup {
    pub generator: Generator,
    pub initial: QuantumState,
    /// `{first system mode, its ancilla} | {all other system and ancilla modes}`.
    pub split: Bipartition,
}

/// Appends the idle ancilla and prepares the maximally entangled input.
pub fn ancilla_setup(gen: &Generator, protocol: AncillaProtocol) -> Result<AncillaSetup> {
    match protocol {
        AncillaProtocol::SingleExcitation => single_excitation_setup(gen),
        AncillaProtocol::BellPairs => bell_pair_setup(gen),
    }
}

fn single_excitation_setup(gen: &Generator) -> Result<AncillaSetup> {
    let sys = gen
        .system()
        .filter(|s| s.truncation == Truncation::Single)
        .ok_or_else(|| {
            Error::Config(
                "the single-excitation ancilla protocol needs a single-excitation network".into(),
            )
        })?;
    let n = sys.sites.len();
    let anc: Vec<String> = (1..=n).map(|j| format!("anc{j}")).collect();
    let big = gen.with_idle_factor(Factor::one_hot(ANCILLA_FACTOR, anc.clone(), false)?)?;
    let alg = ModeAlgebra::new(big.layout())?;

    let dim = big.dim();
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    let all: Vec<String> = big.layout().modes();
    let w = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for (site, a) in sys.sites.iter().zip(&anc) {
        let others: Vec<String> = all
            .iter()
            .filter(|m| *m != site && *m != a)
            .cloned()
            .collect();
        let empty = alg.vacuum_projector(&others)?;
        let s_occ = alg.occupations(site)?;
        let a_occ = alg.occupations(a)?;
        let x = (0..dim)
            .find(|&x| empty[x] && s_occ[x] == 1.0 && a_occ[x] == 1.0)
            .ok_or_else(|| Error::Layout(format!("no basis state with {site} and {a} occupied")))?;
        psi[x] = w;
    }
    let initial = QuantumState::pure(big.layout().clone(), &psi)?;

    let side_a = [sys.sites[0].clone(), anc[0].clone()];
    let side_b: Vec<String> = sys.sites[1..]
        .iter()
        .chain(std::iter::once(&sys.sink))
        .chain(&anc[1..])
        .cloned()
        .collect();
    let split =
        Bipartition::new(side_a, side_b)?.named(format!("{{{}, {}}}|rest", sys.sites[0], anc[0]));
    Ok(AncillaSetup {
        generator: big,
        initial,
        split,
    })
}

fn bell_pair_setup(gen: &Generator) -> Result<AncillaSetup> {
    let factors = gen.layout().factors().to_vec();
    if factors
        .iter()
        .any(|f| !matches!(f.encoding(), Encoding::Levels))
    {
        return Err(Error::Layout(
            "Bell-pair ancillas need a layout of plain level factors".into(),
        ));
    }
    let mut big = gen.clone();
    let mut anc_labels = Vec::new();
    for f in &factors {
        let label = format!("anc_{}", f.label());
        big = big.with_idle_factor(Factor::new(label.clone(), f.dim())?)?;
        anc_labels.push(label);
    }
    let layout = big.layout().clone();
    let sys_dim = gen.dim();
    let mut psi = vec![C64::new(0.0, 0.0); layout.total_dim()];
    let w = C64::new(1.0 / (sys_dim as f64).sqrt(), 0.0);
    for s in 0..sys_dim {
        // system index s, ancilla in the same digits
        psi[s * sys_dim + s] = w;
    }
    let initial = QuantumState::pure(layout, &psi)?;
    let side_a = [factors[0].label().to_string(), anc_labels[0].clone()];
    let side_b: Vec<String> = factors[1..]
        .iter()
        .map(|f| f.label().to_string())
        .chain(anc_labels[1..].iter().cloned())
        .collect();
    if side_b.is_empty() {
        return Err(Error::Layout(
            "entangling power needs at least two system factors".into(),
        ));
    }
    let split = Bipartition::new(side_a, side_b)?;
    Ok(AncillaSetup {
        generator: big,
        initial,
        split,
    })
}

/// Negativity across `split` after evolving the system half of the
/// maximally entangled system-ancilla state for time `t`.
pub fn entangling_power(
    gen: &Generator,
    t: f64,
    split: Option<&Bipartition>,
    protocol: AncillaProtocol,
    integrator: &IntegratorConfig,
) -> Result<f64> {
    let setup = ancilla_setup(gen, protocol)?;
    let split = split.unwrap_or(&setup.split);
    let layout = setup.generator.layout();
    layout.expand_labels(split.side_a())?;
    layout.expand_labels(split.side_b())?;
    let state = if t == 0.0 {
        setup.initial
    } else {
        let cfg = IntegratorConfig {
            t_end: t,
            ..integrator.clone()
        };
        evolve(&setup.generator, &setup.initial, &cfg, &[])?.final_state
    };
    Ok(log_negativity(&state, split)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, NoiseSpec};
    use crate::quantum::BasisLayout;
    use crate::CMatrix;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn fine() -> IntegratorConfig {
        IntegratorConfig {
            dt: 1e-3,
            t_end: 1.0,
            record_every: 1000,
            ..IntegratorConfig::default()
        }
    }

    fn gate_generator(p: CMatrix) -> Generator {
        Generator::from_hamiltonian(BasisLayout::qubits(2), &p.scale(std::f64::consts::PI)).unwrap()
    }

    #[test]
    fn identity_keeps_initial_negativity() {
        let gen =
            Generator::from_hamiltonian(BasisLayout::qubits(2), &CMatrix::zeros(4, 4)).unwrap();
        let ep = entangling_power(&gen, 1.0, None, AncillaProtocol::BellPairs, &fine()).unwrap();
        // {q1, a1} vs {q2, a2}: two Bell pairs that do not cross the cut
        assert!(ep.abs() < 1e-12);
    }

    #[test]
    fn cnot_generator() {
        // P = |1><1| (x) (I - X)/2, exp(-iπP) = CNOT
        let mut p = CMatrix::zeros(4, 4);
        p[(2, 2)] = c(0.5);
        p[(3, 3)] = c(0.5);
        p[(2, 3)] = c(-0.5);
        p[(3, 2)] = c(-0.5);
        let ep = entangling_power(
            &gate_generator(p),
            1.0,
            None,
            AncillaProtocol::BellPairs,
            &fine(),
        )
        .unwrap();
        assert!((ep - 1.0).abs() < 1e-9, "{ep}");
    }

    #[test]
    fn single_excitation_initial_value() {
        let mut m = ModelSpec::fmo_markovian();
        m.noise = NoiseSpec::silent(7, 3);
        let gen = Generator::build(&m).unwrap();
        let ep =
            entangling_power(&gen, 0.0, None, AncillaProtocol::SingleExcitation, &fine()).unwrap();
        let expect = (1.0 + 2.0 * 6f64.sqrt() / 7.0).log2();
        assert!((ep - expect).abs() < 1e-12, "{ep} vs {expect}");
    }

    #[test]
    fn unknown_split_label() {
        let gen = Generator::build(&ModelSpec::fmo_markovian()).unwrap();
        let bad = Bipartition::new(["site1", "anc9"], ["site2"]).unwrap();
        let err = entangling_power(
            &gen,
            0.1,
            Some(&bad),
            AncillaProtocol::SingleExcitation,
            &fine(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Layout(_)));
    }
}
