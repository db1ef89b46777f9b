//! Logarithmic negativity across site and exciton bipartitions, and the
//! entangling power of an evolution.

mod power;

pub use power::{ancilla_setup, entangling_power, AncillaProtocol, AncillaSetup, ANCILLA_FACTOR};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::model::NetworkSpec;
use crate::quantum::{
    assert_valid_state, bipartite_reduction, hermitian_eigen, hermitian_eigenvalues,
    hermiticity_deviation, BipartiteState, Bipartition, QuantumState, Tolerances,
};
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalues of the partial transpose in `(−CLAMP, 0)` count as zero.
pub const NEGATIVITY_CLAMP: f64 = 1e-12;

/// Tolerance of the validity check run before any negativity.
pub const NEGATIVITY_STATE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NegativityMethod {
    #[serde(rename = "general-PT")]
    GeneralPt,
    #[serde(rename = "closed-form-1ex")]
    ClosedForm1ex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NegativityReport {
    pub bipartition: Bipartition,
    /// In ebits (log base 2), never negative.
    pub value: f64,
    pub method: NegativityMethod,
}

/// `log₂ ‖ρ^{Γ_A}‖₁` of an already reduced bipartite state.
pub fn bipartite_log_negativity(bi: &BipartiteState) -> f64 {
    let pt = bi.partial_transpose();
    let norm: f64 = hermitian_eigenvalues(&pt)
        .into_iter()
        .map(|e| {
            if e < 0.0 && e > -NEGATIVITY_CLAMP {
                0.0
            } else {
                e.abs()
            }
        })
        .sum();
    norm.log2().max(0.0)
}

/// `E(A|B) = log₂ ‖ρ^{Γ_A}‖₁`; modes outside the bipartition are traced out.
pub fn log_negativity(rho: &QuantumState, part: &Bipartition) -> Result<NegativityReport> {
    let report = assert_valid_state(rho, &Tolerances::uniform(NEGATIVITY_STATE_TOL));
    if !report.passed() {
        return Err(Error::InvalidState(report));
    }
    let bi = bipartite_reduction(rho, part)?;
    Ok(NegativityReport {
        bipartition: part.clone(),
        value: bipartite_log_negativity(&bi),
        method: NegativityMethod::GeneralPt,
    })
}

/// The one-excitation block `a_ij` of a state and its zero-excitation weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleExcitationAmplitudes {
    pub a00: f64,
    pub a: CMatrix,
}

impl SingleExcitationAmplitudes {
    /// Takes `a₀₀ = 1 − Σ a_ii`, so absorbed (sink) population counts as zero-excitation weight.
    pub fn new(a: CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape("amplitude matrix must be square".into()));
        }
        let dev = hermiticity_deviation(&a);
        if dev > 1e-9 {
            return Err(Error::Validation(format!(
                "amplitude block not Hermitian (deviation {dev:.3e})"
            )));
        }
        let a00 = 1.0 - a.trace().re;
        if a00 < -1e-9 {
            return Err(Error::Validation(format!(
                "single-excitation populations sum to {}",
                1.0 - a00
            )));
        }
        let min = hermitian_eigenvalues(&a).first().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::Validation(format!(
                "amplitude block has eigenvalue {min:.3e}"
            )));
        }
        Ok(SingleExcitationAmplitudes {
            a00: a00.max(0.0),
            a,
        })
    }

    /// Reads `a_ij = ⟨site_i|ρ|site_j⟩` from the one-excitation sector of the
    /// sites, tracing every other mode (sink, bath, ancilla).
    pub fn from_state(rho: &QuantumState, sites: &[String]) -> Result<Self> {
        let layout = rho.layout();
        let tables: Vec<Vec<u8>> = sites
            .iter()
            .map(|s| layout.occupation_table(s))
            .collect::<Result<_>>()?;
        let others: Vec<String> = layout
            .modes()
            .into_iter()
            .filter(|m| !sites.contains(m))
            .collect();
        let other_tables: Vec<Vec<u8>> = others
            .iter()
            .map(|m| layout.occupation_table(m))
            .collect::<Result<_>>()?;
        // environment pattern (bath, ancilla) -> [(basis index, site)]
        let mut groups: std::collections::BTreeMap<Vec<u8>, Vec<(usize, usize)>> =
            Default::default();
        for x in 0..layout.total_dim() {
            let occ: Vec<u8> = tables.iter().map(|t| t[x]).collect();
            if occ.iter().map(|&o| o as usize).sum::<usize>() != 1 || occ.iter().any(|&o| o > 1) {
                continue;
            }
            let site = occ.iter().position(|&o| o == 1).unwrap();
            let env: Vec<u8> = other_tables.iter().map(|t| t[x]).collect();
            groups.entry(env).or_default().push((x, site));
        }
        let n = sites.len();
        let m = rho.matrix();
        let mut a = CMatrix::zeros(n, n);
        for members in groups.values() {
            for &(x, i) in members {
                for &(y, j) in members {
                    a[(i, j)] += m[(x, y)];
                }
            }
        }
        Self::new(a)
    }

    pub fn n_sites(&self) -> usize {
        self.a.nrows()
    }

    /// Amplitudes in a rotated single-excitation basis, `U† a U`.
    pub fn rotated(&self, u: &CMatrix) -> Self {
        SingleExcitationAmplitudes {
            a00: self.a00,
            a: u.adjoint() * &self.a * u,
        }
    }
}

/// Closed form `E = log₂(1 − a₀₀ + √(a₀₀² + 4X))`, `X = Σ_{i≤k<j} |a_ij|²`,
/// for the split `(1…k)|(k+1…N)`.
pub fn log_negativity_1ex(amp: &SingleExcitationAmplitudes, k: usize) -> Result<NegativityReport> {
    let n = amp.n_sites();
    let part = Bipartition::prefix_split("site", k, n)?;
    Ok(NegativityReport {
        bipartition: part,
        value: closed_form(amp, k),
        method: NegativityMethod::ClosedForm1ex,
    })
}

fn closed_form(amp: &SingleExcitationAmplitudes, k: usize) -> f64 {
    let n = amp.n_sites();
    let mut x = 0.0;
    for i in 0..k {
        for j in k..n {
            x += amp.a[(i, j)].norm_sqr();
        }
    }
    let a00 = amp.a00;
    (1.0 - a00 + (a00 * a00 + 4.0 * x).sqrt()).log2().max(0.0)
}

/// Eigenbasis of the single-excitation Hamiltonian, ordered by increasing energy.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitonBasis {
    pub energies: Vec<f64>,
    /// Column k is exciton k+1 in site coordinates.
    pub vectors: CMatrix,
}

/// Exciton energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

impl ExcitonBasis {
    pub fn new(site_block: &DMatrix<f64>) -> Result<Self> {
        let h = site_block.map(|x| C64::new(x, 0.0));
        if hermiticity_deviation(&h) > 1e-10 {
            return Err(Error::Validation(
                "site Hamiltonian block is not symmetric".into(),
            ));
        }
        let (energies, mut vectors) = hermitian_eigen(&h);
        for (k, w) in energies.windows(2).enumerate() {
            if w[1] - w[0] < DEGENERACY_TOL {
                return Err(Error::Degeneracy(format!(
                    "excitons {} and {} have energies {} and {} rad/ps; their ordering is undefined",
                    k + 1,
                    k + 2,
                    w[0],
                    w[1]
                )));
            }
        }
        // Fix the phase of each eigenvector so the output is reproducible.
        for mut col in vectors.column_iter_mut() {
            if let Some(big) = col
                .iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            {
                let phase = big.conj() / big.norm();
                col.iter_mut().for_each(|z| *z *= phase);
            }
        }
        Ok(ExcitonBasis { energies, vectors })
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn rotate(&self, amp: &SingleExcitationAmplitudes) -> SingleExcitationAmplitudes {
        amp.rotated(&self.vectors)
    }

    /// Exciton populations `⟨e_k|a|e_k⟩`.
    pub fn populations(&self, amp: &SingleExcitationAmplitudes) -> Vec<f64> {
        let r = self.rotate(amp);
        (0..self.n()).map(|k| r.a[(k, k)].re).collect()
    }

    /// Negativity across the exciton split `(1…k)|(k+1…N)`.
    pub fn log_negativity(
        &self,
        amp: &SingleExcitationAmplitudes,
        k: usize,
    ) -> Result<NegativityReport> {
        let r = self.rotate(amp);
        let part = Bipartition::prefix_split("exciton", k, self.n())?;
        Ok(NegativityReport {
            bipartition: part,
            value: closed_form(&r, k),
            method: NegativityMethod::ClosedForm1ex,
        })
    }
}

/// Negativity across exciton groups `(1…k)|(k+1…N)` of a single-excitation state.
pub fn mode_log_negativity(
    rho: &QuantumState,
    h_site_block: &DMatrix<f64>,
    k: usize,
) -> Result<NegativityReport> {
    let basis = ExcitonBasis::new(h_site_block)?;
    let sites: Vec<String> = (0..basis.n()).map(NetworkSpec::site_label).collect();
    let amp = SingleExcitationAmplitudes::from_state(rho, &sites)?;
    basis.log_negativity(&amp, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{network_layout, NetworkSpec};
    use crate::quantum::BasisLayout;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn bell_and_product() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell =
            QuantumState::pure(BasisLayout::qubits(2), &[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let p = Bipartition::new(["q1"], ["q2"]).unwrap();
        assert!((log_negativity(&bell, &p).unwrap().value - 1.0).abs() < 1e-12);
        let prod = QuantumState::basis(BasisLayout::qubits(2), 1).unwrap();
        assert_eq!(log_negativity(&prod, &p).unwrap().value, 0.0);
    }

    #[test]
    fn maximally_entangled_qudits() {
        for d in [2usize, 3, 5] {
            let layout = BasisLayout::new(vec![
                crate::quantum::Factor::new("a", d).unwrap(),
                crate::quantum::Factor::new("b", d).unwrap(),
            ])
            .unwrap();
            let mut psi = vec![c(0.0); d * d];
            for i in 0..d {
                psi[i * d + i] = c(1.0);
            }
            let st = QuantumState::pure(layout, &psi).unwrap();
            let p = Bipartition::new(["a"], ["b"]).unwrap();
            assert!((log_negativity(&st, &p).unwrap().value - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_state_rejected() {
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.1),
            c(-0.1),
            c(0.0),
            c(0.0),
        ]));
        let st = QuantumState::new(BasisLayout::qubits(2), rho).unwrap();
        let p = Bipartition::new(["q1"], ["q2"]).unwrap();
        assert!(matches!(
            log_negativity(&st, &p),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn closed_form_cases() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = c(0.3);
        a[(2, 2)] = c(0.5);
        let amp = SingleExcitationAmplitudes::new(a).unwrap();
        for k in 1..3 {
            assert_eq!(log_negativity_1ex(&amp, k).unwrap().value, 0.0);
        }
        let mut a = CMatrix::zeros(2, 2);
        a.fill(c(0.5));
        let amp = SingleExcitationAmplitudes::new(a).unwrap();
        assert!((log_negativity_1ex(&amp, 1).unwrap().value - 1.0).abs() < 1e-15);
        assert!(matches!(
            log_negativity_1ex(&amp, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            log_negativity_1ex(&amp, 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn amplitudes_from_single_layout() {
        let net = NetworkSpec::dimer(0.0, 1.0);
        let layout = network_layout(&net).unwrap();
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = c(0.2);
        rho[(1, 1)] = c(0.3);
        rho[(2, 2)] = c(0.3);
        rho[(3, 3)] = c(0.2);
        rho[(1, 2)] = c(0.1);
        rho[(2, 1)] = c(0.1);
        let st = QuantumState::new(layout, rho).unwrap();
        let amp = SingleExcitationAmplitudes::from_state(&st, &net.site_labels()).unwrap();
        assert!((amp.a00 - 0.4).abs() < 1e-15);
        assert_eq!(amp.a[(0, 1)], c(0.1));
        let general =
            log_negativity(&st, &Bipartition::new(["site1"], ["site2"]).unwrap()).unwrap();
        let closed = log_negativity_1ex(&amp, 1).unwrap();
        assert!((general.value - closed.value).abs() < 1e-12);
    }

    #[test]
    fn exciton_diagonal_state_has_no_mode_entanglement() {
        let net = NetworkSpec::fmo();
        let basis = ExcitonBasis::new(&net.site_block()).unwrap();
        let pops = [0.1, 0.2, 0.05, 0.15, 0.1, 0.2, 0.1];
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            7,
            pops.iter().map(|&p| c(p)),
        ));
        let a = &basis.vectors * diag * basis.vectors.adjoint();
        let amp = SingleExcitationAmplitudes::new(a).unwrap();
        for k in 1..7 {
            assert!(basis.log_negativity(&amp, k).unwrap().value < 1e-12);
        }
        let got = basis.populations(&amp);
        for (g, p) in got.iter().zip(pops) {
            assert!((g - p).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_excitons_rejected() {
        let h = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert!(matches!(ExcitonBasis::new(&h), Err(Error::Degeneracy(_))));
    }
}
