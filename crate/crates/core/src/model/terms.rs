use nalgebra::DMatrix;

use super::ops::ModeAlgebra;
use super::spec::validate_correlation_matrix;
use crate::quantum::SparseOp;
use crate::{CMatrix, Error, Result};

/// Label of the absorbing level fed by the sink term.
pub const SINK_MODE: &str = "sink";

/// One Lindblad channel `r (2 L ρ L† − {L†L, ρ})`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: SparseOp,
}

#[derive(Clone, Debug)]
pub enum TermKind {
    Jumps(Vec<Jump>),
    /// `−Σ γ_mn [A_m, [A_n, ρ]]` with diagonal `A_m`, stored as their diagonals.
    DoubleCommutator {
        gamma: DMatrix<f64>,
        diagonals: Vec<Vec<f64>>,
    },
}

/// A tagged dissipator of the master equation.
#[derive(Clone, Debug)]
pub struct LindbladTerm {
    pub tag: String,
    pub kind: TermKind,
}

impl LindbladTerm {
    pub fn jumps(tag: impl Into<String>, jumps: Vec<Jump>) -> Self {
        LindbladTerm {
            tag: tag.into(),
            kind: TermKind::Jumps(jumps.into_iter().filter(|j| j.rate != 0.0).collect()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.kind {
            TermKind::Jumps(j) => j.is_empty(),
            TermKind::DoubleCommutator { gamma, .. } => gamma.iter().all(|&g| g == 0.0),
        }
    }

    /// Straightforward evaluation with explicit operator products.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let n = rho.nrows();
        let mut out = CMatrix::zeros(n, n);
        match &self.kind {
            TermKind::Jumps(jumps) => {
                for j in jumps {
                    let adj = j.op.adjoint();
                    let ldl = adj.matmul(&j.op).expect("same dimension");
                    let sandwich = adj.rmul_dense(&j.op.mul_dense(rho));
                    let anti = ldl.mul_dense(rho) + ldl.rmul_dense(rho);
                    out += (sandwich.scale(2.0) - anti).scale(j.rate);
                }
            }
            TermKind::DoubleCommutator { gamma, diagonals } => {
                let m = diagonals.len();
                for a in 0..n {
                    for b in 0..n {
                        let mut w = 0.0;
                        for p in 0..m {
                            let dp = diagonals[p][a] - diagonals[p][b];
                            if dp == 0.0 {
                                continue;
                            }
                            for q in 0..m {
                                w += gamma[(p, q)] * dp * (diagonals[q][a] - diagonals[q][b]);
                            }
                        }
                        out[(a, b)] = rho[(a, b)] * (-w);
                    }
                }
            }
        }
        out
    }

    /// Extends every operator by an idle factor of dimension `d` placed last.
    pub fn with_idle_factor(&self, d: usize) -> Self {
        let id = SparseOp::identity(d);
        let kind = match &self.kind {
            TermKind::Jumps(jumps) => TermKind::Jumps(
                jumps
                    .iter()
                    .map(|j| Jump {
                        rate: j.rate,
                        op: j.op.kron(&id),
                    })
                    .collect(),
            ),
            TermKind::DoubleCommutator { gamma, diagonals } => TermKind::DoubleCommutator {
                gamma: gamma.clone(),
                diagonals: diagonals
                    .iter()
                    .map(|v| v.iter().flat_map(|&x| std::iter::repeat_n(x, d)).collect())
                    .collect(),
            },
        };
        LindbladTerm {
            tag: self.tag.clone(),
            kind,
        }
    }
}

fn check_rates(name: &str, rates: &[f64]) -> Result<()> {
    if let Some((i, r)) = rates
        .iter()
        .enumerate()
        .find(|(_, r)| !(r.is_finite() && **r >= 0.0))
    {
        return Err(Error::Validation(format!(
            "{name} rate {} is {r}; rates must be non-negative",
            i + 1
        )));
    }
    Ok(())
}

fn check_count(name: &str, rates: &[f64], sites: &[String]) -> Result<()> {
    if rates.len() != sites.len() {
        return Err(Error::Validation(format!(
            "{name}: {} rates for {} sites",
            rates.len(),
            sites.len()
        )));
    }
    Ok(())
}

/// `Σ_j Γ_j [2σ_j⁻ρσ_j⁺ − {σ_j⁺σ_j⁻, ρ}]`.
pub fn dissipation_term(
    alg: &ModeAlgebra,
    sites: &[String],
    rates: &[f64],
) -> Result<LindbladTerm> {
    check_count("dissipation", rates, sites)?;
    check_rates("dissipation", rates)?;
    let jumps = sites
        .iter()
        .zip(rates)
        .map(|(s, &r)| {
            Ok(Jump {
                rate: r,
                op: alg.lowering(s)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LindbladTerm::jumps("dissipation", jumps))
}

/// `Σ_j γ_j [2P_jρP_j − {P_j, ρ}]` with `P_j = σ_j⁺σ_j⁻`.
pub fn dephasing_term(alg: &ModeAlgebra, sites: &[String], rates: &[f64]) -> Result<LindbladTerm> {
    check_count("dephasing", rates, sites)?;
    check_rates("dephasing", rates)?;
    let jumps = sites
        .iter()
        .zip(rates)
        .map(|(s, &r)| {
            Ok(Jump {
                rate: r,
                op: alg.number(s)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LindbladTerm::jumps("dephasing", jumps))
}

/// `−Σ_mn γ_mn [A_m, [A_n, ρ]]` with `A_m = σ_m⁺σ_m⁻`.
///
/// With `γ` diagonal this equals [`dephasing_term`] with the same rates.
pub fn correlated_dephasing_term(
    alg: &ModeAlgebra,
    sites: &[String],
    gamma: &DMatrix<f64>,
) -> Result<LindbladTerm> {
    if gamma.nrows() != sites.len() {
        return Err(Error::Validation(format!(
            "correlated dephasing matrix is {}x{} for {} sites",
            gamma.nrows(),
            gamma.ncols(),
            sites.len()
        )));
    }
    validate_correlation_matrix(gamma)?;
    let diagonals = sites
        .iter()
        .map(|s| alg.occupations(s))
        .collect::<Result<_>>()?;
    Ok(LindbladTerm {
        tag: "correlated-dephasing".into(),
        kind: TermKind::DoubleCommutator {
            gamma: gamma.clone(),
            diagonals,
        },
    })
}

/// Irreversible transfer `source → sink` with jump `σ_sink⁺ σ_source⁻`.
pub fn sink_term(alg: &ModeAlgebra, source: &str, rate: f64) -> Result<LindbladTerm> {
    check_rates("sink", &[rate])?;
    if !alg.layout().modes().iter().any(|m| m == SINK_MODE) {
        return Err(Error::Layout(format!(
            "layout {} has no sink level",
            alg.layout()
        )));
    }
    let op = alg.shift(&[(SINK_MODE, 1), (source, -1)])?;
    Ok(LindbladTerm::jumps("sink", vec![Jump { rate, op }]))
}

/// Thermal injection through `site`: `σ⁺` at weight `n_th Γ/2`, `σ⁻` at `(n_th+1) Γ/2`.
pub fn injection_term(alg: &ModeAlgebra, site: &str, rate: f64, n_th: f64) -> Result<LindbladTerm> {
    check_rates("injection", &[rate])?;
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(Error::Validation(format!(
            "thermal occupancy n_th = {n_th} must be non-negative"
        )));
    }
    let jumps = vec![
        Jump {
            rate: n_th * rate / 2.0,
            op: alg.raising(site)?,
        },
        Jump {
            rate: (n_th + 1.0) * rate / 2.0,
            op: alg.lowering(site)?,
        },
    ];
    Ok(LindbladTerm::jumps("injection", jumps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{BasisLayout, Factor};
    use crate::C64;

    fn single(n: usize) -> (ModeAlgebra, Vec<String>) {
        let sites: Vec<String> = (1..=n).map(|j| format!("site{j}")).collect();
        let mut modes = sites.clone();
        modes.push(SINK_MODE.into());
        let layout =
            BasisLayout::new(vec![Factor::one_hot("system", modes, true).unwrap()]).unwrap();
        (ModeAlgebra::new(&layout).unwrap(), sites)
    }

    fn basis(n: usize, k: usize) -> CMatrix {
        let mut r = CMatrix::zeros(n, n);
        r[(k, k)] = C64::new(1.0, 0.0);
        r
    }

    #[test]
    fn dissipation_annihilates_ground() {
        let (alg, sites) = single(3);
        let t = dissipation_term(&alg, &sites, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.apply(&basis(5, 0)).norm(), 0.0);
        let out = t.apply(&basis(5, 2));
        // d/dt p_2 = -2Γ_2, d/dt p_ground = +2Γ_2
        assert!((out[(2, 2)].re + 4.0).abs() < 1e-14);
        assert!((out[(0, 0)].re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn negative_rates_rejected() {
        let (alg, sites) = single(2);
        assert!(matches!(
            dissipation_term(&alg, &sites, &[1.0, -1.0]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            dephasing_term(&alg, &sites, &[-0.1, 1.0]),
            Err(Error::Validation(_))
        ));
        assert!(injection_term(&alg, "site1", 1.0, -1.0).is_err());
    }

    #[test]
    fn dephasing_leaves_diagonal() {
        let (alg, sites) = single(2);
        let t = dephasing_term(&alg, &sites, &[1.0, 3.0]).unwrap();
        let mut rho = CMatrix::from_diagonal_element(4, 4, C64::new(0.25, 0.0));
        assert_eq!(t.apply(&rho).norm(), 0.0);
        rho[(1, 2)] = C64::new(0.1, 0.0);
        rho[(2, 1)] = C64::new(0.1, 0.0);
        let out = t.apply(&rho);
        // coherence between sites 1 and 2 decays at γ1 + γ2
        assert!((out[(1, 2)].re + 0.4).abs() < 1e-14);
    }

    #[test]
    fn sink_needs_sink_level() {
        let layout = BasisLayout::qubits(2);
        let alg = ModeAlgebra::new(&layout).unwrap();
        assert!(matches!(sink_term(&alg, "q1", 1.0), Err(Error::Layout(_))));
        let (alg, _) = single(3);
        let t = sink_term(&alg, "site3", 2.0).unwrap();
        assert_eq!(t.apply(&basis(5, 1)).norm(), 0.0);
        let out = t.apply(&basis(5, 3));
        assert!((out[(4, 4)].re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn zero_correlation_matrix_is_silent() {
        let (alg, sites) = single(2);
        let t = correlated_dephasing_term(&alg, &sites, &DMatrix::zeros(2, 2)).unwrap();
        let rho = CMatrix::from_fn(4, 4, |r, c| {
            C64::new((r + c) as f64, (r as f64) - (c as f64))
        });
        assert_eq!(t.apply(&rho).norm(), 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let msg = correlated_dephasing_term(&alg, &sites, &bad)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("eigenvalue"), "{msg}");
    }

    #[test]
    fn idle_factor_lifting() {
        let (alg, sites) = single(2);
        let t = dissipation_term(&alg, &sites, &[1.0, 0.5]).unwrap();
        let rho = CMatrix::from_fn(4, 4, |r, c| {
            C64::new(1.0 / (1.0 + (r + c) as f64), 0.1 * (r as f64 - c as f64))
        });
        let anc = CMatrix::from_fn(3, 3, |r, c| C64::new(if r == c { 0.5 } else { 0.1 }, 0.0));
        let lifted = t.with_idle_factor(3).apply(&rho.kronecker(&anc));
        assert!((lifted - t.apply(&rho).kronecker(&anc)).norm() < 1e-14);
    }
}
